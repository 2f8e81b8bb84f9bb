import math
from fractions import Fraction

import numpy as np
import pytest

from smplab.geometry import (
    MarginRealization,
    ThresholdEmbedding,
    block_ip_instance,
    block_majority,
    compile_repeated_fingerprinting,
    compiled_worst_error,
    embedding_problem,
    embedding_to_realization,
    equality_embedding,
    forster_bound,
    ip_bit,
    ip_realization,
    ip_sign_matrix,
    paired_equality_realization,
    random_margin_realization,
    random_projection,
    random_threshold_embedding,
    realization_to_embedding,
    repetition_count,
    sign_matrix_from_function,
    spectral_norm,
)
from smplab.protocols import evaluate_exact
from smplab.seeds import derive_rng


def simple_embedding(delta0=0.1, delta1=0.6) -> ThresholdEmbedding:
    ov0 = math.sqrt(delta0 / 2)  # squared overlap delta0/2 <= delta0
    alpha = {"x0": np.array([1.0, 0.0]), "x1": np.array([1.0, 0.0])}
    beta = {
        "y0": np.array([ov0, math.sqrt(1 - ov0**2)]),
        "y1": np.array([math.sqrt(delta1), math.sqrt(1 - delta1)]),
    }
    domain = (("x0", "y0", 0), ("x1", "y1", 1))
    return ThresholdEmbedding(alpha=alpha, beta=beta, delta0=delta0, delta1=delta1, domain=domain)


class TestThresholdEmbedding:
    def test_valid_construction(self):
        emb = simple_embedding()
        assert emb.dim == 2
        assert emb.gap == pytest.approx(0.5)

    def test_rejects_non_unit_vector(self):
        with pytest.raises(ValueError, match="unit"):
            ThresholdEmbedding(
                alpha={"x": np.array([1.0, 1.0])},
                beta={"y": np.array([1.0, 0.0])},
                delta0=0.1,
                delta1=0.9,
                domain=(("x", "y", 0),),
            )

    def test_rejects_delta_ordering(self):
        with pytest.raises(ValueError, match="delta"):
            ThresholdEmbedding(
                alpha={"x": np.array([1.0, 0.0])},
                beta={"y": np.array([0.0, 1.0])},
                delta0=0.5,
                delta1=0.5,
                domain=(("x", "y", 0),),
            )

    def test_rejects_violated_threshold(self):
        # f=1 requires squared overlap >= delta1, but the pair is orthogonal
        with pytest.raises(ValueError):
            ThresholdEmbedding(
                alpha={"x": np.array([1.0, 0.0])},
                beta={"y": np.array([0.0, 1.0])},
                delta0=0.1,
                delta1=0.9,
                domain=(("x", "y", 1),),
            )

    def test_json_round_trip_preserves_complex_vectors(self):
        emb = ThresholdEmbedding(
            alpha={"x": np.array([1j, 0.0])},
            beta={"y": np.array([0.3 + 0.0j, math.sqrt(0.91) * 1j])},
            delta0=0.1,
            delta1=0.5,
            domain=(("x", "y", 0),),
        )
        back = ThresholdEmbedding.from_json(emb.to_json())
        assert np.allclose(back.alpha["x"], emb.alpha["x"])
        assert np.allclose(back.beta["y"], emb.beta["y"])
        assert back.domain == emb.domain


class TestMarginRealization:
    def test_rejects_complex_inner_product(self):
        with pytest.raises(ValueError, match="real"):
            MarginRealization(
                alpha={"x": np.array([1.0, 0.0], dtype=complex)},
                beta={"y": np.array([0.6j, 0.8])},
                gamma=0.5,
                domain=(("x", "y", 0),),
            )

    def test_rejects_margin_violation(self):
        with pytest.raises(ValueError):
            MarginRealization(
                alpha={"x": np.array([1.0, 0.0])},
                beta={"y": np.array([0.3, math.sqrt(1 - 0.09)])},
                gamma=0.5,
                domain=(("x", "y", 0),),
            )

    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(ValueError, match="gamma"):
            MarginRealization(
                alpha={"x": np.array([1.0, 0.0])},
                beta={"y": np.array([1.0, 0.0])},
                gamma=0.0,
                domain=(("x", "y", 0),),
            )

    def test_sign_convention(self):
        # f=0 needs inner product >= gamma, f=1 needs <= -gamma
        MarginRealization(
            alpha={"x": np.array([1.0, 0.0])},
            beta={"y": np.array([-0.7, math.sqrt(0.51)])},
            gamma=0.7,
            domain=(("x", "y", 1),),
        )


class TestConversions:
    def test_embedding_to_realization_formulas(self):
        emb = simple_embedding(delta0=0.2, delta1=0.8)
        real = embedding_to_realization(emb)
        denom = 2.0 + emb.delta1 + emb.delta0
        assert real.gamma == pytest.approx((emb.delta1 - emb.delta0) / denom, abs=1e-12)
        a = (emb.delta1 + emb.delta0) / denom
        for x, y, f in emb.domain:
            got = float(np.vdot(real.alpha[x], real.beta[y]).real)
            sq = abs(complex(np.vdot(emb.alpha[x], emb.beta[y]))) ** 2
            assert got == pytest.approx(a - (1 - a) * sq, abs=1e-12)
        # dimension of the lift: d^2 + 1
        assert real.dim == emb.dim**2 + 1

    def test_realization_to_embedding_formulas(self):
        real = ip_realization(2)
        emb = realization_to_embedding(real)
        assert emb.delta0 == pytest.approx((1 - real.gamma) ** 2 / 4, abs=1e-12)
        assert emb.delta1 == pytest.approx((1 + real.gamma) ** 2 / 4, abs=1e-12)
        assert emb.dim == real.dim + 1
        for x, y, f in real.domain:
            sq = abs(complex(np.vdot(emb.alpha[x], emb.beta[y]))) ** 2
            ip = float(np.vdot(real.alpha[x], real.beta[y]).real)
            assert sq == pytest.approx((1 - ip) ** 2 / 4, abs=1e-12)

    @pytest.mark.parametrize("trial", range(10))
    def test_random_round_trips_stay_unit_norm(self, trial):
        emb = random_threshold_embedding(dim=3, pairs=3, seed=trial)
        real = embedding_to_realization(emb)
        for vec in list(real.alpha.values()) + list(real.beta.values()):
            assert abs(np.linalg.norm(vec) - 1.0) <= 1e-10
        back = realization_to_embedding(random_margin_realization(3, 3, seed=trial))
        for vec in list(back.alpha.values()) + list(back.beta.values()):
            assert abs(np.linalg.norm(vec) - 1.0) <= 1e-10


class TestSpectralNorm:
    @pytest.mark.parametrize("shape", [(4, 4), (3, 7), (9, 2), (16, 16)])
    def test_matches_svd_oracle(self, shape):
        rng = derive_rng(31, "norm", shape)
        matrix = rng.normal(size=shape)
        oracle = float(np.linalg.svd(matrix, compute_uv=False)[0])
        assert spectral_norm(matrix) == pytest.approx(oracle, rel=1e-9)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((3, 3))) == 0.0

    def test_rank_one(self):
        u = np.array([3.0, 4.0])
        v = np.array([1.0, 2.0, 2.0])
        assert spectral_norm(np.outer(u, v)) == pytest.approx(15.0, rel=1e-9)

    def test_identity(self):
        assert spectral_norm(np.eye(5)) == pytest.approx(1.0, rel=1e-12)


class TestSignMatrices:
    def test_from_function_sign_convention(self):
        sign = sign_matrix_from_function(lambda x, y: int(x == y), [0, 1], [0, 1])
        assert sign.entries.tolist() == [[-1, 1], [1, -1]]

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_ip_matrix_entries(self, n):
        sign = ip_sign_matrix(n)
        size = 1 << n
        for x in range(size):
            for y in range(size):
                parity = bin(x & y).count("1") & 1
                assert sign.entries[x, y] == 1 - 2 * parity

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_ip_gram_identity_exact(self, n):
        entries = ip_sign_matrix(n).entries
        size = 1 << n
        assert np.array_equal(entries @ entries.T, size * np.eye(size, dtype=np.int64))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_ip_norm_and_bound(self, n):
        sign = ip_sign_matrix(n)
        target = math.sqrt(2.0**n)
        assert spectral_norm(sign.entries) == pytest.approx(target, rel=1e-9)
        assert forster_bound(sign) == pytest.approx(target / 2.0**n, rel=1e-9)

    def test_equality_bound_by_hand(self):
        # 4x4 equality sign matrix is J - 2I with spectral norm 2
        sign = sign_matrix_from_function(lambda x, y: int(x == y), range(4), range(4))
        assert spectral_norm(sign.entries) == pytest.approx(2.0, rel=1e-9)
        assert forster_bound(sign) == pytest.approx(0.5, rel=1e-9)


class TestConstructions:
    def test_equality_embedding_is_orthonormal(self):
        emb = equality_embedding(range(5))
        assert emb.delta0 == 0.0 and emb.delta1 == 1.0
        assert len(emb.domain) == 25
        for x, y, f in emb.domain:
            sq = abs(complex(np.vdot(emb.alpha[x], emb.beta[y]))) ** 2
            assert sq == pytest.approx(float(x == y), abs=1e-12)

    def test_equality_margin_within_forster(self):
        emb = equality_embedding(range(4))
        real = embedding_to_realization(emb)
        sign = sign_matrix_from_function(lambda x, y: int(x == y), range(4), range(4))
        assert real.gamma == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert real.gamma <= forster_bound(sign) + 1e-6

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_ip_realization_meets_bound(self, n):
        real = ip_realization(n)
        bound = forster_bound(ip_sign_matrix(n))
        assert real.gamma == pytest.approx(2.0 ** (-n / 2), abs=1e-12)
        assert abs(real.gamma - bound) <= 1e-9
        for x, y, f in real.domain:
            ip = float(np.vdot(real.alpha[x], real.beta[y]).real)
            assert abs(ip) == pytest.approx(real.gamma, abs=1e-12)

    def test_paired_equality_realization(self):
        real = paired_equality_realization(16, overlap=0.9, seed=2)
        assert real.gamma == 0.9
        assert len(real.domain) == 16
        for x, y, f in real.domain:
            ip = float(np.vdot(real.alpha[x], real.beta[y]).real)
            assert ip == pytest.approx(-0.9 if f == 1 else 0.9, abs=1e-12)

    def test_paired_equality_rejects_unit_overlap(self):
        with pytest.raises(ValueError):
            paired_equality_realization(4, overlap=1.0, seed=0)


class TestRandomProjection:
    def test_identity_projection_preserves_vectors(self):
        real = random_margin_realization(4, 3, seed=8)
        projected = random_projection(real, target_dim=4, seed=0, identity=True)
        assert projected is not None
        assert projected.gamma == real.gamma / 2
        for key in real.alpha:
            assert np.allclose(projected.alpha[key], real.alpha[key])

    def test_identity_requires_matching_dim(self):
        real = random_margin_realization(4, 2, seed=8)
        with pytest.raises(ValueError, match="target_dim == dim"):
            random_projection(real, target_dim=5, seed=0, identity=True)

    def test_projection_up_keeps_half_margin_usually(self):
        real = paired_equality_realization(8, overlap=0.9, seed=1)
        successes = sum(
            random_projection(real, target_dim=128, seed=s) is not None for s in range(20)
        )
        assert successes >= 15

    def test_seeded_projection_reproducible(self):
        real = random_margin_realization(4, 3, seed=8)
        first = random_projection(real, target_dim=32, seed=5)
        second = random_projection(real, target_dim=32, seed=5)
        assert (first is None) == (second is None)
        if first is not None:
            for key in first.alpha:
                assert np.array_equal(first.alpha[key], second.alpha[key])


class TestRepetitionAndCompile:
    def test_repetition_count_unit_gap(self):
        # gap 1, eps 1/3: ceil(8 ln 3) = 9
        assert repetition_count(1.0, 1 / 3) == 9

    @pytest.mark.parametrize("c,expected", [(1, 317), (2, 1266), (3, 5063)])
    def test_repetition_count_band_gaps(self, c, expected):
        gap = 1.0 / (3 * 2**c)
        assert repetition_count(gap, 1 / 3) == expected

    def test_repetition_count_validation(self):
        with pytest.raises(ValueError):
            repetition_count(0.0, 1 / 3)
        with pytest.raises(ValueError):
            repetition_count(0.5, 0.0)

    def test_compile_equality_embedding(self):
        emb = equality_embedding(range(3))
        protocol = compile_repeated_fingerprinting(emb, eps=1 / 3)
        assert protocol.copies == 9
        assert protocol.referee_procedure.min_zero_count == 7
        # unequal pairs: P[Bin(9, 1/2) >= 7] = 46/512
        worst = compiled_worst_error(protocol, emb)
        assert worst == pytest.approx(float(Fraction(46, 512)), abs=1e-12)
        assert worst <= 1 / 3

    def test_compiled_protocol_exact_evaluation(self):
        emb = equality_embedding(range(3))
        protocol = compile_repeated_fingerprinting(emb, eps=1 / 3)
        problem, inputs = embedding_problem(emb)
        report = evaluate_exact(protocol, problem, inputs)
        assert report.worst_case == pytest.approx(float(Fraction(46, 512)), abs=1e-12)

    def test_threshold_ties_accept(self):
        # delta0=0, delta1=1: threshold = 3/4 r; at r=4 the count 3 must accept
        emb = equality_embedding(range(2))
        protocol = compile_repeated_fingerprinting(emb, eps=1 / 3)
        r = protocol.copies
        threshold = r * 0.75
        assert protocol.referee_procedure.min_zero_count == math.ceil(threshold - 1e-9)


class TestBlockIp:
    def test_ip_bit(self):
        assert ip_bit("110", "101") == 1
        assert ip_bit("110", "001") == 0
        with pytest.raises(ValueError):
            ip_bit("1", "10")

    @pytest.mark.parametrize("a,b", [("10", "11"), ("11", "11"), ("00", "10"), ("111", "111")])
    def test_block_instance_majority(self, a, b):
        x, y = block_ip_instance(a, b, m=12)
        assert len(x) == 12 * len(a)
        holds, bit = block_majority(x, y, len(a))
        assert holds and bit == ip_bit(a, b)

    def test_block_instance_validation(self):
        with pytest.raises(ValueError, match="multiple of 6"):
            block_ip_instance("10", "11", m=8)

    def test_block_majority_detects_no_promise(self):
        holds, bit = block_majority("1100", "1111", block_len=1)
        assert not holds and bit == -1
