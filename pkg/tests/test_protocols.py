import dataclasses
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from smplab.protocols import (
    DONT_KNOW,
    INVALID,
    VALID,
    ClassicalSmpProtocol,
    CoinSpaceTooLarge,
    EvaluationReport,
    ExactFormUnavailable,
    InputReport,
    ProblemSpec,
    QuantumSmpProtocol,
    SwapTestThresholdReferee,
    boolean_problem_spec,
    cost_summary,
    evaluate_exact,
    evaluate_monte_carlo,
    exact_classical_token_counts,
)
from smplab.quantum import PureState
from smplab.seeds import derive_rng


def xor_mask_protocol() -> ClassicalSmpProtocol:
    """One shared coin bit masks both input bits; referee XORs the masks away."""

    def batch(x, y, pub, ra, rb):
        codes = (x ^ pub & 1) ^ (y ^ pub & 1)
        return codes.astype(np.int64), [0, 1]

    def sample(x, y, trials, rng):
        pub = rng.integers(0, 2, size=trials)
        return ((x ^ pub) ^ (y ^ pub)).astype(np.int64), [0, 1]

    return ClassicalSmpProtocol(
        public_coin_size=2,
        alice_private_size=1,
        bob_private_size=1,
        alice_msg=lambda x, r, ra: str(x ^ (r & 1)),
        bob_msg=lambda y, r, rb: str(y ^ (r & 1)),
        referee=lambda a, b: int(a) ^ int(b),
        alice_cost_bits=1,
        bob_cost_bits=1,
        batch_tokens=batch,
        sample_tokens=sample,
    )


def three_way_protocol() -> ClassicalSmpProtocol:
    """Tokens depend on all three coins; used for exact-count bookkeeping."""
    return ClassicalSmpProtocol(
        public_coin_size=3,
        alice_private_size=2,
        bob_private_size=2,
        alice_msg=lambda x, r, ra: format((x + r + ra) % 4, "02b"),
        bob_msg=lambda y, r, rb: format((y + r + rb) % 4, "02b"),
        referee=lambda a, b: (int(a, 2) + int(b, 2)) % 3,
        alice_cost_bits=2,
        bob_cost_bits=2,
    )


class TestClassicalProtocolBasics:
    def test_cost_and_space(self):
        protocol = three_way_protocol()
        assert protocol.cost_bits == 4
        assert protocol.coin_space_size == 12

    def test_run_once_rejects_oversized_message(self):
        protocol = dataclasses.replace(xor_mask_protocol(), alice_msg=lambda x, r, ra: "00")
        with pytest.raises(ValueError, match="exceeds declared cost"):
            protocol.run_once(0, 0, 0, 0, 0)

    def test_referee_sees_coin_flag(self):
        protocol = ClassicalSmpProtocol(
            public_coin_size=4,
            alice_private_size=1,
            bob_private_size=1,
            alice_msg=lambda x, r, ra: "",
            bob_msg=lambda y, r, rb: "",
            referee=lambda a, b, r: r,
            alice_cost_bits=0,
            bob_cost_bits=0,
            referee_sees_coin=True,
        )
        assert protocol.run_once(None, None, 3, 0, 0) == 3

    def test_rejects_empty_coin_space(self):
        with pytest.raises(ValueError):
            ClassicalSmpProtocol(
                public_coin_size=0,
                alice_private_size=1,
                bob_private_size=1,
                alice_msg=lambda x, r, ra: "",
                bob_msg=lambda y, r, rb: "",
                referee=lambda a, b: 0,
                alice_cost_bits=0,
                bob_cost_bits=0,
            )


class TestExactEnumeration:
    def test_counts_match_hand_enumeration(self):
        protocol = three_way_protocol()
        counts = exact_classical_token_counts(protocol, 1, 2)
        by_hand = {}
        for r in range(3):
            for ra in range(2):
                for rb in range(2):
                    token = ((1 + r + ra) % 4 + (2 + r + rb) % 4) % 3
                    by_hand[token] = by_hand.get(token, 0) + 1
        assert counts == by_hand
        assert sum(counts.values()) == protocol.coin_space_size

    def test_counts_invariant_under_coin_order(self):
        protocol = three_way_protocol()
        triples = [
            (r, ra, rb) for r in range(3) for ra in range(2) for rb in range(2)
        ]
        rng = derive_rng(4, "perm")
        shuffled = [triples[i] for i in rng.permutation(len(triples))]
        assert exact_classical_token_counts(protocol, 0, 1) == exact_classical_token_counts(
            protocol, 0, 1, coin_order=shuffled
        )

    def test_batch_path_equals_scalar_path_exactly(self):
        protocol = xor_mask_protocol()
        problem = boolean_problem_spec(lambda x, y: x ^ y)
        scalar = dataclasses.replace(protocol, batch_tokens=None)
        inputs = [(x, y) for x in (0, 1) for y in (0, 1)]
        fast = evaluate_exact(protocol, problem, inputs)
        slow = evaluate_exact(scalar, problem, inputs)
        for a, b in zip(fast.inputs, slow.inputs):
            assert (a.p_valid, a.p_dont_know, a.p_invalid) == (
                b.p_valid,
                b.p_dont_know,
                b.p_invalid,
            )
            assert isinstance(a.p_valid, Fraction)

    def test_exact_probabilities_are_rational(self):
        protocol = three_way_protocol()
        problem = ProblemSpec(judge=lambda pair, token: (VALID, DONT_KNOW, INVALID)[token], eps=0.5)
        report = evaluate_exact(protocol, problem, [(0, 0)])
        rep = report.inputs[0]
        assert rep.p_valid + rep.p_dont_know + rep.p_invalid == 1
        assert all(isinstance(p, Fraction) for p in (rep.p_valid, rep.p_dont_know, rep.p_invalid))

    def test_coin_limit_refusal(self):
        protocol = three_way_protocol()
        with pytest.raises(CoinSpaceTooLarge):
            evaluate_exact(protocol, boolean_problem_spec(lambda x, y: 0), [(0, 0)], coin_limit=11)

    def test_judge_value_checked(self):
        protocol = xor_mask_protocol()
        problem = ProblemSpec(judge=lambda pair, token: "maybe", eps=0.0)
        with pytest.raises(ValueError, match="judge returned"):
            evaluate_exact(protocol, problem, [(0, 0)])


class TestMonteCarlo:
    def test_reproducible(self):
        protocol = three_way_protocol()
        problem = boolean_problem_spec(lambda x, y: (x + y) % 3)
        first = evaluate_monte_carlo(protocol, problem, [(1, 1)], 500, seed=9)
        second = evaluate_monte_carlo(protocol, problem, [(1, 1)], 500, seed=9)
        assert first.inputs[0] == second.inputs[0]

    def test_partitioned_run_reproducible_and_consistent(self):
        protocol = three_way_protocol()
        problem = boolean_problem_spec(lambda x, y: (x + y) % 3)
        exact = evaluate_exact(protocol, problem, [(1, 1)]).inputs[0]
        for partitions in (1, 3):
            report = evaluate_monte_carlo(
                protocol, problem, [(1, 1)], 3000, seed=2, partitions=partitions
            )
            again = evaluate_monte_carlo(
                protocol, problem, [(1, 1)], 3000, seed=2, partitions=partitions
            )
            assert report.inputs[0] == again.inputs[0]
            assert abs(float(report.inputs[0].p_valid) - float(exact.p_valid)) <= max(
                report.inputs[0].radius, 1e-12
            )

    def test_within_three_sigma_of_exact(self):
        protocol = xor_mask_protocol()
        problem = boolean_problem_spec(lambda x, y: x ^ y)
        report = evaluate_monte_carlo(protocol, problem, [(0, 1)], 2000, seed=5)
        assert float(report.inputs[0].p_valid) == 1.0  # protocol is errorless

    def test_scalar_sampling_without_hook(self):
        protocol = dataclasses.replace(three_way_protocol(), sample_tokens=None)
        problem = boolean_problem_spec(lambda x, y: (x + y) % 3)
        exact = evaluate_exact(protocol, problem, [(2, 1)]).inputs[0]
        report = evaluate_monte_carlo(protocol, problem, [(2, 1)], 4000, seed=7)
        assert abs(float(report.inputs[0].p_valid) - float(exact.p_valid)) <= report.inputs[0].radius

    def test_trial_validation(self):
        protocol = xor_mask_protocol()
        problem = boolean_problem_spec(lambda x, y: x ^ y)
        with pytest.raises(ValueError):
            evaluate_monte_carlo(protocol, problem, [(0, 0)], 0, seed=1)
        with pytest.raises(ValueError):
            evaluate_monte_carlo(protocol, problem, [(0, 0)], 10, seed=1, partitions=11)


def brute_force_tail(copies: int, min_zero: int, p_zero: float) -> float:
    """Sum over all 2^copies outcome strings; independent of scipy."""
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=copies):
        zeros = outcome.count(0)
        if zeros >= min_zero:
            total += (p_zero**zeros) * ((1.0 - p_zero) ** (copies - zeros))
    return total


class TestSwapTestThresholdReferee:
    @pytest.mark.parametrize("copies,min_zero", [(1, 1), (5, 3), (9, 7), (12, 9)])
    def test_accept_probability_matches_brute_force(self, copies, min_zero):
        referee = SwapTestThresholdReferee(copies=copies, min_zero_count=min_zero)
        a = PureState(np.array([1.0, 0.0]))
        b = PureState(np.array([1.0, 1.0]) / math.sqrt(2.0))
        expected = brute_force_tail(copies, min_zero, 0.75)
        assert referee.accept_probability(a, b) == pytest.approx(expected, abs=1e-12)

    def test_zero_threshold_always_accepts(self):
        referee = SwapTestThresholdReferee(copies=4, min_zero_count=0)
        a, b = PureState.basis(0, 2), PureState.basis(1, 2)
        assert referee.accept_probability(a, b) == 1.0

    def test_distribution_sums_to_one(self):
        referee = SwapTestThresholdReferee(copies=6, min_zero_count=4)
        a, b = PureState.basis(0, 2), PureState(np.array([0.6, 0.8]))
        dist = referee.token_distribution(a, b)
        assert set(dist) == {0, 1}
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)

    def test_sampler_matches_tail(self):
        referee = SwapTestThresholdReferee(copies=7, min_zero_count=5)
        a, b = PureState.basis(0, 2), PureState(np.array([0.6, 0.8]))
        tokens, table = referee.sample_tokens(a, b, 20000, derive_rng(3, "ref"))
        assert table == [0, 1]
        p = referee.accept_probability(a, b)
        sigma = math.sqrt(p * (1 - p) / 20000)
        assert abs(float(np.mean(tokens == 1)) - p) <= 3 * sigma

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            SwapTestThresholdReferee(copies=3, min_zero_count=4)


class TestQuantumProtocol:
    def make(self, copies=3, dim=12):
        return QuantumSmpProtocol(
            alice_state=lambda x: PureState.basis(x, dim),
            bob_state=lambda y: PureState.basis(y, dim),
            copies=copies,
            state_dim=dim,
            referee_procedure=SwapTestThresholdReferee(copies=copies, min_zero_count=copies),
        )

    def test_cost_accounting(self):
        protocol = self.make(copies=3, dim=12)
        assert protocol.qubits_per_copy == 4  # ceil(log2 12)
        assert protocol.cost_qubits == 24

    def test_exact_evaluation_uses_closed_form(self):
        protocol = self.make(copies=2, dim=4)
        problem = boolean_problem_spec(lambda x, y: int(x == y))
        report = evaluate_exact(protocol, problem, [(1, 1), (1, 2)])
        assert float(report.inputs[0].p_valid) == 1.0
        # distinct basis states: swap test accepts both copies with prob 1/4
        assert float(report.inputs[1].p_invalid) == pytest.approx(0.25, abs=1e-12)

    def test_exact_form_unavailable(self):
        protocol = dataclasses.replace(self.make(), referee_procedure=object())
        problem = boolean_problem_spec(lambda x, y: 0)
        with pytest.raises(ExactFormUnavailable):
            evaluate_exact(protocol, problem, [(0, 0)])

    def test_monte_carlo_agrees_with_exact(self):
        protocol = self.make(copies=2, dim=4)
        problem = boolean_problem_spec(lambda x, y: int(x == y))
        exact = evaluate_exact(protocol, problem, [(1, 2)]).inputs[0]
        mc = evaluate_monte_carlo(protocol, problem, [(1, 2)], 5000, seed=8).inputs[0]
        assert abs(float(mc.p_invalid) - float(exact.p_invalid)) <= mc.radius


class TestProblemAndReports:
    def test_boolean_spec_judgments(self):
        problem = boolean_problem_spec(lambda x, y: x & y)
        assert problem.judge((1, 1), 1) == VALID
        assert problem.judge((1, 0), 1) == INVALID
        assert problem.eps == 0.0

    def test_problem_spec_eps_validation(self):
        with pytest.raises(ValueError):
            ProblemSpec(judge=lambda pair, token: VALID, eps=1.0)

    def test_input_report_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            InputReport(input_id="0", p_valid=0.5, p_dont_know=0.0, p_invalid=0.0)

    def test_excess_error(self):
        rep = InputReport(
            input_id="0",
            p_valid=Fraction(1, 2),
            p_dont_know=Fraction(3, 8),
            p_invalid=Fraction(1, 8),
        )
        assert rep.excess_error(0.25) == pytest.approx(0.25)
        assert rep.excess_error(0.5) == pytest.approx(0.125)

    def test_report_serialization(self):
        report = EvaluationReport(
            mode="exact",
            eps=0.25,
            inputs=(
                InputReport(
                    input_id="a",
                    p_valid=Fraction(3, 4),
                    p_dont_know=Fraction(1, 4),
                    p_invalid=Fraction(0),
                ),
            ),
        )
        csv_text = report.to_csv()
        assert csv_text.startswith("input-id,p_valid,p_dontknow,p_invalid,trials,radius\n")
        assert "a,3/4,1/4,0/1,," in csv_text
        assert report.worst_case == 0.0
        assert '"worst_case": 0.0' in report.to_json()

    def test_cost_summary_shapes(self):
        classical = cost_summary(xor_mask_protocol())
        assert classical == {"kind": "classical", "total_bits": 2, "alice_bits": 1, "bob_bits": 1}
        quantum = cost_summary(TestQuantumProtocol().make(copies=3, dim=12))
        assert quantum == {
            "kind": "quantum",
            "total_qubits": 24,
            "copies": 3,
            "qubits_per_copy": 4,
        }
