import dataclasses
import itertools
from fractions import Fraction

import pytest

from smplab.protocols import DONT_KNOW, evaluate_exact, evaluate_monte_carlo
from smplab.relation_p import (
    RelationPInstance,
    cost_formula,
    grid_protocol_p,
    judge_p,
    public_coin_protocol_p,
    random_instance_p,
    relation_p_problem,
)


class TestInstance:
    def test_selector_weight_enforced(self):
        with pytest.raises(ValueError, match="weight"):
            RelationPInstance(n=4, x="0000", y="0000", s="1110")

    def test_odd_n_rejected(self):
        with pytest.raises(ValueError, match="even"):
            RelationPInstance(n=3, x="000", y="000", s="100")

    def test_json_round_trip(self):
        instance = random_instance_p(16, seed=3)
        assert RelationPInstance.from_json(instance.to_json()) == instance

    def test_random_instance_deterministic(self):
        assert random_instance_p(8, seed=5) == random_instance_p(8, seed=5)
        assert random_instance_p(8, seed=5) != random_instance_p(8, seed=6)

    def test_to_input_shape(self):
        instance = RelationPInstance(n=2, x="01", y="10", s="01")
        assert instance.to_input() == ("01", ("10", "01"))


class TestJudge:
    instance = RelationPInstance(n=4, x="0110", y="1010", s="0101")

    def test_valid_triple(self):
        assert judge_p(self.instance, (1, 1, 0)) == "valid"
        assert judge_p(self.instance, (3, 0, 0)) == "valid"

    def test_selector_zero_is_invalid(self):
        # i = 0 has s_0 = 0 even though the bits match
        assert judge_p(self.instance, (0, 0, 1)) == "invalid"

    def test_wrong_bit_is_invalid(self):
        assert judge_p(self.instance, (1, 0, 0)) == "invalid"
        assert judge_p(self.instance, (1, 1, 1)) == "invalid"

    def test_dont_know_token(self):
        assert judge_p(self.instance, DONT_KNOW) == "dont_know"

    def test_malformed_tokens_are_invalid(self):
        assert judge_p(self.instance, (9, 0, 0)) == "invalid"
        assert judge_p(self.instance, "nonsense") == "invalid"
        assert judge_p(self.instance, (1, 1)) == "invalid"


BUILDERS = [("public-coin", public_coin_protocol_p), ("grid", grid_protocol_p)]


class TestProtocolLaws:
    @pytest.mark.parametrize("name,build", BUILDERS)
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_exact_outcome_law(self, name, build, k):
        protocol = build(4, k)
        problem = relation_p_problem(eps=0.5**k)
        inputs = [random_instance_p(4, seed=t).to_input() for t in range(10)]
        report = evaluate_exact(protocol, problem, inputs)
        for rep in report.inputs:
            assert rep.p_dont_know == Fraction(1, 2**k)
            assert rep.p_invalid == 0
            assert rep.p_valid == 1 - Fraction(1, 2**k)

    @pytest.mark.parametrize("name,build", BUILDERS)
    @pytest.mark.parametrize("n,k", [(4, 1), (4, 2), (16, 1)])
    def test_batch_path_equals_scalar_enumeration(self, name, build, n, k):
        protocol = build(n, k)
        scalar = dataclasses.replace(protocol, batch_tokens=None)
        problem = relation_p_problem(eps=0.5**k)
        inputs = [random_instance_p(n, seed=t).to_input() for t in range(3)]
        fast = evaluate_exact(protocol, problem, inputs)
        slow = evaluate_exact(scalar, problem, inputs)
        for a, b in zip(fast.inputs, slow.inputs):
            assert (a.p_valid, a.p_dont_know, a.p_invalid) == (
                b.p_valid,
                b.p_dont_know,
                b.p_invalid,
            )

    @pytest.mark.parametrize("name,build", BUILDERS)
    @pytest.mark.parametrize("n,k", [(4, 1), (4, 3), (16, 2), (16, 4)])
    def test_cost_matches_formula(self, name, build, n, k):
        protocol = build(n, k)
        assert protocol.cost_bits == cost_formula(name, n, k)

    def test_public_coin_cost_value(self):
        # n=16: w=4, so k*(2*4+3)
        assert cost_formula("public-coin", 16, 3) == 33

    def test_grid_cost_value(self):
        # n=16: sq=4, wsq=2, so k*(3*4+2*2)
        assert cost_formula("grid", 16, 2) == 32

    def test_grid_requires_square(self):
        with pytest.raises(ValueError, match="square"):
            grid_protocol_p(8, 1)
        with pytest.raises(ValueError, match="square"):
            cost_formula("grid", 8, 1)

    def test_messages_fit_declared_costs(self):
        for name, build in BUILDERS:
            protocol = build(16, 2)
            instance = random_instance_p(16, seed=1)
            x, y_aux = instance.to_input()
            # run_once raises if either message exceeds its cost
            protocol.run_once(x, y_aux, 0, 0, 0)
            protocol.run_once(
                x,
                y_aux,
                protocol.public_coin_size - 1,
                protocol.alice_private_size - 1,
                protocol.bob_private_size - 1,
            )

    def test_grid_tokens_never_invalid_exhaustively(self):
        # n=4, k=1: every (x, y, s) and every private coin pair
        protocol = grid_protocol_p(4, 1)
        for s_bits in itertools.combinations(range(4), 2):
            s = "".join("1" if i in s_bits else "0" for i in range(4))
            for x_val in range(16):
                x = format(x_val, "04b")
                for y_val in range(16):
                    y = format(y_val, "04b")
                    instance = RelationPInstance(n=4, x=x, y=y, s=s)
                    for ra in range(2):
                        for rb in range(2):
                            token = protocol.run_once(x, (y, s), 0, ra, rb)
                            assert judge_p(instance, token) in ("valid", "dont_know")

    def test_monte_carlo_tracks_exact(self):
        protocol = public_coin_protocol_p(16, 2)
        problem = relation_p_problem(eps=0.25)
        inputs = [random_instance_p(16, seed=9).to_input()]
        mc = evaluate_monte_carlo(protocol, problem, inputs, 4000, seed=21)
        assert abs(float(mc.inputs[0].p_dont_know) - 0.25) <= mc.inputs[0].radius
