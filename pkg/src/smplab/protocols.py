"""One-round simultaneous-message protocols and their evaluation.

Alice and Bob each see one input half and send one message to a referee,
who outputs a structured token; a problem spec judges each token as valid,
dont_know, or invalid.  Costs count worst-case total message length.

Two evaluators are provided.  evaluate_exact enumerates classical coin
spaces (counting with exact rationals) or uses a referee's closed-form
outcome law on the quantum side.  evaluate_monte_carlo samples; its trial
counts merge by summation, so partitioning across workers cannot change a
result.  Protocols built inside this package also carry vectorized token
paths; those are optional fast lanes whose agreement with the scalar
message-level contract is established by exhaustive enumeration in tests,
never assumed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy.stats import binom

from .quantum import PureState, swap_test
from .seeds import derive_rng, rand_below

DEFAULT_COIN_LIMIT = 2**24

DONT_KNOW = "dont_know"

VALID = "valid"
INVALID = "invalid"
JUDGMENTS = (VALID, DONT_KNOW, INVALID)


class CoinSpaceTooLarge(ValueError):
    """Exact enumeration refused; the coin space exceeds the limit."""


class ExactFormUnavailable(ValueError):
    """The referee has no closed-form outcome law; use Monte-Carlo."""


# ---------------------------------------------------------------------------
# protocol types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassicalSmpProtocol:
    """A classical SMP protocol over explicit finite coin spaces.

    Coins are indices: public_coin_size is the post-Newman public space
    (1 means no public coin), the private sizes likewise.  Messages are
    '0'/'1' strings; the referee sees the public coin index only when
    referee_sees_coin is set, and never the private coins.

    batch_tokens, if present, maps aligned coin-index arrays straight to
    integer-coded tokens plus a decode table; sample_tokens draws tokens
    for Monte-Carlo trials.  Both must agree with the scalar route.
    """

    public_coin_size: int
    alice_private_size: int
    bob_private_size: int
    alice_msg: Callable[[Any, int, int], str]
    bob_msg: Callable[[Any, int, int], str]
    referee: Callable[..., Any]
    alice_cost_bits: int
    bob_cost_bits: int
    referee_sees_coin: bool = False
    batch_tokens: Callable[..., tuple[np.ndarray, list]] | None = None
    sample_tokens: Callable[..., tuple[np.ndarray, list]] | None = None

    def __post_init__(self) -> None:
        if self.public_coin_size < 1 or self.alice_private_size < 1 or self.bob_private_size < 1:
            raise ValueError("coin space sizes must be at least 1")
        if self.alice_cost_bits < 0 or self.bob_cost_bits < 0:
            raise ValueError("message costs must be nonnegative")

    @property
    def cost_bits(self) -> int:
        return self.alice_cost_bits + self.bob_cost_bits

    @property
    def coin_space_size(self) -> int:
        return self.public_coin_size * self.alice_private_size * self.bob_private_size

    def run_once(self, x: Any, y_aux: Any, public_r: int, private_ra: int, private_rb: int) -> Any:
        """Scalar message-level round: build both messages, ask the referee."""
        msg_a = self.alice_msg(x, public_r, private_ra)
        msg_b = self.bob_msg(y_aux, public_r, private_rb)
        if len(msg_a) > self.alice_cost_bits or len(msg_b) > self.bob_cost_bits:
            raise ValueError("message exceeds declared cost")
        if self.referee_sees_coin:
            return self.referee(msg_a, msg_b, public_r)
        return self.referee(msg_a, msg_b)


@dataclass(frozen=True)
class QuantumSmpProtocol:
    """A fingerprinting-style quantum SMP protocol.

    Each party sends `copies` identical pure-state fingerprints of
    dimension state_dim; the referee procedure consumes the copy pairs.
    """

    alice_state: Callable[[Any], PureState]
    bob_state: Callable[[Any], PureState]
    copies: int
    state_dim: int
    referee_procedure: Any

    def __post_init__(self) -> None:
        if self.copies < 1:
            raise ValueError("copies must be at least 1")
        if self.state_dim < 1:
            raise ValueError("state_dim must be at least 1")

    @property
    def qubits_per_copy(self) -> int:
        return max(int(self.state_dim - 1).bit_length(), 0)

    @property
    def cost_qubits(self) -> int:
        return 2 * self.copies * self.qubits_per_copy


@dataclass(frozen=True)
class SwapTestThresholdReferee:
    """Swap-test each of `copies` pairs; accept when enough come out symmetric.

    Outcomes per copy are independent Bernoulli with the swap_test
    probability, so acceptance is an exact binomial tail.  Ties at the
    threshold accept.  Tokens are 1 (accept) and 0 (reject).
    """

    copies: int
    min_zero_count: int

    def __post_init__(self) -> None:
        if not 0 <= self.min_zero_count <= self.copies:
            raise ValueError("min_zero_count must lie in [0, copies]")

    def accept_probability(self, alice: PureState, bob: PureState) -> float:
        p_zero = swap_test(alice, bob)
        if self.min_zero_count == 0:
            return 1.0
        return float(binom.sf(self.min_zero_count - 1, self.copies, p_zero))

    def token_distribution(self, alice: PureState, bob: PureState) -> dict[Any, float]:
        p_accept = self.accept_probability(alice, bob)
        return {1: p_accept, 0: 1.0 - p_accept}

    def sample_tokens(
        self, alice: PureState, bob: PureState, trials: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, list]:
        p_zero = swap_test(alice, bob)
        zeros = rng.binomial(self.copies, min(p_zero, 1.0), size=trials)
        return (zeros >= self.min_zero_count).astype(np.int64), [0, 1]


# ---------------------------------------------------------------------------
# problems and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    """What counts as a correct answer, and how much dont_know is budgeted.

    judge(input, token) returns one of "valid" / "dont_know" / "invalid";
    an input is the pair (x, y_aux) fed to the two parties.  Judges never
    see coins.
    """

    judge: Callable[[Any, Any], str]
    eps: float
    enumerate_inputs: Callable[[], Sequence] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps}")


def boolean_problem_spec(f: Callable[[Any, Any], int]) -> ProblemSpec:
    """Spec for a Boolean function: token must equal f(x, y); no dont_know."""

    def judge(pair: tuple, token: Any) -> str:
        x, y_aux = pair
        return VALID if token == f(x, y_aux) else INVALID

    return ProblemSpec(judge=judge, eps=0.0)


def _format_probability(p) -> str:
    if isinstance(p, Fraction):
        return f"{p.numerator}/{p.denominator}"
    return repr(float(p))


@dataclass(frozen=True)
class InputReport:
    """Outcome probabilities for one input."""

    input_id: str
    p_valid: Fraction | float
    p_dont_know: Fraction | float
    p_invalid: Fraction | float
    trials: int | None = None
    radius: float | None = None

    def __post_init__(self) -> None:
        total = float(self.p_valid) + float(self.p_dont_know) + float(self.p_invalid)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {total!r}")

    def excess_error(self, eps: float) -> float:
        return float(self.p_invalid) + max(0.0, float(self.p_dont_know) - eps)


@dataclass(frozen=True)
class EvaluationReport:
    """Per-input outcome table plus the worst-case aggregate."""

    mode: str
    eps: float
    inputs: tuple[InputReport, ...]

    @property
    def worst_case(self) -> float:
        return max(rep.excess_error(self.eps) for rep in self.inputs)

    def to_json(self) -> str:
        payload = {
            "mode": self.mode,
            "eps": self.eps,
            "worst_case": self.worst_case,
            "inputs": [
                {
                    "input-id": rep.input_id,
                    "p_valid": _format_probability(rep.p_valid),
                    "p_dontknow": _format_probability(rep.p_dont_know),
                    "p_invalid": _format_probability(rep.p_invalid),
                    "trials": rep.trials,
                    "radius": rep.radius,
                }
                for rep in self.inputs
            ],
        }
        return json.dumps(payload, indent=2)

    def to_csv(self) -> str:
        lines = ["input-id,p_valid,p_dontknow,p_invalid,trials,radius"]
        for rep in self.inputs:
            trials = "" if rep.trials is None else str(rep.trials)
            radius = "" if rep.radius is None else repr(rep.radius)
            lines.append(
                ",".join(
                    [
                        rep.input_id,
                        _format_probability(rep.p_valid),
                        _format_probability(rep.p_dont_know),
                        _format_probability(rep.p_invalid),
                        trials,
                        radius,
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def _input_id(item: Any, index: int) -> str:
    return str(getattr(item, "input_id", index))


# ---------------------------------------------------------------------------
# exact evaluation
# ---------------------------------------------------------------------------

def exact_classical_token_counts(
    protocol: ClassicalSmpProtocol,
    x: Any,
    y_aux: Any,
    coin_order: Iterable[tuple[int, int, int]] | None = None,
) -> dict[Any, int]:
    """Token counts from full scalar enumeration of the coin space.

    coin_order may supply the (public, ra, rb) triples in any permutation;
    counts are order-independent.  This is the reference route the batch
    path is tested against.
    """
    if coin_order is None:
        coin_order = (
            (r, ra, rb)
            for r in range(protocol.public_coin_size)
            for ra in range(protocol.alice_private_size)
            for rb in range(protocol.bob_private_size)
        )
    counts: dict[Any, int] = {}
    for r, ra, rb in coin_order:
        token = protocol.run_once(x, y_aux, r, ra, rb)
        counts[token] = counts.get(token, 0) + 1
    return counts


def _batch_coin_grid(protocol: ClassicalSmpProtocol) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p, a, b = protocol.public_coin_size, protocol.alice_private_size, protocol.bob_private_size
    pub = np.repeat(np.arange(p, dtype=np.int64), a * b)
    ra = np.tile(np.repeat(np.arange(a, dtype=np.int64), b), p)
    rb = np.tile(np.arange(b, dtype=np.int64), p * a)
    return pub, ra, rb


def _judged_fractions(
    problem: ProblemSpec, pair: tuple, token_counts: dict[Any, int], total: int
) -> dict[str, Fraction]:
    sums = {VALID: Fraction(0), DONT_KNOW: Fraction(0), INVALID: Fraction(0)}
    for token, count in token_counts.items():
        judgment = problem.judge(pair, token)
        if judgment not in sums:
            raise ValueError(f"judge returned {judgment!r}")
        sums[judgment] += Fraction(count, total)
    return sums


def evaluate_exact(
    protocol: ClassicalSmpProtocol | QuantumSmpProtocol,
    problem: ProblemSpec,
    inputs: Sequence[tuple],
    coin_limit: int = DEFAULT_COIN_LIMIT,
) -> EvaluationReport:
    """Exact per-input outcome probabilities.

    Classical protocols are enumerated over the full coin space (rational
    counts, refused beyond coin_limit); quantum protocols use the referee's
    closed-form distribution and raise ExactFormUnavailable without one.
    """
    reports = []
    if isinstance(protocol, ClassicalSmpProtocol):
        total = protocol.coin_space_size
        if total > coin_limit:
            raise CoinSpaceTooLarge(
                f"coin space of size {total} exceeds the limit {coin_limit}; "
                "use evaluate_monte_carlo"
            )
        for index, pair in enumerate(inputs):
            x, y_aux = pair
            if protocol.batch_tokens is not None:
                pub, ra, rb = _batch_coin_grid(protocol)
                codes, table = protocol.batch_tokens(x, y_aux, pub, ra, rb)
                unique, counts = np.unique(codes, return_counts=True)
                token_counts = {table[int(u)]: int(c) for u, c in zip(unique, counts)}
            else:
                token_counts = exact_classical_token_counts(protocol, x, y_aux)
            sums = _judged_fractions(problem, pair, token_counts, total)
            reports.append(
                InputReport(
                    input_id=_input_id(pair, index),
                    p_valid=sums[VALID],
                    p_dont_know=sums[DONT_KNOW],
                    p_invalid=sums[INVALID],
                )
            )
    else:
        for index, pair in enumerate(inputs):
            x, y_aux = pair
            alice = protocol.alice_state(x)
            bob = protocol.bob_state(y_aux)
            dist_fn = getattr(protocol.referee_procedure, "token_distribution", None)
            if dist_fn is None:
                raise ExactFormUnavailable(
                    "referee procedure has no closed-form outcome law; "
                    "use evaluate_monte_carlo"
                )
            sums = {VALID: 0.0, DONT_KNOW: 0.0, INVALID: 0.0}
            for token, prob in dist_fn(alice, bob).items():
                sums[problem.judge(pair, token)] += prob
            reports.append(
                InputReport(
                    input_id=_input_id(pair, index),
                    p_valid=sums[VALID],
                    p_dont_know=sums[DONT_KNOW],
                    p_invalid=sums[INVALID],
                )
            )
    return EvaluationReport(mode="exact", eps=problem.eps, inputs=tuple(reports))


# ---------------------------------------------------------------------------
# Monte-Carlo evaluation
# ---------------------------------------------------------------------------

def _mc_classical_counts(
    protocol: ClassicalSmpProtocol, x: Any, y_aux: Any, trials: int, rng: np.random.Generator
) -> dict[Any, int]:
    if protocol.sample_tokens is not None:
        codes, table = protocol.sample_tokens(x, y_aux, trials, rng)
        unique, counts = np.unique(codes, return_counts=True)
        return {table[int(u)]: int(c) for u, c in zip(unique, counts)}
    counts: dict[Any, int] = {}
    for _ in range(trials):
        r = rand_below(rng, protocol.public_coin_size)
        ra = rand_below(rng, protocol.alice_private_size)
        rb = rand_below(rng, protocol.bob_private_size)
        token = protocol.run_once(x, y_aux, r, ra, rb)
        counts[token] = counts.get(token, 0) + 1
    return counts


def evaluate_monte_carlo(
    protocol: ClassicalSmpProtocol | QuantumSmpProtocol,
    problem: ProblemSpec,
    inputs: Sequence[tuple],
    trials: int,
    seed: int,
    partitions: int = 1,
) -> EvaluationReport:
    """Sampled per-input outcome estimates with 3-sigma radii.

    Trials are split across `partitions` independent streams derived from
    (seed, input index, partition index) and merged by summing counts; the
    reported radius is the largest 3*sqrt(p(1-p)/trials) over the three
    outcome classes.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if partitions < 1 or partitions > trials:
        raise ValueError("partitions must lie in [1, trials]")
    reports = []
    quantum = isinstance(protocol, QuantumSmpProtocol)
    for index, pair in enumerate(inputs):
        x, y_aux = pair
        token_counts: dict[Any, int] = {}
        base = trials // partitions
        for part in range(partitions):
            part_trials = base + (1 if part < trials % partitions else 0)
            if part_trials == 0:
                continue
            rng = derive_rng(seed, "mc", index, part)
            if quantum:
                alice = protocol.alice_state(x)
                bob = protocol.bob_state(y_aux)
                codes, table = protocol.referee_procedure.sample_tokens(
                    alice, bob, part_trials, rng
                )
                unique, counts = np.unique(codes, return_counts=True)
                part_counts = {table[int(u)]: int(c) for u, c in zip(unique, counts)}
            else:
                part_counts = _mc_classical_counts(protocol, x, y_aux, part_trials, rng)
            for token, count in part_counts.items():
                token_counts[token] = token_counts.get(token, 0) + count

        sums = {VALID: 0, DONT_KNOW: 0, INVALID: 0}
        for token, count in token_counts.items():
            sums[problem.judge(pair, token)] += count
        estimates = {k: v / trials for k, v in sums.items()}
        radius = max(
            3.0 * float(np.sqrt(p * (1.0 - p) / trials)) for p in estimates.values()
        )
        reports.append(
            InputReport(
                input_id=_input_id(pair, index),
                p_valid=estimates[VALID],
                p_dont_know=estimates[DONT_KNOW],
                p_invalid=estimates[INVALID],
                trials=trials,
                radius=radius,
            )
        )
    return EvaluationReport(mode="monte-carlo", eps=problem.eps, inputs=tuple(reports))


def cost_summary(protocol: ClassicalSmpProtocol | QuantumSmpProtocol) -> dict:
    """Worst-case communication with a per-party breakdown."""
    if isinstance(protocol, ClassicalSmpProtocol):
        return {
            "kind": "classical",
            "total_bits": protocol.cost_bits,
            "alice_bits": protocol.alice_cost_bits,
            "bob_bits": protocol.bob_cost_bits,
        }
    return {
        "kind": "quantum",
        "total_qubits": protocol.cost_qubits,
        "copies": protocol.copies,
        "qubits_per_copy": protocol.qubits_per_copy,
    }
