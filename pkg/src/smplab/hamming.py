"""Hamming-threshold protocols: parity sketches and code-ball search.

Deciding whether two n-bit strings differ in at most d positions admits
several SMP protocols at desk scale.  A classical parity sketch compares
random-subset parities whose disagreement rate q(distance) is exactly
analyzable; the sketch lifts into fingerprint states.  A quantum ball
search sends code fingerprints and tries every error pattern of weight
at most d, either on fresh state copies per candidate (one-sided error,
closed-form soundness) or coherently on one shared set of copies with
measurement collapse tracked by a state-vector simulation.  A classical
ball protocol does the same search with shared random parities.  The
random-access-code reduction and the entropy inequality it feeds close
out the module.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np
from scipy.stats import binom

from .bits import bits_to_array, bits_to_hex, fisher_yates_subset, hex_to_bits, random_bits, validate_bits, weight, xor_bits
from .protocols import ClassicalSmpProtocol, ProblemSpec, QuantumSmpProtocol, boolean_problem_spec
from .quantum import PureState
from .seeds import derive_rng

import json

WEAK_CODE_TOL = 1e-6

# state-vector budget for the coherent referee: (m^2)^K entries
COHERENT_MAX_M = 8
COHERENT_MAX_PAIRS = 3
COHERENT_MAX_CANDIDATES = 5

FRESH_MAX_N = 16
CLASSICAL_MAX_N = 20
CLASSICAL_MAX_D = 3


def hamming_distance(x: str, y: str) -> int:
    return weight(xor_bits(x, y))


@dataclass(frozen=True)
class HamInstance:
    """One decision instance: is the distance between x and y at most d?"""

    n: int
    d: int
    x: str
    y: str

    def __post_init__(self) -> None:
        if not 0 <= self.d <= self.n:
            raise ValueError(f"need 0 <= d <= n, got d={self.d}, n={self.n}")
        validate_bits(self.x, self.n, "x")
        validate_bits(self.y, self.n, "y")

    @property
    def delta(self) -> int:
        return hamming_distance(self.x, self.y)


def ham_predicate(inst: HamInstance) -> int:
    """1 iff the two strings differ in at most d positions."""
    return int(inst.delta <= inst.d)


def ham_problem(d: int) -> ProblemSpec:
    """Boolean problem over (x, y) pairs at threshold d."""
    return boolean_problem_spec(lambda x, y: int(hamming_distance(x, y) <= d))


def random_ham_instance(n: int, d: int, delta: int, seed: int) -> HamInstance:
    """Random instance at exact distance delta."""
    if not 0 <= delta <= n:
        raise ValueError(f"delta must lie in [0, n], got {delta}")
    rng = derive_rng(seed, "ham-instance", n, d, delta)
    x = random_bits(n, rng)
    positions = fisher_yates_subset(n, delta, rng)
    y_arr = bits_to_array(x).copy()
    for pos in positions:
        y_arr[pos] ^= 1
    y = "".join(chr(ord("0") + b) for b in y_arr)
    return HamInstance(n=n, d=d, x=x, y=y)


# ---------------------------------------------------------------------------
# parity sketch
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParitySketchParams:
    """Parameters of one parity-sketch protocol.

    p_include is the per-coordinate inclusion probability 1/(2(d+1)); a
    sketch coordinate disagrees with probability q(delta) =
    (1 - (1-2p)^delta)/2, exactly rational.  threshold_ratio is the
    midpoint (q(d)+q(d+1))/2 and dis_max = floor(m * ratio) disagreements
    are still accepted.  subsets holds the canonical coin setting (the
    seed-derived draw reused as coin 0 by sketch_to_embedding).
    """

    n: int
    d: int
    eps: float
    seed: int
    m_sketch: int
    p_include: Fraction
    threshold_ratio: Fraction
    dis_max: int
    digit_base: int
    subsets: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not Fraction(0) < self.p_include < Fraction(1, 2):
            raise ValueError(f"p_include must lie in (0, 1/2), got {self.p_include}")
        if not self.q(self.d) < self.threshold_ratio < self.q(self.d + 1):
            raise ValueError("threshold must lie strictly between q(d) and q(d+1)")
        if len(self.subsets) != self.m_sketch:
            raise ValueError("subsets must list one coordinate set per sketch bit")

    def q(self, delta: int) -> Fraction:
        """Exact disagreement probability of one sketch bit at distance delta."""
        if delta < 0:
            raise ValueError("delta must be nonnegative")
        return (1 - (1 - 2 * self.p_include) ** delta) / 2

    @property
    def gap(self) -> Fraction:
        return self.q(self.d + 1) - self.q(self.d)


def _sketch_inclusion(seed: int, coin: int, m: int, n: int, base: int) -> np.ndarray:
    rng = derive_rng(seed, "sketch-coins", coin)
    digits = rng.integers(0, base, size=(m, n))
    return digits == 0


def _digits_from_index(index: int, base: int, count: int) -> np.ndarray:
    # most-significant digit first; index = sum digits[t] * base^(count-1-t)
    digits = np.empty(count, dtype=np.int64)
    for t in range(count - 1, -1, -1):
        index, digits[t] = divmod(index, base)
    if index != 0:
        raise ValueError("coin index out of range")
    return digits


def parity_sketch_protocol(
    n: int, d: int, eps: float, seed: int
) -> tuple[ClassicalSmpProtocol, ParitySketchParams]:
    """Random-subset parity sketch deciding distance <= d with error eps.

    Each of the m sketch coordinates draws its subset through n base-2(d+1)
    digits of the public coin (a coordinate is included iff its digit is 0,
    hence inclusion probability exactly 1/(2(d+1))).  Both parties send
    their m subset parities; the referee accepts iff at most dis_max of
    them disagree.  The coin space is the full digit space, so the
    disagreement count is exactly Binomial(m, q(delta)) and the error is a
    binomial tail on either side of the threshold.
    """
    if not 1 <= d < n / 2:
        raise ValueError(f"need 1 <= d < n/2, got d={d}, n={n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    base = 2 * (d + 1)
    p = Fraction(1, base)

    def q(delta: int) -> Fraction:
        return (1 - (1 - 2 * p) ** delta) / 2

    gap = q(d + 1) - q(d)
    m = math.ceil(8.0 * math.log(2.0 / eps) / float(gap) ** 2)
    ratio = (q(d) + q(d + 1)) / 2
    t = m * ratio
    dis_max = t.numerator // t.denominator

    first = _sketch_inclusion(seed, 0, m, n, base)
    params = ParitySketchParams(
        n=n,
        d=d,
        eps=eps,
        seed=seed,
        m_sketch=m,
        p_include=p,
        threshold_ratio=ratio,
        dis_max=dis_max,
        digit_base=base,
        subsets=tuple(tuple(int(i) for i in np.nonzero(row)[0]) for row in first),
    )

    digit_count = n * m

    def sketch_message(bits: str, coin: int) -> str:
        arr = bits_to_array(bits)
        include = _digits_from_index(coin, base, digit_count).reshape(m, n) == 0
        parities = (include @ arr) % 2
        return "".join(chr(ord("0") + int(b)) for b in parities)

    def alice_msg(x: str, r: int, ra: int) -> str:
        return sketch_message(x, r)

    def bob_msg(y: str, r: int, rb: int) -> str:
        return sketch_message(y, r)

    def referee(msg_a: str, msg_b: str) -> int:
        dis = sum(ca != cb for ca, cb in zip(msg_a, msg_b))
        return 1 if dis <= dis_max else 0

    p_float = float(p)

    def sample_tokens(
        x: str, y: str, trials: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, list]:
        # Coin digits outside supp(x xor y) cancel from both parities, so
        # only the inclusion count on the support matters; its parity is
        # the disagreement bit.  Distribution-identical to full decoding.
        delta = hamming_distance(x, y)
        if delta == 0:
            return np.ones(trials, dtype=np.int64), [0, 1]
        disagree = rng.binomial(delta, p_float, size=(trials, m)) & 1
        dis = disagree.sum(axis=1)
        return (dis <= dis_max).astype(np.int64), [0, 1]

    protocol = ClassicalSmpProtocol(
        public_coin_size=base**digit_count,
        alice_private_size=1,
        bob_private_size=1,
        alice_msg=alice_msg,
        bob_msg=bob_msg,
        referee=referee,
        alice_cost_bits=m,
        bob_cost_bits=m,
        sample_tokens=sample_tokens,
    )
    return protocol, params


def parity_sketch_error(params: ParitySketchParams, delta: int) -> float:
    """Exact one-sided error at distance delta, a binomial tail in q(delta).

    For delta <= d the error is rejecting (too many disagreements); beyond
    d it is accepting.  Ties at dis_max accept.
    """
    q = float(params.q(delta))
    if delta <= params.d:
        return float(binom.sf(params.dis_max, params.m_sketch, q))
    return float(binom.cdf(params.dis_max, params.m_sketch, q))


def sketch_to_embedding(
    params: ParitySketchParams, n_prime: int, instances: Sequence[tuple[str, str]]
):
    """Fingerprint states over n_prime fixed coin settings of the sketch.

    The state of a string w is (1/sqrt(m n')) sum_r |r> sum_j |j> |bit>,
    the uniform superposition over the m n' sketch bits of w, so the inner
    product of two states is exactly the empirical agreement fraction.
    Squared thresholds are the expected agreements squared, (1-q(d))^2 for
    accept pairs and (1-q(d+1))^2 for reject pairs; an instance set whose
    empirical agreements do not separate at those values is rejected with
    the offending pair named.
    """
    from .geometry import ThresholdEmbedding

    if n_prime < 1:
        raise ValueError("n_prime must be positive")
    if not instances:
        raise ValueError("instance set must be nonempty")
    m, n = params.m_sketch, params.n
    inclusions = [
        _sketch_inclusion(params.seed, r, m, n, params.digit_base) for r in range(n_prime)
    ]

    amp = 1.0 / math.sqrt(n_prime * m)
    cache: dict[str, np.ndarray] = {}

    def state(w: str) -> np.ndarray:
        if w in cache:
            return cache[w]
        validate_bits(w, n, "instance string")
        arr = bits_to_array(w)
        vec = np.zeros(2 * m * n_prime)
        for r, include in enumerate(inclusions):
            parities = (include @ arr) % 2
            vec[r * 2 * m + 2 * np.arange(m) + parities] = amp
        cache[w] = vec
        return vec

    alpha = {}
    beta = {}
    domain = []
    for x, y in instances:
        f = int(hamming_distance(x, y) <= params.d)
        alpha[x] = state(x)
        beta[y] = state(y)
        domain.append((x, y, f))
    delta1 = float((1 - params.q(params.d)) ** 2)
    delta0 = float((1 - params.q(params.d + 1)) ** 2)
    return ThresholdEmbedding(
        alpha=alpha, beta=beta, delta0=delta0, delta1=delta1, domain=tuple(domain)
    )


# ---------------------------------------------------------------------------
# linear codes and fingerprints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearCode:
    """Binary linear code given by an m x n generator matrix.

    encode(x) = generator @ x over GF(2).  Minimum distance and maximum
    codeword weight are brute-forced over all 2^n - 1 nonzero messages at
    construction (hence n <= 16).
    """

    generator: np.ndarray
    min_distance: int = field(init=False)
    max_weight: int = field(init=False)

    def __post_init__(self) -> None:
        gen = np.array(self.generator, dtype=np.int64)
        if gen.ndim != 2 or gen.size == 0:
            raise ValueError("generator must be a nonempty 2-d matrix")
        if not np.all((gen == 0) | (gen == 1)):
            raise ValueError("generator entries must be bits")
        if gen.shape[1] > 16:
            raise ValueError(f"message length {gen.shape[1]} exceeds the brute-force budget 16")
        gen.setflags(write=False)
        object.__setattr__(self, "generator", gen)
        w_min, w_max = self._weight_profile(gen)
        object.__setattr__(self, "min_distance", w_min)
        object.__setattr__(self, "max_weight", w_max)

    @staticmethod
    def _weight_profile(gen: np.ndarray) -> tuple[int, int]:
        n = gen.shape[1]
        w_min, w_max = gen.shape[0] + 1, -1
        chunk = 1 << 13
        for start in range(1, 1 << n, chunk):
            idx = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
            bits = (idx[:, None] >> np.arange(n)) & 1
            weights = ((bits @ gen.T) % 2).sum(axis=1)
            w_min = min(w_min, int(weights.min()))
            w_max = max(w_max, int(weights.max()))
        return w_min, w_max

    @property
    def n(self) -> int:
        return int(self.generator.shape[1])

    @property
    def m(self) -> int:
        return int(self.generator.shape[0])

    def encode(self, x: str) -> str:
        validate_bits(x, self.n, "x")
        word = (self.generator @ bits_to_array(x)) % 2
        return "".join(chr(ord("0") + int(b)) for b in word)

    def encode_array(self, x: str) -> np.ndarray:
        validate_bits(x, self.n, "x")
        return (self.generator @ bits_to_array(x).astype(np.int64)) % 2

    def to_json(self) -> str:
        rows = [
            bits_to_hex("".join(chr(ord("0") + int(b)) for b in row))
            for row in self.generator
        ]
        return json.dumps({"n": self.n, "m": self.m, "rows": rows})

    @staticmethod
    def from_json(text: str) -> "LinearCode":
        data = json.loads(text)
        n = int(data["n"])
        rows = [bits_to_array(hex_to_bits(row, n)) for row in data["rows"]]
        if len(rows) != int(data["m"]):
            raise ValueError("row count disagrees with m")
        return LinearCode(np.array(rows))


def random_linear_code(
    n: int,
    rate: float,
    distance_floor: int,
    seed: int,
    max_attempts: int = 1000,
    max_weight_ceiling: int | None = None,
) -> LinearCode:
    """Uniform generator matrices resampled until the distance floor holds.

    m = ceil(n / rate).  Each attempt folds its counter into the seed
    stream, so the result is deterministic given (n, rate, seed).  The
    optional weight ceiling additionally rejects codes with near-full-
    weight codewords (those defeat overlap bounds that are two-sided).
    """
    if not 1 <= n <= 16:
        raise ValueError(f"n must lie in [1, 16], got {n}")
    if not 0.0 < rate <= 0.5:
        raise ValueError(f"rate must lie in (0, 1/2], got {rate}")
    if distance_floor < 1:
        raise ValueError("distance_floor must be at least 1")
    m = math.ceil(n / rate)
    for attempt in range(max_attempts):
        rng = derive_rng(seed, "linear-code", n, m, attempt)
        code = LinearCode(rng.integers(0, 2, size=(m, n)))
        if code.min_distance < distance_floor:
            continue
        if max_weight_ceiling is not None and code.max_weight > max_weight_ceiling:
            continue
        return code
    raise ValueError(
        f"no code with distance >= {distance_floor} found in {max_attempts} attempts"
    )


def code_fingerprint(x: str, code: LinearCode) -> PureState:
    """|phi_x> = (1/sqrt(m)) sum_i (-1)^(E(x)_i) |i>."""
    signs = 1.0 - 2.0 * code.encode_array(x)
    return PureState(signs / math.sqrt(code.m))


def phase_shift(state: PureState, j: int, code: LinearCode) -> PureState:
    """Multiply amplitude i by (-1)^(E(e_j)_i); an exact involution.

    By linearity this maps the fingerprint of x to the fingerprint of
    x xor e_j.  Shifts at distinct coordinates commute, and composing them
    over the support of any error pattern e realizes (-1)^(E(e)).
    """
    if not 0 <= j < code.n:
        raise ValueError(f"coordinate {j} out of range for n={code.n}")
    if state.dim != code.m:
        raise ValueError(f"state dimension {state.dim} does not match code length {code.m}")
    signs = 1.0 - 2.0 * code.generator[:, j].astype(np.float64)
    return PureState(signs * state.amplitudes)


def ball_candidates(n: int, d: int) -> tuple[str, ...]:
    """All error patterns of weight <= d, weight-ascending then lexicographic."""
    if not 0 <= d <= n:
        raise ValueError(f"need 0 <= d <= n, got d={d}, n={n}")
    out = []
    for w in range(d + 1):
        for positions in itertools.combinations(range(n), w):
            bits = ["0"] * n
            for pos in positions:
                bits[pos] = "1"
            out.append("".join(bits))
    return tuple(out)


def ball_size(n: int, d: int) -> int:
    return sum(math.comb(n, i) for i in range(d + 1))


def _candidate_sign_table(code: LinearCode, candidates: Sequence[str]) -> np.ndarray:
    table = np.empty((len(candidates), code.m))
    for idx, e in enumerate(candidates):
        table[idx] = 1.0 - 2.0 * code.encode_array(e)
    table.setflags(write=False)
    return table


# ---------------------------------------------------------------------------
# ball search, fresh copies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BallSearchFreshReferee:
    """Swap-test each candidate on its own copy block; accept on a clean block.

    Candidate j passes iff all of its tests_per_candidate swap tests come
    out symmetric; the protocol accepts iff some candidate passes.  Blocks
    are independent, so the acceptance probability is
    1 - prod_j (1 - s_j^K) with s_j the per-test symmetric probability.
    Equal states give s_j = 1 exactly, hence one-sided error.
    """

    candidate_signs: np.ndarray
    tests_per_candidate: int
    per_test_bound: float

    def __post_init__(self) -> None:
        if self.tests_per_candidate < 1:
            raise ValueError("tests_per_candidate must be positive")

    @property
    def candidates_count(self) -> int:
        return int(self.candidate_signs.shape[0])

    @property
    def soundness_bound(self) -> float:
        return min(
            1.0, self.candidates_count * self.per_test_bound**self.tests_per_candidate
        )

    def _pass_probabilities(self, alice: PureState, bob: PureState) -> np.ndarray:
        a = alice.amplitudes
        b = bob.amplitudes
        probs = np.empty(self.candidates_count)
        for j in range(self.candidates_count):
            shifted = self.candidate_signs[j] * a
            if np.array_equal(shifted, b):
                # exact-equality fast path keeps completeness at literally 1
                probs[j] = 1.0
                continue
            s = 0.5 + 0.5 * min(abs(complex(np.vdot(shifted, b))) ** 2, 1.0)
            probs[j] = s**self.tests_per_candidate
        return probs

    def accept_probability(self, alice: PureState, bob: PureState) -> float:
        pass_probs = self._pass_probabilities(alice, bob)
        if np.any(pass_probs >= 1.0):
            return 1.0
        return float(1.0 - np.prod(1.0 - pass_probs))

    def token_distribution(self, alice: PureState, bob: PureState) -> dict[Any, float]:
        p = self.accept_probability(alice, bob)
        return {1: p, 0: 1.0 - p}

    def sample_tokens(
        self, alice: PureState, bob: PureState, trials: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, list]:
        p = self.accept_probability(alice, bob)
        return (rng.random(trials) < p).astype(np.int64), [0, 1]


# ---------------------------------------------------------------------------
# ball search, coherent reuse
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CandidateStep:
    candidate: str
    outcome: bool
    probability: float
    fidelity: float


@dataclass(frozen=True)
class CoherentRunReport:
    token: int
    found: str | None
    steps: tuple[CandidateStep, ...]


@dataclass(frozen=True)
class CoherentReuseReferee:
    """Test all candidates on one shared set of copy pairs, reusing state.

    The joint state of the 2K registers (Alice copy k at axis 2k, Bob copy
    k at axis 2k+1) is simulated exactly.  Per candidate: phase-shift the
    Alice axes by the candidate's code signs, measure the two-outcome
    projector "at least min_symmetric of the K pairs symmetric" (default
    all K), collapse, undo the shift, and record the fidelity to the
    initial product state.  The search stops at the first yes.
    """

    candidates: tuple[str, ...]
    candidate_signs: np.ndarray
    pairs: int
    min_symmetric: int

    def __post_init__(self) -> None:
        if not 1 <= self.min_symmetric <= self.pairs:
            raise ValueError("min_symmetric must lie in [1, pairs]")
        if len(self.candidates) != self.candidate_signs.shape[0]:
            raise ValueError("candidate list and sign table disagree")

    def _initial_state(self, alice: PureState, bob: PureState) -> np.ndarray:
        a = alice.amplitudes
        b = bob.amplitudes
        if np.all(a.imag == 0) and np.all(b.imag == 0):
            a, b = a.real, b.real
        psi = np.multiply.outer(a, b)
        for _ in range(self.pairs - 1):
            psi = np.multiply.outer(psi, np.multiply.outer(a, b))
        return psi

    def _shift(self, psi: np.ndarray, signs: np.ndarray) -> None:
        for k in range(self.pairs):
            shape = (1,) * (2 * k) + (signs.size,) + (1,) * (2 * self.pairs - 2 * k - 1)
            psi *= signs.reshape(shape)

    def _project(self, psi: np.ndarray) -> np.ndarray:
        if self.min_symmetric == self.pairs:
            proj = psi
            for k in range(self.pairs):
                proj = 0.5 * (proj + proj.swapaxes(2 * k, 2 * k + 1))
            return proj
        total = np.zeros_like(psi)
        for mask in range(1 << self.pairs):
            if bin(mask).count("1") < self.min_symmetric:
                continue
            comp = psi
            for k in range(self.pairs):
                swapped = comp.swapaxes(2 * k, 2 * k + 1)
                comp = 0.5 * (comp + swapped) if (mask >> k) & 1 else 0.5 * (comp - swapped)
            total += comp
        return total

    def run(self, alice: PureState, bob: PureState, rng: np.random.Generator) -> CoherentRunReport:
        psi0 = self._initial_state(alice, bob)
        psi = psi0.copy()
        steps = []
        found = None
        for idx in range(len(self.candidates)):
            signs = self.candidate_signs[idx]
            self._shift(psi, signs)
            proj = self._project(psi)
            p_yes = min(max(float(np.real(np.vdot(proj, proj))), 0.0), 1.0)
            outcome = bool(rng.random() < p_yes)
            if outcome:
                psi = proj / math.sqrt(p_yes)
            else:
                rest = psi - proj
                psi = rest / math.sqrt(max(1.0 - p_yes, 1e-300))
            self._shift(psi, signs)
            fidelity = min(abs(complex(np.vdot(psi0, psi))) ** 2, 1.0)
            steps.append(
                CandidateStep(
                    candidate=self.candidates[idx],
                    outcome=outcome,
                    probability=p_yes,
                    fidelity=fidelity,
                )
            )
            if outcome:
                found = self.candidates[idx]
                break
        return CoherentRunReport(token=1 if found is not None else 0, found=found, steps=tuple(steps))

    def sample_tokens(
        self, alice: PureState, bob: PureState, trials: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, list]:
        codes = np.empty(trials, dtype=np.int64)
        for t in range(trials):
            codes[t] = self.run(alice, bob, rng).token
        return codes, [0, 1]


def ball_search_protocol(
    n: int,
    d: int,
    eps: float,
    code: LinearCode,
    variant: str,
    tests_per_candidate: int | None = None,
    min_symmetric: int | None = None,
) -> QuantumSmpProtocol:
    """Quantum ball search over all D error patterns of weight <= d.

    Both variants send code fingerprints.  fresh_copies gives every
    candidate its own K = ceil(log2(D/eps)/log2(1/s)) copy pairs, where
    s = 1/2 + ov^2/2 bounds the per-test symmetric probability on any
    wrong candidate and ov is the worst codeword overlap, taken two-sided:
    max(1 - 2 w_min/m, 2 w_max/m - 1).  Acceptance is one-sided and the
    soundness bound D*s^K <= eps is enforced by the K formula.
    coherent_reuse keeps K copy pairs total (tests_per_candidate overrides
    the formula) and reuses them across candidates with exact state-vector
    collapse; its error is empirical, not bounded here.
    """
    if variant not in ("fresh_copies", "coherent_reuse"):
        raise ValueError(f"unknown variant {variant!r}")
    if code.n != n:
        raise ValueError(f"code encodes {code.n}-bit messages, protocol needs {n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    candidates = ball_candidates(n, d)
    count = len(candidates)
    m = code.m
    overlap = max(1.0 - 2.0 * code.min_distance / m, 2.0 * code.max_weight / m - 1.0)
    overlap = max(overlap, 0.0)
    s = 0.5 + 0.5 * overlap * overlap
    if s >= 1.0 - WEAK_CODE_TOL:
        raise ValueError(
            f"code floor too weak: per-test bound {s} leaves no soundness margin"
        )
    if tests_per_candidate is None:
        tests = math.ceil(math.log2(count / eps) / math.log2(1.0 / s))
    else:
        if tests_per_candidate < 1:
            raise ValueError("tests_per_candidate must be positive")
        tests = tests_per_candidate
    signs = _candidate_sign_table(code, candidates)

    if variant == "fresh_copies":
        if n > FRESH_MAX_N:
            raise ValueError(f"fresh_copies budget allows n <= {FRESH_MAX_N}, got {n}")
        referee = BallSearchFreshReferee(
            candidate_signs=signs, tests_per_candidate=tests, per_test_bound=s
        )
        copies = count * tests
    else:
        if m > COHERENT_MAX_M or tests > COHERENT_MAX_PAIRS or count > COHERENT_MAX_CANDIDATES:
            raise ValueError(
                "coherent_reuse budget exceeded: need m <= "
                f"{COHERENT_MAX_M}, K <= {COHERENT_MAX_PAIRS}, D <= {COHERENT_MAX_CANDIDATES}; "
                f"got m={m}, K={tests}, D={count}"
            )
        referee = CoherentReuseReferee(
            candidates=candidates,
            candidate_signs=signs,
            pairs=tests,
            min_symmetric=tests if min_symmetric is None else min_symmetric,
        )
        copies = tests

    return QuantumSmpProtocol(
        alice_state=lambda x: code_fingerprint(x, code),
        bob_state=lambda y: code_fingerprint(y, code),
        copies=copies,
        state_dim=m,
        referee_procedure=referee,
    )


@dataclass(frozen=True)
class CoherentDemoReport:
    runs: int
    agreements: int
    steps_total: int
    fidelity_values: int

    @property
    def agreement_rate(self) -> float:
        return self.agreements / self.runs

    @property
    def telemetry_complete(self) -> bool:
        return self.fidelity_values == self.steps_total and self.steps_total >= self.runs


def coherent_agreement_demo(
    protocol: QuantumSmpProtocol, n: int, d: int, runs: int, seed: int
) -> CoherentDemoReport:
    """Seeded runs on instances with distance uniform over {0..d+1}.

    Scores agreement of the coherent search output with the distance
    predicate, and counts fidelity telemetry entries (one per candidate
    step in every run).
    """
    if runs < 1:
        raise ValueError("runs must be positive")
    referee = protocol.referee_procedure
    rng = derive_rng(seed, "coherent-demo", n, d, runs)
    agreements = 0
    steps_total = 0
    fidelity_values = 0
    for _ in range(runs):
        x = random_bits(n, rng)
        delta = int(rng.integers(0, d + 2))
        y_arr = bits_to_array(x).copy()
        for pos in fisher_yates_subset(n, delta, rng):
            y_arr[pos] ^= 1
        y = "".join(chr(ord("0") + b) for b in y_arr)
        report = referee.run(protocol.alice_state(x), protocol.bob_state(y), rng)
        agreements += int(report.token == int(delta <= d))
        steps_total += len(report.steps)
        fidelity_values += sum(1 for st in report.steps if 0.0 <= st.fidelity <= 1.0)
    return CoherentDemoReport(
        runs=runs,
        agreements=agreements,
        steps_total=steps_total,
        fidelity_values=fidelity_values,
    )


# ---------------------------------------------------------------------------
# classical ball protocol
# ---------------------------------------------------------------------------

def classical_ball_protocol(n: int, d: int, eps: float, seed: int = 0) -> ClassicalSmpProtocol:
    """Shared random parities pin down x xor y inside the ball, or reject.

    The public coin holds K = ceil(log2(D/eps)) n-bit masks; each party
    sends its K mask parities.  The referee (who sees the coin) accepts
    iff some error pattern of weight <= d matches all K parity differences.
    The true difference always matches, so completeness is exactly 1; each
    wrong pattern survives with probability 2^-K, so soundness error is at
    most D/2^K <= eps.  The seed parameter is accepted for interface
    symmetry with the other constructors but unused: all randomness here
    is the public coin itself.
    """
    if not 1 <= n <= CLASSICAL_MAX_N:
        raise ValueError(f"n must lie in [1, {CLASSICAL_MAX_N}], got {n}")
    if not 0 <= d <= CLASSICAL_MAX_D:
        raise ValueError(f"d must lie in [0, {CLASSICAL_MAX_D}], got {d}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    count = ball_size(n, d)
    k_masks = math.ceil(math.log2(count / eps))
    candidates = ball_candidates(n, d)
    cand_ints = [int(e, 2) for e in candidates]
    full = (1 << n) - 1

    def masks_from_coin(r: int) -> list[int]:
        return [(r >> ((k_masks - 1 - k) * n)) & full for k in range(k_masks)]

    def parities(bits: str, r: int) -> str:
        value = int(bits, 2)
        return "".join(
            chr(ord("0") + ((mask & value).bit_count() & 1)) for mask in masks_from_coin(r)
        )

    def alice_msg(x: str, r: int, ra: int) -> str:
        return parities(x, r)

    def bob_msg(y: str, r: int, rb: int) -> str:
        return parities(y, r)

    def referee(msg_a: str, msg_b: str, r: int) -> int:
        masks = masks_from_coin(r)
        targets = [int(ca != cb) for ca, cb in zip(msg_a, msg_b)]
        for e in cand_ints:
            if all(
                ((mask & e).bit_count() & 1) == t for mask, t in zip(masks, targets)
            ):
                return 1
        return 0

    cand_bits = np.array([bits_to_array(e) for e in candidates], dtype=np.int64)

    def sample_tokens(
        x: str, y: str, trials: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, list]:
        diff = bits_to_array(xor_bits(x, y)).astype(np.int64)
        masks = rng.integers(0, 2, size=(trials, k_masks, n), dtype=np.int64)
        target = (masks @ diff) & 1
        cand_par = (masks.reshape(-1, n) @ cand_bits.T) & 1
        cand_par = cand_par.reshape(trials, k_masks, -1)
        hit = np.all(cand_par == target[:, :, None], axis=1)
        return np.any(hit, axis=1).astype(np.int64), [0, 1]

    return ClassicalSmpProtocol(
        public_coin_size=1 << (n * k_masks),
        alice_private_size=1,
        bob_private_size=1,
        alice_msg=alice_msg,
        bob_msg=bob_msg,
        referee=referee,
        alice_cost_bits=k_masks,
        bob_cost_bits=k_masks,
        referee_sees_coin=True,
        sample_tokens=sample_tokens,
    )


def classical_ball_mask_count(n: int, d: int, eps: float) -> int:
    return math.ceil(math.log2(ball_size(n, d) / eps))


# ---------------------------------------------------------------------------
# random access code reduction
# ---------------------------------------------------------------------------

def rac_reduction(z: str, i: int, n: int, d: int) -> tuple[str, str]:
    """Reduce recovering bit i of z to one distance-threshold instance.

    Alice pads z to x = z 0^(n-d); Bob, wanting bit i (1-based in [d]),
    forms y = e_i 1^(d+1-|z|) 0^(n-2d-1+|z|).  Then the distance is
    exactly d + 2 - 2 z_i: at most d when z_i = 1, at least d+2 when
    z_i = 0, so the threshold-d predicate recovers the bit.
    """
    validate_bits(z, d, "z")
    if not 1 <= i <= d:
        raise ValueError(f"index must lie in [1, {d}], got {i}")
    if n < 2 * d + 1:
        raise ValueError(f"need n >= 2d+1 = {2 * d + 1}, got {n}")
    zw = weight(z)
    x = z + "0" * (n - d)
    e_i = "0" * (i - 1) + "1" + "0" * (d - i)
    y = e_i + "1" * (d + 1 - zw) + "0" * (n - 2 * d - 1 + zw)
    return x, y


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def nayak_check(d: int, q_qubits: float) -> bool:
    """Whether (d, q) respects log2(d) + q >= (1 - H(2/3)) d.

    A protocol deciding the distance threshold with q qubits yields a
    random access code for d bits with log2(d) + q qubits, which the
    entropy bound constrains from below.
    """
    if d < 1:
        raise ValueError(f"d must be at least 1, got {d}")
    if q_qubits < 0:
        raise ValueError("q_qubits must be nonnegative")
    return math.log2(d) + q_qubits >= (1.0 - binary_entropy(2.0 / 3.0)) * d
