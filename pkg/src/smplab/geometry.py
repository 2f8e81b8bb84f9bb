"""Fingerprint geometry: threshold embeddings, margin realizations, bounds.

A ThresholdEmbedding separates a partial Boolean function by squared
overlaps (f=1 pairs at or above delta1, f=0 pairs at or below delta0);
a MarginRealization separates it by signed inner products (+gamma / -gamma).
The two views convert into each other with explicit dimension and
parameter formulas, margins of total functions are capped by the Forster
spectral bound, and any embedding compiles into a repeated-fingerprinting
protocol whose error is an exact binomial tail.

Vectors may be complex; tensor squares use the conjugated copy so every
compared inner product is real.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .protocols import ProblemSpec, QuantumSmpProtocol, SwapTestThresholdReferee, boolean_problem_spec
from .quantum import PureState
from .seeds import derive_rng

UNIT_ATOL = 1e-10
CONSTRAINT_ATOL = 1e-9
FORSTER_SLACK = 1e-6


def _unit_vector(vec, name: str) -> np.ndarray:
    arr = np.array(vec, dtype=np.complex128)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a nonempty vector")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > UNIT_ATOL:
        raise ValueError(f"{name} must be unit-norm, got norm {norm!r}")
    arr.setflags(write=False)
    return arr


def _real_inner(a: np.ndarray, b: np.ndarray, what: str) -> float:
    value = complex(np.vdot(a, b))
    if abs(value.imag) > CONSTRAINT_ATOL:
        raise ValueError(f"{what} must be real, got {value!r}")
    return value.real


@dataclass(frozen=True)
class ThresholdEmbedding:
    """Unit fingerprints with squared-overlap thresholds 0 <= d0 < d1 <= 1."""

    alpha: Mapping[Any, np.ndarray]
    beta: Mapping[Any, np.ndarray]
    delta0: float
    delta1: float
    domain: tuple[tuple[Any, Any, int], ...]

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta0 < self.delta1 <= 1.0:
            raise ValueError(f"need 0 <= delta0 < delta1 <= 1, got {(self.delta0, self.delta1)}")
        alpha = {key: _unit_vector(vec, f"alpha[{key!r}]") for key, vec in dict(self.alpha).items()}
        beta = {key: _unit_vector(vec, f"beta[{key!r}]") for key, vec in dict(self.beta).items()}
        dims = {v.size for v in alpha.values()} | {v.size for v in beta.values()}
        if len(dims) != 1:
            raise ValueError(f"all fingerprints must share a dimension, got {sorted(dims)}")
        domain = tuple((x, y, int(f)) for x, y, f in self.domain)
        if not domain:
            raise ValueError("domain must be nonempty")
        for x, y, f in domain:
            if f not in (0, 1):
                raise ValueError(f"f values must be bits, got {f!r}")
            if x not in alpha or y not in beta:
                raise ValueError(f"domain pair ({x!r}, {y!r}) lacks a fingerprint")
            overlap_sq = abs(complex(np.vdot(alpha[x], beta[y]))) ** 2
            if f == 1 and overlap_sq < self.delta1 - CONSTRAINT_ATOL:
                raise ValueError(f"pair ({x!r}, {y!r}, f=1) has overlap^2 {overlap_sq} < delta1")
            if f == 0 and overlap_sq > self.delta0 + CONSTRAINT_ATOL:
                raise ValueError(f"pair ({x!r}, {y!r}, f=0) has overlap^2 {overlap_sq} > delta0")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "domain", domain)

    @property
    def dim(self) -> int:
        return next(iter(self.alpha.values())).size

    @property
    def gap(self) -> float:
        return self.delta1 - self.delta0

    def to_json(self) -> str:
        def encode(side: Mapping[Any, np.ndarray]) -> dict:
            return {
                str(k): [[float(z.real), float(z.imag)] for z in vec]
                for k, vec in side.items()
            }

        return json.dumps(
            {
                "delta0": self.delta0,
                "delta1": self.delta1,
                "alpha": encode(self.alpha),
                "beta": encode(self.beta),
                "domain": [[str(x), str(y), f] for x, y, f in self.domain],
            }
        )

    @staticmethod
    def from_json(text: str) -> "ThresholdEmbedding":
        data = json.loads(text)

        def decode(side: dict) -> dict:
            return {
                k: np.array([complex(re, im) for re, im in vec], dtype=np.complex128)
                for k, vec in side.items()
            }

        return ThresholdEmbedding(
            alpha=decode(data["alpha"]),
            beta=decode(data["beta"]),
            delta0=float(data["delta0"]),
            delta1=float(data["delta1"]),
            domain=tuple((x, y, int(f)) for x, y, f in data["domain"]),
        )


@dataclass(frozen=True)
class MarginRealization:
    """Unit vectors with signed inner products split by +/- gamma."""

    alpha: Mapping[Any, np.ndarray]
    beta: Mapping[Any, np.ndarray]
    gamma: float
    domain: tuple[tuple[Any, Any, int], ...]

    def __post_init__(self) -> None:
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        alpha = {key: _unit_vector(vec, f"alpha[{key!r}]") for key, vec in dict(self.alpha).items()}
        beta = {key: _unit_vector(vec, f"beta[{key!r}]") for key, vec in dict(self.beta).items()}
        dims = {v.size for v in alpha.values()} | {v.size for v in beta.values()}
        if len(dims) != 1:
            raise ValueError(f"all vectors must share a dimension, got {sorted(dims)}")
        domain = tuple((x, y, int(f)) for x, y, f in self.domain)
        if not domain:
            raise ValueError("domain must be nonempty")
        for x, y, f in domain:
            if f not in (0, 1):
                raise ValueError(f"f values must be bits, got {f!r}")
            if x not in alpha or y not in beta:
                raise ValueError(f"domain pair ({x!r}, {y!r}) lacks a vector")
            value = _real_inner(alpha[x], beta[y], f"inner product at ({x!r}, {y!r})")
            if f == 0 and value < self.gamma - CONSTRAINT_ATOL:
                raise ValueError(f"pair ({x!r}, {y!r}, f=0) has inner product {value} < gamma")
            if f == 1 and value > -self.gamma + CONSTRAINT_ATOL:
                raise ValueError(f"pair ({x!r}, {y!r}, f=1) has inner product {value} > -gamma")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "domain", domain)

    @property
    def dim(self) -> int:
        return next(iter(self.alpha.values())).size


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def embedding_to_realization(embedding: ThresholdEmbedding) -> MarginRealization:
    """Squared-overlap thresholds to signed margins in dimension d^2 + 1.

    With a = (d1 + d0) / (2 + d1 + d0), the vectors
    alpha' = (sqrt(a), sqrt(1-a) alpha (x) conj(alpha)) and
    beta'  = (sqrt(a), -sqrt(1-a) beta (x) conj(beta))
    satisfy <alpha', beta'> = a - (1-a)|<alpha, beta>|^2, which lands at or
    beyond +/- gamma for gamma = (d1 - d0) / (2 + d1 + d0).
    """
    d0, d1 = embedding.delta0, embedding.delta1
    a = (d1 + d0) / (2.0 + d1 + d0)
    gamma = (d1 - d0) / (2.0 + d1 + d0)
    head = math.sqrt(a)
    tail = math.sqrt(1.0 - a)

    def lift(vec: np.ndarray, sign: float) -> np.ndarray:
        return np.concatenate(([head], sign * tail * np.kron(vec, vec.conj())))

    alpha = {x: lift(vec, 1.0) for x, vec in embedding.alpha.items()}
    beta = {y: lift(vec, -1.0) for y, vec in embedding.beta.items()}
    return MarginRealization(alpha=alpha, beta=beta, gamma=gamma, domain=embedding.domain)


def realization_to_embedding(realization: MarginRealization) -> ThresholdEmbedding:
    """Signed margins to squared-overlap thresholds in dimension d + 1.

    alpha' = (1, alpha)/sqrt(2), beta' = (1, -beta)/sqrt(2) give
    |<alpha', beta'>|^2 = (1 - <alpha, beta>)^2 / 4, so
    delta0 = (1 - gamma)^2 / 4 and delta1 = (1 + gamma)^2 / 4.
    """
    gamma = realization.gamma
    inv = 1.0 / math.sqrt(2.0)

    def lift(vec: np.ndarray, sign: float) -> np.ndarray:
        return inv * np.concatenate(([1.0], sign * vec))

    alpha = {x: lift(vec, 1.0) for x, vec in realization.alpha.items()}
    beta = {y: lift(vec, -1.0) for y, vec in realization.beta.items()}
    return ThresholdEmbedding(
        alpha=alpha,
        beta=beta,
        delta0=(1.0 - gamma) ** 2 / 4.0,
        delta1=(1.0 + gamma) ** 2 / 4.0,
        domain=realization.domain,
    )


# ---------------------------------------------------------------------------
# sign matrices and the Forster bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignMatrix:
    """A +/-1 matrix, one row per x and one column per y."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=np.int64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("sign matrix must be a nonempty 2-d array")
        if not np.all(np.abs(arr) == 1):
            raise ValueError("sign matrix entries must be +/-1")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(self.entries.shape)


def sign_matrix_from_function(
    f: Callable[[Any, Any], int], xs: Sequence, ys: Sequence
) -> SignMatrix:
    """M[x, y] = (-1)^f(x, y) over the listed inputs."""
    entries = np.array([[1 - 2 * int(f(x, y)) for y in ys] for x in xs], dtype=np.int64)
    return SignMatrix(entries)


def spectral_norm(matrix: np.ndarray, residual_tol: float = 1e-12, max_iterations: int = 20000) -> float:
    """Largest singular value via power iteration on the Gram matrix.

    Iterates v <- M^T M v from a fixed deterministic start until the
    relative eigen-residual drops below residual_tol; falls back to a full
    symmetric eigensolve for dimensions up to 256 if iteration stalls.
    """
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.size == 0:
        raise ValueError("matrix must be a nonempty 2-d array")
    gram = mat.T @ mat if mat.shape[0] >= mat.shape[1] else mat @ mat.T
    dim = gram.shape[0]
    scale = float(np.abs(gram).max())
    if scale == 0.0:
        return 0.0

    # Fixed non-uniform start so a symmetric top eigenspace cannot hide.
    v = 1.0 + np.arange(dim, dtype=np.float64) / max(dim, 2)
    v /= np.linalg.norm(v)
    for _ in range(max_iterations):
        w = gram @ v
        lam = float(v @ w)
        residual = float(np.linalg.norm(w - lam * v))
        if residual <= residual_tol * max(1.0, abs(lam)):
            return math.sqrt(max(lam, 0.0))
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
    if dim <= 256:
        return math.sqrt(max(float(np.linalg.eigvalsh(gram).max()), 0.0))
    raise RuntimeError(f"power iteration did not converge for dimension {dim}")


def forster_bound(matrix: SignMatrix | np.ndarray) -> float:
    """gamma <= ||M|| / sqrt(|X| |Y|) for any realization of a total function."""
    entries = matrix.entries if isinstance(matrix, SignMatrix) else np.asarray(matrix)
    rows, cols = entries.shape
    return spectral_norm(entries) / math.sqrt(rows * cols)


def ip_sign_matrix(n: int) -> SignMatrix:
    """Sign matrix of the n-bit inner-product function; ||M|| = sqrt(2^n)."""
    if not 1 <= n <= 6:
        raise ValueError(f"n must lie in [1, 6], got {n}")
    size = 1 << n
    xs = np.arange(size, dtype=np.uint64)
    parity = np.bitwise_count(xs[:, None] & xs[None, :]).astype(np.int64) & 1
    return SignMatrix(1 - 2 * parity)


# ---------------------------------------------------------------------------
# named constructions
# ---------------------------------------------------------------------------

def equality_embedding(points: Sequence) -> ThresholdEmbedding:
    """Orthonormal fingerprints for equality: delta0 = 0, delta1 = 1."""
    labels = list(points)
    dim = len(labels)
    if dim < 2:
        raise ValueError("equality needs at least two points")
    alpha = {label: np.eye(dim)[j] for j, label in enumerate(labels)}
    beta = {label: np.eye(dim)[j] for j, label in enumerate(labels)}
    domain = tuple((x, y, 1 if x == y else 0) for x in labels for y in labels)
    return ThresholdEmbedding(alpha=alpha, beta=beta, delta0=0.0, delta1=1.0, domain=domain)


def ip_realization(n: int) -> MarginRealization:
    """Margin realization of inner product meeting the Forster bound exactly.

    Alice's vector is her +/-1 row scaled to unit norm, Bob's is a basis
    vector, so every inner product is +/- 2^(-n/2).
    """
    sign = ip_sign_matrix(n)
    size = sign.shape[0]
    scale = 1.0 / math.sqrt(size)
    alpha = {x: sign.entries[x].astype(np.float64) * scale for x in range(size)}
    beta = {y: np.eye(size)[y] for y in range(size)}
    domain = tuple(
        (x, y, int(sign.entries[x, y] == -1)) for x in range(size) for y in range(size)
    )
    return MarginRealization(alpha=alpha, beta=beta, gamma=scale, domain=domain)


def paired_equality_realization(
    points: int, overlap: float, seed: int
) -> MarginRealization:
    """Matched equal/unequal pairs with |inner product| = overlap each.

    Pair j lives in its own plane: Alice's vector is the plane's first
    axis, Bob's is rotated to inner product +overlap (f=0, "unequal") or
    -overlap (f=1, "equal"), alternating by parity of j.  The domain is
    partial (only matched pairs), so gamma = overlap can approach 1.
    """
    if points < 1:
        raise ValueError("points must be positive")
    if not 0.0 < overlap < 1.0:
        raise ValueError("overlap must lie strictly between 0 and 1")
    rng = derive_rng(seed, "paired-equality", points)
    dim = 2 * points
    alpha = {}
    beta = {}
    domain = []
    ortho = math.sqrt(1.0 - overlap * overlap)
    for j in range(points):
        base = np.zeros(dim)
        base[2 * j] = 1.0
        side = np.zeros(dim)
        side[2 * j + 1] = 1.0
        f = j % 2
        signed = -overlap if f == 1 else overlap
        # A random sign on the orthogonal leg keeps the family nondegenerate.
        leg = ortho if rng.random() < 0.5 else -ortho
        alpha[f"x{j}"] = base
        beta[f"y{j}"] = signed * base + leg * side
        domain.append((f"x{j}", f"y{j}", f))
    return MarginRealization(alpha=alpha, beta=beta, gamma=overlap, domain=tuple(domain))


# ---------------------------------------------------------------------------
# random instances of both geometries
# ---------------------------------------------------------------------------

def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    vec = rng.normal(size=dim)
    return vec / np.linalg.norm(vec)


def _orthogonal_direction(rng: np.random.Generator, anchor: np.ndarray) -> np.ndarray:
    while True:
        raw = rng.normal(size=anchor.size)
        raw -= (raw @ anchor) * anchor
        norm = float(np.linalg.norm(raw))
        if norm > 1e-9:
            return raw / norm


def random_margin_realization(dim: int, pairs: int, seed: int) -> MarginRealization:
    """A random realization over matched pairs with controlled margins."""
    if dim < 2 or pairs < 1:
        raise ValueError("need dim >= 2 and at least one pair")
    rng = derive_rng(seed, "random-realization", dim, pairs)
    gamma = float(rng.uniform(0.05, 0.5))
    alpha = {}
    beta = {}
    domain = []
    for j in range(pairs):
        f = int(rng.integers(0, 2))
        anchor = _random_unit(rng, dim)
        # inner product drawn beyond the margin on the f side
        target = gamma + (1.0 - gamma) * float(rng.uniform(0.0, 0.9))
        if f == 1:
            target = -target
        side = _orthogonal_direction(rng, anchor)
        alpha[f"x{j}"] = anchor
        beta[f"y{j}"] = target * anchor + math.sqrt(1.0 - target * target) * side
        domain.append((f"x{j}", f"y{j}", f))
    return MarginRealization(alpha=alpha, beta=beta, gamma=gamma, domain=tuple(domain))


def random_threshold_embedding(dim: int, pairs: int, seed: int) -> ThresholdEmbedding:
    """A random embedding over matched pairs with controlled overlaps."""
    if dim < 2 or pairs < 1:
        raise ValueError("need dim >= 2 and at least one pair")
    rng = derive_rng(seed, "random-embedding", dim, pairs)
    delta0 = float(rng.uniform(0.0, 0.4))
    delta1 = float(rng.uniform(delta0 + 0.1, 1.0))
    alpha = {}
    beta = {}
    domain = []
    for j in range(pairs):
        f = int(rng.integers(0, 2))
        overlap_sq = (
            float(rng.uniform(delta1, 1.0)) if f == 1 else float(rng.uniform(0.0, delta0))
        )
        anchor = _random_unit(rng, dim)
        side = _orthogonal_direction(rng, anchor)
        overlap = math.sqrt(overlap_sq)
        if rng.random() < 0.5:
            overlap = -overlap
        alpha[f"x{j}"] = anchor
        beta[f"y{j}"] = overlap * anchor + math.sqrt(1.0 - overlap * overlap) * side
        domain.append((f"x{j}", f"y{j}", f))
    return ThresholdEmbedding(
        alpha=alpha, beta=beta, delta0=delta0, delta1=delta1, domain=tuple(domain)
    )


# ---------------------------------------------------------------------------
# random projection
# ---------------------------------------------------------------------------

def random_projection(
    realization: MarginRealization,
    target_dim: int,
    seed: int,
    identity: bool = False,
) -> MarginRealization | None:
    """Gaussian-project a realization and keep half the margin, or fail.

    Projects every vector with one Gaussian matrix scaled by
    1/sqrt(target_dim), renormalizes, and succeeds iff all domain
    constraints hold at margin gamma/2 (None otherwise; callers resample
    with a fresh seed).  identity=True swaps the Gaussian for the identity
    map, which requires target_dim == dim and preserves margins exactly.
    """
    if target_dim < 1:
        raise ValueError("target_dim must be positive")
    if identity:
        if target_dim != realization.dim:
            raise ValueError("identity projection requires target_dim == dim")
        matrix = np.eye(realization.dim)
    else:
        rng = derive_rng(seed, "random-projection", target_dim)
        matrix = rng.normal(size=(target_dim, realization.dim)) / math.sqrt(target_dim)

    def project(side: Mapping[Any, np.ndarray]) -> dict | None:
        out = {}
        for key, vec in side.items():
            image = matrix @ vec
            norm = float(np.linalg.norm(image))
            if norm < 1e-12:
                return None
            out[key] = image / norm
        return out

    alpha = project(realization.alpha)
    beta = project(realization.beta)
    if alpha is None or beta is None:
        return None
    try:
        return MarginRealization(
            alpha=alpha, beta=beta, gamma=realization.gamma / 2.0, domain=realization.domain
        )
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# compilation into a fingerprinting protocol
# ---------------------------------------------------------------------------

def repetition_count(gap: float, eps: float) -> int:
    """r = ceil(8 ln(1/eps) / gap^2), the Hoeffding-driven repetition count."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if gap <= 0.0:
        raise ValueError("gap must be positive")
    return math.ceil(8.0 * math.log(1.0 / eps) / (gap * gap))


def compile_repeated_fingerprinting(
    embedding: ThresholdEmbedding, eps: float
) -> QuantumSmpProtocol:
    """Repeat the fingerprint pair r times; accept on a count threshold.

    r = ceil(8 ln(1/eps)/gap^2) copies, acceptance when at least
    r*(1/2 + (delta0+delta1)/4) swap tests come out symmetric (ties
    accept).  The exact binomial error on every domain pair is checked to
    be at most eps at construction time.
    """
    r = repetition_count(embedding.gap, eps)
    threshold = r * (0.5 + (embedding.delta0 + embedding.delta1) / 4.0)
    min_zero = math.ceil(threshold - 1e-9)
    referee = SwapTestThresholdReferee(copies=r, min_zero_count=min_zero)

    alpha = embedding.alpha
    beta = embedding.beta
    protocol = QuantumSmpProtocol(
        alice_state=lambda x: PureState(alpha[x]),
        bob_state=lambda y: PureState(beta[y]),
        copies=r,
        state_dim=embedding.dim,
        referee_procedure=referee,
    )
    worst = compiled_worst_error(protocol, embedding)
    if worst > eps:
        raise ValueError(f"compiled protocol has error {worst} > eps {eps}")
    return protocol


def compiled_worst_error(protocol: QuantumSmpProtocol, embedding: ThresholdEmbedding) -> float:
    """Largest exact binomial error over the embedding's domain."""
    worst = 0.0
    for x, y, f in embedding.domain:
        p_accept = protocol.referee_procedure.accept_probability(
            protocol.alice_state(x), protocol.bob_state(y)
        )
        error = 1.0 - p_accept if f == 1 else p_accept
        worst = max(worst, error)
    return worst


def embedding_problem(embedding: ThresholdEmbedding) -> tuple[ProblemSpec, list[tuple]]:
    """Boolean problem spec plus evaluator inputs for an embedding's domain."""
    values = {(x, y): f for x, y, f in embedding.domain}
    spec = boolean_problem_spec(lambda x, y: values[(x, y)])
    return spec, [(x, y) for x, y, _ in embedding.domain]


# ---------------------------------------------------------------------------
# block-IP promise instances
# ---------------------------------------------------------------------------

def ip_bit(a: str, b: str) -> int:
    """Inner product of two bit strings, mod 2."""
    if len(a) != len(b):
        raise ValueError("length mismatch")
    return sum(int(ca) & int(cb) for ca, cb in zip(a, b)) & 1


def block_ip_instance(a: str, b: str, m: int) -> tuple[str, str]:
    """Blow one IP instance up into m blocks satisfying the 2/3 promise.

    The first m/3 blocks are (a, b); of the fixed filler blocks, m/3 have
    inner product 0 (all-zero blocks) and m/3 have inner product 1
    (1 followed by zeros, on both sides).  Exactly 2m/3 blocks then share
    the bit IP(a, b), so the majority promise holds with that value.
    """
    if len(a) != len(b) or not a:
        raise ValueError("a and b must be nonempty strings of equal length")
    if m < 6 or m % 6 != 0:
        raise ValueError(f"m must be a positive multiple of 6, got {m}")
    block_len = len(a)
    zero_block = "0" * block_len
    one_block = "1" + "0" * (block_len - 1)
    third = m // 3
    x = a * third + zero_block * third + one_block * third
    y = b * third + zero_block * third + one_block * third
    return x, y


def block_majority(x: str, y: str, block_len: int) -> tuple[bool, int]:
    """Whether >= 2/3 of the blocks share one IP bit, and that bit."""
    if len(x) != len(y) or len(x) % block_len != 0:
        raise ValueError("inputs must align to the block length")
    blocks = len(x) // block_len
    ones = sum(
        ip_bit(x[j * block_len : (j + 1) * block_len], y[j * block_len : (j + 1) * block_len])
        for j in range(blocks)
    )
    if 3 * ones >= 2 * blocks:
        return True, 1
    if 3 * (blocks - ones) >= 2 * blocks:
        return True, 0
    return False, -1
