"""Pure states, density matrices, and the swap-test measurement.

Everything is finite-dimensional and dense.  States are immutable value
objects over complex numpy arrays; constructors validate, operations assume
validated inputs.  Hermitian eigendecompositions go through
numpy.linalg.eigh, which is the symmetric eigensolver every derived
quantity here (support projectors, entropies) is defined against.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Constructor-level tolerance: norms, hermiticity, trace, probabilities.
NORM_ATOL = 1e-10
# Tolerance for identities derived from already-validated objects.
DERIVED_ATOL = 1e-9


def _frozen_array(values, shape_kind: str) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if shape_kind == "vector" and arr.ndim != 1:
        raise ValueError(f"expected a 1-d amplitude vector, got shape {arr.shape}")
    if shape_kind == "matrix" and (arr.ndim != 2 or arr.shape[0] != arr.shape[1]):
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PureState:
    """A unit vector in C^dim.

    The amplitude vector is copied and frozen on construction; dim >= 1 and
    the 2-norm must be 1 within NORM_ATOL.
    """

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(self.amplitudes, "vector")
        if arr.size < 1:
            raise ValueError("state dimension must be at least 1")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"amplitudes must be unit-norm, got norm {norm!r}")
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    @staticmethod
    def basis(index: int, dim: int) -> "PureState":
        """Computational basis state |index> in C^dim."""
        if not 0 <= index < dim:
            raise ValueError(f"basis index {index} out of range for dim {dim}")
        amp = np.zeros(dim, dtype=np.complex128)
        amp[index] = 1.0
        return PureState(amp)


@dataclass(frozen=True)
class DensityMatrix:
    """A Hermitian, positive-semidefinite, trace-one matrix."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(self.matrix, "matrix")
        if arr.shape[0] < 1:
            raise ValueError("density matrix dimension must be at least 1")
        if np.max(np.abs(arr - arr.conj().T)) > NORM_ATOL:
            raise ValueError("density matrix must be Hermitian")
        trace = complex(np.trace(arr))
        if abs(trace - 1.0) > NORM_ATOL:
            raise ValueError(f"density matrix must have unit trace, got {trace!r}")
        if float(np.linalg.eigvalsh(arr).min()) < -NORM_ATOL:
            raise ValueError("density matrix must be positive semidefinite")
        object.__setattr__(self, "matrix", arr)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @staticmethod
    def from_pure(state: PureState) -> "DensityMatrix":
        amp = state.amplitudes
        return DensityMatrix(np.outer(amp, amp.conj()))

    @staticmethod
    def maximally_mixed(dim: int) -> "DensityMatrix":
        return DensityMatrix(np.eye(dim, dtype=np.complex128) / dim)


@dataclass(frozen=True)
class Ensemble:
    """A finite ensemble {(p_i, rho_i)} with matching dimensions.

    Probabilities must be nonnegative and sum to 1 within NORM_ATOL.
    """

    members: tuple[tuple[float, DensityMatrix], ...]

    def __post_init__(self) -> None:
        members = tuple((float(p), rho) for p, rho in self.members)
        if not members:
            raise ValueError("ensemble must have at least one member")
        dims = {rho.dim for _, rho in members}
        if len(dims) != 1:
            raise ValueError(f"ensemble members must share a dimension, got {sorted(dims)}")
        if any(p < -NORM_ATOL for p, _ in members):
            raise ValueError("ensemble probabilities must be nonnegative")
        total = sum(p for p, _ in members)
        if abs(total - 1.0) > NORM_ATOL:
            raise ValueError(f"ensemble probabilities must sum to 1, got {total!r}")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0][1].dim

    def average_state(self) -> DensityMatrix:
        avg = sum(p * rho.matrix for p, rho in self.members)
        # Renormalize the trace: probabilities are only 1e-10 close to 1.
        return DensityMatrix(avg / complex(np.trace(avg)).real)


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b> = sum_z conj(a_z) b_z; dimensions must match."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor(a, b):
    """Kronecker product of two PureStates or two DensityMatrices."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.matrix, b.matrix))
    raise ValueError("tensor expects two PureStates or two DensityMatrices")


def swap_test(a: PureState, b: PureState) -> float:
    """Probability that a swap test on (a, b) reports the symmetric outcome.

    Equals 1/2 + |<a|b>|^2 / 2, so equal states give exactly 1 and
    orthogonal states give exactly 1/2.
    """
    overlap = inner_product(a, b)
    return 0.5 + 0.5 * (overlap.real**2 + overlap.imag**2)


class SwapTestSampler:
    """Samples swap-test outcome bits for a fixed state pair.

    Outcome 0 is the symmetric result and occurs with probability
    swap_test(a, b) exactly.  The sampler owns its generator state; do not
    share one instance across workers.
    """

    def __init__(self, a: PureState, b: PureState, seed: int | np.random.Generator):
        self.probability_zero = swap_test(a, b)
        if isinstance(seed, np.random.Generator):
            self._rng = seed
        else:
            self._rng = np.random.default_rng(seed)

    def draw(self) -> int:
        return 0 if self._rng.random() < self.probability_zero else 1

    def draw_many(self, count: int) -> np.ndarray:
        return (self._rng.random(count) >= self.probability_zero).astype(np.int64)


def support_projector(rho: DensityMatrix, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Projectors (P, P_perp) onto the support of rho and its complement.

    Eigenvalues at or below tol count as zero.  Both returned matrices are
    Hermitian idempotents within DERIVED_ATOL and sum to the identity.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    eigvals, eigvecs = np.linalg.eigh(rho.matrix)
    kept = eigvecs[:, eigvals > tol]
    proj = kept @ kept.conj().T
    return proj, np.eye(rho.dim, dtype=np.complex128) - proj


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S(rho) = -Tr(rho log2 rho) in bits, with 0 log 0 = 0."""
    eigvals = np.linalg.eigvalsh(rho.matrix)
    eigvals = np.clip(eigvals.real, 0.0, 1.0)
    positive = eigvals[eigvals > 0.0]
    return float(-np.sum(positive * np.log2(positive)))


def holevo_chi(ensemble: Ensemble) -> float:
    """chi = S(sum_i p_i rho_i) - sum_i p_i S(rho_i), in bits."""
    avg_entropy = von_neumann_entropy(ensemble.average_state())
    member_entropy = sum(p * von_neumann_entropy(rho) for p, rho in ensemble.members)
    return avg_entropy - member_entropy


def random_pure_state(dim: int, rng: np.random.Generator) -> PureState:
    """Haar-ish random state: normalized complex Gaussian vector."""
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(vec / np.linalg.norm(vec))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Wishart-style random state G G^dagger / Tr from a seeded Gaussian.

    rank (default dim) controls the number of Gaussian columns, hence the
    support dimension almost surely.
    """
    cols = dim if rank is None else rank
    if not 1 <= cols <= dim:
        raise ValueError(f"rank must be in [1, {dim}], got {cols}")
    g = rng.normal(size=(dim, cols)) + 1j * rng.normal(size=(dim, cols))
    w = g @ g.conj().T
    return DensityMatrix(w / complex(np.trace(w)).real)
