"""Zero-error discrimination rates and their direct-product law.

For a pair of states (rho_0, rho_1) handed to a referee that must never
answer wrong, the usable events are the ones where rho_c lands outside the
support of the other state.  a_c = Tr(rho_c P_perp(rho_{1-c})) is the rate
of such events; the achievable zero-error success probability a sits in
the sandwich max(a0, a1)/2 <= a <= (a0 + a1)/2.

For two independent pairs, the rate of jointly conclusive events
factorizes exactly, p^(cd) = a^(c) b^(d), which chains into
(1/4) sum_cd p^(cd) = (1/4)(a0 + a1)(b0 + b1) <= 4 * upper_a * upper_b.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import DensityMatrix, support_projector

CHAIN_ATOL = 1e-9


@dataclass(frozen=True)
class ZeroErrorRates:
    """Conclusive-event rates for one state pair."""

    a0: float
    a1: float

    @property
    def lower(self) -> float:
        return max(self.a0, self.a1) / 2.0

    @property
    def upper(self) -> float:
        return (self.a0 + self.a1) / 2.0


def zero_error_rates(rho0: DensityMatrix, rho1: DensityMatrix, tol: float = 1e-9) -> ZeroErrorRates:
    """Rates a_c = Tr(rho_c P_perp(rho_{1-c})) for c in {0, 1}."""
    if rho0.dim != rho1.dim:
        raise ValueError(f"dimension mismatch: {rho0.dim} vs {rho1.dim}")
    _, perp1 = support_projector(rho1, tol)
    _, perp0 = support_projector(rho0, tol)
    a0 = float(np.trace(rho0.matrix @ perp1).real)
    a1 = float(np.trace(rho1.matrix @ perp0).real)
    return ZeroErrorRates(a0=a0, a1=a1)


def product_rate(
    rho0: DensityMatrix,
    rho1: DensityMatrix,
    sigma0: DensityMatrix,
    sigma1: DensityMatrix,
    c: int,
    d: int,
    tol: float = 1e-9,
) -> float:
    """Joint conclusive rate p^(cd) computed on the tensor-product space.

    This deliberately evaluates the single trace
    Tr((rho_c x sigma_d)(P_perp(rho_{1-c}) x P_perp(sigma_{1-d})))
    rather than multiplying marginal rates, so the factorization law can be
    checked against an independent route.
    """
    if c not in (0, 1) or d not in (0, 1):
        raise ValueError(f"c and d must be bits, got {(c, d)}")
    rho = (rho0, rho1)
    sigma = (sigma0, sigma1)
    _, rho_perp = support_projector(rho[1 - c], tol)
    _, sigma_perp = support_projector(sigma[1 - d], tol)
    joint_state = np.kron(rho[c].matrix, sigma[d].matrix)
    joint_perp = np.kron(rho_perp, sigma_perp)
    return float(np.trace(joint_state @ joint_perp).real)


@dataclass(frozen=True)
class DirectProductReport:
    """Result of the factorization-and-chain audit for two pairs."""

    rates_a: ZeroErrorRates
    rates_b: ZeroErrorRates
    joint: dict[tuple[int, int], float]
    quarter_sum: float
    bound_4ab_upper: float
    max_factorization_error: float
    chain_holds: bool


def direct_product_check(
    rho0: DensityMatrix,
    rho1: DensityMatrix,
    sigma0: DensityMatrix,
    sigma1: DensityMatrix,
    tol: float = 1e-9,
) -> DirectProductReport:
    """Verify p^(cd) = a^(c) b^(d) and the resulting 4ab chain.

    chain_holds requires both the factorization identity and
    quarter_sum = (1/4)(a0+a1)(b0+b1) <= 4 * upper_a * upper_b,
    each within CHAIN_ATOL.
    """
    rates_a = zero_error_rates(rho0, rho1, tol)
    rates_b = zero_error_rates(sigma0, sigma1, tol)
    marginal_a = (rates_a.a0, rates_a.a1)
    marginal_b = (rates_b.a0, rates_b.a1)

    joint = {}
    max_err = 0.0
    for c in (0, 1):
        for d in (0, 1):
            p_cd = product_rate(rho0, rho1, sigma0, sigma1, c, d, tol)
            joint[(c, d)] = p_cd
            max_err = max(max_err, abs(p_cd - marginal_a[c] * marginal_b[d]))

    quarter_sum = 0.25 * sum(joint.values())
    product_form = 0.25 * (rates_a.a0 + rates_a.a1) * (rates_b.a0 + rates_b.a1)
    bound = 4.0 * rates_a.upper * rates_b.upper
    chain_holds = (
        max_err <= CHAIN_ATOL
        and abs(quarter_sum - product_form) <= CHAIN_ATOL
        and quarter_sum <= bound + CHAIN_ATOL
    )
    return DirectProductReport(
        rates_a=rates_a,
        rates_b=rates_b,
        joint=joint,
        quarter_sum=quarter_sum,
        bound_4ab_upper=bound,
        max_factorization_error=max_err,
        chain_holds=chain_holds,
    )
