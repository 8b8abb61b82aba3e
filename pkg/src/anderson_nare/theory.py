"""Local convergence quantities for Anderson acceleration.

Covers the R-factor root equation ``q^{m+1} - tau q^m - zeta = 0``, the
sufficient conditions for R-linear convergence under a Holder continuous
Jacobian, two-sided residual bounds near the solution, the depth-one
residual bound, and empirical proxies (R-factor, contraction witness)
computed from actual runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    DegenerateAlpha,
    DegeneratePair,
    EmptyHistory,
    HypothesisViolated,
    OutsideBall,
)


@dataclass(frozen=True)
class TheoryParams:
    nu: float
    h_nu: float
    theta: float
    m_alpha: float
    kappa: float
    inv_norm: float
    x0_dist: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        if self.h_nu <= 0.0:
            raise ValueError("h_nu must be positive")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.m_alpha < 1.0:
            raise ValueError("m_alpha must be >= 1")
        if self.kappa < 1.0:
            raise ValueError("kappa must be >= 1")
        if self.inv_norm <= 0.0:
            raise ValueError("inv_norm must be positive")
        if self.x0_dist < 0.0:
            raise ValueError("x0_dist must be nonnegative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def tau(self) -> float:
        return self.theta * self.eta

    @property
    def jac_norm(self) -> float:
        """``||f'(x*)||`` recovered as ``kappa / ||f'(x*)^{-1}||``."""
        return self.kappa / self.inv_norm


@dataclass(frozen=True)
class RootResult:
    q: float
    bracket: tuple[float, float]
    poly_residual: float


def _root_poly(q: float, m: int, tau: float, zeta: float) -> float:
    return q**m * (q - tau) - zeta


def solve_q(m: int, tau: float, zeta: float) -> RootResult:
    """Unique root of ``q^{m+1} - tau q^m - zeta`` in ``(m tau/(m+1), 1)``, by bisection."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 < tau < 1.0:
        raise HypothesisViolated(f"tau = {tau} not in (0, 1)")
    if not 0.0 <= zeta < 1.0 - tau:
        raise HypothesisViolated(f"need 0 <= zeta < 1 - tau, got zeta = {zeta}, 1 - tau = {1.0 - tau}")
    lo, hi = m * tau / (m + 1), 1.0
    bracket = (lo, hi)
    # h is negative at the left end (its minimum on q > 0) and 1 - tau - zeta > 0 at q = 1.
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        val = _root_poly(mid, m, tau, zeta)
        if val == 0.0:
            lo = hi = mid
            break
        if val < 0.0:
            lo = mid
        else:
            hi = mid
    q = lo if abs(_root_poly(lo, m, tau, zeta)) <= abs(_root_poly(hi, m, tau, zeta)) else hi
    return RootResult(q, bracket, abs(q ** (m + 1) - tau * q**m - zeta))


def q_closed_form_m1(tau: float, zeta: float) -> float:
    return 0.5 * (tau + math.sqrt(tau * tau + 4.0 * zeta))


def zeta_general(p: TheoryParams) -> float:
    nu, m_a = p.nu, p.m_alpha
    lead = (2.0 + nu) ** nu * p.h_nu * m_a * (1.0 + m_a**nu) / nu ** (1.0 + nu)
    return lead * p.kappa * p.inv_norm * p.x0_dist**nu


def radii(p: TheoryParams) -> tuple[float, float]:
    """Holder ball radius and the convergence radius; the usable ball is their min."""
    nu = p.nu
    r_nu = (1.0 / (p.h_nu * p.inv_norm)) ** (1.0 / nu)
    r_hat = ((1.0 - p.theta) * nu / (p.m_alpha * (1.0 + p.m_alpha**nu))) ** (1.0 / nu)
    r_hat *= nu * r_nu / ((2.0 + nu) * p.kappa)
    return r_nu, r_hat


@dataclass
class ConditionReport:
    m: int
    tau: float
    zeta: float
    q: float
    zeta_ok: bool
    rate_lhs: float
    rate_ok: bool
    r_nu: float
    r_hat: float
    in_ball: bool
    assumed_premises: list[str] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return self.zeta_ok and self.rate_ok and self.in_ball

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def check_theorem_conditions(m: int, p: TheoryParams) -> ConditionReport:
    """Evaluate the sufficient conditions for R-linear convergence with factor ``q``.

    ``zeta < 1 - tau`` is a precondition of the root equation, so a violation
    raises :class:`HypothesisViolated` rather than returning False.
    """
    zeta = zeta_general(p)
    root = solve_q(m, p.tau, zeta)
    # For nu = 1 this is q M kappa <= 1/3.
    rate_lhs = (2.0 + p.nu) / p.nu * root.q * p.m_alpha * p.kappa
    r_nu, r_hat = radii(p)
    return ConditionReport(
        m=m,
        tau=p.tau,
        zeta=zeta,
        q=root.q,
        zeta_ok=zeta < 1.0 - p.tau,
        rate_lhs=rate_lhs,
        rate_ok=rate_lhs <= 1.0,
        r_nu=r_nu,
        r_hat=r_hat,
        in_ball=p.x0_dist < min(r_nu, r_hat),
        assumed_premises=["||f(x_l)|| <= q^l ||f(x_0)|| for the first m iterates (induction base)"],
    )


def residual_bracket(fnorm: float, p: TheoryParams, dist: float) -> tuple[float, float, bool]:
    """Two-sided bound on ``||f(x)||`` in terms of ``||x - x*||`` inside the Holder ball."""
    r_nu, _ = radii(p)
    if dist >= r_nu:
        raise OutsideBall(f"dist {dist:.3e} >= r_nu {r_nu:.3e}")
    nu = p.nu
    lo = nu * dist / ((1.0 + nu) * p.inv_norm)
    hi = (2.0 + nu) / (1.0 + nu) * p.jac_norm * dist
    return lo, hi, lo <= fnorm <= hi


def m1_residual_bound(fnorm_k: float, eta_k: float, alpha_k: float, p: TheoryParams) -> float:
    """Upper bound on ``||f(x_{k+1})||`` for depth-one Anderson acceleration."""
    if not 0.0 <= eta_k <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta_k}")
    th, nu = p.theta, p.nu
    s = math.sqrt(max(0.0, 1.0 - eta_k * eta_k))
    if alpha_k == 0.0:
        if s > 0.0:
            raise DegenerateAlpha("alpha_k = 0 with eta_k < 1")
        tail = 0.0
    else:
        tail = (s / (1.0 - th)) ** (1.0 + nu) / abs(alpha_k) ** nu
    linear = th * (1.0 + (1.0 + th) / (1.0 - th) * s) * fnorm_k
    step = (1.0 + th / (1.0 - th) * s) ** (1.0 + nu)
    return linear + p.h_nu / (1.0 + nu) * (step + tail) * fnorm_k ** (1.0 + nu)


def empirical_r_factor(fnorms) -> float:
    """Finite-sample limsup proxy: max of ``(f_k/f_0)^{1/k}`` over the last half of the history."""
    f = np.asarray(fnorms, dtype=float)
    if f.size < 3:
        raise EmptyHistory("need at least three residual norms")
    if not f[0] > 0.0:
        raise EmptyHistory("first residual norm must be positive")
    start = max(1, f.size - math.ceil(f.size / 2))
    ks = np.arange(start, f.size)
    ratios = np.where(f[ks] > 0.0, f[ks] / f[0], 0.0)
    return float(np.max(ratios ** (1.0 / ks)))


def empirical_contraction(g, samples, ord=np.inf) -> float:
    """Largest observed ``||g(x) - g(y)|| / ||x - y||``: a lower witness for the contraction factor."""
    best = 0.0
    for x, y in samples:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dx = float(np.linalg.norm(x - y, ord))
        if dx == 0.0:
            raise DegeneratePair("sample pair with x == y")
        best = max(best, float(np.linalg.norm(g(x) - g(y), ord)) / dx)
    return best


def theta_from_phi(a: float, c: float, phi_cap: float) -> float:
    """Contraction factor of the NARE map on the positive ball when the solution bound ``Phi`` is known."""
    if not 0.0 < phi_cap <= 0.25:
        raise ValueError("Phi must lie in (0, 1/4]")
    return 2.0 * c * (1.0 + a) / (1.0 + math.sqrt(1.0 - 4.0 * phi_cap))


def nare_lipschitz(a: float, c: float) -> float:
    """Sup-norm Lipschitz constant of the NARE Jacobian."""
    return c * (1.0 + a)


def jacobian_norms(jac: np.ndarray, max_dim: int = 512) -> tuple[float, float, float]:
    """``(||J||, ||J^{-1}||, kappa)`` in the sup norm via an explicit inverse."""
    if jac.shape[0] > max_dim:
        raise ValueError(f"explicit inverse limited to dimension {max_dim}, got {jac.shape[0]}")
    jn = float(np.linalg.norm(jac, np.inf))
    inv = float(np.linalg.norm(np.linalg.inv(jac), np.inf))
    return jn, inv, jn * inv
