"""Undamped Anderson acceleration of depth ``m`` for ``x = g(x)``.

The constrained least-squares problem for the mixing coefficients is solved
in its unconstrained form

    min_gamma || f_k - F_k gamma ||_2,

where ``F_k`` holds the last ``m_k`` residual differences.  ``F_k`` is never
formed: its thin QR factors are updated in place (see :mod:`qr_update`).
The next iterate is ``x_{k+1} = g(x_k) - G_k gamma`` with ``G_k`` the matching
differences of map values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .errors import (
    DegenerateDifference,
    DimensionMismatch,
    NonFiniteIterate,
    RankDeficientColumn,
    SingularTriangular,
    ZeroResidual,
)
from .qr_update import ThinQr

ETA_CLAMP = 1.0 + 1e-15


@dataclass(frozen=True)
class FixedPointMap:
    """A map ``g: R^dim -> R^dim``.  ``func`` must be deterministic and reentrant."""

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    name: str = "g"

    def eval(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(x), dtype=float)

    __call__ = eval


@dataclass(frozen=True)
class AaConfig:
    """Solver settings.

    ``depth=0`` is accepted and degenerates to the plain iteration
    ``x_{k+1} = g(x_k)``; useful as a control run.
    """

    depth: int = 3
    max_iter: int = 1000
    stop_tol: float = 0.0
    record_history: bool = True

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be nonnegative")


class StoppingRule(Protocol):
    """Called once per step as ``rule(x_new, x_old, f_old)``.

    Returns the monitored value and whether the run should stop.
    """

    def __call__(self, x_new: np.ndarray, x_old: np.ndarray, f_old: np.ndarray) -> tuple[float, bool]: ...


@dataclass(frozen=True)
class ResidualNormRule:
    """Stop once ``||f(x_k)||`` drops to ``tol`` (``ord`` as in :func:`numpy.linalg.norm`)."""

    tol: float
    ord: float = 2

    def __call__(self, x_new, x_old, f_old):
        value = float(np.linalg.norm(f_old, self.ord))
        return value, value <= self.tol


@dataclass
class IterRecord:
    k: int
    res_inf: float
    fnorm2: float
    eta: float
    alpha: np.ndarray
    gamma: np.ndarray
    eta_raw: float = 1.0

    @property
    def alpha_abs_sum(self) -> float:
        return float(np.abs(self.alpha).sum())


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final_res: float
    wall_time: float
    x_final: np.ndarray
    records: list[IterRecord] = field(default_factory=list)
    method: str = ""
    status: str = ""

    @property
    def fnorms(self) -> np.ndarray:
        return np.array([r.fnorm2 for r in self.records])

    def to_dict(self, with_records: bool = False) -> dict:
        out = {
            "method": self.method,
            "converged": self.converged,
            "status": self.status,
            "iterations": self.iterations,
            "final_res": self.final_res,
            "wall_time": self.wall_time,
        }
        if with_records:
            out["records"] = [
                {"k": r.k, "res_inf": r.res_inf, "fnorm2": r.fnorm2, "eta": r.eta,
                 "alpha": r.alpha.tolist(), "gamma": r.gamma.tolist()}
                for r in self.records
            ]
        return out


def gamma_to_alpha(gamma) -> np.ndarray:
    """Map least-squares coefficients to mixing weights that sum to one.

    ``alpha[j]`` weighs ``f_{k-m_k+j}``; an empty ``gamma`` gives ``[1.0]``.
    """
    gamma = np.asarray(gamma, dtype=float)
    mk = gamma.size
    alpha = np.empty(mk + 1)
    if mk == 0:
        alpha[0] = 1.0
        return alpha
    alpha[0] = gamma[0]
    alpha[1:mk] = np.diff(gamma)
    alpha[mk] = 1.0 - gamma[-1]
    return alpha


def closed_form_alpha_m1(f_k, f_km1) -> float:
    """Depth-one weight minimizing ``||(1 - a) f_k + a f_{k-1}||_2``."""
    f_k = np.asarray(f_k, dtype=float)
    d = f_k - np.asarray(f_km1, dtype=float)
    dd = float(d @ d)
    if dd == 0.0:
        raise DegenerateDifference("f_k equals f_{k-1}")
    return float(f_k @ d) / dd


def gain_eta(f_k, combined, clamp: bool = True) -> float:
    """Optimization gain ``||combined||_2 / ||f_k||_2``."""
    fn = float(np.linalg.norm(f_k))
    if fn == 0.0:
        raise ZeroResidual("gain undefined at an exact fixed point")
    eta = float(np.linalg.norm(combined)) / fn
    if clamp:
        eta = min(max(eta, 0.0), ETA_CLAMP)
    return eta


def _check_finite(v: np.ndarray, what: str, k: int, report: SolveReport) -> None:
    if not np.all(np.isfinite(v)):
        report.status = "nonfinite"
        raise NonFiniteIterate(f"non-finite {what} at iteration {k}", report)


class _History:
    """Sliding window of (delta f, delta g) pairs with QR factors of the delta-f block."""

    def __init__(self, dim: int, depth: int):
        self.qr = ThinQr(dim, depth)
        self.g_cols: list[np.ndarray] = []
        self.depth = depth

    def push(self, df: np.ndarray, dg: np.ndarray) -> bool:
        """Append a pair, evicting the oldest when full.  False if the column had to be dropped."""
        if self.qr.k == self.depth:
            self._evict()
        try:
            self.qr.append_column(df)
        except RankDeficientColumn:
            if self.qr.k == 0:
                return False
            self._evict()
            try:
                self.qr.append_column(df)
            except RankDeficientColumn:
                return False
        self.g_cols.append(dg)
        return True

    def _evict(self) -> None:
        self.qr.delete_first_column()
        self.g_cols.pop(0)

    def g_times(self, gamma: np.ndarray) -> np.ndarray:
        out = np.zeros(self.qr.n)
        for gj, c in zip(self.g_cols, gamma):
            out += c * gj
        return out

    def f_times(self, gamma: np.ndarray) -> np.ndarray:
        return self.qr.q @ (self.qr.r @ gamma)


def aa_solve(g: FixedPointMap, x0, cfg: AaConfig, stop: StoppingRule | None = None) -> SolveReport:
    """Run Anderson acceleration from ``x0``.

    ``x_1 = g(x_0)`` is always a plain step.  ``iterations`` counts the
    accelerated steps, so a run that stops right after ``x_1`` reports 0.
    If ``stop`` is omitted, ``ResidualNormRule(cfg.stop_tol)`` is used.

    Raises:
        NonFiniteIterate: NaN/Inf in a map value or iterate; the exception
            carries the partial report.
    """
    if stop is None:
        stop = ResidualNormRule(cfg.stop_tol)
    x = np.array(x0, dtype=float)
    if x.shape != (g.dim,):
        raise DimensionMismatch(f"x0 has shape {x.shape}, map dimension is {g.dim}")

    method = f"AA({cfg.depth})"
    report = SolveReport(False, 0, np.inf, 0.0, x, method=method)
    records = report.records
    t0 = time.perf_counter()

    gx = g(x)
    _check_finite(gx, "map value", 0, report)
    f = gx - x
    x_new = gx
    res, fired = stop(x_new, x, f)
    if not np.any(f):
        fired = True
    if cfg.record_history:
        records.append(IterRecord(0, res, float(np.linalg.norm(f)), 1.0, np.ones(1), np.zeros(0)))

    hist = _History(g.dim, cfg.depth) if cfg.depth > 0 else None
    f_prev, g_prev = f, gx
    k = 0
    while not fired and k < cfg.max_iter:
        k += 1
        x = x_new
        gk = g(x)
        _check_finite(gk, "map value", k, report)
        fk = gk - x
        fnorm = float(np.linalg.norm(fk))

        gamma = np.zeros(0)
        combined = fk
        if hist is not None and fnorm > 0.0:
            usable = hist.push(fk - f_prev, gk - g_prev)
            if usable:
                try:
                    gamma = hist.qr.solve_upper(fk)
                except SingularTriangular:
                    gamma = np.zeros(0)
            if gamma.size:
                x_new = gk - hist.g_times(gamma)
                combined = fk - hist.f_times(gamma)
            else:
                x_new = gk
        else:
            x_new = gk
        _check_finite(x_new, "iterate", k, report)

        res, fired = stop(x_new, x, fk)
        if fnorm == 0.0:
            fired = True
        if cfg.record_history:
            if fnorm > 0.0:
                eta_raw = gain_eta(fk, combined, clamp=False)
                eta = min(max(eta_raw, 0.0), ETA_CLAMP)
            else:
                eta_raw = eta = 0.0
            records.append(IterRecord(k, res, fnorm, eta, gamma_to_alpha(gamma), gamma, eta_raw))
        f_prev, g_prev = fk, gk

    report.wall_time = time.perf_counter() - t0
    report.converged = bool(fired)
    report.iterations = k
    report.final_res = float(res)
    report.x_final = x_new
    report.status = "converged" if fired else "max_iter"
    return report
