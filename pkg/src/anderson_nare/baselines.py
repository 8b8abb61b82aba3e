"""Classical fixed-point iterations for the NARE vector equation, plus the RES stop test.

All four start from ``u = v = 0``:

    FP    u+ = u * (P v) + e          v+ = v * (Pt u) + e
    MFP   u+ = u * (P v) + e          v+ = v * (Pt u+) + e
    NBJ   u+ = e / (e - P v)          v+ = e / (e - Pt u)
    NBGS  u+ = e / (e - P v)          v+ = e / (e - Pt u+)
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .aa_core import IterRecord, SolveReport, StoppingRule
from .errors import DivideByZero, NonFiniteIterate, ZeroNorm
from .nare import NareProblem, f_eval

EPS = 2.0**-52


class BaselineKind(enum.Enum):
    FP = "FP"
    MFP = "MFP"
    NBJ = "NBJ"
    NBGS = "NBGS"


def res_criterion(x_new, x_old, n: int) -> tuple[float, bool]:
    """Largest relative sup-norm change of the ``u`` and ``v`` blocks; fires at ``n * eps``."""
    x_new = np.asarray(x_new, dtype=float)
    x_old = np.asarray(x_old, dtype=float)
    un, vn = x_new[:n], x_new[n:]
    du = np.abs(un - x_old[:n]).max()
    dv = np.abs(vn - x_old[n:]).max()
    nu, nv = np.abs(un).max(), np.abs(vn).max()
    if nu == 0.0 or nv == 0.0:
        raise ZeroNorm("RES undefined: a block of the new iterate is zero")
    res = float(max(du / nu, dv / nv))
    return res, res <= n * EPS


@dataclass(frozen=True)
class ResCriterion:
    """``res_criterion`` packaged as a :class:`StoppingRule`."""

    n: int

    @property
    def threshold(self) -> float:
        return self.n * EPS

    def __call__(self, x_new, x_old, f_old=None):
        return res_criterion(x_new, x_old, self.n)


def _block_inverse(w: np.ndarray, which: str, k: int) -> np.ndarray:
    d = 1.0 - w
    if np.any(d <= 0.0):
        raise DivideByZero(f"nonpositive pivot in {which} update at iteration {k}")
    return 1.0 / d


def baseline_solve(
    prob: NareProblem,
    kind: BaselineKind | str,
    stop: StoppingRule | None = None,
    max_iter: int = 10**6,
    record_history: bool = False,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> SolveReport:
    """Iterate ``kind`` from zero until ``stop`` fires (default: RES <= n*eps).

    With ``record_history`` each step also evaluates ``f(x_k)`` for the
    history record, which costs one extra pair of mat-vecs per step.
    ``callback(k, x_k)`` sees every iterate, starting with ``x_0 = 0``.
    """
    kind = BaselineKind(kind)
    stop = stop if stop is not None else ResCriterion(prob.n)
    n = prob.n
    P, Pt = prob.P, prob.Pt
    u = np.zeros(n)
    v = np.zeros(n)
    report = SolveReport(False, 0, np.inf, 0.0, np.zeros(2 * n), method=kind.value)
    if callback is not None:
        callback(0, np.concatenate([u, v]))

    t0 = time.perf_counter()
    res, fired = np.inf, False
    k = 0
    while not fired and k < max_iter:
        k += 1
        try:
            if kind is BaselineKind.FP:
                un = u * (P @ v) + 1.0
                vn = v * (Pt @ u) + 1.0
            elif kind is BaselineKind.MFP:
                un = u * (P @ v) + 1.0
                vn = v * (Pt @ un) + 1.0
            elif kind is BaselineKind.NBJ:
                un = _block_inverse(P @ v, "u", k)
                vn = _block_inverse(Pt @ u, "v", k)
            else:
                un = _block_inverse(P @ v, "u", k)
                vn = _block_inverse(Pt @ un, "v", k)
        except DivideByZero as exc:
            report.status = "breakdown"
            report.iterations = k
            report.x_final = np.concatenate([u, v])
            exc.report = report
            raise
        x_old = np.concatenate([u, v])
        x_new = np.concatenate([un, vn])
        if not np.all(np.isfinite(x_new)):
            report.status = "nonfinite"
            raise NonFiniteIterate(f"non-finite iterate at iteration {k}", report)
        res, fired = stop(x_new, x_old, None)
        if record_history:
            fnorm = float(np.linalg.norm(f_eval(prob, x_old)))
            report.records.append(IterRecord(k - 1, res, fnorm, 1.0, np.ones(1), np.zeros(0)))
        if callback is not None:
            callback(k, x_new)
        u, v = un, vn

    report.wall_time = time.perf_counter() - t0
    report.converged = bool(fired)
    report.iterations = k
    report.final_res = float(res)
    report.x_final = np.concatenate([u, v])
    report.status = "converged" if fired else "max_iter"
    return report
