"""Transport-theory nonsymmetric algebraic Riccati equation (NARE).

The minimal nonnegative solution of ``XCX - XD - AX + B = 0`` has the form
``X_ij = u_i v_j / (delta_i + delta_hat_j)`` where ``x = [u; v]`` is the fixed
point of

    g(u, v) = [u * (P v) + e;  v * (Pt u) + e].

Quadrature data come from a composite 4-node Gauss-Legendre rule on [0, 1].
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import cached_property, partial

import numpy as np

from .aa_core import FixedPointMap
from .errors import DimensionMismatch, InvalidSize, ParamOutOfRange


def _legendre4(x: float) -> float:
    return (35.0 * x**4 - 30.0 * x**2 + 3.0) / 8.0


def _legendre4_deriv(x: float) -> float:
    return (140.0 * x**3 - 60.0 * x) / 8.0


def _bisect(fn, lo: float, hi: float) -> float:
    flo = fn(lo)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid


def _base_gauss4() -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights of the 4-point Gauss-Legendre rule on [-1, 1], ascending."""
    grid = np.linspace(0.0, 1.0, 41)
    vals = [_legendre4(t) for t in grid]
    pos_roots = [
        _bisect(_legendre4, grid[i], grid[i + 1])
        for i in range(len(grid) - 1)
        if vals[i] * vals[i + 1] < 0.0
    ]
    if len(pos_roots) != 2:
        raise RuntimeError("failed to bracket Legendre roots")
    roots = np.array(sorted([-r for r in pos_roots] + pos_roots))
    weights = np.array([2.0 / ((1.0 - r * r) * _legendre4_deriv(r) ** 2) for r in roots])
    return roots, weights


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes strictly decreasing in index, weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray


def gauss_legendre_composite(n: int) -> QuadratureRule:
    """4-node Gauss-Legendre rule on each of ``n/4`` equal pieces of [0, 1]."""
    if not isinstance(n, (int, np.integer)) or n < 4 or n % 4:
        raise InvalidSize(f"n must be a positive multiple of 4, got {n!r}")
    x, w = _base_gauss4()
    pieces = n // 4
    h = 1.0 / pieces
    left = np.arange(pieces, dtype=float)[:, None] * h
    nodes = (left + 0.5 * h * (1.0 + x[None, :])).ravel()
    weights = np.tile(0.5 * h * w, pieces)
    weights = weights / math.fsum(weights)
    order = np.argsort(-nodes, kind="stable")
    return QuadratureRule(nodes[order], weights[order])


@dataclass(frozen=True, eq=False)
class NareProblem:
    """Immutable problem instance; safe to share across concurrent solves."""

    a: float
    c: float
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    delta: np.ndarray
    delta_hat: np.ndarray
    p: np.ndarray
    P: np.ndarray
    Pt: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.n

    # A, B, C, D are only needed for residual checks; built on first use.
    @cached_property
    def A(self) -> np.ndarray:
        return np.diag(self.delta) - np.outer(np.ones(self.n), self.p)

    @cached_property
    def B(self) -> np.ndarray:
        return np.ones((self.n, self.n))

    @cached_property
    def C(self) -> np.ndarray:
        return np.outer(self.p, self.p)

    @cached_property
    def D(self) -> np.ndarray:
        return np.diag(self.delta_hat) - np.outer(self.p, np.ones(self.n))

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (2 * self.n,):
            raise DimensionMismatch(f"expected vector of length {2 * self.n}, got shape {x.shape}")
        return x[: self.n], x[self.n :]

    def g(self, x) -> np.ndarray:
        return g_eval(self, x)

    def f(self, x) -> np.ndarray:
        return f_eval(self, x)

    def fixed_point_map(self) -> FixedPointMap:
        return FixedPointMap(2 * self.n, partial(g_eval, self), name=f"nare(a={self.a}, c={self.c}, n={self.n})")

    def to_json(self) -> str:
        return json.dumps({"a": self.a, "c": self.c, "n": self.n})

    @classmethod
    def from_json(cls, text: str) -> "NareProblem":
        spec = json.loads(text)
        return build_problem(float(spec["a"]), float(spec["c"]), int(spec["n"]))


def build_problem(a: float, c: float, n: int) -> NareProblem:
    if not (0.0 <= a < 1.0):
        raise ParamOutOfRange(f"a must lie in [0, 1), got {a}")
    if not (0.0 < c <= 1.0):
        raise ParamOutOfRange(f"c must lie in (0, 1], got {c}")
    rule = gauss_legendre_composite(n)
    w, cw = rule.nodes, rule.weights
    delta = 1.0 / (c * w * (1.0 + a))
    delta_hat = 1.0 / (c * w * (1.0 - a))
    p = cw / (2.0 * w)
    P = p[None, :] / (delta[:, None] + delta_hat[None, :])
    Pt = p[None, :] / (delta_hat[:, None] + delta[None, :])
    return NareProblem(float(a), float(c), int(n), w, cw, delta, delta_hat, p, P, Pt)


def g_eval(prob: NareProblem, x) -> np.ndarray:
    u, v = prob.split(x)
    return np.concatenate([u * (prob.P @ v) + 1.0, v * (prob.Pt @ u) + 1.0])


def f_eval(prob: NareProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return g_eval(prob, x) - x


def jacobian(prob: NareProblem, x) -> np.ndarray:
    """Dense ``2n x 2n`` Jacobian ``I - G(u, v)`` at ``x = [u; v]``.

    This is the derivative of ``x - g(x)``, i.e. of ``-f``; the sign follows
    the usual NARE convention and leaves every norm and condition number
    unchanged.
    """
    u, v = prob.split(x)
    n = prob.n
    G = np.empty((2 * n, 2 * n))
    G[:n, :n] = np.diag(prob.P @ v)
    G[:n, n:] = u[:, None] * prob.P
    G[n:, :n] = v[:, None] * prob.Pt
    G[n:, n:] = np.diag(prob.Pt @ u)
    return np.eye(2 * n) - G


@dataclass(frozen=True, eq=False)
class NareSolution:
    u: np.ndarray
    v: np.ndarray
    X: np.ndarray


def recover_solution(prob, u, v) -> NareSolution:
    """``X = T o (u v^T)`` with ``T_ij = 1 / (delta_i + delta_hat_j)``.

    Only ``prob.delta`` and ``prob.delta_hat`` are read.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    T = 1.0 / (np.asarray(prob.delta)[:, None] + np.asarray(prob.delta_hat)[None, :])
    return NareSolution(u, v, T * np.outer(u, v))


def nare_residual(prob: NareProblem, X) -> float:
    """``||XCX - XD - AX + B||_inf / ||B||_inf``."""
    X = np.asarray(X, dtype=float)
    if X.shape != (prob.n, prob.n):
        raise DimensionMismatch(f"X must be {prob.n}x{prob.n}, got {X.shape}")
    R = X @ prob.C @ X - X @ prob.D - prob.A @ X + prob.B
    return float(np.abs(R).sum(axis=1).max() / np.abs(prob.B).sum(axis=1).max())


def write_solution_csv(X, fh) -> None:
    """Write ``X`` row-major as ``i,j,value`` lines (0-based indices)."""
    X = np.asarray(X, dtype=float)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["i", "j", "value"])
    for i, row in enumerate(X):
        for j, val in enumerate(row):
            writer.writerow([i, j, repr(float(val))])


def read_solution_csv(fh, n: int) -> np.ndarray:
    X = np.zeros((n, n))
    reader = csv.DictReader(fh)
    for rec in reader:
        X[int(rec["i"]), int(rec["j"])] = float(rec["value"])
    return X
