"""Long horizons: interval chaining and S-asymptotic periodicity diagnostics.

The half line is replaced by a finite horizon ``[t0, t0 + H]``.  Statements
such as "x(t + w) - x(t) -> 0" are turned into windowed tail suprema over
that horizon, so a classification always reads "at tolerance eps over
horizon H".
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .integral import FieldSpec, compose_integrand, ks_integral
from .regulated import RegulatedPath, TimeGrid, regrid, restrict_path
from .solver import (
    HMDEProblem,
    PreconditionError,
    SolveReport,
    SolverError,
    SolverOptions,
    residual,
    solve_forward,
)

__all__ = [
    "ChainError",
    "HorizonProblem",
    "chain_solve",
    "BoundedCheckReport",
    "bounded_condition_check",
    "SapProfile",
    "sap_profile",
    "generate_example_path",
    "composition_sap_check",
]

DEFAULT_EPS = 1e-3
DEFAULT_WINDOWS = 8


class ChainError(SolverError):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True, eq=False)
class HorizonProblem:
    """An HMDE on ``[t0, t0 + H]`` solved in chunks of length ``L``.

    Junction times are inserted into the template grid on construction.
    """

    template: HMDEProblem
    L: float = 1.0

    def __post_init__(self):
        H = self.template.a
        q = H / self.L
        if not self.L > 0 or abs(q - round(q)) > 1e-9 or round(q) < 1:
            raise ValueError(f"horizon {H} is not a positive multiple of L={self.L}")
        tp = self.template
        junctions = self.junctions
        if not np.all(np.isin(junctions, tp.grid.times)):
            grid = tp.grid.with_nodes(junctions[1:-1])
            opts = _with_grid(tp.options, grid)
            tp = HMDEProblem(tp.t0, tp.a, tp.x0, tp.f, tp.h, tp.g.regrid(grid), opts)
            object.__setattr__(self, "template", tp)

    @property
    def H(self) -> float:
        return self.template.a

    @property
    def junctions(self) -> np.ndarray:
        tp = self.template
        k = int(round(tp.a / self.L))
        j = tp.t0 + self.L * np.arange(k + 1)
        j[-1] = tp.grid.end
        return j


def _with_grid(opt: SolverOptions, grid: TimeGrid) -> SolverOptions:
    return SolverOptions(grid, opt.step, opt.point_tol, opt.point_max_iter,
                         opt.corrector_max_iter, opt.sweep_tol, opt.max_sweeps)


def chain_solve(hp: HorizonProblem) -> SolveReport:
    """Solve chunk by chunk, each started from the previous terminal value.

    On ``[c, d]`` the chunk equation is
    ``x(t) = x(c) - h(c, x(c)) + h(t, x(t)) + int_c^t f dg``,
    which is algebraically the full equation restricted to ``[c, d]``.
    """
    tp = hp.template
    j = hp.junctions
    x_start = tp.x0
    left, value, right, iters = [], [], [], []
    sweeps = 0
    for k in range(j.size - 1):
        c, d = j[k], j[k + 1]
        g = tp.g.restrict(c, d)
        sub = HMDEProblem(c, d - c, x_start, tp.f, tp.h, g, _with_grid(tp.options, g.grid))
        try:
            rep = solve_forward(sub)
        except SolverError as exc:
            raise ChainError(f"chain {k} on [{c}, {d}]: {exc}", k) from exc
        sol = rep.solution
        sweeps = max(sweeps, rep.sweeps)
        if k == 0:
            left.append(sol.left)
            value.append(sol.value)
            right.append(np.array(sol.right))
            iters.append(np.array(rep.point_iters))
        else:
            right[-1][-1] = sol.right[0]
            iters[-1][-1] += rep.point_iters[0]
            left.append(sol.left[1:])
            value.append(sol.value[1:])
            right.append(np.array(sol.right[1:]))
            iters.append(np.array(rep.point_iters[1:]))
        x_start = sol.value[-1]
    path = RegulatedPath(tp.grid, np.vstack(left), np.vstack(value), np.vstack(right))
    return SolveReport(path, residual(tp, path), np.concatenate(iters), sweeps)


@dataclass
class BoundedCheckReport:
    N: np.ndarray
    ratios: np.ndarray
    passed: bool


def _ball_samples(dim: int, radius: float, n_radii: int = 9) -> np.ndarray:
    """Points of norm ``<= radius``: radii ``linspace(0, 1, n_radii)`` along +-e_i and +-diagonal."""
    dirs = [np.eye(dim)[i] * s for i in range(dim) for s in (1.0, -1.0)]
    if dim > 1:
        diag = np.ones(dim) / math.sqrt(dim)
        dirs += [diag, -diag]
    r = np.linspace(0.0, 1.0, n_radii) * radius
    return np.array([ri * d for ri in r for d in dirs])


def bounded_condition_check(hp: HorizonProblem, N_samples: Sequence[float], max_times: int = 512) -> BoundedCheckReport:
    """``(sup |h(t, u)| + int M(s, N) dg) / N`` for each ``N``.

    The supremum runs over at most ``max_times`` grid times and the points of
    :func:`_ball_samples` of radius ``N``.  ``passed`` if some ratio is below 1.
    """
    tp = hp.template
    if tp.f.bound_family is None:
        raise PreconditionError("bounded_condition_check needs f.bound_family")
    times = tp.grid.times
    if times.size > max_times:
        times = times[np.linspace(0, times.size - 1, max_times).astype(int)]
    N = np.asarray(N_samples, dtype=float)
    ratios = []
    for n_ in N:
        us = _ball_samples(tp.dim, n_)
        hsup = max(float(np.linalg.norm(tp.h(t, u))) for t in times for u in us)
        M = RegulatedPath.from_function(tp.grid, lambda s: tp.f.bound_family(s, n_))
        ratios.append((hsup + float(ks_integral(M, tp.g)[0])) / n_)
    ratios = np.array(ratios)
    return BoundedCheckReport(N, ratios, bool(np.any(ratios < 1.0)))


@dataclass
class SapProfile:
    """Gap ``|x(t + omega) - x(t)|`` sampled on ``[t0, t0 + H - omega]``.

    ``gaps`` includes one-sided limits (the largest of the three differences
    per sample).  ``is_sap`` iff the last window's supremum is ``<= eps``.
    This classifies the computed path on a finite horizon; a negative answer
    says nothing about whether some other solution is asymptotically periodic.
    """

    omega: float
    times: np.ndarray
    gaps: np.ndarray
    window_edges: np.ndarray
    window_sup: np.ndarray
    eps: float

    @property
    def tail_sup(self) -> float:
        return float(self.window_sup[-1])

    @property
    def is_sap(self) -> bool:
        return self.tail_sup <= self.eps

    def windows_nonincreasing(self, slack: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.window_sup) <= slack))


def sap_profile(path: RegulatedPath, omega: float, windows: int = DEFAULT_WINDOWS, eps: float = DEFAULT_EPS) -> SapProfile:
    """Windowed sup of ``|x(t + omega) - x(t)|``.

    The shifted path and the path are both affine between the nodes of the
    union of their grids, so the supremum over a window is attained at
    those nodes (window edges included as nodes).
    """
    start, end = path.grid.start, path.grid.end
    if not (0 < omega < end - start):
        raise ValueError(f"omega={omega!r} must lie in (0, {end - start!r})")
    stop = end - omega
    ahead = restrict_path(path, start + omega, end)
    t_shift = ahead.times - omega
    t_shift[0], t_shift[-1] = start, stop
    keep = np.concatenate(([True], np.diff(t_shift) > 0))
    shifted = RegulatedPath(TimeGrid(t_shift[keep]), ahead.left[keep], ahead.value[keep], ahead.right[keep])
    here = restrict_path(path, start, stop)
    edges = np.linspace(start, stop, windows + 1)
    edges[-1] = stop
    diff = shifted - here
    diff = regrid(diff, diff.grid.with_nodes(edges))
    gaps = np.max(np.stack([np.linalg.norm(a, axis=1) for a in (diff.left, diff.value, diff.right)]), axis=0)
    t = diff.times
    sup = np.array([gaps[(t >= edges[w]) & (t <= edges[w + 1])].max() for w in range(windows)])
    return SapProfile(float(omega), t, gaps, edges, sup, float(eps))


def generate_example_path(a: Callable[[int], float], H: float) -> RegulatedPath:
    """Left-continuous path with ``x(n) = a_n`` and ``x(n+) = a_{n-1}``.

    On ``[0, 1]`` it is the segment from ``a_0`` to ``a_1``; on ``(n, n+1]``
    the segment from ``a_{n-1}`` to ``a_{n+1}``.  ``H`` is rounded up to an
    integer.
    """
    n = int(math.ceil(H))
    if n < 1:
        raise ValueError("horizon must be positive")
    vals = np.array([float(a(k)) for k in range(n + 1)])
    right = np.concatenate(([vals[0]], vals[:-1]))
    return RegulatedPath(TimeGrid(np.arange(n + 1, dtype=float)), vals, vals, right)


def composition_sap_check(p: FieldSpec, x: RegulatedPath, omega: float, windows: int = DEFAULT_WINDOWS,
                          eps: float = DEFAULT_EPS) -> SapProfile:
    """Profile of ``t -> p(t, x(t))``.

    ``p`` must declare ``meta["sap_period"] == omega`` (uniform S-asymptotic
    periodicity on bounded sets is the caller's assertion) and carry a
    comparison function.
    """
    period = p.meta.get("sap_period")
    if period is None or not math.isclose(period, omega, rel_tol=1e-12):
        raise PreconditionError(f"field does not declare sap_period={omega!r}")
    if p.phi is None and p.phi_family is None:
        raise PreconditionError("field must carry phi or phi_family")
    return sap_profile(compose_integrand(p, x), omega, windows, eps)
