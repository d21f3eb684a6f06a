"""Kurzweil-Stieltjes integration on the piecewise linear representation.

Jump convention: ``integral(f, g, c, d)`` counts the jumps of ``g`` located in
``[c, d)``.  With a left-continuous ``g`` this is what makes the indefinite
integral ``p`` satisfy ``p(t+) = p(t) + f(t) * (g(t+) - g(t))`` and
``p(t-) = p(t)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .regulated import (
    DomainError,
    RegulatedPath,
    StieltjesIntegrator,
    TimeGrid,
    regrid,
    sup_norm,
    total_variation,
    union_grid,
)

__all__ = [
    "EvaluationError",
    "FieldSpec",
    "TaggedPartition",
    "ks_integral",
    "indefinite_integral",
    "fine_partition_oracle",
    "compose_integrand",
    "DominatedConvergenceReport",
    "dominated_convergence_check",
]


class EvaluationError(ArithmeticError):
    """A field handle returned a non-finite value."""

    def __init__(self, message, t=None, u=None):
        super().__init__(message)
        self.t = t
        self.u = u


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """A nonlinearity ``(t, u) -> R^n`` plus the bound data declared for it.

    ``handle`` must be continuous in ``t`` between grid nodes.  Time
    discontinuities at nodes are described by ``node_values`` (a handle that
    replaces the value at exactly that time, one-sided limits untouched) and by
    ``right_handle`` (the right limit in time, ``(t, u) -> h(t+, u)``).

    Bound data: ``bound`` is a scalar path ``M`` with
    ``|int_c^d f(s,u) dg| <= int_c^d M dg``; ``bound_family`` is ``M(t, r)``,
    nondecreasing in ``r``.  For contraction-type fields ``phi`` is a single
    comparison function and ``phi_family`` is ``phi(t, r)``.  ``meta`` carries
    free-form caller assertions (e.g. ``{"sap_period": 1.0}``).
    """

    handle: Callable
    bound: RegulatedPath | None = None
    bound_family: Callable | None = None
    phi: Callable | None = None
    phi_family: Callable | None = None
    node_values: Mapping[float, Callable] = field(default_factory=dict)
    right_handle: Callable | None = None
    name: str = ""
    meta: Mapping = field(default_factory=dict)

    def _call(self, func, t, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = np.asarray(func(t, u), dtype=float)
        out = np.broadcast_to(out, u.shape).astype(float)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite value of {self.name or 'field'} at t={t!r}, u={u!r}", t, u)
        return out

    def __call__(self, t: float, u) -> np.ndarray:
        """Value at the point ``(t, u)``, honouring ``node_values``."""
        special = self.node_values.get(t) if self.node_values else None
        return self._call(special if special is not None else self.handle, t, u)

    def limit(self, t: float, u) -> np.ndarray:
        """Two-sided (equivalently left) limit in time at ``t``."""
        return self._call(self.handle, t, u)

    def right(self, t: float, u) -> np.ndarray:
        """Right limit in time at ``t``."""
        return self._call(self.right_handle or self.handle, t, u)

    def replace(self, **changes) -> "FieldSpec":
        return replace(self, **changes)

    @classmethod
    def zero(cls, **kw) -> "FieldSpec":
        kw.setdefault("name", "zero")
        kw.setdefault("phi", lambda s: 0.0 * s)
        return cls(lambda t, u: np.zeros_like(u), **kw)


@dataclass(frozen=True)
class TaggedPartition:
    """Subdivision points ``s_0 <= ... <= s_k`` with tags ``tags[i]`` in ``[s_i, s_{i+1}]``."""

    points: np.ndarray
    tags: np.ndarray

    def is_fine(self, gauge: Callable[[float], float]) -> bool:
        """Whether every cell lies in the open gauge ball of its tag."""
        s, tau = self.points, self.tags
        if np.any(tau < s[:-1]) or np.any(tau > s[1:]):
            return False
        delta = np.array([gauge(t) for t in tau])
        return bool(np.all((s[:-1] > tau - delta) & (s[1:] < tau + delta)))


def _common(fpath: RegulatedPath, g: StieltjesIntegrator, extra=()) -> tuple[RegulatedPath, StieltjesIntegrator]:
    if fpath.grid.start != g.grid.start or fpath.grid.end != g.grid.end:
        raise DomainError(
            f"integrand span [{fpath.grid.start}, {fpath.grid.end}] differs from "
            f"integrator span [{g.grid.start}, {g.grid.end}]"
        )
    grid = union_grid(fpath.grid, g.grid)
    extra = [e for e in extra if grid.index_of(e) is None]
    if extra:
        for e in extra:
            grid.check_inside(e)
        grid = grid.with_nodes(extra)
    return regrid(fpath, grid), g.regrid(grid)


def _increments(f: RegulatedPath, g: StieltjesIntegrator) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell continuous contributions and per-node jump contributions."""
    dc = np.diff(g.cont)[:, None]
    cells = 0.5 * dc * (f.right[:-1] + f.left[1:])
    jumps = f.value * g.jumps[:, None]
    return cells, jumps


def _check_interval(c: float, d: float) -> None:
    if c > d:
        raise ValueError(f"empty interval: c={c!r} > d={d!r}")


def ks_integral(fpath: RegulatedPath, g: StieltjesIntegrator, c: float | None = None, d: float | None = None) -> np.ndarray:
    """Exact integral of ``fpath`` against ``g`` over ``[c, d]``.

    On each cell both the integrand and the continuous part of ``g`` are
    affine, so ``int f d(cont) = dc * (f(t_i+) + f(t_{i+1}-)) / 2``.  Jumps at
    ``tau`` in ``[c, d)`` add ``f(tau) * delta``.
    """
    c = fpath.grid.start if c is None else c
    d = fpath.grid.end if d is None else d
    _check_interval(c, d)
    f, gg = _common(fpath, g, (c, d))
    i, j = f.grid.index_of(c), f.grid.index_of(d)
    cells, jumps = _increments(f, gg)
    return cells[i:j].sum(axis=0) + jumps[i:j].sum(axis=0)


def indefinite_integral(fpath: RegulatedPath, g: StieltjesIntegrator, t0: float | None = None) -> RegulatedPath:
    """``p(t) = int_{t0}^t f dg`` on ``[t0, end]``.

    Node values and one-sided limits are exact; between nodes ``p`` is the
    linear interpolant of them, which differs from the true piecewise
    quadratic antiderivative by O(dt^2).
    """
    t0 = fpath.grid.start if t0 is None else t0
    f, gg = _common(fpath, g, (t0,))
    i0 = f.grid.index_of(t0)
    cells, jumps = _increments(f, gg)
    cells, jumps = cells[i0:], jumps[i0:]
    n = f.dim
    value = np.zeros((cells.shape[0] + 1, n))
    np.cumsum(cells + jumps[:-1], axis=0, out=value[1:])
    right = value + jumps
    grid = f.grid if i0 == 0 else TimeGrid(f.times[i0:])
    return RegulatedPath(grid, value, value, right)


def fine_partition_oracle(fpath: RegulatedPath, g: StieltjesIntegrator, c: float | None = None,
                          d: float | None = None, level: int = 8, return_partition: bool = False):
    """Riemann-Stieltjes sum over a fine tagged partition of ``[c, d]``.

    Every cell of the union grid is split into ``2**level`` equal pieces,
    tagged at their midpoints.  At a jump ``tau`` of ``g`` the gauge is tight:
    a short cell ``[tau, tau + w]`` is tagged at ``tau`` itself, so the jump
    is picked up as ``f(tau) * delta``; ``w`` is ``4**-level`` times the width
    of the union-grid cell starting at ``tau``.  The piece after the short
    cell is tagged a distance ``w**2 / (2 (p - w))`` right of its midpoint
    (``p`` the dyadic piece width), which cancels the second order part of
    the short cell's error.  What remains is
    ``slope * w * (f(tau) - f(tau+))`` per jump, i.e. ``O(4**-level)``.
    """
    c = fpath.grid.start if c is None else c
    d = fpath.grid.end if d is None else d
    _check_interval(c, d)
    if level < 1:
        raise ValueError("level must be a positive integer")
    f, gg = _common(fpath, g, (c, d))
    i, j = f.grid.index_of(c), f.grid.index_of(d)
    t = f.times[i:j + 1]
    k = 2 ** level
    shrink = 4.0 ** (-level)
    pts, tags = [], []
    for m in range(t.size - 1):
        a, b = t[m], t[m + 1]
        s = a + (b - a) * np.arange(k + 1) / k
        s[-1] = b
        mid = 0.5 * (s[:-1] + s[1:])
        if gg.jumps[i + m] > 0:
            w = (b - a) * shrink
            p = s[1] - s[0]
            s = np.concatenate(([a, a + w], s[1:]))
            mid = np.concatenate(([a, 0.5 * (a + w + s[2]) + w * w / (2.0 * (p - w))], mid[1:]))
        pts.append(s[:-1])
        tags.append(mid)
    pts.append([d])
    points = np.concatenate(pts)
    tag = np.concatenate(tags)
    total = _rs_sum(f, gg, points, tag)
    if return_partition:
        return total, TaggedPartition(points, tag)
    return total


def _rs_sum(f: RegulatedPath, g: StieltjesIntegrator, points: np.ndarray, tags: np.ndarray) -> np.ndarray:
    times = f.times
    # g at subdivision points (left-continuous): cont + jumps strictly before
    cum = np.concatenate(([0.0], np.cumsum(g.jumps)))
    gpts = np.interp(points, times, g.cont) + cum[np.searchsorted(times, points, side="left")]
    dg = np.diff(gpts)
    # f at tags: node value on nodes, interpolant elsewhere
    idx = np.searchsorted(times, tags, side="left")
    on = (idx < times.size) & (times[np.minimum(idx, times.size - 1)] == tags)
    seg = np.clip(np.searchsorted(times, tags, side="right") - 1, 0, times.size - 2)
    w = ((tags - times[seg]) / (times[seg + 1] - times[seg]))[:, None]
    ft = (1.0 - w) * f.right[seg] + w * f.left[seg + 1]
    ft[on] = f.value[idx[on]]
    return (ft * dg[:, None]).sum(axis=0)


def compose_integrand(f: FieldSpec, x: RegulatedPath) -> RegulatedPath:
    """The path ``s -> f(s, x(s))`` sampled on the grid of ``x``.

    Node values use ``f(t_i, x(t_i))``; one-sided limits use the time limits
    of ``f`` at the node evaluated at the one-sided limits of ``x``.
    """
    t = x.times
    value = np.array([f(ti, xi) for ti, xi in zip(t, x.value)])
    left = np.array([f.limit(ti, xi) for ti, xi in zip(t, x.left)])
    right = np.array([f.right(ti, xi) for ti, xi in zip(t, x.right)])
    return RegulatedPath(x.grid, left, value, right)


@dataclass
class DominatedConvergenceReport:
    gaps: np.ndarray
    passed: bool
    limit_integral: np.ndarray


def dominated_convergence_check(f_seq: Sequence[RegulatedPath], f_lim: RegulatedPath, g: StieltjesIntegrator,
                                tol: float, tail: int = 1) -> DominatedConvergenceReport:
    """Gaps ``|int f_k dg - int f dg|`` along a sequence.

    ``passed`` holds when the last ``tail`` gaps are below ``tol``.
    """
    ref = ks_integral(f_lim, g)
    gaps = np.array([float(np.linalg.norm(ks_integral(fk, g) - ref)) for fk in f_seq])
    passed = bool(gaps.size and np.all(gaps[-tail:] < tol))
    return DominatedConvergenceReport(gaps, passed, ref)


def variation_bound(fpath: RegulatedPath, g: StieltjesIntegrator) -> float:
    """``||f||_inf * var(g)``, the a priori bound on ``|int f dg|``."""
    return sup_norm(fpath) * total_variation(g)
