"""Impulsive equations and dynamic equations on time scales as HMDE problems.

Impulses ``x(tau_j+) - x(tau_j) = I_j(x(tau_j))`` become unit jumps of ``g``
at ``tau_j`` with the integrand replaced by ``I_j`` at exactly ``tau_j``.  A
finite time scale ``T`` becomes the integrator ``g(t) = t* = inf{s in T :
s >= t}``, whose right jump at a right-scattered point is its graininess, and
the fields are evaluated at ``t*``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .integral import FieldSpec
from .regulated import DomainError, RegulatedPath, StieltjesIntegrator, TimeGrid
from .solver import HMDEProblem, SolverOptions

__all__ = [
    "ImpulsiveSpec",
    "TimeScaleSpec",
    "from_impulsive",
    "from_timescale",
    "restrict_solution",
]

COLLISION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ImpulsiveSpec:
    t0: float
    a: float
    x0: np.ndarray
    f: FieldSpec
    h: FieldSpec
    impulses: Sequence[tuple[float, Callable]] = ()

    def __post_init__(self):
        taus = [float(tau) for tau, _ in self.impulses]
        if np.any(np.diff(taus) <= 0):
            raise ValueError("impulse times must be strictly increasing")
        if np.any(np.diff(taus) <= COLLISION_TOL):
            raise ValueError("impulse times collide")
        for tau in taus:
            if not (self.t0 < tau < self.t0 + self.a):
                raise DomainError(f"impulse time {tau!r} not inside ({self.t0}, {self.t0 + self.a})")

    @property
    def times(self) -> np.ndarray:
        return np.array([float(tau) for tau, _ in self.impulses])


@dataclass(frozen=True, eq=False)
class TimeScaleSpec:
    """A finite time scale: sorted disjoint closed intervals ``(lo, hi)``; ``lo == hi`` is a point."""

    components: Sequence[tuple[float, float]]
    x0: np.ndarray
    f: FieldSpec
    h: FieldSpec = field(default_factory=FieldSpec.zero)

    def __post_init__(self):
        comps = [(float(lo), float(hi)) for lo, hi in self.components]
        if not comps:
            raise ValueError("empty time scale")
        for lo, hi in comps:
            if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
                raise ValueError(f"degenerate component ({lo}, {hi})")
        for (_, hi), (lo, _) in zip(comps, comps[1:]):
            if not lo > hi:
                raise ValueError("components must be sorted and pairwise disjoint")
        if comps[0][0] == comps[-1][1]:
            raise ValueError("time scale reduces to a single point")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def t0(self) -> float:
        return self.components[0][0]

    @property
    def end(self) -> float:
        return self.components[-1][1]

    def points(self) -> np.ndarray:
        """Endpoints of every component (isolated points once)."""
        return np.unique(np.array(self.components).ravel())

    def star(self, s: float) -> float:
        """``inf{r in T : r >= s}``."""
        for lo, hi in self.components:
            if s <= hi:
                return max(s, lo)
        raise DomainError(f"{s!r} lies beyond the time scale")

    def star_right(self, s: float) -> float:
        """Right limit of ``r -> r*`` at ``s``: ``sigma(s)`` at right-scattered points."""
        for k, (lo, hi) in enumerate(self.components):
            if s < hi:
                return max(s, lo)
            if s == hi:
                return self.components[k + 1][0] if k + 1 < len(self.components) else s
        raise DomainError(f"{s!r} lies beyond the time scale")

    def graininess(self) -> dict[float, float]:
        """``{t: sigma(t) - t}`` over right-scattered points."""
        comps = self.components
        return {hi: nxt - hi for (_, hi), (nxt, _) in zip(comps, comps[1:])}


def from_impulsive(spec: ImpulsiveSpec, options: SolverOptions | None = None) -> HMDEProblem:
    """HMDE with ``g(t) = t + #{tau_j < t}`` and the integrand ``I_j`` at ``tau_j``.

    The jump term ``I_j(x(tau_j)) * 1`` enters only for ``t > tau_j``, giving
    the strict sum over ``t0 <= tau_j < t``.  Grid nodes closer than
    ``COLLISION_TOL`` to an impulse time are moved onto it.
    """
    options = options or SolverOptions()
    end = spec.t0 + spec.a
    taus = spec.times
    grid = options.grid or TimeGrid.uniform(spec.t0, spec.a, options.step)
    t = grid.times
    if taus.size:
        near = np.min(np.abs(t[:, None] - taus[None, :]), axis=1) <= COLLISION_TOL
        near[0] = near[-1] = False
        t = np.union1d(t[~near], taus)
    grid = TimeGrid(t)
    g = StieltjesIntegrator.identity(grid, {tau: 1.0 for tau in taus})
    overrides = {float(tau): (lambda I: (lambda s, u: I(u)))(I) for tau, I in spec.impulses}
    f = spec.f.replace(node_values={**dict(spec.f.node_values), **overrides})
    options = SolverOptions(grid, options.step, options.point_tol, options.point_max_iter,
                            options.corrector_max_iter, options.sweep_tol, options.max_sweeps)
    return HMDEProblem(spec.t0, end - spec.t0, spec.x0, f, spec.h, g, options)


def from_timescale(spec: TimeScaleSpec, options: SolverOptions | None = None) -> HMDEProblem:
    """HMDE with ``g(t) = t*`` and fields evaluated at ``t*``.

    Inside every interval component the grid has spacing at most
    ``options.step``; gaps carry no interior node since ``g`` is flat there.
    """
    options = options or SolverOptions()
    nodes = []
    for lo, hi in spec.components:
        if hi > lo:
            nodes.append(TimeGrid.uniform(lo, hi - lo, options.step).times)
        else:
            nodes.append([lo])
    if options.grid is not None:
        extra = [s for s in options.grid.times if any(lo <= s <= hi for lo, hi in spec.components)]
        nodes.append(extra)
    grid = TimeGrid(np.unique(np.concatenate([np.asarray(n, dtype=float) for n in nodes])))
    # continuous part: Lebesgue measure of T within [t0, t]
    cont = np.array([sum(max(0.0, min(s, hi) - lo) for lo, hi in spec.components) for s in grid.times])
    cont += spec.t0
    g = StieltjesIntegrator(grid, cont, _jumps_on(grid, spec.graininess()))

    def lift(fs: FieldSpec) -> FieldSpec:
        return fs.replace(
            handle=lambda s, u: fs.handle(spec.star(s), u),
            right_handle=lambda s, u: fs.handle(spec.star_right(s), u),
        )

    options = SolverOptions(grid, options.step, options.point_tol, options.point_max_iter,
                            options.corrector_max_iter, options.sweep_tol, options.max_sweeps)
    return HMDEProblem(spec.t0, spec.end - spec.t0, spec.x0, lift(spec.f), lift(spec.h), g, options)


def _jumps_on(grid: TimeGrid, sizes: dict) -> np.ndarray:
    j = np.zeros(len(grid))
    for t, d in sizes.items():
        j[grid.index_of(t)] = d
    return j


def restrict_solution(path: RegulatedPath, spec: ImpulsiveSpec | TimeScaleSpec) -> dict:
    """Tabulate a solution on the original problem's own terms.

    Time scale: ``{"t": ..., "x": ...}`` at the grid nodes lying in ``T``.
    Impulsive: the node table plus ``"tau"`` and ``"jump"`` holding
    ``x(tau_j+) - x(tau_j)``.
    """
    if isinstance(spec, TimeScaleSpec):
        if path.grid.start != spec.t0 or path.grid.end != spec.end:
            raise DomainError("path does not span the time scale")
        t = path.times
        inside = np.zeros(t.size, dtype=bool)
        for lo, hi in spec.components:
            inside |= (t >= lo) & (t <= hi)
        return {"t": t[inside].copy(), "x": path.value[inside].copy()}
    if path.grid.start != spec.t0 or not np.isclose(path.grid.end, spec.t0 + spec.a, rtol=1e-12, atol=1e-12):
        raise DomainError("path does not span the impulsive problem")
    taus = spec.times
    idx = [path.grid.index_of(tau) for tau in taus]
    if any(i is None for i in idx):
        raise DomainError("impulse times are not nodes of the path")
    idx = np.array(idx, dtype=int)
    return {
        "t": path.times.copy(),
        "x": path.value.copy(),
        "tau": taus,
        "jump": path.right[idx] - path.value[idx] if idx.size else np.zeros((0, path.dim)),
    }
