"""Finite representations of regulated paths and Stieltjes integrators.

A :class:`RegulatedPath` stores, at every node of a :class:`TimeGrid`, the left
limit, the value and the right limit of a vector valued function.  Between two
consecutive nodes the path is the straight line joining the right limit at the
first node to the left limit at the second one, so every discontinuity lives on
a node.  A :class:`StieltjesIntegrator` is a nondecreasing, left-continuous
scalar function made of a piecewise linear continuous part and finitely many
positive jumps located on nodes.

All objects are immutable once built; the arrays they hold are flagged
read-only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

__all__ = [
    "DomainError",
    "TimeGrid",
    "RegulatedPath",
    "StieltjesIntegrator",
    "union_grid",
    "eval_path",
    "one_sided_limits",
    "regrid",
    "restrict_path",
    "uniform_dist",
    "sup_norm",
    "total_variation",
    "approximate_by_steps",
]


class DomainError(ValueError):
    """Raised when a time lies outside the span of a grid."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _norm(v: np.ndarray, axis=-1) -> np.ndarray:
    return np.linalg.norm(v, axis=axis)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing finite set of nodes spanning ``[t0, t0 + a]``."""

    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        if t.size < 2:
            raise ValueError("a time grid needs at least two nodes")
        if not np.all(np.isfinite(t)):
            raise ValueError("grid times must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid times must be strictly increasing")
        object.__setattr__(self, "times", _frozen(t))

    @classmethod
    def uniform(cls, t0: float, a: float, step: float) -> "TimeGrid":
        """Uniform grid on ``[t0, t0 + a]`` with at most ``step`` between nodes."""
        if a <= 0 or step <= 0:
            raise ValueError("span and step must be positive")
        m = max(1, int(math.ceil(a / step - 1e-9)))
        return cls(t0 + a * np.arange(m + 1) / m)

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return self.times.size

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeGrid) and np.array_equal(self.times, other.times)

    __hash__ = None

    def index_of(self, t: float) -> int | None:
        """Index of the node equal to ``t`` or ``None``."""
        i = int(np.searchsorted(self.times, t))
        if i < self.times.size and self.times[i] == t:
            return i
        return None

    def check_inside(self, t: float) -> None:
        if not (self.start <= t <= self.end):
            raise DomainError(f"t={t!r} outside [{self.start!r}, {self.end!r}]")

    def with_nodes(self, extra: Iterable[float]) -> "TimeGrid":
        return TimeGrid(np.union1d(self.times, np.asarray(list(extra), dtype=float)))

    def restrict(self, c: float, d: float) -> "TimeGrid":
        """Grid of the nodes in ``[c, d]`` with ``c`` and ``d`` added."""
        t = self.times[(self.times > c) & (self.times < d)]
        return TimeGrid(np.concatenate(([c], t, [d])))


def union_grid(*grids: TimeGrid) -> TimeGrid:
    starts = {g.start for g in grids}
    ends = {g.end for g in grids}
    if len(starts) != 1 or len(ends) != 1:
        raise DomainError("grids do not share the same span")
    times = grids[0].times
    for g in grids[1:]:
        if g.times is not times and not np.array_equal(g.times, times):
            times = np.union1d(times, g.times)
    return grids[0] if times is grids[0].times else TimeGrid(times)


@dataclass(frozen=True, eq=False)
class RegulatedPath:
    """Piecewise linear regulated path with jumps at nodes.

    ``left``, ``value`` and ``right`` have shape ``(len(grid), dim)``.  The
    left limit at the first node and the right limit at the last node are
    forced to the node value.
    """

    grid: TimeGrid
    left: np.ndarray
    value: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        m = len(self.grid)
        arrs = []
        for name in ("left", "value", "right"):
            a = np.array(getattr(self, name), dtype=float)
            if a.ndim == 1:
                a = a[:, None]
            if a.ndim != 2 or a.shape[0] != m:
                raise ValueError(f"{name} must have shape ({m}, dim), got {a.shape}")
            arrs.append(a)
        left, value, right = arrs
        if not (left.shape == value.shape == right.shape):
            raise ValueError("left, value and right must share a shape")
        if left.shape[1] < 1:
            raise ValueError("dimension must be positive")
        if not (np.all(np.isfinite(left)) and np.all(np.isfinite(value)) and np.all(np.isfinite(right))):
            raise ValueError("path data must be finite")
        left[0] = value[0]
        right[-1] = value[-1]
        object.__setattr__(self, "left", _frozen(left))
        object.__setattr__(self, "value", _frozen(value))
        object.__setattr__(self, "right", _frozen(right))

    # constructors -------------------------------------------------------
    @classmethod
    def continuous(cls, grid: TimeGrid | np.ndarray, values) -> "RegulatedPath":
        """Continuous path interpolating ``values`` at the nodes."""
        grid = grid if isinstance(grid, TimeGrid) else TimeGrid(grid)
        v = np.asarray(values, dtype=float)
        return cls(grid, v, v, v)

    @classmethod
    def constant(cls, grid: TimeGrid | np.ndarray, c) -> "RegulatedPath":
        grid = grid if isinstance(grid, TimeGrid) else TimeGrid(grid)
        c = np.atleast_1d(np.asarray(c, dtype=float))
        v = np.broadcast_to(c, (len(grid), c.size))
        return cls(grid, v, v, v)

    @classmethod
    def from_function(cls, grid: TimeGrid | np.ndarray, func: Callable[[float], object]) -> "RegulatedPath":
        """Continuous path sampling ``func`` at the nodes."""
        grid = grid if isinstance(grid, TimeGrid) else TimeGrid(grid)
        v = np.array([np.atleast_1d(np.asarray(func(t), dtype=float)) for t in grid.times])
        return cls.continuous(grid, v)

    @classmethod
    def step(cls, grid: TimeGrid | np.ndarray, levels, left_continuous: bool = True) -> "RegulatedPath":
        """Piecewise constant path taking ``levels[i]`` on ``(t_i, t_{i+1})``.

        With ``left_continuous`` the node value equals the level of the cell on
        its left (the first node takes the first level); otherwise it equals
        the level of the cell on its right.
        """
        grid = grid if isinstance(grid, TimeGrid) else TimeGrid(grid)
        lv = np.asarray(levels, dtype=float)
        if lv.ndim == 1:
            lv = lv[:, None]
        if lv.shape[0] != len(grid) - 1:
            raise ValueError("need one level per cell")
        left = np.vstack([lv[:1], lv])
        right = np.vstack([lv, lv[-1:]])
        value = left if left_continuous else right
        return cls(grid, left, value, right)

    # basic properties ---------------------------------------------------
    @property
    def dim(self) -> int:
        return self.value.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def is_left_continuous(self) -> bool:
        return bool(np.array_equal(self.left, self.value))

    def is_continuous(self) -> bool:
        return self.is_left_continuous() and bool(np.array_equal(self.right, self.value))

    def __call__(self, t: float) -> np.ndarray:
        return eval_path(self, t)

    # arithmetic ---------------------------------------------------------
    def _binary(self, other, op) -> "RegulatedPath":
        if isinstance(other, RegulatedPath):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            grid = union_grid(self.grid, other.grid)
            p, q = regrid(self, grid), regrid(other, grid)
            return RegulatedPath(grid, op(p.left, q.left), op(p.value, q.value), op(p.right, q.right))
        c = np.asarray(other, dtype=float)
        return RegulatedPath(self.grid, op(self.left, c), op(self.value, c), op(self.right, c))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, c):
        if isinstance(c, RegulatedPath):
            return NotImplemented
        return self._binary(c, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def _locate(grid: TimeGrid, t: float) -> tuple[int, bool]:
    """Return ``(i, on_node)``; if not on a node, ``t`` lies in ``(t_i, t_{i+1})``."""
    grid.check_inside(t)
    i = int(np.searchsorted(grid.times, t))
    if i < len(grid) and grid.times[i] == t:
        return i, True
    return i - 1, False


def _interp(path: RegulatedPath, i: int, t: float) -> np.ndarray:
    t0, t1 = path.times[i], path.times[i + 1]
    w = (t - t0) / (t1 - t0)
    return (1.0 - w) * path.right[i] + w * path.left[i + 1]


def eval_path(path: RegulatedPath, t: float) -> np.ndarray:
    """Value of ``path`` at ``t``."""
    i, on_node = _locate(path.grid, t)
    if on_node:
        return path.value[i].copy()
    return _interp(path, i, t)


def one_sided_limits(path: RegulatedPath, t: float) -> tuple[np.ndarray, np.ndarray]:
    """``(x(t-), x(t+))``.

    At the left end of the span the left limit is reported as the value, and
    symmetrically at the right end.
    """
    i, on_node = _locate(path.grid, t)
    if on_node:
        return path.left[i].copy(), path.right[i].copy()
    v = _interp(path, i, t)
    return v, v.copy()


def regrid(path: RegulatedPath, grid: TimeGrid) -> RegulatedPath:
    """Express ``path`` on a finer grid containing all of its nodes."""
    if grid is path.grid or grid == path.grid:
        return path
    old = path.times
    new = grid.times
    if new[0] != old[0] or new[-1] != old[-1]:
        raise DomainError("regrid target must have the same span")
    pos = np.searchsorted(new, old)
    if np.any(pos >= new.size) or not np.array_equal(new[pos], old):
        raise ValueError("regrid target must contain every node of the path")
    m, n = new.size, path.dim
    left = np.empty((m, n))
    value = np.empty((m, n))
    right = np.empty((m, n))
    left[pos], value[pos], right[pos] = path.left, path.value, path.right
    mask = np.ones(m, dtype=bool)
    mask[pos] = False
    if mask.any():
        idx = np.nonzero(mask)[0]
        seg = np.searchsorted(old, new[idx]) - 1
        w = ((new[idx] - old[seg]) / (old[seg + 1] - old[seg]))[:, None]
        v = (1.0 - w) * path.right[seg] + w * path.left[seg + 1]
        left[idx] = value[idx] = right[idx] = v
    return RegulatedPath(grid, left, value, right)


def restrict_path(path: RegulatedPath, c: float, d: float) -> RegulatedPath:
    """Restriction of ``path`` to ``[c, d]``; ``c`` and ``d`` become nodes."""
    grid = path.grid.with_nodes([c, d])
    p = regrid(path, grid)
    keep = (grid.times >= c) & (grid.times <= d)
    return RegulatedPath(TimeGrid(grid.times[keep]), p.left[keep], p.value[keep], p.right[keep])


def sup_norm(path: RegulatedPath) -> float:
    """Supremum norm, exact for the piecewise linear representation."""
    return float(max(_norm(path.left).max(), _norm(path.value).max(), _norm(path.right).max()))


def uniform_dist(p: RegulatedPath, q: RegulatedPath) -> float:
    """Sup-norm distance between two paths on the union of their grids.

    Both paths are affine on every cell of the union grid, so the supremum
    of the (convex) norm of their difference is reached at cell endpoints,
    i.e. among node values and one-sided limits.
    """
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} != {q.dim}")
    return sup_norm(p - q)


@dataclass(frozen=True, eq=False)
class StieltjesIntegrator:
    """Nondecreasing left-continuous integrator ``g = cont + sum of jumps``.

    ``cont`` holds samples of the continuous part at the nodes (linear in
    between) and ``jumps`` the size of the right jump ``g(t+) - g(t)`` at each
    node (zero where there is none).  Evaluation follows the left-continuity
    convention ``g(t) = cont(t) + sum_{tau_j < t} delta_j``.
    """

    grid: TimeGrid
    cont: np.ndarray
    jumps: np.ndarray

    def __post_init__(self):
        m = len(self.grid)
        c = np.array(self.cont, dtype=float).ravel()
        j = np.array(self.jumps, dtype=float).ravel()
        if c.size != m or j.size != m:
            raise ValueError("cont and jumps need one entry per node")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(j))):
            raise ValueError("integrator data must be finite")
        if np.any(np.diff(c) < 0):
            raise ValueError("continuous part must be nondecreasing")
        if np.any(j < 0):
            raise ValueError("jump sizes must be positive")
        if j[-1] != 0:
            raise ValueError("a jump at the right end of the span is outside the interval")
        object.__setattr__(self, "cont", _frozen(c))
        object.__setattr__(self, "jumps", _frozen(j))

    @classmethod
    def build(cls, grid: TimeGrid | np.ndarray, cont=None, jumps: dict | Iterable = ()) -> "StieltjesIntegrator":
        """Build from continuous samples and ``{time: size}`` jumps.

        Jump times are added to the grid when missing; ``cont`` may be an
        array of node samples, a callable, or ``None`` (constant zero).
        """
        grid = grid if isinstance(grid, TimeGrid) else TimeGrid(grid)
        jumps = dict(jumps)
        for tau, d in jumps.items():
            grid.check_inside(tau)
            if not d > 0:
                raise ValueError(f"jump at {tau} must be positive, got {d}")
        if jumps:
            new = grid.with_nodes(jumps.keys())
            if cont is not None and not callable(cont):
                cont = np.interp(new.times, grid.times, np.asarray(cont, dtype=float))
            grid = new
        if cont is None:
            c = np.zeros(len(grid))
        elif callable(cont):
            c = np.array([float(cont(t)) for t in grid.times])
        else:
            c = np.asarray(cont, dtype=float)
        j = np.zeros(len(grid))
        for tau, d in jumps.items():
            j[grid.index_of(tau)] += d
        return cls(grid, c, j)

    @classmethod
    def identity(cls, grid: TimeGrid | np.ndarray, jumps: dict | Iterable = ()) -> "StieltjesIntegrator":
        """``g(t) = t`` plus optional jumps."""
        return cls.build(grid, lambda t: t, jumps)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def jump_times(self) -> np.ndarray:
        return self.times[self.jumps > 0]

    @property
    def jump_sizes(self) -> np.ndarray:
        return self.jumps[self.jumps > 0]

    def cont_at(self, t: float) -> float:
        self.grid.check_inside(t)
        return float(np.interp(t, self.times, self.cont))

    def __call__(self, t: float) -> float:
        return self.cont_at(t) + float(self.jumps[self.times < t].sum())

    def right_limit(self, t: float) -> float:
        return self.cont_at(t) + float(self.jumps[self.times <= t].sum())

    def left_limit(self, t: float) -> float:
        return self(t)

    def node_values(self) -> np.ndarray:
        """``g`` at every node (left-continuous values)."""
        return self.cont + np.concatenate(([0.0], np.cumsum(self.jumps)[:-1]))

    def slope(self, t: float, side: str = "right") -> float:
        """Slope of the continuous part; at a node, the one-sided slope."""
        i, on_node = _locate(self.grid, t)
        if on_node and (side == "left" or i == len(self.grid) - 1):
            i -= 1
        i = max(i, 0)
        return float((self.cont[i + 1] - self.cont[i]) / (self.times[i + 1] - self.times[i]))

    def regrid(self, grid: TimeGrid) -> "StieltjesIntegrator":
        if grid is self.grid or grid == self.grid:
            return self
        if grid.start != self.grid.start or grid.end != self.grid.end:
            raise DomainError("regrid target must have the same span")
        pos = np.searchsorted(grid.times, self.times)
        if np.any(pos >= len(grid)) or not np.array_equal(grid.times[pos], self.times):
            raise ValueError("regrid target must contain every node of the integrator")
        j = np.zeros(len(grid))
        j[pos] = self.jumps
        return StieltjesIntegrator(grid, np.interp(grid.times, self.times, self.cont), j)

    def restrict(self, c: float, d: float) -> "StieltjesIntegrator":
        """Integrator on ``[c, d]``; a jump sitting at ``d`` is dropped."""
        g = self.regrid(self.grid.with_nodes([c, d]))
        keep = (g.times >= c) & (g.times <= d)
        j = g.jumps[keep].copy()
        j[-1] = 0.0
        return StieltjesIntegrator(TimeGrid(g.times[keep]), g.cont[keep], j)


def total_variation(g: StieltjesIntegrator) -> float:
    """Total variation of ``g`` over its span."""
    return float(g.cont[-1] - g.cont[0] + g.jumps.sum())


def approximate_by_steps(path: RegulatedPath, eps: float) -> RegulatedPath:
    """Piecewise constant path within ``eps`` of ``path`` in sup-norm.

    Each cell is split into ``k`` equal pieces so that the affine segment moves
    by at most ``2 * eps`` over a piece; the piece takes the segment's
    midpoint value.  Original node values are kept, inserted nodes are
    left-continuous.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    t = path.times
    d = _norm(path.left[1:] - path.right[:-1])
    ks = np.maximum(1, np.ceil(d / (2.0 * eps))).astype(int)
    times, left, value, right = [t[0]], [path.left[0]], [path.value[0]], []
    for i, k in enumerate(ks):
        a, b = path.right[i], path.left[i + 1]
        frac = (np.arange(k) + 0.5) / k
        levels = a[None, :] + frac[:, None] * (b - a)[None, :]
        right.append(levels[0])
        for j in range(1, k):
            times.append(t[i] + (t[i + 1] - t[i]) * j / k)
            left.append(levels[j - 1])
            value.append(levels[j - 1])
            right.append(levels[j])
        times.append(t[i + 1])
        left.append(levels[-1])
        value.append(path.value[i + 1])
    right.append(path.value[-1])
    return RegulatedPath(TimeGrid(np.array(times)), np.array(left), np.array(value), np.array(right))
