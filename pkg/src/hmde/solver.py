"""Forward-marching solver for hybrid measure differential equations.

The problem is the implicit integral equation::

    x(t) = x0 - h(t0, x0) + h(t, x(t)) + int_{t0}^t f(s, x(s)) dg(s)

Only ``h`` enters implicitly at the current time, so the equation is solved
node by node: the integral up to the previous node is known, the last cell is
integrated with a trapezoid corrector (left-rectangle predictor), and the
pointwise equation ``x = c + h(t, x)`` is solved by fixed-point iteration,
which converges whenever ``h(t, .)`` is a nonlinear contraction.  Jumps of
``g`` are handled exactly.  The scheme is deterministic; the equation may have
other solutions.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .integral import FieldSpec, compose_integrand, indefinite_integral, ks_integral
from .regulated import (
    DomainError,
    RegulatedPath,
    StieltjesIntegrator,
    TimeGrid,
    eval_path,
    uniform_dist,
)

__all__ = [
    "SolverError",
    "NonConvergenceError",
    "ResidualError",
    "PreconditionError",
    "DerivativeUndefinedError",
    "SingularityError",
    "SolverOptions",
    "HMDEProblem",
    "SolveReport",
    "CertificateResult",
    "D_FUNCTION_SAMPLES",
    "validate_d_function",
    "implicit_point_solve",
    "apply_A",
    "apply_B",
    "residual",
    "solve_forward",
    "certificate_A",
    "certificate_Astar",
    "certificate_margin",
    "derivative_field",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class NonConvergenceError(SolverError):
    """Fixed-point iteration did not reach the tolerance.

    ``last`` and ``previous`` are the final two iterates; ``t`` the node.
    """

    def __init__(self, message, last=None, previous=None, t=None):
        super().__init__(message)
        self.last = last
        self.previous = previous
        self.t = t


class ResidualError(SolverError):
    """The marched path does not satisfy the equation to ``sweep_tol``; refine the grid."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PreconditionError(ValueError):
    pass


class DerivativeUndefinedError(ValueError):
    pass


class SingularityError(ArithmeticError):
    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


# 64 points per decade on [1e-9, 1e9], plus the origin
D_FUNCTION_SAMPLES = np.concatenate(([0.0], np.logspace(-9.0, 9.0, 18 * 64 + 1)))


def validate_d_function(phi: Callable[[float], float], samples: np.ndarray = D_FUNCTION_SAMPLES) -> None:
    """Check ``phi(0) = 0``, ``phi`` nondecreasing and ``phi(t) < t`` on ``samples``.

    Passing is evidence only: ``phi`` may still misbehave between samples.
    """
    v = np.array([float(phi(s)) for s in samples])
    if not np.all(np.isfinite(v)):
        raise PreconditionError("comparison function returned non-finite values")
    if samples[0] == 0.0 and v[0] != 0.0:
        raise PreconditionError(f"phi(0) = {v[0]!r}, expected 0")
    if np.any(v < 0):
        raise PreconditionError("comparison function must be nonnegative")
    drop = np.diff(v) < -1e-12 * np.maximum(1.0, np.abs(v[1:]))
    if drop.any():
        i = int(np.argmax(drop))
        raise PreconditionError(f"phi decreases between t={samples[i]!r} and t={samples[i + 1]!r}")
    pos = samples > 0
    bad = v[pos] >= samples[pos]
    if bad.any():
        t = samples[pos][int(np.argmax(bad))]
        raise PreconditionError(f"phi(t) < t fails at t={t!r}")


@dataclass(frozen=True)
class SolverOptions:
    """Grid and tolerances.  Without ``grid`` a uniform grid of ``step`` is used."""

    grid: TimeGrid | None = None
    step: float = 1e-2
    point_tol: float = 1e-13
    point_max_iter: int = 1000
    corrector_max_iter: int = 100
    sweep_tol: float = 1e-9
    max_sweeps: int = 3


@dataclass(frozen=True, eq=False)
class HMDEProblem:
    """``(t0, a, x0, f, h, g)`` plus solver options.

    The working grid is the union of the options grid and the nodes of ``g``,
    and ``g`` is stored on it.
    """

    t0: float
    a: float
    x0: np.ndarray
    f: FieldSpec
    h: FieldSpec
    g: StieltjesIntegrator
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float)).copy()
        if x0.ndim != 1 or not np.all(np.isfinite(x0)):
            raise ValueError("x0 must be a finite vector")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        end = self.t0 + self.a
        g = self.g
        if g.grid.start != self.t0 or not math.isclose(g.grid.end, end, rel_tol=1e-12, abs_tol=1e-12):
            raise DomainError(f"integrator spans [{g.grid.start}, {g.grid.end}], problem spans [{self.t0}, {end}]")
        grid = self.options.grid
        if grid is None:
            grid = TimeGrid.uniform(self.t0, g.grid.end - self.t0, self.options.step)
            grid = TimeGrid(np.concatenate((grid.times[:-1], [g.grid.end])))
        if grid.start != g.grid.start or not math.isclose(grid.end, g.grid.end, rel_tol=1e-12, abs_tol=1e-12):
            raise DomainError("options grid does not span the problem interval")
        if grid.end != g.grid.end:
            grid = TimeGrid(np.concatenate((grid.times[:-1], [g.grid.end])))
        grid = grid.with_nodes(g.times) if not np.all(np.isin(g.times, grid.times)) else grid
        object.__setattr__(self, "g", g.regrid(grid))
        if self.h.node_values:
            raise ValueError("h may not override values at isolated times")

    @property
    def grid(self) -> TimeGrid:
        return self.g.grid

    @property
    def dim(self) -> int:
        return self.x0.size

    @property
    def end(self) -> float:
        return self.grid.end

    def replace(self, **changes) -> "HMDEProblem":
        return replace(self, **changes)


@dataclass(frozen=True)
class CertificateResult:
    """Radius ``N`` for which the a priori inequality of the existence argument holds.

    ``margin`` is the left-hand side (normalised by ``N``) minus one; it is
    negative exactly when ``success`` is true.
    """

    N: float
    H0: float
    K0: float
    margin: float
    success: bool
    kind: str = "A"
    initial_term: float = 0.0


@dataclass
class SolveReport:
    solution: RegulatedPath
    residual: float
    point_iters: np.ndarray
    sweeps: int
    certificate: CertificateResult | None = None
    notes: list = field(default_factory=list)


def _iterate(c, hfun, t, x_init, tol, max_iter):
    x = np.array(x_init, dtype=float)
    for it in range(1, max_iter + 1):
        x_new = c + hfun(t, x)
        if np.linalg.norm(x_new - x) <= tol:
            return x_new, it
        x = x_new
    raise NonConvergenceError(
        f"fixed-point iteration at t={t!r} did not reach tol={tol!r} in {max_iter} steps "
        f"(h may violate phi(t) < t there, or tol is too tight)",
        last=x_new, previous=x, t=t,
    )


def implicit_point_solve(c, h: FieldSpec, t: float, x_init, tol: float = 1e-13, max_iter: int = 1000,
                         right: bool = False) -> np.ndarray:
    """Solve ``x = c + h(t, x)`` by the iteration ``x <- c + h(t, x)``.

    With ``right`` the right limit of ``h`` in time is used.  The returned
    point satisfies ``|x - c - h(t, x)| <= phi(tol) < tol``.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    x, _ = _iterate(c, h.right if right else h, t, x_init, tol, max_iter)
    return x


def apply_A(problem: HMDEProblem, x: RegulatedPath) -> RegulatedPath:
    """``t -> h(t, x(t))``."""
    return compose_integrand(problem.h, x)


def apply_B(problem: HMDEProblem, x: RegulatedPath) -> RegulatedPath:
    """``t -> x0 - h(t0, x0) + int_{t0}^t f(s, x(s)) dg(s)``."""
    p = indefinite_integral(compose_integrand(problem.f, x), problem.g, problem.t0)
    return p + (problem.x0 - problem.h(problem.t0, problem.x0))


def residual(problem: HMDEProblem, x: RegulatedPath) -> float:
    """Sup-norm defect of ``x`` in the equation ``x = Ax + Bx``."""
    return uniform_dist(x, apply_A(problem, x) + apply_B(problem, x))


def _march(problem: HMDEProblem, guess: RegulatedPath | None):
    opt = problem.options
    f, h, g = problem.f, problem.h, problem.g
    t = g.times
    m, n = t.size, problem.dim
    dc = np.diff(g.cont)
    jumps = g.jumps
    base = problem.x0 - h(problem.t0, problem.x0)
    tol, maxit = opt.point_tol, opt.point_max_iter
    value = np.empty((m, n))
    right = np.empty((m, n))
    iters = np.zeros(m, dtype=int)
    value[0] = problem.x0
    p_node = np.zeros(n)
    for k in range(m):
        if k > 0:
            p_prev_plus = p_plus
            f_right = f.right(t[k - 1], right[k - 1])
            start = guess.value[k] if guess is not None else right[k - 1]
            p_node = p_prev_plus + dc[k - 1] * f_right
            x, it = _iterate(base + p_node, h, t[k], start, tol, maxit)
            iters[k] += it
            if dc[k - 1] != 0.0:
                for _ in range(opt.corrector_max_iter):
                    p_node = p_prev_plus + 0.5 * dc[k - 1] * (f_right + f.limit(t[k], x))
                    x_new, it = _iterate(base + p_node, h, t[k], x, tol, maxit)
                    iters[k] += it
                    if np.linalg.norm(x_new - x) <= tol:
                        x = x_new
                        break
                    x = x_new
                else:
                    raise NonConvergenceError(f"trapezoid corrector did not converge at t={t[k]!r}", x_new, x, t[k])
            value[k] = x
        p_plus = p_node
        if k < m - 1 and (jumps[k] > 0 or h.right_handle is not None):
            if jumps[k] > 0:
                p_plus = p_node + f(t[k], value[k]) * jumps[k]
            start = guess.right[k] if guess is not None else value[k]
            right[k], it = _iterate(base + p_plus, h.right, t[k], start, tol, maxit)
            iters[k] += it
        else:
            right[k] = value[k]
    path = RegulatedPath(g.grid, value, value, right)
    return path, iters


def solve_forward(problem: HMDEProblem, certify: bool = False) -> SolveReport:
    """March the equation over the problem grid.

    The resulting path is left-continuous.  If its residual exceeds
    ``sweep_tol`` the march is repeated with the previous path as initial
    guesses, at most ``max_sweeps`` times; a remaining defect raises
    :class:`ResidualError`.
    """
    opt = problem.options
    guess = None
    sweeps = 0
    total_iters = np.zeros(len(problem.grid), dtype=int)
    while True:
        path, iters = _march(problem, guess)
        total_iters += iters
        sweeps += 1
        res = residual(problem, path)
        log.debug("sweep %d residual %.3e", sweeps, res)
        if res <= opt.sweep_tol:
            break
        if sweeps > opt.max_sweeps:
            raise ResidualError(f"residual {res:.3e} > sweep_tol after {sweeps} sweeps; refine the grid", res)
        guess = path
    report = SolveReport(path, res, total_iters, sweeps)
    report.notes.append("comparison functions are validated on samples only")
    if certify:
        if problem.f.bound is not None and problem.h.phi is not None:
            report.certificate = certificate_A(problem)
        elif problem.f.bound_family is not None and problem.h.phi_family is not None:
            report.certificate = certificate_Astar(problem)
    return report


# existence certificates -----------------------------------------------------

def _h_at_zero_sup(problem: HMDEProblem) -> float:
    z = np.zeros(problem.dim)
    return max(float(np.linalg.norm(problem.h(t, z))) for t in problem.grid.times)


def _initial_term(problem: HMDEProblem) -> float:
    return float(np.linalg.norm(problem.x0 - problem.h(problem.t0, problem.x0)))


def _bound_integral(problem: HMDEProblem, r: float | None = None) -> float:
    f = problem.f
    if r is None:
        M = f.bound
    else:
        M = RegulatedPath.from_function(problem.grid, lambda s: f.bound_family(s, r))
    return float(ks_integral(M, problem.g)[0])


def _check_family_monotone(problem: HMDEProblem, radii) -> None:
    times = problem.grid.times
    if times.size > 64:
        times = times[np.linspace(0, times.size - 1, 64).astype(int)]
    fam = problem.f.bound_family
    for s in times:
        vals = np.array([float(fam(s, r)) for r in radii])
        if np.any(vals < 0):
            raise PreconditionError(f"M(s, r) negative at s={s!r}")
        if np.any(np.diff(vals) < 0):
            i = int(np.argmax(np.diff(vals) < 0))
            raise PreconditionError(f"M(s, .) decreases between r={radii[i]!r} and r={radii[i + 1]!r} at s={s!r}")


def certificate_margin(problem: HMDEProblem, N: float, kind: str = "A") -> CertificateResult:
    """Evaluate the existence inequality at radius ``N``.

    ``kind="A"``: ``phi(N)/N + (|x0 - h(t0,x0)| + H0 + K0)/N < 1`` with
    ``K0 = int M dg``.  ``kind="A*"``: ``phi(N, N) + H0 + |x0 - h(t0,x0)| +
    int M(s, N) dg < N``.
    """
    H0 = _h_at_zero_sup(problem)
    B = _initial_term(problem)
    if kind == "A":
        K0 = _bound_integral(problem)
        lhs = float(problem.h.phi(N)) / N + (B + H0 + K0) / N
    elif kind == "A*":
        K0 = _bound_integral(problem, N)
        lhs = (float(problem.h.phi_family(N, N)) + H0 + B + K0) / N
    else:
        raise ValueError(f"unknown certificate kind {kind!r}")
    return CertificateResult(float(N), H0, K0, lhs - 1.0, lhs < 1.0, kind, B)


def certificate_A(problem: HMDEProblem, max_doublings: int = 60) -> CertificateResult:
    """First ``N`` in ``1, 2, 4, ...`` satisfying the inequality with constant bound ``M``."""
    if problem.f.bound is None or problem.h.phi is None:
        raise PreconditionError("certificate_A needs f.bound and h.phi")
    validate_d_function(problem.h.phi)
    res = None
    for k in range(max_doublings + 1):
        res = certificate_margin(problem, 2.0 ** k, "A")
        if res.success:
            break
    return res


def certificate_Astar(problem: HMDEProblem, max_doublings: int = 60) -> CertificateResult:
    """Same scan with the radius-dependent data ``M(s, r)`` and ``phi(t, r)`` at ``r = N``."""
    if problem.f.bound_family is None or problem.h.phi_family is None:
        raise PreconditionError("certificate_Astar needs f.bound_family and h.phi_family")
    radii = [0.0] + [2.0 ** k for k in range(max_doublings + 1)]
    _check_family_monotone(problem, radii)
    res = None
    for k in range(max_doublings + 1):
        N = 2.0 ** k
        validate_d_function(lambda s: problem.h.phi_family(s, N))
        res = certificate_margin(problem, N, "A*")
        if res.success:
            break
    return res


# derivative ------------------------------------------------------------------

def derivative_field(problem: HMDEProblem, x: RegulatedPath, t: float, rel_step: float = 1e-6) -> np.ndarray:
    """``(I - J_x h)^{-1} (dh/dt + f(t, x(t)) g'(t))`` at ``t``.

    Derivatives of ``h`` are central finite differences; ``g'`` is the slope
    of the continuous part of ``g`` (the right slope on a node).
    """
    g = problem.g
    i = g.grid.index_of(t)
    if i is not None and g.jumps[i] > 0:
        raise DerivativeUndefinedError(f"g jumps at t={t!r}")
    xt = eval_path(x, t)
    n = xt.size
    h = problem.h
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = rel_step * max(1.0, abs(xt[j]))
        J[:, j] = (h(t, xt + e) - h(t, xt - e)) / (2.0 * e[j])
    dt = rel_step * max(1.0, abs(t))
    dhdt = (h(t + dt, xt) - h(t - dt, xt)) / (2.0 * dt)
    A = np.eye(n) - J
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularityError(f"I - J_x h is singular at t={t!r} (cond={cond:.3e})", cond)
    rhs = dhdt + problem.f(t, xt) * g.slope(t)
    return np.linalg.solve(A, rhs)
