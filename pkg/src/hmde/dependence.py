"""Continuous dependence on parameters: hypothesis diagnostics and convergence runs.

A :class:`ParamSequence` produces the ``k``-th perturbed problem
``(f_k, h_k, x0_k)``; the limit data is the base problem.  Only sampled
evidence is produced: convergence "uniformly on bounded sets" is checked on
128 Sobol points of the ball of radius ``R`` crossed with 16 equispaced grid
times (grid nodes, endpoints included), and the constant
bounding the integrals of mixed ``M_k`` over subdivisions is a randomized
estimate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .integral import ks_integral
from .regulated import RegulatedPath, uniform_dist
from .solver import D_FUNCTION_SAMPLES, HMDEProblem, PreconditionError, SolverError, solve_forward

__all__ = [
    "ConditionViolation",
    "ParamSequence",
    "condition_I_estimate",
    "HypothesisReport",
    "hypothesis_check",
    "DependenceTable",
    "dependence_run",
]

log = logging.getLogger(__name__)

C_TRIALS = 256
C_SEED = 20240521
BALL_POINTS = 128
SAMPLE_TIMES = 16


class ConditionViolation(PreconditionError):
    def __init__(self, message, k=None, t=None):
        super().__init__(message)
        self.k = k
        self.t = t


@dataclass(frozen=True, eq=False)
class ParamSequence:
    """Limit problem ``base`` and ``make(k) -> HMDEProblem`` for ``k = 1..k_max``."""

    base: HMDEProblem
    k_max: int
    make: Callable[[int], HMDEProblem]

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")

    def instance(self, k: int) -> HMDEProblem:
        p = self.make(k)
        if not isinstance(p, HMDEProblem):
            raise TypeError(f"make({k}) must return an HMDEProblem")
        return p

    def instances(self) -> list[HMDEProblem]:
        return [self.instance(k) for k in range(1, self.k_max + 1)]


def condition_I_estimate(phis: Sequence[Callable[[float], float]], c: float, d: float, samples: int = 1025) -> float:
    """``min_k min_t (t - phi_k(t))`` over ``samples`` equispaced ``t`` in ``[c, d]``.

    A nonpositive difference raises :class:`ConditionViolation` naming ``(k, t)``
    (``k`` counts from 1).
    """
    if not 0 < c < d:
        raise ValueError("need 0 < c < d")
    t = np.linspace(c, d, samples)
    best = np.inf
    for k, phi in enumerate(phis, start=1):
        gap = t - np.array([float(phi(s)) for s in t])
        i = int(np.argmin(gap))
        if gap[i] <= 0:
            raise ConditionViolation(f"phi_{k}(t) >= t at t={t[i]!r}", k, float(t[i]))
        best = min(best, float(gap[i]))
    return best


def _ball(dim: int, R: float, n: int = BALL_POINTS) -> np.ndarray:
    """Unscrambled Sobol points of ``[-R, R]^dim`` pulled radially into the ball."""
    pts = qmc.Sobol(d=dim, scramble=False).random(n)
    u = (2.0 * pts - 1.0) * R
    norms = np.linalg.norm(u, axis=1)
    scale = np.where(norms > R, R / np.maximum(norms, 1e-300), 1.0)
    return u * scale[:, None]


def _times(problem: HMDEProblem, max_times: int = SAMPLE_TIMES) -> np.ndarray:
    t = problem.grid.times
    if t.size > max_times:
        t = t[np.linspace(0, t.size - 1, max_times).astype(int)]
    return t


@dataclass
class HypothesisReport:
    """Sampled evidence for the hypotheses of the continuous dependence result.

    ``*_gaps[k-1]`` is the gap of instance ``k``.  ``C`` is the largest mixed
    sum found, ``C_limit`` the integral of the limit bound.
    """

    x0_gaps: np.ndarray
    h_gaps: np.ndarray
    f_gaps: np.ndarray
    h_start_gaps: np.ndarray
    C: float
    C_limit: float
    phi_ratio_sup: np.ndarray
    phi_liminf: float
    R: float
    passed: dict = field(default_factory=dict)


def _converging(gaps: np.ndarray, rtol: float, atol: float) -> bool:
    """Nonincreasing up to ``atol`` and the last gap at most ``atol + rtol * first``."""
    if np.all(gaps <= atol):
        return True
    return bool(np.all(np.diff(gaps) <= atol) and gaps[-1] <= atol + rtol * gaps[0])


def hypothesis_check(seq: ParamSequence, R: float | None = None, rtol: float = 0.25, atol: float = 1e-12,
                     seed: int = C_SEED, trials: int = C_TRIALS) -> HypothesisReport:
    """Evaluate hypotheses (i)-(iii), the ``C`` bound and the ``phi_k`` ratio condition.

    ``R`` defaults to the radius of the base problem's certificate when one
    can be computed, else 10.  A convergence flag passes when its gap
    sequence is nonincreasing and the last gap is ``<= atol + rtol * first``.
    The ``phi_k`` ratio flag uses the minimum over the second half of the
    instances as the liminf.
    """
    base = seq.base
    probs = seq.instances()
    if R is None:
        R = 10.0
        if base.f.bound is not None and base.h.phi is not None:
            from .solver import certificate_A

            cert = certificate_A(base)
            if cert.success:
                R = cert.N
    us = _ball(base.dim, R)
    ts = _times(base)

    def field_gap(a, b) -> float:
        return max(float(np.linalg.norm(a(t, u) - b(t, u))) for t in ts for u in us)

    x0_gaps = np.array([float(np.linalg.norm(p.x0 - base.x0)) for p in probs])
    h_gaps = np.array([field_gap(p.h, base.h) for p in probs])
    f_gaps = np.array([field_gap(p.f, base.f) for p in probs])
    h_ref = base.h(base.t0, base.x0)
    h_start = np.array([float(np.linalg.norm(p.h(p.t0, p.x0) - h_ref)) for p in probs])

    # C: randomized subdivisions and index assignments
    bounds = [p.f.bound for p in probs]
    C = np.nan
    C_limit = np.nan
    if all(b is not None for b in bounds):
        g = base.g
        rng = np.random.default_rng(seed)
        t0, t1 = base.t0, base.end
        C = 0.0
        for _ in range(trials):
            l = int(rng.integers(1, 17))
            inner = np.sort(rng.uniform(t0, t1, l - 1))
            sigma = np.unique(np.concatenate(([t0], inner, [t1])))
            ms = rng.integers(0, len(bounds), sigma.size - 1)
            total = sum(float(ks_integral(bounds[m], g, sigma[j], sigma[j + 1])[0]) for j, m in enumerate(ms))
            C = max(C, total)
        if base.f.bound is not None:
            C_limit = float(ks_integral(base.f.bound, g)[0])

    # phi ratio condition at radius R
    phis = [p.h.phi for p in probs]
    if all(ph is not None for ph in phis):
        r = D_FUNCTION_SAMPLES[D_FUNCTION_SAMPLES >= R]
        ratio_sup = np.array([max(float(ph(s)) / s for s in r) for ph in phis])
        tail = ratio_sup[len(ratio_sup) // 2:]
        phi_liminf = float(tail.min())
    else:
        ratio_sup, phi_liminf = np.array([]), np.nan

    rep = HypothesisReport(x0_gaps, h_gaps, f_gaps, h_start, float(C), C_limit, ratio_sup, phi_liminf, float(R))
    rep.passed = {
        "x0": _converging(x0_gaps, rtol, atol),
        "h": _converging(h_gaps, rtol, atol),
        "f": _converging(f_gaps, rtol, atol),
        "h_start": _converging(h_start, rtol, atol),
        "C": bool(np.isfinite(C)),
        "phi_ratio": bool(phi_liminf < 1.0),
    }
    return rep


@dataclass
class DependenceTable:
    """``gaps[k-1] = |x_k - x|_inf``; failed solves carry ``nan`` and ``solved=False``."""

    k: np.ndarray
    gaps: np.ndarray
    solved: np.ndarray
    limit: RegulatedPath
    errors: dict = field(default_factory=dict)

    @property
    def monotone_fraction(self) -> float:
        """Share of adjacent finite pairs with ``gap_{k+1} <= gap_k``.

        A trend diagnostic only; convergence carries no rate to test against.
        """
        g = self.gaps
        ok = np.isfinite(g[:-1]) & np.isfinite(g[1:])
        if not ok.any():
            return float("nan")
        return float(np.mean(g[1:][ok] <= g[:-1][ok]))

    def tail_min(self, K: int) -> float:
        """``min_{k >= K} gap_k``."""
        g = self.gaps[self.k >= K]
        g = g[np.isfinite(g)]
        return float(g.min()) if g.size else float("nan")


def dependence_run(seq: ParamSequence) -> DependenceTable:
    """Solve the limit problem and every instance; tabulate sup-norm gaps."""
    limit = solve_forward(seq.base).solution
    ks = np.arange(1, seq.k_max + 1)
    gaps = np.full(ks.size, np.nan)
    solved = np.zeros(ks.size, dtype=bool)
    errors = {}
    for i, k in enumerate(ks):
        try:
            sol = solve_forward(seq.instance(int(k))).solution
        except (SolverError, ArithmeticError, ValueError) as exc:
            log.warning("instance %d failed: %s", k, exc)
            errors[int(k)] = str(exc)
            continue
        gaps[i] = uniform_dist(sol, limit)
        solved[i] = True
    return DependenceTable(ks, gaps, solved, limit, errors)
