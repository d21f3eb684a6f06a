"""Built-in parametric problem families.

Each entry has a parameter schema (name, type, default) and a builder.  The
command line tool never parses formulas; it only picks an entry and fills
its parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .dependence import ParamSequence
from .frontends import ImpulsiveSpec, TimeScaleSpec, from_impulsive, from_timescale
from .integral import FieldSpec
from .regulated import RegulatedPath, StieltjesIntegrator, TimeGrid
from .solver import HMDEProblem, SolverOptions

__all__ = [
    "Param",
    "CatalogEntry",
    "CATALOG",
    "example_3x",
    "impulsive_linear",
    "impulsive_oracle",
    "timescale_linear",
    "timescale_oracle",
    "damped_horizon",
    "example_4x_sequence",
    "dependence_family",
]


@dataclass(frozen=True)
class Param:
    """``kind`` is one of ``float``, ``int``, ``floats`` (list), ``pairs`` (list of 2-lists), ``choice``."""

    name: str
    kind: str
    default: Any
    doc: str = ""
    choices: tuple = ()
    positive: bool = False


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    kinds: tuple
    anchor: str
    params: tuple
    doc: str = ""
    defaults: dict = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "defaults", {p.name: p.default for p in self.params})

    def schema(self) -> dict:
        return {p.name: p for p in self.params}


# --- logarithmic family ------------------------------------------------------

def example_3x_fields(gamma: float, eta: float, grid: TimeGrid) -> tuple[FieldSpec, FieldSpec]:
    f = FieldSpec(
        lambda s, u: eta * np.exp(gamma * np.cos(u)),
        bound=RegulatedPath.constant(grid, eta * math.exp(gamma)),
        name="f",
    )
    h = FieldSpec(
        lambda t, u: 0.5 * math.sin(t) ** 2 * np.log1p(np.abs(u)),
        phi=lambda s: 0.5 * np.log1p(s),
        name="h",
    )
    return f, h


def example_3x(gamma: float = 1.0, eta: float = 1.0, x0: float = 0.0, a: float = 1.0,
               jumps=(), options: SolverOptions | None = None) -> HMDEProblem:
    """``x = h(t, x) + int_0^t eta e^{gamma cos x} dg`` with ``h = sin(t)^2 ln(1+|x|)/2``.

    ``g`` is the identity plus the jumps ``[(tau, delta), ...]``.  Bound
    ``M = eta e^gamma``, comparison function ``phi(s) = ln(1+s)/2``.
    """
    options = options or SolverOptions(step=1e-3)
    grid = options.grid or TimeGrid.uniform(0.0, a, options.step)
    g = StieltjesIntegrator.identity(grid.with_nodes([t for t, _ in jumps]), {float(t): float(d) for t, d in jumps})
    f, h = example_3x_fields(gamma, eta, g.grid)
    return HMDEProblem(0.0, a, [x0], f, h, g, options)


# --- linear impulsive family --------------------------------------------------

def impulsive_linear(lam: float = 1.0, beta: float = 0.5, x0: float = 1.0, a: float = 1.0,
                     taus=(0.3, 0.55, 0.8), options: SolverOptions | None = None) -> tuple[ImpulsiveSpec, HMDEProblem]:
    """``x' = lam x`` with ``x(tau+) = (1 + beta) x(tau)``."""
    spec = ImpulsiveSpec(
        0.0, a, np.array([x0]),
        FieldSpec(lambda s, u: lam * u, name="f"),
        FieldSpec.zero(),
        [(float(t), lambda u: beta * u) for t in taus],
    )
    return spec, from_impulsive(spec, options or SolverOptions(step=1e-3))


def impulsive_oracle(t, lam: float, beta: float, x0: float, taus, side: str = "value") -> np.ndarray:
    """Product formula ``x0 e^{lam t} (1 + beta)^{#jumps}``; ``side`` picks left/value/right."""
    t = np.asarray(t, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if side == "right":
        n = np.sum(taus[None, :] <= t[:, None], axis=1)
    else:
        n = np.sum(taus[None, :] < t[:, None], axis=1)
    return x0 * np.exp(lam * t) * (1.0 + beta) ** n


# --- linear time-scale family ---------------------------------------------------

def timescale_linear(lam: float = 1.0, x0: float = 1.0, components=((0.0, 0.0), (0.5, 0.5), (1.0, 1.0)),
                     options: SolverOptions | None = None) -> tuple[TimeScaleSpec, HMDEProblem]:
    """``x^Delta = lam x`` on a finite time scale."""
    spec = TimeScaleSpec([tuple(c) for c in components], np.array([x0]), FieldSpec(lambda s, u: lam * u, name="f"))
    return spec, from_timescale(spec, options or SolverOptions(step=1e-3))


def timescale_oracle(spec: TimeScaleSpec, lam: float, t) -> np.ndarray:
    """Generalized exponential: ``e^{lam m(t)} prod (1 + lam mu)`` over scattered points before ``t``."""
    out = []
    for s in np.atleast_1d(t):
        val = float(spec.x0[0])
        for lo, hi in spec.components:
            if s <= lo:
                break
            val *= math.exp(lam * (min(s, hi) - lo))
        for p, mu in spec.graininess().items():
            if p < s:
                val *= 1.0 + lam * mu
        out.append(val)
    return np.array(out)


# --- long-horizon damped family ------------------------------------------------

def damped_horizon(H: float = 16.0, lam: float = 1.0, c: float = 1.0, delta: float = 0.25, kappa: float = 0.25,
                   x0: float = 0.0, options: SolverOptions | None = None) -> HMDEProblem:
    """``f = -lam u + c cos(2 pi s)``, ``h = kappa e^{-t} sin u``, ``g = t + delta #{n < t}``.

    The forcing and the integrator are 1-periodic and ``h`` decays, so the
    solution is expected to be S-asymptotically 1-periodic when
    ``lam (1 + delta) < 2``.
    """
    options = options or SolverOptions(step=1e-2)
    n = int(round(H))
    grid = options.grid or TimeGrid.uniform(0.0, float(n), options.step)
    g = StieltjesIntegrator.identity(grid, {float(k): delta for k in range(1, n)})
    f = FieldSpec(lambda s, u: -lam * u + c * math.cos(2 * math.pi * s),
                  bound_family=lambda s, r: lam * r + abs(c), name="f")
    h = FieldSpec(lambda t, u: kappa * math.exp(-t) * np.sin(u), phi=lambda s: kappa * s,
                  phi_family=lambda s, r: kappa * s, meta={"sap_period": 1.0}, name="h")
    return HMDEProblem(0.0, float(n), [x0], f, h, g, options)


# --- piecewise-linear SAP generator -------------------------------------------

SEQUENCES: dict[str, Callable[[int], float]] = {
    "harmonic": lambda n: 1.0 / (n + 1),
    "inverse_square": lambda n: 1.0 / (n + 1) ** 2,
    "geometric": lambda n: 2.0 ** (-n),
    "alternating": lambda n: (-1.0) ** n,
}


def example_4x_sequence(name: str) -> Callable[[int], float]:
    try:
        return SEQUENCES[name]
    except KeyError:
        raise ValueError(f"unknown sequence {name!r}; choose from {sorted(SEQUENCES)}") from None


# --- dependence families ------------------------------------------------------

def dependence_family(family: str = "sin_forcing", k_max: int = 32, gamma: float = 1.0, eta: float = 1.0,
                      x0: float = 0.0, options: SolverOptions | None = None) -> ParamSequence:
    """Perturbations of the logarithmic family.

    ``constant``: every instance equals the limit.  ``sin_forcing``:
    ``f_k = f + sin(t)/k``.  ``x0_shift``: ``f = h = 0`` and ``x0_k = x0 + 1/k``.
    """
    options = options or SolverOptions(step=1e-2)
    base = example_3x(gamma, eta, x0, options=options)
    if family == "constant":
        return ParamSequence(base, k_max, lambda k: base.replace())
    if family == "sin_forcing":
        def make(k):
            f = base.f
            fk = f.replace(
                handle=lambda s, u: f.handle(s, u) + math.sin(s) / k,
                bound=RegulatedPath.constant(base.grid, eta * math.exp(gamma) + 1.0 / k),
            )
            return base.replace(f=fk)
        return ParamSequence(base, k_max, make)
    if family == "x0_shift":
        zero = FieldSpec.zero()
        flat = FieldSpec(lambda s, u: np.zeros_like(u), bound=RegulatedPath.constant(base.grid, 0.0), name="zero")
        lim = base.replace(f=flat, h=zero)
        return ParamSequence(lim, k_max, lambda k: lim.replace(x0=lim.x0 + 1.0 / k))
    raise ValueError(f"unknown dependence family {family!r}")


# --- the listing ---------------------------------------------------------------

_E3 = (
    Param("gamma", "float", 1.0, "exponent in eta e^{gamma cos x}", positive=True),
    Param("eta", "float", 1.0, "constant weight eta(s)"),
    Param("x0", "float", 0.0, "initial value"),
    Param("jumps", "pairs", [], "extra jumps of g as [tau, delta] with 0 < tau < 1"),
)

CATALOG: dict[str, CatalogEntry] = {e.id: e for e in (
    CatalogEntry("example_3x", ("solve", "certificate"),
                 "logarithmic example: h = sin^2(t) ln(1+|x|)/2, f = eta e^{gamma cos x}", _E3,
                 "scalar hybrid equation on [0, 1]"),
    CatalogEntry("impulsive_linear", ("impulsive",), "impulsive frontend, product formula",
                 (Param("lam", "float", 1.0, "growth rate"),
                  Param("beta", "float", 0.5, "impulse factor, x(tau+) = (1+beta) x(tau)"),
                  Param("x0", "float", 1.0, "initial value"),
                  Param("a", "float", 1.0, "interval length", positive=True),
                  Param("taus", "floats", [0.3, 0.55, 0.8], "impulse times in (0, a)")),
                 "x' = lam x with multiplicative impulses; oracle column emitted"),
    CatalogEntry("timescale_linear", ("timescale",), "time-scale frontend, generalized exponential",
                 (Param("lam", "float", 1.0, "growth rate"),
                  Param("x0", "float", 1.0, "initial value"),
                  Param("components", "pairs", [[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]],
                        "time scale as sorted [lo, hi] components")),
                 "x^Delta = lam x; oracle column emitted"),
    CatalogEntry("damped_horizon", ("horizon",), "long horizon with periodic data and chaining",
                 (Param("H", "int", 16, "horizon length (integer)", positive=True),
                  Param("lam", "float", 1.0, "damping", positive=True),
                  Param("c", "float", 1.0, "forcing amplitude"),
                  Param("delta", "float", 0.25, "jump of g at each integer"),
                  Param("kappa", "float", 0.25, "h = kappa e^{-t} sin u, 0 <= kappa < 1"),
                  Param("x0", "float", 0.0, "initial value"),
                  Param("windows", "int", 8, "profile windows", positive=True),
                  Param("eps", "float", 1e-3, "tail tolerance", positive=True)),
                 "chained solve plus S-asymptotic 1-periodicity profile"),
    CatalogEntry("example_4x_sap", ("sap",), "piecewise-linear SAP path generator",
                 (Param("sequence", "choice", "harmonic", "a_n", choices=tuple(sorted(SEQUENCES))),
                  Param("H", "int", 32, "horizon", positive=True),
                  Param("omega", "float", 1.0, "period", positive=True),
                  Param("windows", "int", 8, "profile windows", positive=True),
                  Param("eps", "float", 1e-1, "tail tolerance", positive=True)),
                 "gap profile |x(t + omega) - x(t)| of the piecewise linear generator"),
    CatalogEntry("dependence_3x", ("dependence",), "continuous dependence, perturbed logarithmic example",
                 (Param("family", "choice", "sin_forcing", "perturbation",
                        choices=("constant", "sin_forcing", "x0_shift")),
                  Param("k_max", "int", 32, "number of instances", positive=True),
                  Param("gamma", "float", 1.0, "exponent", positive=True),
                  Param("eta", "float", 1.0, "weight"),
                  Param("x0", "float", 0.0, "limit initial value")),
                 "gap table of x_k against the limit solution"),
)}
