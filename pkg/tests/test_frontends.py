import math

import numpy as np
import pytest

from hmde import (
    FieldSpec,
    ImpulsiveSpec,
    RegulatedPath,
    SolverOptions,
    StieltjesIntegrator,
    TimeScaleSpec,
    compose_integrand,
    eval_path,
    from_impulsive,
    from_timescale,
    indefinite_integral,
    restrict_solution,
    solve_forward,
)
from hmde import catalog as cat
from hmde.regulated import DomainError

ZERO = FieldSpec.zero()


def test_no_impulses_is_plain_equation():
    spec = ImpulsiveSpec(0.0, 1.0, [1.0], FieldSpec(lambda s, u: u), ZERO, [])
    prob = from_impulsive(spec, SolverOptions(step=1e-2))
    assert prob.g.jumps.sum() == 0
    assert np.allclose(prob.g.cont, prob.grid.times)


def test_single_unit_impulse():
    spec = ImpulsiveSpec(0.0, 1.0, [0.0], ZERO, ZERO, [(0.5, lambda u: u + 1.0)])
    sol = solve_forward(from_impulsive(spec, SolverOptions(step=0.1))).solution
    assert eval_path(sol, 0.5)[0] == 0.0
    assert eval_path(sol, 0.3)[0] == 0.0
    assert eval_path(sol, 0.50001)[0] == pytest.approx(1.0)
    assert sol.value[-1, 0] == 1.0
    tab = restrict_solution(sol, spec)
    assert tab["tau"].tolist() == [0.5] and tab["jump"][0, 0] == 1.0


def test_product_formula():
    taus = (0.2, 0.45, 0.9)
    spec, prob = cat.impulsive_linear(-0.5, 1.0, 2.0, 1.0, taus, SolverOptions(step=1e-3))
    sol = solve_forward(prob).solution
    exact = cat.impulsive_oracle(sol.times, -0.5, 1.0, 2.0, taus)
    assert np.max(np.abs(sol.value[:, 0] - exact)) <= 1e-3


def test_impulsive_correspondence_with_direct_accumulation():
    taus = (0.3, 0.7)
    spec, prob = cat.impulsive_linear(1.0, 0.5, 1.0, 1.0, taus, SolverOptions(step=1e-2))
    sol = solve_forward(prob).solution
    # explicit quadrature of f along the solved path plus the strict sum of impulses
    lebesgue = StieltjesIntegrator.identity(prob.grid)
    smooth = indefinite_integral(compose_integrand(spec.f, sol), lebesgue)
    impulses = np.array([sum(0.5 * eval_path(sol, tau)[0] for tau in taus if tau < t) for t in sol.times])
    direct = 1.0 + smooth.value[:, 0] + impulses
    assert np.max(np.abs(direct - sol.value[:, 0])) <= 1e-9


def test_impulse_time_checks():
    with pytest.raises(DomainError):
        ImpulsiveSpec(0.0, 1.0, [0.0], ZERO, ZERO, [(1.0, lambda u: u)])
    with pytest.raises(ValueError):
        ImpulsiveSpec(0.0, 1.0, [0.0], ZERO, ZERO, [(0.5, lambda u: u), (0.5 + 1e-13, lambda u: u)])
    with pytest.raises(ValueError):
        ImpulsiveSpec(0.0, 1.0, [0.0], ZERO, ZERO, [(0.6, lambda u: u), (0.5, lambda u: u)])


def test_impulse_snaps_nearby_grid_node():
    spec = ImpulsiveSpec(0.0, 1.0, [0.0], ZERO, ZERO, [(0.5 + 5e-13, lambda u: u + 1.0)])
    prob = from_impulsive(spec, SolverOptions(step=0.1))
    assert prob.grid.index_of(0.5) is None
    assert prob.grid.index_of(0.5 + 5e-13) is not None


def test_interval_timescale_is_identity():
    spec = TimeScaleSpec([(0.0, 1.0)], [1.0], FieldSpec(lambda s, u: u))
    prob = from_timescale(spec, SolverOptions(step=1e-3))
    assert prob.g.jumps.sum() == 0
    assert np.allclose(prob.g.cont, prob.grid.times)
    tab = restrict_solution(solve_forward(prob).solution, spec)
    assert tab["t"].size == len(prob.grid)
    assert tab["x"][-1, 0] == pytest.approx(math.e, rel=1e-6)


def test_discrete_recursion_and_graininess():
    spec, prob = cat.timescale_linear(1.0, 1.0, [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)])
    for t, mu in spec.graininess().items():
        i = prob.grid.index_of(t)
        assert prob.g.right_limit(t) - prob.g(t) == mu == prob.g.jumps[i]
    assert np.all(np.diff(prob.g.node_values()) >= 0)
    tab = restrict_solution(solve_forward(prob).solution, spec)
    assert np.allclose(tab["x"][:, 0], [1.0, 1.5, 2.25], rtol=0, atol=1e-12)


def test_mixed_timescale_against_oracle_and_constant_on_gaps():
    spec, prob = cat.timescale_linear(0.8, 1.0, [(0.0, 0.5), (1.0, 1.0), (1.5, 2.0)], SolverOptions(step=1e-3))
    sol = solve_forward(prob).solution
    tab = restrict_solution(sol, spec)
    assert np.allclose(tab["x"][:, 0], cat.timescale_oracle(spec, 0.8, tab["t"]), rtol=1e-6)
    # inside the gap (0.5, 1) the path sits at x(sigma(0.5)) = x(0.5+)
    right = sol.right[sol.grid.index_of(0.5), 0]
    for t in (0.6, 0.8, 0.99):
        assert eval_path(sol, t)[0] == pytest.approx(right, abs=1e-14)
    assert eval_path(sol, 1.0)[0] == pytest.approx(right, abs=1e-14)


def test_timescale_validation():
    f = FieldSpec(lambda s, u: u)
    with pytest.raises(ValueError):
        TimeScaleSpec([], [1.0], f)
    with pytest.raises(ValueError):
        TimeScaleSpec([(0.0, 1.0), (0.5, 2.0)], [1.0], f)
    with pytest.raises(ValueError):
        TimeScaleSpec([(1.0, 0.0)], [1.0], f)
    spec = TimeScaleSpec([(0.0, 0.0), (1.0, 1.0)], [1.0], f)
    with pytest.raises(DomainError):
        restrict_solution(RegulatedPath.constant([0.0, 2.0], 1.0), spec)
