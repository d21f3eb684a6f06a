import math

import numpy as np
import pytest

from hmde import (
    FieldSpec,
    HMDEProblem,
    HorizonProblem,
    RegulatedPath,
    SolverOptions,
    StieltjesIntegrator,
    TimeGrid,
    bounded_condition_check,
    chain_solve,
    composition_sap_check,
    generate_example_path,
    sap_profile,
    solve_forward,
    uniform_dist,
)
from hmde import catalog as cat
from hmde.asymptotics import ChainError
from hmde.solver import PreconditionError

ZERO = FieldSpec.zero()


def horizon(H, f=ZERO, h=ZERO, jumps=None, step=0.05, x0=0.0):
    grid = TimeGrid.uniform(0.0, H, step)
    g = StieltjesIntegrator.identity(grid, jumps or {})
    return HMDEProblem(0.0, H, [x0], f, h, g, SolverOptions(grid=grid))


def test_chain_trivial_and_single_chunk():
    rep = chain_solve(HorizonProblem(horizon(4.0, x0=1.25)))
    assert np.all(rep.solution.value == 1.25)
    p = cat.example_3x(options=SolverOptions(step=1e-2))
    full = solve_forward(p).solution
    assert uniform_dist(chain_solve(HorizonProblem(p, 1.0)).solution, full) <= 1e-12


def test_chain_matches_full_solve_with_jumps():
    prob = cat.damped_horizon(H=8, options=SolverOptions(step=0.05))
    hp = HorizonProblem(prob, 1.0)
    chained = chain_solve(hp)
    full = solve_forward(hp.template)
    assert uniform_dist(chained.solution, full.solution) <= 1e-12
    assert chained.residual <= prob.options.sweep_tol
    # junction values are node values of the full path
    sol = chained.solution
    for t in hp.junctions:
        assert sol.grid.index_of(t) is not None


def test_horizon_validation_and_junction_insertion():
    with pytest.raises(ValueError):
        HorizonProblem(horizon(2.5), 1.0)
    hp = HorizonProblem(horizon(3.0, step=0.4), 1.0)
    for t in (1.0, 2.0):
        assert hp.template.grid.index_of(t) is not None


def test_chain_error_reports_index():
    grid = TimeGrid.uniform(0.0, 3.0, 0.5)
    # h stops being a contraction once t > 2
    h = FieldSpec(lambda t, u: (0.5 if t <= 2 else 1.0) * u + (1.0 if t > 2 else 0.0))
    prob = HMDEProblem(0.0, 3.0, [0.0], ZERO, h, StieltjesIntegrator.identity(grid),
                       SolverOptions(grid=grid, point_max_iter=50))
    with pytest.raises(ChainError) as err:
        chain_solve(HorizonProblem(prob, 1.0))
    assert err.value.index == 2


def test_bounded_condition_examples():
    zf = FieldSpec(lambda s, u: np.zeros_like(u), bound_family=lambda s, r: 0.0)
    rep = bounded_condition_check(HorizonProblem(horizon(10.0, f=zf)), [1, 2, 4])
    assert np.all(rep.ratios == 0) and rep.passed
    one = FieldSpec(lambda s, u: np.sin(u), bound_family=lambda s, r: 1.0)
    N = [5.0, 10.0, 20.0, 40.0]
    rep = bounded_condition_check(HorizonProblem(horizon(10.0, f=one, step=0.5)), N)
    assert np.allclose(rep.ratios, 10.0 / np.array(N))
    assert rep.passed
    with pytest.raises(PreconditionError):
        bounded_condition_check(HorizonProblem(horizon(2.0)), [1.0])


def test_profile_of_periodic_path_vanishes():
    grid = TimeGrid.uniform(0.0, 16.0, 1.0 / 64)
    p = RegulatedPath.from_function(grid, lambda t: math.sin(2 * math.pi * t))
    prof = sap_profile(p, 1.0)
    assert np.max(prof.gaps) <= 1e-12 and prof.is_sap


def test_example_generator_bound():
    a = lambda n: 1.0 / (n + 1)
    x = generate_example_path(a, 32)
    prof = sap_profile(x, 1.0, windows=31)
    for n in range(1, 30):
        mask = (prof.times > n) & (prof.times <= n + 1)
        bound = 2 * abs(a(n + 2) - a(n + 1)) + abs(a(n) - a(n - 1))
        assert np.max(prof.gaps[mask]) <= bound + 1e-15


def test_sine_is_not_sap():
    grid = TimeGrid.uniform(0.0, 32.0, 1e-2)
    prof = sap_profile(RegulatedPath.from_function(grid, math.sin), 1.0)
    assert prof.tail_sup >= 0.4 and not prof.is_sap
    assert prof.tail_sup == pytest.approx(2 * math.sin(0.5), abs=1e-3)


def test_generator_examples():
    x = generate_example_path(lambda n: 3.0, 5)
    assert np.all(x.value == 3.0) and x.is_continuous()
    alt = generate_example_path(lambda n: (-1.0) ** n, 32)
    prof = sap_profile(alt, 1.0)
    assert not prof.is_sap
    ints = np.isin(prof.times, np.arange(1, 31))
    assert np.all(prof.gaps[ints] >= 2.0)


@pytest.mark.parametrize("seq", [lambda n: 1.0 / (n + 1), lambda n: 1.0 / (n + 1) ** 2, lambda n: 1.0 / math.sqrt(n + 1)])
def test_windows_nonincreasing_for_monotone_sequences(seq):
    assert sap_profile(generate_example_path(seq, 32), 1.0).windows_nonincreasing()


def test_sap_profile_errors():
    x = generate_example_path(lambda n: 1.0 / (n + 1), 4)
    with pytest.raises(ValueError):
        sap_profile(x, 4.0)
    with pytest.raises(ValueError):
        sap_profile(x, 0.0)


def test_composition_examples():
    x = generate_example_path(lambda n: 1.0 / (n + 1), 32)
    ident = FieldSpec(lambda t, u: u, phi=lambda s: s, meta={"sap_period": 1.0})
    a = composition_sap_check(ident, x, 1.0)
    b = sap_profile(x, 1.0)
    assert np.allclose(a.window_sup, b.window_sup)
    autonomous = FieldSpec(lambda t, u: np.tanh(u), phi=lambda s: s, meta={"sap_period": 1.0})
    assert composition_sap_check(autonomous, x, 1.0, eps=1e-2).is_sap
    mixed = FieldSpec(lambda t, u: math.exp(-t) * np.sin(u) + u / 2, phi=lambda s: 1.5 * s, meta={"sap_period": 1.0})
    prof = composition_sap_check(mixed, x, 1.0, eps=1e-2)
    assert prof.is_sap and prof.windows_nonincreasing()


def test_composition_preconditions():
    x = generate_example_path(lambda n: 1.0 / (n + 1), 8)
    with pytest.raises(PreconditionError):
        composition_sap_check(FieldSpec(lambda t, u: u, phi=lambda s: s), x, 1.0)
    with pytest.raises(PreconditionError):
        composition_sap_check(FieldSpec(lambda t, u: u, meta={"sap_period": 1.0}), x, 1.0)
    with pytest.raises(PreconditionError):
        composition_sap_check(FieldSpec(lambda t, u: u, phi=lambda s: s, meta={"sap_period": 2.0}), x, 1.0)


def test_damped_horizon_solution_is_sap():
    prob = cat.damped_horizon(H=16, options=SolverOptions(step=0.02))
    sol = chain_solve(HorizonProblem(prob)).solution
    prof = sap_profile(sol, 1.0, eps=1e-3)
    assert prof.is_sap and prof.windows_nonincreasing()
