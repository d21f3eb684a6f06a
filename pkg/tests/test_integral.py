import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmde import (
    DomainError,
    EvaluationError,
    FieldSpec,
    RegulatedPath,
    StieltjesIntegrator,
    TimeGrid,
    compose_integrand,
    dominated_convergence_check,
    fine_partition_oracle,
    indefinite_integral,
    ks_integral,
    total_variation,
)

from randgen import random_case, random_path

UNIT = TimeGrid.uniform(0.0, 1.0, 0.1)


def test_unit_integrand_telescopes():
    g = StieltjesIntegrator.identity(UNIT, {0.3: 0.7})
    one = RegulatedPath.constant(UNIT, 1.0)
    assert ks_integral(one, g, 0.2, 0.9)[0] == pytest.approx(g(0.9) - g(0.2))
    # jump at the right end is excluded, at the left end included
    assert ks_integral(one, g, 0.1, 0.3)[0] == pytest.approx(0.2)
    assert ks_integral(one, g, 0.3, 0.4)[0] == pytest.approx(0.8)


def test_riemann_case():
    f = RegulatedPath.from_function(UNIT, lambda s: s)
    g = StieltjesIntegrator.identity(UNIT)
    assert ks_integral(f, g)[0] == pytest.approx(0.5, abs=1e-15)


def test_pure_jump_at_lower_endpoint():
    g = StieltjesIntegrator.build(UNIT, None, {0.3: 1.0})
    one = RegulatedPath.constant(UNIT, 1.0)
    assert ks_integral(one, g, 0.3, 1.0)[0] == 1.0


def test_step_integrand():
    f = RegulatedPath.step(TimeGrid([0.0, 0.5, 1.0]), [1.0, 2.0])
    g = StieltjesIntegrator.identity(UNIT)
    assert ks_integral(f, g)[0] == pytest.approx(1.5)


def test_interval_and_span_errors():
    f = RegulatedPath.constant(UNIT, 1.0)
    g = StieltjesIntegrator.identity(UNIT)
    with pytest.raises(ValueError):
        ks_integral(f, g, 0.8, 0.2)
    with pytest.raises(DomainError):
        ks_integral(RegulatedPath.constant(TimeGrid([0.0, 2.0]), 1.0), g)
    with pytest.raises(DomainError):
        ks_integral(f, g, 0.0, 1.5)


def test_indefinite_integral_examples():
    g = StieltjesIntegrator.identity(UNIT, {0.5: 0.25})
    one = RegulatedPath.constant(UNIT, 1.0)
    p = indefinite_integral(one, g)
    assert p.value[0, 0] == 0.0
    i = p.grid.index_of(0.5)
    assert p.right[i, 0] - p.value[i, 0] == pytest.approx(0.25)
    assert p.is_left_continuous()
    q = indefinite_integral(one, g, 0.3)
    assert q.grid.start == 0.3 and q.value[0, 0] == 0.0
    assert q.value[-1, 0] == pytest.approx(0.7 + 0.25)


def test_oracle_examples():
    g = StieltjesIntegrator.identity(UNIT, {0.4: 1.5})
    one = RegulatedPath.constant(UNIT, 1.0)
    for level in (1, 3, 6):
        assert fine_partition_oracle(one, g, 0.0, 1.0, level)[0] == pytest.approx(g(1.0) - g(0.0), abs=1e-14)
    f = RegulatedPath.from_function(UNIT, lambda s: s)
    assert fine_partition_oracle(f, StieltjesIntegrator.identity(UNIT), level=12)[0] == pytest.approx(0.5, abs=1e-6)
    pure = StieltjesIntegrator.build(UNIT, None, {0.2: 1.0, 0.7: 2.0})
    h = random_path(np.random.default_rng(0), UNIT)
    expected = h.value[UNIT.index_of(0.2), 0] * 1.0 + h.value[UNIT.index_of(0.7), 0] * 2.0
    for level in (1, 2, 5):
        assert fine_partition_oracle(h, pure, level=level)[0] == pytest.approx(expected, abs=1e-14)


def test_oracle_partition_is_tagged_and_fine():
    g = StieltjesIntegrator.identity(UNIT, {0.4: 1.0})
    f = RegulatedPath.constant(UNIT, 1.0)
    _, part = fine_partition_oracle(f, g, level=5, return_partition=True)
    assert part.points[0] == 0.0 and part.points[-1] == 1.0
    width = float(np.max(np.diff(part.points)))
    # a gauge that is tight at the jump still admits the partition
    gauge = lambda t: 1e-3 if t == 0.4 else 2 * width
    assert part.is_fine(gauge)
    assert not part.is_fine(lambda t: width / 4)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_additivity_and_linearity(seed):
    rng = np.random.default_rng(seed)
    f, g = random_case(rng, dim=2)
    c = float(rng.uniform(0, 1))
    whole = ks_integral(f, g)
    split = ks_integral(f, g, 0.0, c) + ks_integral(f, g, c, 1.0)
    assert np.allclose(whole, split, rtol=1e-12, atol=1e-12)
    f2 = random_path(rng, f.grid, 2)
    lin = ks_integral(f * 2.0 + f2, g)
    assert np.allclose(lin, 2.0 * whole + ks_integral(f2, g), rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 5.0))
def test_linear_in_jump_sizes(seed, scale):
    rng = np.random.default_rng(seed)
    f, g = random_case(rng)
    g2 = StieltjesIntegrator(g.grid, g.cont, g.jumps * scale)
    cont_only = StieltjesIntegrator(g.grid, g.cont, np.zeros(len(g.grid)))
    jump_part = ks_integral(f, g) - ks_integral(f, cont_only)
    assert np.allclose(ks_integral(f, g2), ks_integral(f, cont_only) + scale * jump_part, atol=1e-12)


def test_compose_integrand_examples():
    x = random_path(np.random.default_rng(1), UNIT)
    same = compose_integrand(FieldSpec(lambda t, u: u), x)
    assert np.array_equal(same.value, x.value) and np.array_equal(same.right, x.right)
    zero = RegulatedPath.constant(UNIT, 0.0)
    e = compose_integrand(FieldSpec(lambda s, u: 1.0 * np.exp(1.0 * np.cos(u))), zero)
    assert np.allclose(e.value, math.e)
    tt = compose_integrand(FieldSpec(lambda t, u: t), x)
    assert np.allclose(tt.value[:, 0], UNIT.times)


def test_compose_integrand_rejects_nonfinite():
    x = RegulatedPath.constant(UNIT, 0.0)
    with pytest.raises(EvaluationError) as err:
        compose_integrand(FieldSpec(lambda t, u: np.full_like(u, np.nan)), x)
    assert err.value.t == 0.0


def test_node_values_override():
    x = RegulatedPath.constant(UNIT, 2.0)
    f = FieldSpec(lambda t, u: u, node_values={0.5: lambda t, u: -u})
    p = compose_integrand(f, x)
    i = UNIT.index_of(0.5)
    assert p.value[i, 0] == -2.0 and p.left[i, 0] == 2.0 and p.right[i, 0] == 2.0


def test_dominated_convergence_examples():
    rng = np.random.default_rng(2)
    f, g = random_case(rng)
    rep = dominated_convergence_check([f] * 5, f, g, tol=1e-12)
    assert rep.passed and np.all(rep.gaps == 0)
    seq = [f + RegulatedPath.constant(f.grid, 1.0 / k) for k in range(1, 11)]
    rep = dominated_convergence_check(seq, f, g, tol=1.0)
    assert np.allclose(rep.gaps, total_variation(g) / np.arange(1, 11), atol=1e-12)
    assert np.all(np.diff(rep.gaps) < 0)


def test_power_sequence_integrals():
    grid = TimeGrid.uniform(0.0, 1.0, 1e-3)
    g = StieltjesIntegrator.identity(grid)
    for k in (1, 2, 5):
        fk = RegulatedPath.from_function(grid, lambda s: s ** k)
        assert ks_integral(fk, g)[0] == pytest.approx(1.0 / (k + 1), rel=1e-5)
