import math

import numpy as np
import pytest

from hmde import ParamSequence, SolverOptions, condition_I_estimate, dependence_run, hypothesis_check
from hmde import catalog as cat
from hmde.dependence import ConditionViolation
from hmde.integral import FieldSpec

OPTS = SolverOptions(step=2e-2)


def test_condition_I_examples():
    assert condition_I_estimate([lambda t: t / 2] * 4, 1.0, 2.0) == pytest.approx(0.5)
    got = condition_I_estimate([lambda t: 0.5 * math.log1p(t)], 1.0, 2.0)
    assert got == pytest.approx(1 - 0.5 * math.log(2), abs=1e-15)


def test_condition_I_vanishing_margin():
    c = 1.0
    vals = [condition_I_estimate([lambda t, k=k: (1 - 1 / k) * t for k in range(1, K + 1)], c, 2.0)
            for K in (4, 16, 64)]
    assert vals == pytest.approx([c / 4, c / 16, c / 64])


def test_condition_I_violation_names_instance():
    phis = [lambda t: t / 2, lambda t: t, lambda t: t / 3]
    with pytest.raises(ConditionViolation) as err:
        condition_I_estimate(phis, 1.0, 2.0)
    assert err.value.k == 2 and err.value.t == 1.0
    with pytest.raises(ValueError):
        condition_I_estimate(phis, 0.0, 1.0)


def test_hypothesis_check_constant_sequence():
    seq = cat.dependence_family("constant", 4, options=OPTS)
    rep = hypothesis_check(seq, trials=32)
    assert np.all(rep.x0_gaps == 0) and np.all(rep.h_gaps == 0) and np.all(rep.f_gaps == 0)
    assert rep.C == pytest.approx(rep.C_limit, rel=1e-12)
    assert all(rep.passed.values())


def test_hypothesis_check_initial_value_shift():
    seq = cat.dependence_family("x0_shift", 8, options=OPTS)
    rep = hypothesis_check(seq, R=2.0, trials=16)
    assert np.allclose(rep.x0_gaps, 1.0 / np.arange(1, 9))
    assert rep.passed["x0"] and rep.passed["h_start"]


def test_hypothesis_check_scaled_bound():
    base = cat.example_3x(options=OPTS)
    M = base.f.bound

    def make(k):
        return base.replace(f=base.f.replace(bound=M * (1 + 1 / k)))

    rep = hypothesis_check(ParamSequence(base, 6, make), trials=64)
    assert rep.C <= 2 * rep.C_limit + 1e-12
    assert rep.C >= rep.C_limit


def test_hypothesis_check_is_seeded():
    seq = cat.dependence_family("sin_forcing", 3, options=OPTS)
    a = hypothesis_check(seq, trials=16, seed=3)
    b = hypothesis_check(seq, trials=16, seed=3)
    assert a.C == b.C


def test_dependence_run_examples():
    const = dependence_run(cat.dependence_family("constant", 3, options=OPTS))
    assert np.all(const.gaps <= 2 * OPTS.sweep_tol)
    shift = dependence_run(cat.dependence_family("x0_shift", 10, options=OPTS))
    assert np.max(np.abs(shift.gaps - 1.0 / shift.k)) <= 1e-12
    assert shift.monotone_fraction == 1.0


def test_sin_forcing_decay():
    tab = dependence_run(cat.dependence_family("sin_forcing", 16, options=OPTS))
    g = tab.gaps
    for k in range(4, 9):
        assert g[2 * k - 1] <= 0.75 * g[k - 1]
    # the tail minimum sinks well below the first gap
    assert tab.tail_min(8) <= 0.25 * g[0]
    assert tab.tail_min(16) == g[-1]


def test_failed_instances_are_recorded():
    base = cat.example_3x(options=OPTS)
    bad_h = FieldSpec(lambda t, u: u + 1.0)

    def make(k):
        return base.replace(h=bad_h) if k == 2 else base.replace(x0=base.x0 + 1.0 / k)

    tab = dependence_run(ParamSequence(base, 3, make))
    assert tab.solved.tolist() == [True, False, True]
    assert math.isnan(tab.gaps[1]) and 2 in tab.errors
    # both adjacent pairs touch the failed instance
    assert math.isnan(tab.monotone_fraction)


def test_h_start_convergence_on_perturbed_family():
    base = cat.example_3x(x0=0.5, options=OPTS)
    seq = ParamSequence(base, 8, lambda k: base.replace(x0=base.x0 + 1.0 / k))
    rep = hypothesis_check(seq, trials=8)
    assert np.all(np.diff(rep.h_start_gaps) <= 0) and rep.passed["h_start"]


def test_param_sequence_validation():
    base = cat.example_3x(options=OPTS)
    with pytest.raises(ValueError):
        ParamSequence(base, 0, lambda k: base)
    with pytest.raises(TypeError):
        ParamSequence(base, 2, lambda k: None).instance(1)
