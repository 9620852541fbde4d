import numpy as np
import pytest

from compactwave.compact import Medium, SchemeState, WaveProblem, run
from compactwave.explicit import explicit_first_step, explicit_step
from compactwave.grid import GridField, make_mesh, norm_l2
from compactwave.oracles import get_scenario


def const(val):
    def fn(*coords):
        return np.full((1,) * len(coords), val)
    return fn


def const_t(val):
    def fn(*args):
        return np.full((1,) * (len(args) - 1), val)
    return fn


def test_zero_data_first_step():
    mesh = make_mesh([1.0], 8, 0.5, 10)
    medium = Medium.constant(mesh, 1.0, (1.0,))
    prob = WaveProblem(u0=const(0.0), u1=const(0.0), g=const_t(0.0),
                       gk=(const_t(0.0),), f=None)
    s1 = explicit_first_step(SchemeState(0, GridField.zeros(mesh)), prob,
                             medium, mesh)
    assert np.all(s1.v_cur.values == 0.0)


def test_linear_in_time_first_step():
    mesh = make_mesh([1.0], 8, 0.5, 10)
    medium = Medium.constant(mesh, 1.0, (1.0,))
    prob = WaveProblem(u0=const(0.0), u1=const(1.0),
                       g=lambda x, t: np.full(np.shape(x), t),
                       gk=(const_t(0.0),), f=None)
    s1 = explicit_first_step(SchemeState(0, GridField.zeros(mesh)), prob,
                             medium, mesh)
    assert s1.v_cur.values == pytest.approx(
        np.full(mesh.shape, mesh.time_step), abs=1e-16)


def test_velocity_weight_switch_matters_only_for_nonunit_density():
    mesh = make_mesh([1.0], 8, 0.1, 10)
    prob = WaveProblem(u0=const(0.0), u1=const(1.0),
                       g=lambda x, t: np.full(np.shape(x), t),
                       gk=(const_t(0.0),), f=None)
    heavy = Medium.constant(mesh, 2.0, (1.0,))
    s_plain = explicit_first_step(SchemeState(0, GridField.zeros(mesh)), prob,
                                  heavy, mesh)
    s_rho = explicit_first_step(SchemeState(0, GridField.zeros(mesh)), prob,
                                heavy, mesh, rho_weighted_u1=True)
    ht = mesh.time_step
    assert s_plain.v_cur.values[2] == pytest.approx(ht / 2.0)
    assert s_rho.v_cur.values[2] == pytest.approx(ht)

    unit = Medium.constant(mesh, 1.0, (1.0,))
    a = explicit_first_step(SchemeState(0, GridField.zeros(mesh)), prob,
                            unit, mesh)
    b = explicit_first_step(SchemeState(0, GridField.zeros(mesh)), prob,
                            unit, mesh, rho_weighted_u1=True)
    assert np.array_equal(a.v_cur.values, b.v_cur.values)


def test_quadratic_in_time_exact():
    mesh = make_mesh([1.0, 1.0], 6, 0.5, 10)
    medium = Medium.constant(mesh, 1.0, (1.0, 1.0))
    prob = WaveProblem(
        u0=const(0.0), u1=const(0.0),
        g=lambda x, y, t: np.full(np.broadcast_shapes(np.shape(x), np.shape(y)),
                                  t ** 2),
        gk=(const_t(0.0),) * 2, f=const_t(2.0))
    res = run(prob, medium, mesh, scheme="explicit")
    T = mesh.time_extent
    assert res.state.v_cur.values == pytest.approx(
        np.full(mesh.shape, T ** 2), abs=1e-13)


def test_stationary_quadratic_preserved():
    a = 0.7
    mesh = make_mesh([1.0], 8, 0.6, 12)
    medium = Medium.constant(mesh, 1.0, (a,))
    prob = WaveProblem(
        u0=lambda x: x ** 2, u1=const(0.0),
        g=lambda x, t: x ** 2 + 0.0 * t,
        gk=(lambda x, t: np.full(np.shape(x), 2.0 * a ** 2),),
        f=const_t(-2.0 * a ** 2))
    res = run(prob, medium, mesh, scheme="explicit")
    x = mesh.axes[0].nodes()
    assert res.state.v_cur.values == pytest.approx(x ** 2, abs=1e-12)


def test_step_needs_two_levels():
    mesh = make_mesh([1.0], 6, 0.5, 10)
    medium = Medium.constant(mesh, 1.0, (1.0,))
    prob = WaveProblem(u0=const(0.0), u1=const(0.0), g=const_t(0.0),
                       gk=(const_t(0.0),), f=None)
    with pytest.raises(ValueError):
        explicit_step(SchemeState(0, GridField.zeros(mesh)), prob, medium, mesh)


def test_second_order_on_travelling_wave():
    scn = get_scenario("travelling-wave")
    errs = {}
    for N, M in [(27, 9), (45, 15)]:
        mesh, medium, prob = scn.build(N, M)
        res = run(prob, medium, mesh, scheme="explicit")
        exact = scn.exact_sampler(mesh)
        err = GridField(mesh, exact(mesh.time_extent).values
                        - res.state.v_cur.values)
        errs[N] = norm_l2(err)
    rate = np.log(errs[27] / errs[45]) / np.log(5.0 / 3.0)
    assert 1.9 <= rate <= 2.1
