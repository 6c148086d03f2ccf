import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctrw_patterns import dynamics as dy
from ctrw_patterns import kinetics as kn
from ctrw_patterns import laplacian as lp
from ctrw_patterns import network as nw


def pure_diffusion(variant, net, alpha=1.0):
    return lp.build(net, variant, alpha), kn.ZeroKinetics()


def test_rhs_path_case_b():
    L = lp.build_case_b(nw.path_graph(2), 1.0)
    out = dy.rhs(dy.SystemState(0.0, [2.0, 0.0]), L, [1.0], kn.ZeroKinetics())
    np.testing.assert_array_equal(out, [-2.0, 2.0])


def test_rhs_zero_for_case_a_degree_vector():
    net = nw.generate_ba(40, 3, 2)
    L = lp.build_case_a(net, 1.0)
    out = dy.rhs(dy.SystemState(0.0, net.degrees.astype(float)), L, [1.0], kn.ZeroKinetics())
    assert np.max(np.abs(out)) < 1e-12


def test_rhs_at_zero_scale_is_pure_reaction():
    net = nw.generate_ws(30, 4, 0.2, 1)
    gm = kn.gierer_meinhardt()
    gen = np.random.default_rng(0)
    X = np.repeat(gm.steady_state(), 30) * gen.uniform(0.5, 2.0, 60)
    out = dy.rhs(X, lp.build_case_a(net, 1.0), [1.0, 1 / 256], gm, s=0.0)
    np.testing.assert_array_equal(out, gm.rates(X.reshape(2, 30)).ravel())


def test_rhs_is_species_major_and_uses_rates():
    net = nw.star_graph(4)
    L = lp.build_case_b(net, 1.0)
    X = np.array([1.0, 0, 0, 0, 0, 0, 0, 2.0])
    out = dy.rhs(X, L, [2.0, 0.5], kn.ZeroKinetics(2), s=3.0)
    np.testing.assert_allclose(out[:4], 6.0 * L.apply(X[:4]), atol=1e-15)
    np.testing.assert_allclose(out[4:], 1.5 * L.apply(X[4:]), atol=1e-15)


def test_jacobian_matches_finite_differences():
    net = nw.generate_ba(12, 2, 4)
    gm = kn.gierer_meinhardt()
    system = dy.ReactionDiffusionSystem(lp.build_case_a(net, 1.0), gm, [1.0, 0.01], 0.7)
    X = np.repeat(gm.steady_state(), 12) * np.random.default_rng(1).uniform(0.8, 1.2, 24)
    jac = system.jacobian(X)
    for col in range(24):
        h = 1e-6 * X[col]
        e = np.zeros(24)
        e[col] = h
        fd = (system.rhs(X + e) - system.rhs(X - e)) / (2 * h)
        np.testing.assert_allclose(jac[:, col], fd, rtol=1e-5, atol=1e-6 * np.abs(jac).max())


def test_sparse_and_dense_transport_agree():
    net = nw.generate_ba(100, 3, 6)
    L = lp.build_case_a(net, 1.0)
    u = np.random.default_rng(2).random(100)
    out = dy.rhs(u, L, [1.0], kn.ZeroKinetics())
    np.testing.assert_allclose(out, L.evolution_operator() @ u, rtol=0, atol=1e-14)


@pytest.mark.parametrize("variant", ["CaseA", "CaseB"])
def test_pure_diffusion_conserves_mass_and_reaches_zero_mode(variant):
    net = nw.generate_ba(50, 3, 9)
    L, model = pure_diffusion(variant, net)
    u0 = np.random.default_rng(5).uniform(0.5, 1.5, 50)
    # tight local tolerances keep the explicit scheme's noise floor below the steady-state threshold
    cfg = dy.IntegratorConfig(t_max=1e4, rtol=1e-11, atol=1e-13, snapshot_dt=1.0, newton_polish=False)
    res = dy.integrate(dy.SystemState(0.0, u0), cfg, L, [1.0], model)
    assert res.converged
    mass = u0.sum()
    for snap in res.snapshots:
        assert abs(snap.X.sum() - mass) <= 1e-10 * mass
    target = net.degrees / net.degrees.sum() if variant == "CaseA" else np.full(50, 1 / 50)
    target = mass * target
    assert np.max(np.abs(res.state.X - target)) / np.max(target) < 1e-6


def test_logistic_without_coupling_converges_to_one():
    net = nw.generate_ws(20, 2, 0.1, 0)
    res = dy.integrate(dy.SystemState(0.0, np.full(20, 0.5)), dy.IntegratorConfig(s=0.0),
                       lp.build_case_a(net, 1.0), [1.0], kn.logistic())
    assert res.converged
    assert np.max(np.abs(res.state.X - 1.0)) < 1e-8


def test_steady_state_residual_reverified():
    net = nw.generate_ba(30, 3, 1)
    L = lp.build_case_a(net, 1.0)
    model = kn.logistic()
    res = dy.integrate(dy.SystemState(0.0, np.full(30, 0.9)), dy.IntegratorConfig(s=2.0), L, [1.0], model)
    assert res.converged
    cfg = dy.IntegratorConfig()
    r = dy.rhs(res.state, L, [1.0], model, s=2.0)
    assert np.max(np.abs(r)) < cfg.steady_threshold(res.state.X)


def test_rk4_is_fourth_order():
    net = nw.cycle_graph(6)
    L = lp.build_case_b(net, 1.0)
    model = kn.logistic(1.0)
    u0 = dy.SystemState(0.0, np.linspace(0.2, 0.7, 6))
    reference = dy.integrate(u0, dy.IntegratorConfig(rtol=1e-13, atol=1e-15, t_max=2.0), L, [1.0], model,
                             steady_stop=False).state.X
    errors = []
    for dt in (0.1, 0.05, 0.025):
        cfg = dy.IntegratorConfig(method="RK4", dt=dt, dt_min=1e-6, t_max=2.0)
        out = dy.integrate(u0, cfg, L, [1.0], model, steady_stop=False)
        assert out.state.t == pytest.approx(2.0)
        errors.append(np.max(np.abs(out.state.X - reference)))
    for coarse, fine in zip(errors, errors[1:]):
        assert 8.0 < coarse / fine < 32.0


def test_gm_trajectory_stays_positive():
    net = nw.generate_ba(50, 3, 1)
    gm = kn.gierer_meinhardt()
    L = lp.build_case_b(net, 1.0)
    rates = lp.case_b_rescaled_rates(net, 1 / 256, 1.0)
    x0 = dy.perturbed_initial_state(gm, net, 0.01, 3)
    res = dy.integrate(x0, dy.IntegratorConfig(s=1.0, t_max=2e3, snapshot_dt=10.0), L, rates, gm)
    for snap in res.snapshots:
        assert np.all(snap.X > 0)


def test_positivity_rejection_halves_the_step():
    # a huge first step overshoots below zero and must be rejected, not clamped
    L = lp.build_case_b(nw.path_graph(2), 1.0)
    gm = kn.gierer_meinhardt()
    x0 = dy.SystemState(0.0, dy.homogeneous_state(gm, 2).X * [1.5, 0.5, 1.0, 1.0], 2)
    res = dy.integrate(x0, dy.IntegratorConfig(method="RK4", dt=1e3, dt_min=1e-3, t_max=10.0, s=5.0),
                       L, [1.0, 1.0], gm, steady_stop=False)
    assert res.rejected > 0
    assert np.all(res.state.X > 0)


def test_step_underflow_raises():
    L = lp.build_case_b(nw.path_graph(2), 1.0)
    gm = kn.gierer_meinhardt()
    cfg = dy.IntegratorConfig(method="RK4", dt=1e3, dt_min=1e2, t_max=1e4)
    with pytest.raises(dy.IntegrationError):
        dy.integrate(dy.SystemState(0.0, dy.homogeneous_state(gm, 2).X * [1.5, 0.5, 1.0, 1.0], 2), cfg, L, [1.0, 1.0], gm, steady_stop=False)


def test_initial_state_outside_domain():
    L = lp.build_case_b(nw.path_graph(2), 1.0)
    with pytest.raises(dy.IntegrationError):
        dy.integrate(dy.SystemState(0.0, [1.0, 1.0, -1.0, 1.0], 2), dy.IntegratorConfig(), L, [1.0, 1.0],
                     kn.gierer_meinhardt())


def test_t_max_reason_and_max_steps():
    net = nw.cycle_graph(5)
    L = lp.build_case_b(net, 1.0)
    u0 = dy.SystemState(0.0, [1.0, 0, 0, 0, 0])
    res = dy.integrate(u0, dy.IntegratorConfig(t_max=0.5), L, [1.0], kn.ZeroKinetics())
    assert res.reason == "t_max" and res.state.t == pytest.approx(0.5)
    res = dy.integrate(u0, dy.IntegratorConfig(t_max=100.0, max_steps=3), L, [1.0], kn.ZeroKinetics())
    assert res.reason == "max_steps" and res.steps == 3


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        dy.IntegratorConfig(method="Euler")
    with pytest.raises(ValueError):
        dy.IntegratorConfig(rtol=0.0)
    with pytest.raises(ValueError):
        dy.IntegratorConfig(s=-1.0)
    with pytest.raises(ValueError):
        dy.IntegratorConfig(dt=1e-3, dt_min=1e-2)


def test_system_state_validation():
    with pytest.raises(ValueError):
        dy.SystemState(0.0, [1.0, np.inf])
    with pytest.raises(ValueError):
        dy.SystemState(0.0, [1.0, 2.0, 3.0], 2)
    st_ = dy.SystemState(0.0, [1.0, 2.0, 3.0, 4.0], 2)
    np.testing.assert_array_equal(st_.species(1), [3.0, 4.0])
    assert st_.as_matrix().shape == (2, 2)


def test_perturbed_initial_state():
    gm = kn.gierer_meinhardt()
    net = nw.generate_ba(50, 3, 0)
    a = dy.perturbed_initial_state(gm, net, 0.01, 7)
    b = dy.perturbed_initial_state(gm, net, 0.01, 7)
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(a.X, dy.perturbed_initial_state(gm, net, 0.01, 8).X)
    base = dy.homogeneous_state(gm, net).X
    assert np.all(a.X > 0)
    assert np.max(np.abs(a.X / base - 1)) <= 0.01
    tiny = dy.perturbed_initial_state(gm, net, 1e-300, 7)
    np.testing.assert_array_equal(tiny.X, base)
    with pytest.raises(ValueError):
        dy.perturbed_initial_state(gm, net, 0.2, 0)


def test_trajectory_csv(tmp_path):
    snaps = [dy.SystemState(0.0, [1.0, 2.0, 3.0, 4.0], 2), dy.SystemState(0.5, [1.5, 2.5, 3.5, 4.5], 2)]
    dy.write_trajectory_csv(snaps, tmp_path / "t.csv", ["u", "v"])
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["t", "species", "vertex", "value"]
    assert rows[1] == ["0", "u", "0", "1"]
    assert rows[-1] == ["0.5", "v", "1", "4.5"]
    assert len(rows) == 9


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), variant=st.sampled_from(["CaseA", "CaseB"]))
def test_mass_conservation_property(seed, variant):
    net = nw.generate_ws(20, 4, 0.3, seed)
    L, model = pure_diffusion(variant, net, 0.8)
    u0 = np.random.default_rng(seed).random(20) + 0.1
    res = dy.integrate(dy.SystemState(0.0, u0), dy.IntegratorConfig(t_max=5.0, snapshot_dt=0.5), L, [1.0],
                       model, steady_stop=False)
    for snap in res.snapshots:
        assert abs(snap.X.sum() - u0.sum()) <= 1e-10 * u0.sum()
