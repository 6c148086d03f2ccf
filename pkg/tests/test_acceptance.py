"""Acceptance criteria 1-10, one PASS/FAIL line each (printed in the terminal summary).

Criteria 7 and 8 are checked twice.  The first check transports the activator at
rate 1 and the inhibitor at rate 1/256.  With those rates every mode's 2x2 block keeps a positive determinant, so no Turing window
exists and the checks fail.  The second check swaps the two rates, which
produces the windows and patterns the criteria describe.
"""

import filecmp
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ctrw_patterns import analysis as an
from ctrw_patterns import dynamics as dy
from ctrw_patterns import eigen
from ctrw_patterns import kinetics as kn
from ctrw_patterns import laplacian as lp
from ctrw_patterns import network as nw
from oracles import charpoly_roots, conjugate_closed, match_spectra

GM = kn.gierer_meinhardt()
PUBLISHED_RATES = (1.0, 1 / 256)
SWAPPED_RATES = (1 / 256, 1.0)
BA_SEED = 1
PATTERN_SEEDS = range(5)


def report(label, ok, detail):
    line = f"{label:<34} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def gm_rates(net, variant, base):
    return lp.case_b_rescaled_rates(net, *base) if variant == "CaseB" else base


def random_networks(count, seed):
    gen = np.random.default_rng(seed)
    nets = []
    for i in range(count):
        J = int(gen.choice([20, 50]))
        s = int(gen.integers(2**32))
        nets.append(nw.generate_ba(J, 3, s) if i % 2 else nw.generate_ws(J, 4, 0.2, s))
    return nets


def test_ac01_conservation_and_zero_modes():
    start = time.perf_counter()
    row_err = mass_err = mode_err = 0.0
    for net in random_networks(20, 101):
        J = net.vertex_count
        u0 = np.random.default_rng(J).uniform(0.5, 1.5, J)
        for variant in ("CaseA", "CaseB"):
            L = lp.build(net, variant, 1.0)
            row_err = max(row_err, float(np.max(np.abs(L.row_sums()))))
            cfg = dy.IntegratorConfig(rtol=1e-11, atol=1e-13, t_max=1e4, snapshot_dt=0.5, newton_polish=False)
            res = dy.integrate(dy.SystemState(0.0, u0), cfg, L, [1.0], kn.ZeroKinetics())
            mass = u0.sum()
            mass_err = max(mass_err, max(abs(s.X.sum() - mass) / mass for s in res.snapshots))
            w = net.degrees.astype(float) if variant == "CaseA" else np.ones(J)
            target = mass * w / w.sum()
            mode_err = max(mode_err, float(np.max(np.abs(res.state.X - target)) / np.max(target)))
    elapsed = time.perf_counter() - start
    ok = row_err < 1e-12 and mass_err < 1e-10 and mode_err < 1e-6 and elapsed < 30
    report("AC1 conservation & zero modes", ok,
           f"row-sum {row_err:.1e}, mass {mass_err:.1e}, zero-mode {mode_err:.1e}, {elapsed:.1f}s")


def test_ac02_regular_graph_equivalence():
    graphs = [nw.cycle_graph(n) for n in range(3, 21)] + [nw.complete_graph(n) for n in range(2, 21)]
    mismatches = 0
    for net in graphs:
        d = int(net.degrees[0])
        for alpha in (1.0, 0.75, 1.3, 1 / 3, 7.0):
            a = lp.build_case_a(net, alpha).entries
            b = lp.build_case_b(net, alpha / d).entries
            mismatches += not np.array_equal(a, b)
    report("AC2 regular-graph equivalence", mismatches == 0,
           f"{len(graphs)} graphs x 5 rates, {mismatches} inexact")


def test_ac03_eigensolver():
    gen = np.random.default_rng(2024)
    worst_value = worst_backward = 0.0
    unpaired = 0
    for _ in range(500):
        n = int(gen.integers(1, 13))
        a = gen.standard_normal((n, n)) * 10.0 ** gen.uniform(-2, 2)
        vals, vecs = eigen.eigen_spectrum(a, vectors=True)
        scale = max(1.0, float(np.abs(a).max()))
        worst_value = max(worst_value, match_spectra(vals, charpoly_roots(a)) / scale)
        unpaired += not conjugate_closed(vals)
        norm = np.linalg.norm(a, 2)
        for lam, v in zip(vals, vecs.T):
            worst_backward = max(worst_backward, np.linalg.norm(a @ v - lam * v) / norm)
    ok = worst_value < 1e-6 and unpaired == 0 and worst_backward <= 1e-8
    report("AC3 eigensolver vs polynomial oracle", ok,
           f"max spectrum gap {worst_value:.1e}, unpaired {unpaired}, backward error {worst_backward:.1e}")


def test_ac04_mode_decomposition():
    jac0 = GM.jacobian(GM.steady_state().reshape(2, 1))[:, :, 0]
    worst = 0.0
    for net in random_networks(10, 404):
        L = lp.build_case_b(net, 1.0)
        rates = gm_rates(net, "CaseB", PUBLISHED_RATES)
        full = eigen.eigen_spectrum(an.assemble_system_jacobian(L, GM, GM.steady_state(), rates, 1.0))
        lam = np.linalg.eigvalsh(L.entries)
        blocks = [np.linalg.eigvals(jac0 + np.diag(rates) * x) for x in lam]
        worst = max(worst, match_spectra(full, np.concatenate(blocks)))
    report("AC4 mode decomposition", worst < 1e-8, f"max gap {worst:.1e} over 10 graphs")


def test_ac05_linear_predictor():
    # (a) symmetric Laplacian: the homogeneous state is already steady
    net = nw.generate_ba(200, 3, 5)
    a_max = float(np.max(np.abs(an.linear_pattern_predictor(lp.build_case_b(net, 1.0), kn.logistic(), s=3.0).delta)))
    # (b) linear kinetics: the linearisation is exact
    L = lp.build_case_a(net, 1.0)
    lin = kn.LinearKinetics(2.0, 0.5)
    pred = an.linear_pattern_predictor(L, lin, s=3.0)
    cfg = dy.IntegratorConfig(s=3.0, rtol=1e-12, atol=1e-14, t_max=1e5)
    res = dy.integrate(dy.homogeneous_state(lin, net), cfg, L, [1.0], lin)
    b_err = float(np.max(np.abs(pred.pattern - res.state.X)))
    # (c) logistic, Case A, BA(500, 3)
    big = nw.generate_ba(500, 3, BA_SEED)
    L = lp.build_case_a(big, 1.0)
    log_model = kn.logistic()
    sim = dy.integrate(dy.homogeneous_state(log_model, big), dy.IntegratorConfig(s=1.0), L, [1.0], log_model)
    u = sim.state.X
    gap = np.abs(an.linear_pattern_predictor(L, log_model, s=1.0).pattern - u)
    near = np.abs(u - 1.0) < 0.1
    far = np.abs(u - 1.0) >= 1.0
    near_gap, far_gap = float(np.median(gap[near])), float(np.median(gap[far]))
    c_ok = sim.converged and near_gap < 0.1 and near_gap < far_gap / 5 and u.mean() < 1 - 1e-4
    ok = a_max == 0.0 and res.converged and b_err < 1e-10 and c_ok
    report("AC5 linear predictor", ok,
           f"(a) max|delta| {a_max:.1e}; (b) {b_err:.1e}; (c) median gap near u* {near_gap:.3f} "
           f"vs far {far_gap:.2f}, mean(u) {u.mean():.4f}")


def test_ac06_jacobian_gradient_check():
    gen = np.random.default_rng(66)
    u_star, v_star = GM.steady_state()
    worst = {}
    for model in (kn.logistic(1.0), kn.logistic(3.7), kn.LinearKinetics(2.0, 0.5), GM):
        err = 0.0
        for _ in range(150):
            if model.species_count == 1:
                x = gen.uniform(-3, 3, 1)
            else:
                uu = u_star * np.exp(gen.uniform(np.log(0.1), np.log(10.0)))
                x = np.array([uu, v_star * (uu / u_star) ** 2 * np.exp(gen.uniform(np.log(0.1), np.log(10.0)))])
            analytic = model.jacobian(x.reshape(-1, 1))[:, :, 0]
            numeric = kn.finite_difference_jacobian(model, x)
            scale = np.maximum(np.abs(analytic), 1e-12 + 1e-6 * np.max(np.abs(analytic)))
            err = max(err, float(np.max(np.abs(analytic - numeric) / scale)))
        worst[f"{model.name}"] = max(err, worst.get(model.name, 0.0))
    ok = all(e < 1e-6 for e in worst.values())
    report("AC6 Jacobian gradient check", ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (150 states each)")


def _windows(base_rates):
    net = nw.generate_ba(500, 3, BA_SEED)
    out = {}
    for variant in ("CaseA", "CaseB"):
        L = lp.build(net, variant, 1.0)
        out[variant] = an.dispersion_relation(L, GM, gm_rates(net, variant, base_rates), workers=os.cpu_count() or 1)
    return net, out


def _window_verdict(label, base_rates):
    start = time.perf_counter()
    _, curves = _windows(base_rates)
    elapsed = time.perf_counter() - start
    wa, wb = curves["CaseA"].window, curves["CaseB"].window
    peak = {v: float(c.re_mu_star.max()) for v, c in curves.items()}
    ok = (wa is not None and wb is not None and 0 < wa[0] < wa[1] < math.inf and 0 < wb[0] < wb[1] < math.inf
          and curves["CaseB"].log_width() > curves["CaseA"].log_width() and elapsed < 600)
    fmt = lambda w: "none" if w is None else f"[{w[0]:.3g}, {w[1]:.3g}]"  # noqa: E731
    report(label, ok, f"CaseA {fmt(wa)} CaseB {fmt(wb)}; max Re mu* A {peak['CaseA']:.2e} B {peak['CaseB']:.2e}; "
                      f"{elapsed:.1f}s")


def test_ac07_turing_window_activator_faster():
    _window_verdict("AC7 Turing window", PUBLISHED_RATES)


def test_ac07_turing_window_swapped_rates():
    _window_verdict("AC7 Turing window (swapped rates)", SWAPPED_RATES)


def test_ac08_turing_pattern_activator_faster():
    net, curves = _windows(PUBLISHED_RATES)
    window = curves["CaseB"].window
    if window is not None:
        pytest.skip("activator-faster rates produced a window; the swapped-rate check covers the pattern")
    # nothing to place s inside; show what the dynamics do at s = 1
    notes = []
    for variant in ("CaseA", "CaseB"):
        L = lp.build(net, variant, 1.0)
        rates = gm_rates(net, variant, PUBLISHED_RATES)
        res = dy.integrate(dy.perturbed_initial_state(GM, net, 0.01, 0), dy.IntegratorConfig(s=1.0), L, rates, GM)
        cls = an.classify_pattern(res.state, GM, L, 1.0, rates=rates, curve=curves[variant])
        rel = res.state.as_matrix().mean(axis=1) / GM.steady_state()
        notes.append(f"{variant} at s=1: {cls.value}, means/steady {rel[0]:.4f} {rel[1]:.4f}")
    report("AC8 Turing pattern structure", False, "no Case B window, so no s inside it; " + "; ".join(notes))


def test_ac08_turing_pattern_swapped_rates():
    net, curves = _windows(SWAPPED_RATES)
    ss = GM.steady_state()
    tally = {"turing": 0, "bimodal": 0, "A above": 0, "B below": 0}
    for variant in ("CaseA", "CaseB"):
        L = lp.build(net, variant, 1.0)
        rates = gm_rates(net, variant, SWAPPED_RATES)
        lo, hi = curves[variant].window
        s = math.sqrt(lo * hi)
        for seed in PATTERN_SEEDS:
            x0 = dy.perturbed_initial_state(GM, net, 0.01, seed)
            res = dy.integrate(x0, dy.IntegratorConfig(s=s, t_max=1e6), L, rates, GM)
            assert res.converged, (variant, seed, res.reason)
            means = res.state.as_matrix().mean(axis=1)
            if variant == "CaseA":
                tally["A above"] += bool(np.all(means > ss))
            else:
                cls = an.classify_pattern(res.state, GM, L, s, rates=rates, curve=curves[variant])
                tally["turing"] += cls is an.Pattern.TURING
                tally["bimodal"] += an.degree_class_bimodality(res.state.species(0), net.degrees).bimodal
                tally["B below"] += bool(np.all(means < ss))
    ok = all(v >= 4 for v in tally.values())
    report("AC8 Turing pattern (swapped rates)", ok,
           ", ".join(f"{k} {v}/5" for k, v in tally.items()))


def test_ac09_scale_limits():
    net = nw.generate_ba(500, 3, BA_SEED)
    L = lp.build_case_a(net, 1.0)
    small = float(np.max(np.abs(an.linear_pattern_predictor(L, kn.logistic(), s=1e-8).delta)))
    pattern = an.linear_pattern_predictor(L, kn.logistic(), s=1e6).pattern
    z = an.zero_mode(L)
    angle = math.acos(min(1.0, float(pattern @ z / (np.linalg.norm(pattern) * np.linalg.norm(z)))))
    report("AC9 s-limits of the predictor", small < 1e-6 and angle < 1e-3,
           f"max|delta| at s=1e-8 {small:.1e}, angle to zero mode at s=1e6 {angle:.1e} rad")


def test_ac10_reproducible_figures(tmp_path):
    cmd = [sys.executable, "-m", "ctrw_patterns.cli", "figures", "--size", "50", "--out"]
    times = []
    for name in ("a", "b"):
        start = time.perf_counter()
        proc = subprocess.run(cmd + [str(tmp_path / name)], capture_output=True, text=True)
        times.append(time.perf_counter() - start)
        assert proc.returncode == 0, proc.stderr
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")

    def differs(c):
        if c.left_only or c.right_only or c.funny_files:
            return True
        _, mismatch, errors = filecmp.cmpfiles(c.left, c.right, c.common_files, shallow=False)
        return bool(mismatch or errors) or any(differs(sub) for sub in c.subdirs.values())

    same = not differs(cmp)
    count = sum(len(files) for _, _, files in os.walk(tmp_path / "a"))
    report("AC10 reproducible figure batch", same and max(times) < 300,
           f"{count} files, identical={same}, runs {times[0]:.1f}s / {times[1]:.1f}s")
