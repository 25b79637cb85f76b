"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines stream.
All tolerances are pinned here; nothing is deferred to later calibration.

The shared workhorse instance is the quadratic spectrum with 16 modes,
gap index n = 1, per-mode sine nonlinearity with L = 0.1 and k = 0.2
(so mu = 2, delta = 0.325), unit sine forcing on mode 2, power-law noise.
"""

import json

import numpy as np
import pytest

import rimlab as rl
from rimlab.analysis import containment_defect, invariance_defect, pullback_attractor
from rimlab.cli import main as cli_main
from rimlab.dynamics import integrate
from rimlab.forcing import scan_almost_period, shift_forcing
from rimlab.lyapunov_perron import (
    BackwardTrajectory,
    build_chart,
    check_gap,
    gap_margin,
    lp_apply,
    manifold_point,
)
from rimlab.problem import ModelProblem
from rimlab.spectral import ProjectionSplit, apply_semigroup
from rimlab.tracking import ForwardTrajectory, lp_plus_apply, track_phi


TOL = 1e-6


def _report(number: int, name: str, passed: bool, detail: str) -> bool:
    tag = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number:02d} {tag} {name}: {detail}")
    return passed


def test_criterion_01_gap_arithmetic(spectrum16):
    margins = {n: gap_margin(spectrum16, 1.0, 0.45, n) for n in range(1, 8)}
    first = min(n for n, m in margins.items() if m >= 0)
    cert = check_gap(spectrum16, 0.1, 0.2, 1)
    ok = (
        first == 4
        and cert.mu == 2.0
        and cert.delta == 0.325
        and cert.margin == pytest.approx(1.0, abs=1e-15)
    )
    assert _report(
        1,
        "gap arithmetic",
        ok,
        f"first passing n={first} (want 4); mu={cert.mu}, delta={cert.delta}",
    )


def test_criterion_02_linear_closed_form(spectrum16, sine_forcing, cov16):
    target = -1.0 / 17.0
    values = []
    for seed in (7, 8):
        grid = rl.TimeGrid.from_times(-19.0, 0.5, 1e-3)
        path = rl.sample_wiener(seed, grid, cov16)
        problem = ModelProblem(
            spectrum=spectrum16,
            nonlinearity=rl.Nonlinearity.zero(),
            forcing=sine_forcing,
            path=path,
            cert=check_gap(spectrum16, 0.0, 0.2, 1),
            t_back=8.1,
            t_fwd=8.1,
            tol=TOL,
        )
        ctx = problem.lp_context(0.0)
        for x1 in (-0.8, 0.6):
            x = np.zeros(16)
            x[0] = x1
            values.append(manifold_point(x, ctx)[1])
    err = max(abs(v - target) for v in values)
    spread = max(values) - min(values)
    ok = err <= 1e-5 and spread <= 1e-12
    assert _report(
        2,
        "linear closed form",
        ok,
        f"mode-2 graph value within {err:.2e} of -1/17; x/seed spread {spread:.2e}",
    )


def test_criterion_03_contraction_certificates(problem_nl):
    ctx = problem_nl.lp_context(0.0)
    cert = problem_nl.cert
    rng = np.random.default_rng(33)
    x = np.zeros(16)
    x[0] = 0.3

    def random_backward():
        vals = rng.standard_normal((ctx.times.size, 16))
        vals *= 0.5 * np.exp(-cert.mu * ctx.times)[:, None]
        return BackwardTrajectory(ctx.times, vals, cert.mu, problem_nl.spectrum)

    lp_ratios = []
    for _ in range(32):
        a, b = random_backward(), random_backward()
        num = ctx.s_norm(lp_apply(a, x, ctx).values - lp_apply(b, x, ctx).values)
        lp_ratios.append(num / ctx.s_norm(a.values - b.values))

    v0 = 0.5 * rng.standard_normal(16)
    base = integrate(
        v0, 0.0, problem_nl.t_fwd, problem_nl.ou,
        shift_forcing(problem_nl.forcing, 0.0), problem_nl.nonlinearity,
        problem_nl.spectrum,
    )

    def random_forward():
        vals = rng.standard_normal((base.times.size, 16))
        vals *= 0.3 * np.exp(-cert.mu * base.times)[:, None]
        return ForwardTrajectory(base.times, vals, cert.mu, problem_nl.spectrum)

    plus_ratios = []
    for _ in range(32):
        a, b = random_forward(), random_forward()
        out_a, _, _ = lp_plus_apply(a, v0, base, ctx)
        out_b, _, _ = lp_plus_apply(b, v0, base, ctx)
        num = rl.lyapunov_perron.weighted_sup_norm(
            base.times, out_a.values - out_b.values, cert.mu, problem_nl.spectrum
        )
        den = rl.lyapunov_perron.weighted_sup_norm(
            base.times, a.values - b.values, cert.mu, problem_nl.spectrum
        )
        plus_ratios.append(num / den)

    ok = max(lp_ratios) <= cert.k + 0.05 and max(plus_ratios) <= cert.delta + 0.05
    assert _report(
        3,
        "contraction certificates",
        ok,
        f"backward ratio max {max(lp_ratios):.4g} <= {cert.k + 0.05}; "
        f"forward ratio max {max(plus_ratios):.4g} <= {cert.delta + 0.05}",
    )


def test_criterion_04_lipschitz_bound(problem_nl, chart_grid16):
    chart = build_chart(chart_grid16, problem_nl.lp_context(0.0))
    bound = 1.0 / (1.0 - problem_nl.cert.k) + 0.05
    ok = chart.lipschitz <= bound
    assert _report(
        4,
        "chart Lipschitz bound",
        ok,
        f"empirical constant {chart.lipschitz:.4g} <= {bound:.4g} over 9 points",
    )


def test_criterion_05_invariance(spectrum16, sine_forcing, cov16, chart_grid16):
    # Matched-resolution flow and fresh solves on the shifted path; defects
    # measured at h and h/4 with the solver at tol/10 throughout.
    cert = check_gap(spectrum16, 0.1, 0.2, 1)
    f = rl.Nonlinearity.per_mode_sin(0.1)
    tol_run = TOL / 10.0
    fine_grid = rl.TimeGrid.from_times(-27.3, 1.2, 2.5e-4)
    w_fine = rl.sample_wiener(7, fine_grid, cov16)

    defects = {}
    residuals = {}
    for label, path in (("h", rl.coarsen_path(w_fine, 4)), ("h/4", w_fine)):
        problem = ModelProblem(
            spectrum=spectrum16, nonlinearity=f, forcing=sine_forcing, path=path,
            cert=cert, t_back=16.12, t_fwd=16.12, tol=tol_run,
        )
        chart = build_chart(chart_grid16, problem.lp_context(0.0), tol=tol_run)
        residuals[label] = float(np.max(chart.residuals))
        defects[label] = invariance_defect(chart, 1.0, problem, tol=tol_run).value
        if label == "h":
            zero_time = invariance_defect(chart, 0.0, problem, tol=tol_run).value

    ratio_ok = defects["h"] >= 3.0 * defects["h/4"]
    zero_ok = zero_time <= residuals["h"] and residuals["h"] <= TOL
    detail = (
        f"defect(h)={defects['h']:.3e}, defect(h/4)={defects['h/4']:.3e} "
        f"(need >= 3x reduction); t=0 defect {zero_time:.1e} <= residual "
        f"{residuals['h']:.1e} <= tol"
    )
    ok = ratio_ok and zero_ok
    if not ratio_ok:
        detail += (
            " -- matched-resolution defects sit at the solver-tolerance floor, "
            "not at O(h): the discrete graph is flow-invariant up to the "
            "truncation tail, so no first-order reduction is observable"
        )
    assert _report(5, "invariance two-resolution", ok, detail)


def test_criterion_06_exponential_tracking(problem_nl):
    ctx = problem_nl.lp_context(0.0)
    cert = problem_nl.cert
    rng = np.random.default_rng(66)
    worst_ratio = 0.0
    worst_slope = -np.inf
    for _ in range(16):
        u0 = 0.6 * rng.standard_normal(16)
        result = track_phi(u0, ctx)
        envelope = result.envelope(0.0)
        worst_ratio = max(worst_ratio, float(np.max(result.decay_curve / envelope)))
        worst_slope = max(worst_slope, result.fitted_slope())
    ok = worst_ratio <= 1.02 and worst_slope <= -cert.mu + 0.1
    assert _report(
        6,
        "exponential tracking",
        ok,
        f"16 starts: max curve/envelope {worst_ratio:.4f} <= 1.02; "
        f"worst log-slope {worst_slope:.3f} <= {-cert.mu + 0.1}",
    )


def test_criterion_07_periodicity(problem_nl, chart_grid16):
    period = 2.0 * np.pi
    bound = 2.0 * TOL + 1e-4
    worst = 0.0
    for tau in (0.0, 1.0, 2.0):
        report = rl.periodicity_defect(tau, period, chart_grid16, problem_nl, slack=1e-4)
        worst = max(worst, report.value)
    ok = worst <= bound
    assert _report(
        7,
        "pathwise periodicity",
        ok,
        f"max graph defect over tau in {{0,1,2}}: {worst:.3e} <= {bound:.3e}",
    )


def test_criterion_08_almost_periodicity(spectrum16, cov16, path16, chart_grid16):
    g2 = rl.ForcingSignal.trig(
        16,
        [rl.TrigTerm(2, 0.02, 1.0, 0.0), rl.TrigTerm(3, 0.02, np.sqrt(2.0), 0.0)],
    )
    cert = check_gap(spectrum16, 0.1, 0.2, 1)
    problem = ModelProblem(
        spectrum=spectrum16,
        nonlinearity=rl.Nonlinearity.per_mode_sin(0.1),
        forcing=g2,
        path=path16,
        cert=cert,
        t_back=16.12,
        t_fwd=16.12,
        tol=TOL,
    )
    tau0, eps_g = scan_almost_period(g2, spectrum16, 1e-3, 450.0, 0.01)
    report = rl.ap_defect(0.0, tau0, chart_grid16[:3], problem)
    bound = 2.0 * eps_g / ((1.0 - cert.k) * cert.lambda_n) + 2.0 * TOL
    ok = eps_g <= 1e-3 and report.value <= bound
    assert _report(
        8,
        "almost periodicity",
        ok,
        f"tau0={tau0:.2f}, eps_g={eps_g:.3e}; graph defect {report.value:.3e} "
        f"<= {bound:.3e}",
    )


def test_criterion_09_containment(problem_nl, problem_lin_const):
    rng = np.random.default_rng(99)
    ensemble = rng.standard_normal((8, 16))
    lam1 = problem_lin_const.spectrum.lambdas[0]
    closed_ok = True
    worst = 0.0
    for t_m in (4.0, 8.0):
        cloud = pullback_attractor(0.0, problem_lin_const, t_m, ensemble)
        value = containment_defect(cloud, problem_lin_const).value
        worst = max(worst, value)
        closed_ok = closed_ok and value <= TOL + np.exp(-lam1 * t_m)

    v4 = containment_defect(
        pullback_attractor(0.0, problem_nl, 4.0, ensemble), problem_nl
    ).value
    v8 = containment_defect(
        pullback_attractor(0.0, problem_nl, 8.0, ensemble), problem_nl
    ).value
    halved = v8 <= 0.5 * v4
    ok = closed_ok and halved
    assert _report(
        9,
        "attractor containment",
        ok,
        f"closed-form cloud defect {worst:.2e} within tol+e^(-t); "
        f"nonlinear defect {v4:.2e} -> {v8:.2e} (need halving)",
    )


def test_criterion_10_dichotomy_oracles():
    violations = 0
    for alpha in (0.0, 0.25):
        s = rl.dirichlet_laplacian(16, alpha)
        split = ProjectionSplit(3)
        lam_n, lam_np1 = s.lambdas[2], s.lambdas[3]
        wts = s.weights_alpha()
        rng = np.random.default_rng(hash(alpha) % 2**32)
        for _ in range(500):
            v = rng.standard_normal(16)
            t = rng.uniform(1e-3, 4.0)
            vq = np.where(split.p_mask(s), 0.0, v)
            sm = apply_semigroup(t, vq, s, split, "Q")
            nq = np.linalg.norm(vq)
            if np.linalg.norm(sm) > np.exp(-lam_np1 * t) * nq * (1 + 1e-12):
                violations += 1
            bound = (alpha**alpha if alpha > 0 else 1.0) * t ** (-alpha) + lam_np1**alpha
            if np.linalg.norm(sm * wts) > bound * np.exp(-lam_np1 * t) * nq * (1 + 1e-12):
                violations += 1
            vp = np.where(split.p_mask(s), v, 0.0)
            gr = apply_semigroup(-t, vp, s, split, "P")
            if np.linalg.norm(gr * wts) > lam_n**alpha * np.exp(lam_n * t) * np.linalg.norm(
                vp
            ) * (1 + 1e-12):
                violations += 1
    ok = violations == 0
    assert _report(
        10,
        "dichotomy oracles",
        ok,
        f"{violations} violations over 1000 random vectors (3 bounds each)",
    )


def test_criterion_11_determinism(tmp_path):
    config = (
        "[spectrum]\nkind = dirichlet\nn_total = 8\nalpha = 0.0\n"
        "[nonlinearity]\nkind = per_mode_sin\nlipschitz = 0.1\n"
        "[forcing]\nform = trig_sum\nterms =\n    2 1.0 1.0 0.0\n"
        "period = 6.283185307179586\n"
        "[noise]\nkind = power_law\nscale = 0.05\nexponent = 2.0\nseed = 7\n"
        "[certificate]\nn = 1\nk = 0.2\n"
        "[numerics]\nh = 0.005\ntol = 1e-5\n"
        "[chart]\nx_count = 5\n"
        "[track]\ncount = 2\n"
        "[periodicity]\ntaus = 0.0\n"
        "[verify]\nchecks = invariance lipschitz tracking periodicity\n"
        "invariance_t = 0.5\n"
    )
    cfg = tmp_path / "det.ini"
    cfg.write_text(config, encoding="utf-8")
    pairs = []
    for run in ("r1", "r2"):
        out = tmp_path / run
        assert cli_main(["build-manifold", "--config", str(cfg), "--out", str(out)]) == 0
        assert cli_main(["verify", "--config", str(cfg), "--out", str(out)]) == 0
        pairs.append(out)
    identical = all(
        (pairs[0] / name).read_bytes() == (pairs[1] / name).read_bytes()
        for name in ("chart.csv", "chart_meta.json", "verification.json", "chart.svg")
    )
    doc = json.loads((pairs[0] / "verification.json").read_text())
    ok = identical and doc["all_pass"]
    assert _report(
        11,
        "byte determinism",
        ok,
        "two runs of build-manifold and verify produced identical CSV/JSON/SVG"
        if identical
        else "outputs differ between identical runs",
    )
