"""Acceptance criteria of the solver package, each at its stated tolerance.

Every test appends one ``PASS``/``FAIL`` line to the session summary and then
asserts the same verdict.
"""
import time

import numpy as np
import pytest
from scipy import integrate

from conftest import HARBOR, PSFS, VERDICTS, grid_for, water
from uowc_rte.angles import AngularGrid, lloyd_step, optimal_scattering_angles, quantization_mse
from uowc_rte.link import ber_ook, q_function
from uowc_rte.montecarlo import MCReceiver, build_cdf, trace_photons, trace_planes
from uowc_rte.phase import WaterOpticalProperties, eval_density, normalization_integral
from uowc_rte.quadrature import weight_matrix
from uowc_rte.receiver import ReceiverGeometry, power_profile
from uowc_rte.scenario import ScenarioConfig, build_model, run
from uowc_rte.solver import GridSpec, SourceSpec, td_solve, ti_solve

pytestmark = pytest.mark.slow


def verdict(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {title} ({detail})"
    VERDICTS.append(line)
    print(line)
    assert ok, line


def _min_time(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _ti_power(model, pf_name=None, method="gauss-seidel"):
    w = model.weights(7, 7)
    res = ti_solve(model.grid, model.angles, w, model.water, model.source, method=method,
                   tol=1e-12, max_sweeps=3000)
    assert res.converged
    return power_profile(res.field, model.receiver)[model.columns]


def test_1_quadrature_convergence(tmp_path):
    cfg = ScenarioConfig.from_dict({
        "mode": "ti", "water": {"preset": "harbor-II"}, "phase": {"variant": "sthg"},
        "quadrature": {"sweep": [[7, 7], [3, 50], [5, 40], [7, 14]]},
        "solver": {"tol": 1e-12, "max_sweeps": 3000},
    })
    t0 = time.perf_counter()
    res = run(cfg, tmp_path)
    elapsed = time.perf_counter() - t0
    c = {k: res.tables[f"ti_s{k[0]}_M{k[1]}.csv"] for k in [(3, 50), (5, 40), (7, 7), (7, 14)]}
    pairs = [((3, 50), (5, 40)), ((3, 50), (7, 7)), ((5, 40), (7, 7))]
    pairwise = max(np.max(np.abs(c[a] / c[b] - 1)) for a, b in pairs)
    m_sweep = np.max(np.abs(c[(7, 14)] / c[(7, 7)] - 1))
    J = build_model(cfg).grid.J
    ok = pairwise <= 0.02 and m_sweep <= 0.01 and elapsed < 120 and J <= 60
    verdict(1, "quadrature convergence, Harbor-II STHG", ok,
            f"pairwise max {pairwise:.2e} <= 2e-2, M 7 vs 14 {m_sweep:.2e} <= 1e-2, "
            f"{elapsed:.1f} s < 120 s, J={J}")


@pytest.mark.filterwarnings("ignore::uowc_rte.angles.ConvergenceWarning")
def test_2_relative_quadrature_cost():
    pf = PSFS["sthg"]()
    lines, ok = [], True
    for K in (22, 50):
        grid = grid_for("sthg", K)
        # a batch of builds per sample keeps timer resolution out of the comparison
        t = {s: _min_time(lambda s=s, M=M: [weight_matrix(pf, grid, M, s) for _ in range(50)], 9) / 50
             for s, M in [(7, 7), (5, 40), (3, 50)]}
        ok &= t[7] < t[5] < t[3]
        lines.append(f"K={K}: 7pt {t[7] * 1e6:.1f} < 5pt {t[5] * 1e6:.1f} < 3pt {t[3] * 1e6:.1f} us")
    verdict(2, "weight build cost 7pt < 5pt < 3pt", ok, "; ".join(lines))


def test_3_beer_lambert():
    # directions uniform on the circle with one exactly on the beam axis, and a 1 mm column
    # step so the first-order upwind decay rate c - 5/6 c^2 dx stays close to c
    angles = AngularGrid.from_angles(np.arange(22) * 2 * np.pi / 22)
    w = weight_matrix(PSFS["sthg"](), angles)
    r0 = 0.05  # reference distance past the near-source transient
    worst = {}
    for name, (_, c) in HARBOR.items():
        grid = GridSpec(dx=1e-3, x_max=10 / c)
        rec = ReceiverGeometry.build(angles, grid.dy)
        res = ti_solve(grid, angles, w, WaterOpticalProperties(a=c, b=0.0), SourceSpec(),
                       method="gauss-seidel", tol=1e-13, max_sweeps=50)
        p = power_profile(res.field, rec)
        j0 = int(round(r0 / grid.dx))
        x = grid.x[j0:]
        ratio = (p[j0:] / p[j0]) / np.exp(-c * (x - x[0]))
        worst[name] = float(np.max(np.abs(ratio - 1)))
    ok = all(v <= 0.05 for v in worst.values())
    verdict(3, "Beer-Lambert with b=0", ok,
            ", ".join(f"{k} max rel err {v:.2e} <= 5e-2" for k, v in worst.items()))


def test_4_td_ti_consistency():
    worst = {}
    for name in HARBOR:
        model = build_model(ScenarioConfig.from_dict({"water": {"preset": name}}))
        ti = _ti_power(model)
        td = td_solve(model.grid, model.angles, model.weights(7, 7), model.water, model.source,
                      model.receiver)
        n = model.grid.N
        avg = td.power[int(np.floor(0.75 * n)):, model.columns].mean(axis=0)
        worst[name] = float(np.max(np.abs(avg / ti - 1)))
    ok = all(v <= 0.02 for v in worst.values())
    verdict(4, "TD average over final 25% vs TI", ok,
            ", ".join(f"{k} max rel diff {v:.2e} <= 2e-2" for k, v in worst.items()))


def test_5_rte_vs_monte_carlo():
    n_photons = 1_000_000
    t0 = time.perf_counter()
    rows, ok = [], True
    for psf in PSFS:
        for name in HARBOR:
            cfg = ScenarioConfig.from_dict({"water": {"preset": name}, "phase": {"variant": psf}})
            model = build_model(cfg)
            rte = _ti_power(model)
            d = model.distances
            mc = trace_planes(n_photons, model.water, build_cdf(model.pf), MCReceiver(), d,
                              x_max=model.grid.x_max, seed=1, omega=model.source.omega,
                              workers=4)
            err = np.abs(np.log10((rte / rte[0]) / mc.normalized()))
            if name == "harbor-I":
                bound = np.full(d.size, 0.3)
            else:
                bound = np.where(d > d[0] + 0.75 * (d[-1] - d[0]), 0.5, 0.3)
            ok &= bool(np.all(err <= bound))
            rows.append(f"{psf}/{name} {err.max():.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 900
    verdict(5, "RTE vs MC, max |log10 ratio|", ok,
            ", ".join(rows) + f"; bound 0.3 (Harbor-II 0.5 in the far quarter); {elapsed:.0f} s")


def test_6_cost_scaling():
    # distances spaced so the growth in photon work exceeds timer noise
    distances = [0.5, 1.0, 2.0, 3.0, 4.0]
    model = build_model(ScenarioConfig.from_dict({"grid": {"x_max": max(distances)}}))
    sampler = build_cdf(model.pf)
    w = model.weights(7, 7)

    def mc_at(r):
        trace_photons(1_000_000, model.water, sampler, MCReceiver(), r, seed=3,
                      omega=model.source.omega)

    # the RTE solve yields the whole field at once: one fixed-domain solve plus the readout
    def rte_at(r):
        res = ti_solve(model.grid, model.angles, w, model.water, model.source)
        return power_profile(res.field, model.receiver)[int(round(r / model.grid.dx))]

    # interleave the repeats across distances so slow drifts hit every distance alike
    t_mc = np.full(len(distances), np.inf)
    t_rte = np.full(len(distances), np.inf)
    for _ in range(3):
        for i, r in enumerate(distances):
            t_mc[i] = min(t_mc[i], _min_time(lambda: mc_at(r), 1))
    for _ in range(15):
        for i, r in enumerate(distances):
            t_rte[i] = min(t_rte[i], _min_time(lambda: rte_at(r), 1))
    spread = (t_rte.max() - t_rte.min()) / t_rte.mean()
    ok = bool(np.all(np.diff(t_mc) > 0)) and spread <= 0.10
    verdict(6, "MC time grows with distance, RTE time flat", ok,
            "MC " + "/".join(f"{t:.2f}" for t in t_mc) + f" s at {distances} m; "
            f"RTE spread {spread:.1%} <= 10%")


def test_7_monotonicity():
    ok, notes = True, []
    for psf in PSFS:
        p = {}
        for name in HARBOR:
            model = build_model(ScenarioConfig.from_dict({"water": {"preset": name},
                                                          "phase": {"variant": psf}}))
            power = _ti_power(model)
            norm = model.normalize(power)
            ber = model.ber(power)
            rising = model.distances[1:][np.diff(norm) >= 0]
            falling_ber = np.any(np.diff(ber) < 0)
            if rising.size or falling_ber:
                ok = False
                notes.append(f"{psf}/{name} power rises at {np.round(rising, 2).tolist()} m"
                             + (", BER falls" if falling_ber else ""))
            p[name] = norm
        ok &= bool(np.all(p["harbor-II"] <= p["harbor-I"]))
        notes.append(f"{psf} H2/H1 max {np.max(p['harbor-II'] / p['harbor-I']):.2e}")
    verdict(7, "power decreasing, BER non-decreasing, Harbor-II <= Harbor-I", ok, ", ".join(notes))


def test_8_property_suites():
    checks = {}
    # phase functions
    hg_norm = max(abs(normalization_integral(PSFS[k]()) - 1) for k in ("sthg", "tthg"))
    phi = np.linspace(0, 2 * np.pi, 101)
    sym = max(np.max(np.abs(eval_density(f(), phi) - eval_density(f(), 2 * np.pi - phi))
                     / eval_density(f(), phi)) for f in PSFS.values())
    t = PSFS["tthg"]()
    hg = lambda g: (1 - g * g) / (2 * np.pi * (1 + g * g - 2 * g * np.cos(phi)))
    alpha, g1, g2 = t.params
    conv = np.max(np.abs(eval_density(t, phi) - (alpha * hg(g1) + (1 - alpha) * hg(g2))))
    checks["phase"] = hg_norm < 1e-10 and sym < 1e-9 and conv < 1e-12
    # weights
    row1 = toe = 0.0
    for k, f in PSFS.items():
        wm = weight_matrix(f(), grid_for(k))
        row1 = max(row1, abs(wm.w[0].sum() - 1))
        lag = np.abs(np.subtract.outer(np.arange(wm.K), np.arange(wm.K)))
        toe = max(toe, float(np.max(np.abs(wm.w - wm.w[0][lag]))))
    checks["weights"] = row1 <= 1e-12 and toe == 0.0 and np.array_equal(wm.w, wm.w.T)
    # Lloyd-Max
    pf = PSFS["sthg"]()
    g = optimal_scattering_angles(pf, track_mse=True)
    d = g.thresholds
    centroid = max(abs(g.angles[k] - integrate.quad(lambda x: x * float(eval_density(pf, x)), d[k], d[k + 1])[0]
                       / integrate.quad(lambda x: float(eval_density(pf, x)), d[k], d[k + 1])[0])
                   for k in range(g.K))
    hist = np.asarray(g.mse_history)
    step, _ = lloyd_step(pf, g.angles)
    checks["lloyd"] = (centroid < 1e-6 and bool(np.all(np.diff(hist) <= 1e-13))
                       and quantization_mse(pf, step) <= quantization_mse(pf, g.angles) + 1e-13)
    # solver linearity
    small = GridSpec(x_max=0.5, t_max=1e-9)
    w = weight_matrix(pf, g)
    wat = water("harbor-I")
    a = ti_solve(small, g, w, wat, SourceSpec(S0=1.0), tol=1e-14, max_sweeps=500).field.values
    b = ti_solve(small, g, w, wat, SourceSpec(S0=3.0), tol=1e-14, max_sweeps=500).field.values
    nz = a > 0
    lin = float(np.max(np.abs(b[nz] / (3 * a[nz]) - 1)))
    checks["linearity"] = lin <= 1e-12 and np.array_equal(a == 0, b == 0)
    # Monte Carlo energy balance
    mc = trace_photons(50_000, wat, build_cdf(pf), MCReceiver(), 1.5, seed=5)
    checks["mc energy"] = abs(mc.balance) <= 1e-9 * mc.n_photons
    # link
    checks["ber"] = (float(ber_ook(0.0)) == 0.5
                     and abs(float(q_function(3.0)) - 1.3499e-3) <= 1e-6)
    ok = all(checks.values())
    verdict(8, "property suites", ok,
            ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
            + f"; row-1 {row1:.1e}, linearity {lin:.1e}, MC balance {mc.balance:.1e}")
