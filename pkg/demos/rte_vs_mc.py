"""
Discrete-ordinates solution against photon tracking
===================================================

Both curves are normalized to their value at the first receiver distance,
so only the decay with distance is compared. Pass a photon count on the
command line (default 200000; the acceptance run uses one million).
"""
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from uowc_rte.montecarlo import MCReceiver, build_cdf, trace_planes
from uowc_rte.receiver import power_profile
from uowc_rte.scenario import ScenarioConfig, build_model
from uowc_rte.solver import ti_solve

n_photons = int(float(sys.argv[1])) if len(sys.argv) > 1 else 200_000
out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
for ax, preset in zip(axes, ("harbor-I", "harbor-II")):
    for psf in ("sthg", "tthg", "ff"):
        model = build_model(ScenarioConfig.from_dict({"water": {"preset": preset},
                                                      "phase": {"variant": psf}}))
        d = model.distances
        res = ti_solve(model.grid, model.angles, model.weights(7, 7), model.water, model.source,
                       method="gauss-seidel", tol=1e-12, max_sweeps=3000)
        rte = power_profile(res.field, model.receiver)[model.columns]
        mc = trace_planes(n_photons, model.water, build_cdf(model.pf), MCReceiver(), d,
                          x_max=model.grid.x_max, seed=1, omega=model.source.omega, workers=4)
        line, = ax.semilogy(d, rte / rte[0], label=f"{psf} RTE")
        ax.errorbar(d[::3], mc.normalized()[::3], yerr=(mc.stderr / mc.fraction[0])[::3],
                    fmt="o", ms=3, color=line.get_color(), label=f"{psf} MC")
        gap = np.max(np.abs(np.log10((rte / rte[0]) / mc.normalized())))
        print(f"{preset:9s} {psf:4s}: max |log10 RTE/MC| = {gap:.3f}")
    ax.set_title(preset)
    ax.set_xlabel("distance (m)")
axes[0].set_ylabel("power relative to first distance")
axes[0].legend(fontsize=8)
fig.savefig(out / "rte_vs_mc.png", dpi=120)
