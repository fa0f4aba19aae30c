"""
Quadrature schemes and sub-interval counts
==========================================

The in-scattering integral is replaced by a weight matrix built from
composite Newton-Cotes rules. Here the 3-, 5- and 7-point rules are compared
on the Harbor-II STHG scenario, together with the cost of building each
weight matrix.
"""
import timeit
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from uowc_rte.scenario import ScenarioConfig, build_model
from uowc_rte.receiver import power_profile
from uowc_rte.solver import ti_solve

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

model = build_model(ScenarioConfig.from_dict({"water": {"preset": "harbor-II"}}))
d = model.distances

curves = {}
for scheme, M in [(3, 50), (5, 40), (7, 7), (7, 14)]:
    w = model.weights(scheme, M)
    # best of several batches; a single build is too short to time reliably
    build = min(timeit.repeat(lambda: model.weights(scheme, M), number=50, repeat=7)) / 50
    res = ti_solve(model.grid, model.angles, w, model.water, model.source, method="gauss-seidel",
                   tol=1e-12, max_sweeps=3000)
    curves[scheme, M] = model.normalize(power_profile(res.field, model.receiver)[model.columns])
    print(f"{scheme}pt M={M:2d}: weights {build * 1e6:6.1f} us, {res.sweeps} sweeps")

ref = curves[7, 7]
for key, c in curves.items():
    print(f"{key[0]}pt M={key[1]:2d}: max relative gap to 7pt M=7 = {np.max(np.abs(c / ref - 1)):.2e}")

fig, ax = plt.subplots()
for (scheme, M), c in curves.items():
    ax.semilogy(d, c, label=f"{scheme}-point, M={M}")
ax.set_xlabel("distance (m)")
ax.set_ylabel("normalized received power")
ax.legend()
fig.savefig(out / "quadrature_sweep.png", dpi=120)
