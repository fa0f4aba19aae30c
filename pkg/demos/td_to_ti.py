"""
Time-dependent solution settling onto the steady state
======================================================

The explicit time march starts from an empty tank. At every receiver
distance the power rises and then plateaus; the plateau is the
time-independent solution.
"""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from uowc_rte.receiver import power_profile
from uowc_rte.scenario import ScenarioConfig, build_model
from uowc_rte.solver import td_solve, ti_solve

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

model = build_model(ScenarioConfig.from_dict({"water": {"preset": "harbor-I"}}))
w = model.weights(7, 7)
print(f"CFL number {model.grid.cfl(model.water.c):.3f}, {model.grid.N} time steps")

td = td_solve(model.grid, model.angles, w, model.water, model.source, model.receiver)
ti = ti_solve(model.grid, model.angles, w, model.water, model.source, method="gauss-seidel",
              tol=1e-12, max_sweeps=3000)
steady = power_profile(ti.field, model.receiver)

fig, ax = plt.subplots()
for r in (1.0, 1.5, 2.0, 2.5):
    j = int(round(r / model.grid.dx))
    line, = ax.plot(td.times * 1e9, model.normalize(td.power[:, j]), label=f"{r} m")
    ax.axhline(model.normalize(steady[j]), color=line.get_color(), ls=":")
ax.set_yscale("log")
ax.set_xlabel("time (ns)")
ax.set_ylabel("normalized received power")
ax.legend()
fig.savefig(out / "td_to_ti.png", dpi=120)

tail = td.power[int(0.75 * model.grid.N):, model.columns].mean(axis=0)
gap = np.max(np.abs(tail / steady[model.columns] - 1))
print(f"final-quarter average vs steady state: max relative gap {gap:.2e}")
