"""
Link budget along the channel
=============================

Received power turns into an electrical SNR and an on-off keying bit error
rate. The transmit power and photodiode values are the scenario defaults,
which are placeholders; change them in the configuration.
"""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from uowc_rte.receiver import power_profile
from uowc_rte.scenario import ScenarioConfig, build_model
from uowc_rte.solver import ti_solve

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

fig, (ax_p, ax_b) = plt.subplots(1, 2, figsize=(10, 4))
for preset in ("harbor-I", "harbor-II"):
    model = build_model(ScenarioConfig.from_dict({"water": {"preset": preset}}))
    res = ti_solve(model.grid, model.angles, model.weights(7, 7), model.water, model.source,
                   method="gauss-seidel", tol=1e-12, max_sweeps=3000)
    power = power_profile(res.field, model.receiver)[model.columns]
    ber = model.ber(power)
    ax_p.semilogy(model.distances, power, label=preset)
    ax_b.semilogy(model.distances, ber, label=preset)
    print(f"{preset}: P_r {power[0]:.3e} W -> {power[-1]:.3e} W, BER {ber[0]:.2e} -> {ber[-1]:.2e}")
ax_p.set_ylabel("received power (W)")
ax_b.set_ylabel("bit error rate")
for ax in (ax_p, ax_b):
    ax.set_xlabel("distance (m)")
    ax.legend()
fig.savefig(out / "ber_link.png", dpi=120)
