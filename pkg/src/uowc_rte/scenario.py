"""
Scenario configuration and the end-to-end run pipeline.

A scenario is one YAML (or JSON) document with nested sections::

    water: {preset: harbor-I}          # or {a: ..., b: ...} / {b: ..., c: ...}
    phase: {variant: sthg, params: [0.93]}
    grid: {dx: 0.05, dy: 0.01, dt: 25.0e-12, x_max: 2.5, y_max: 0.2, t_max: 20.0e-9}
    source: {power: 1.0e-6, x0: 1.0e-3, omega: null}
    receiver: {R: 0.05, fov_half_angle: 1.5707963, ring_model: annular, start: 1.0}
    electronics: {R_s: 0.5, I_D: 1.0e-9, ...}
    quadrature: {scheme: 7, M: 7, sweep: [[7, 7], [7, 14]]}
    K: 22
    mode: ti
    solver: {method: jacobi, max_sweeps: 320, tol: 1.0e-10, source_scaling: none}
    mc: {n_photons: 1000000, chunk: 65536, workers: 1, resolution: 65536}
    seed: 0

Missing keys take the defaults below. An ``omega`` of ``null`` ties the
source divergence to the first optimized direction.
"""
from __future__ import annotations

import copy
import json
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .angles import AngularGrid, optimal_scattering_angles
from .link import ReceiverElectronics, ber_ook, snr
from .montecarlo import MCReceiver, MCResult, MCStatisticalError, build_cdf, trace_planes
from .montecarlo import write_csv as write_mc_csv
from .phase import PhaseFunction, WaterOpticalProperties, fournier_forand, sthg, tthg
from .quadrature import weight_matrix
from .receiver import ReceiverGeometry, power_profile
from .solver import GridSpec, SourceSpec, td_solve, ti_solve

__all__ = [
    "ConfigError",
    "WATER_PRESETS",
    "PSF_DEFAULTS",
    "MODES",
    "ScenarioConfig",
    "load_config",
    "build_model",
    "Model",
    "run",
]

log = logging.getLogger(__name__)

WATER_PRESETS = {"harbor-I": (0.91, 1.1), "harbor-II": (1.8177, 2.2)}
PSF_DEFAULTS = {"sthg": sthg().params, "tthg": tthg().params, "ff": fournier_forand().params}
MODES = ("td", "ti", "mc", "compare")


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""


DEFAULTS = {
    "water": {"preset": "harbor-I"},
    "phase": {"variant": "sthg", "params": None},
    "grid": {"dx": 0.05, "dy": 0.01, "dt": 25e-12, "x_max": 2.5, "y_max": 0.2, "t_max": 20e-9},
    "source": {"power": 1e-6, "x0": 1e-3, "omega": None},
    "receiver": {"R": 0.05, "fov_half_angle": float(np.pi / 2), "ring_model": "annular",
                 "start": 1.0},
    "electronics": {},
    "quadrature": {"scheme": 7, "M": 7, "mirror": True, "sweep": None},
    "K": 22,
    "mode": "ti",
    "solver": {"method": "jacobi", "max_sweeps": 320, "tol": 1e-10,
               "source_scaling": "none", "allow_unstable": False},
    "mc": {"n_photons": 1_000_000, "chunk": 2**16, "workers": 1, "resolution": 2**16,
           "tally": "fraction", "cutoff": 1e-4, "survival": 0.1},
    "seed": 0,
    "output": {"dir": "out", "plot": False},
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in (over or {}).items():
        if key not in base:
            raise ConfigError(f"{path}{key}: unknown key (expected one of {sorted(base)})")
        if isinstance(base[key], dict) and key not in ("water", "electronics"):
            if not isinstance(val, dict):
                raise ConfigError(f"{path}{key}: expected a mapping")
            out[key] = _merge(base[key], val, f"{path}{key}.")
        else:
            out[key] = copy.deepcopy(val)
    return out


def _preset(name: str):
    for key, val in WATER_PRESETS.items():
        if key.lower() == str(name).lower().replace("_", "-"):
            return key, val
    raise ConfigError(f"water.preset: unknown preset {name!r}; valid presets are "
                      f"{', '.join(WATER_PRESETS)}")


@dataclass
class ScenarioConfig:
    """Fully resolved scenario; :meth:`to_dict` round-trips through :meth:`from_dict`."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, d: dict | None = None) -> "ScenarioConfig":
        if d is not None and "config" in d and "versions" in d:
            d = d["config"]  # a run manifest
        cfg = cls(_merge(DEFAULTS, d or {}))
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def override(self, **kw) -> "ScenarioConfig":
        """Copy with dotted-path overrides, e.g. ``override(**{"grid.dx": 0.01})``."""
        d = self.to_dict()
        for key, val in kw.items():
            node = d
            parts = key.split(".")
            for p in parts[:-1]:
                node = node.setdefault(p, {})
            node[parts[-1]] = val
        return ScenarioConfig.from_dict(d)

    def __getitem__(self, key):
        return self.data[key]

    # validation -----------------------------------------------------------

    def validate(self) -> None:
        d = self.data
        if d["mode"] not in MODES:
            raise ConfigError(f"mode: must be one of {MODES}, got {d['mode']!r}")
        self.water()
        self.phase()
        try:
            grid = self.grid()
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(f"grid: {err}") from None
        K = d["K"]
        if not isinstance(K, int) or K < 4 or K % 2:
            raise ConfigError(f"K: must be an even integer >= 4, got {K!r}")
        q = d["quadrature"]
        pairs = self.quadrature_runs()
        for scheme, M in pairs:
            if scheme not in (3, 5, 7):
                raise ConfigError(f"quadrature.scheme: must be 3, 5 or 7, got {scheme!r}")
            if not isinstance(M, int) or M < scheme:
                raise ConfigError(f"quadrature.M: {scheme}-point scheme needs M >= {scheme}, got {M!r}")
        if not isinstance(q["mirror"], bool):
            raise ConfigError("quadrature.mirror: must be true or false")
        s = d["solver"]
        if s["method"] not in ("jacobi", "gauss-seidel"):
            raise ConfigError("solver.method: must be 'jacobi' or 'gauss-seidel'")
        if s["source_scaling"] not in ("none", "times_c"):
            raise ConfigError("solver.source_scaling: must be 'none' or 'times_c'")
        if not (isinstance(s["max_sweeps"], int) and s["max_sweeps"] > 0):
            raise ConfigError("solver.max_sweeps: must be a positive integer")
        r = d["receiver"]
        if r["ring_model"] not in ("annular", "recurrence"):
            raise ConfigError("receiver.ring_model: must be 'annular' or 'recurrence'")
        if not 0 < r["fov_half_angle"] <= np.pi:
            raise ConfigError("receiver.fov_half_angle: must lie in (0, pi]")
        if not r["R"] >= grid.dy:
            raise ConfigError(f"receiver.R: aperture radius {r['R']} is smaller than grid.dy")
        if int(np.floor(r["R"] / grid.dy + 1e-9)) + (grid.I - 1) // 2 > grid.I:
            raise ConfigError("receiver.R: rings do not fit inside the grid height")
        if not 0 <= r["start"] < grid.x_max:
            raise ConfigError("receiver.start: must lie in [0, grid.x_max)")
        src = d["source"]
        if not src["power"] > 0:
            raise ConfigError("source.power: must be positive")
        if not src["x0"] > 0:
            raise ConfigError("source.x0: must be positive")
        if src["omega"] is not None and not 0 < src["omega"] < np.pi / 2:
            raise ConfigError("source.omega: must lie in (0, pi/2) or be null")
        try:
            self.electronics()
        except (TypeError, ValueError) as err:
            raise ConfigError(f"electronics: {err}") from None
        mc = d["mc"]
        if not (isinstance(mc["n_photons"], int) and mc["n_photons"] >= 1):
            raise ConfigError("mc.n_photons: must be a positive integer")
        if mc["tally"] not in ("fraction", "rings"):
            raise ConfigError("mc.tally: must be 'fraction' or 'rings'")
        if not (isinstance(mc["resolution"], int) and mc["resolution"] >= 2**14):
            raise ConfigError("mc.resolution: must be an integer >= 16384")
        if not (isinstance(d["seed"], int) and d["seed"] >= 0):
            raise ConfigError("seed: must be a non-negative integer")

    # builders -------------------------------------------------------------

    def water(self) -> WaterOpticalProperties:
        w = self.data["water"]
        if not isinstance(w, dict):
            raise ConfigError("water: expected a mapping")
        try:
            if "preset" in w:
                if set(w) - {"preset"}:
                    raise ConfigError("water: give either a preset or explicit coefficients")
                _, (b, c) = _preset(w["preset"])
                return WaterOpticalProperties.from_bc(b, c)
            if set(w) == {"a", "b"}:
                return WaterOpticalProperties(float(w["a"]), float(w["b"]))
            if set(w) == {"b", "c"}:
                return WaterOpticalProperties.from_bc(float(w["b"]), float(w["c"]))
            if set(w) == {"a", "b", "c"}:
                if not np.isclose(w["a"] + w["b"], w["c"]):
                    raise ConfigError("water: c must equal a + b")
                return WaterOpticalProperties(float(w["a"]), float(w["b"]))
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(f"water: {err}") from None
        raise ConfigError("water: expected {preset}, {a, b}, {b, c} or {a, b, c}; valid presets "
                          f"are {', '.join(WATER_PRESETS)}")

    def phase(self) -> PhaseFunction:
        p = self.data["phase"]
        v = str(p["variant"]).lower()
        if v not in PSF_DEFAULTS:
            raise ConfigError(f"phase.variant: must be one of {sorted(PSF_DEFAULTS)}, got {v!r}")
        params = PSF_DEFAULTS[v] if p["params"] is None else tuple(p["params"])
        try:
            return PhaseFunction(v, params)
        except ValueError as err:
            raise ConfigError(f"phase.params: {err}") from None

    def grid(self) -> GridSpec:
        g = self.data["grid"]
        try:
            vals = {k: float(g[k]) for k in ("dx", "dy", "dt", "x_max", "y_max", "t_max")}
        except (TypeError, ValueError):
            raise ConfigError("grid: steps and extents must be numbers") from None
        return GridSpec(**vals)

    def electronics(self) -> ReceiverElectronics:
        return ReceiverElectronics(**self.data["electronics"])

    def quadrature_runs(self) -> list[tuple[int, int]]:
        q = self.data["quadrature"]
        if q["sweep"]:
            try:
                return [(int(s), int(m)) for s, m in q["sweep"]]
            except (TypeError, ValueError):
                raise ConfigError("quadrature.sweep: expected a list of [scheme, M] pairs") from None
        return [(q["scheme"], q["M"])]


def load_config(path=None, **overrides) -> ScenarioConfig:
    """Read a YAML/JSON scenario (or run manifest) and apply dotted overrides."""
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                if str(path).endswith(".json"):
                    data = json.load(fh)
                else:
                    data = yaml.safe_load(fh) or {}
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        except (yaml.YAMLError, json.JSONDecodeError) as err:
            raise ConfigError(f"config {path} is not valid YAML: {err}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a mapping at the top level")
    cfg = ScenarioConfig.from_dict(data)
    return cfg.override(**overrides) if overrides else cfg


@dataclass
class Model:
    """Everything the solvers need, built once from a configuration."""

    config: ScenarioConfig
    water: WaterOpticalProperties
    pf: PhaseFunction
    grid: GridSpec
    angles: AngularGrid
    source: SourceSpec
    receiver: ReceiverGeometry
    electronics: ReceiverElectronics
    columns: np.ndarray
    timings: dict

    @property
    def distances(self) -> np.ndarray:
        return self.grid.x[self.columns]

    def weights(self, scheme: int, M: int):
        q = self.config["quadrature"]
        return weight_matrix(self.pf, self.angles, M, scheme, mirror=q["mirror"])

    def normalize(self, power):
        return np.asarray(power) / self.source.reference_power

    def ber(self, power):
        return ber_ook(snr(np.asarray(power), self.electronics))


def build_model(cfg: ScenarioConfig) -> Model:
    timings = {}
    t0 = time.perf_counter()
    pf = cfg.phase()
    angles = optimal_scattering_angles(pf, cfg["K"])
    timings["angles_s"] = time.perf_counter() - t0
    grid = cfg.grid()
    src = cfg["source"]
    omega = float(angles.angles[0]) if src["omega"] is None else float(src["omega"])
    source = SourceSpec.from_power(src["power"], x0=src["x0"], omega=omega)
    r = cfg["receiver"]
    receiver = ReceiverGeometry.build(angles, grid.dy, r["R"], r["fov_half_angle"], r["ring_model"])
    start = int(np.ceil(r["start"] / grid.dx - 1e-9))
    columns = np.arange(start, grid.J)
    return Model(cfg, cfg.water(), pf, grid, angles, source, receiver, cfg.electronics(),
                 columns, timings)


def _versions() -> dict:
    import numba
    import scipy

    return {"artifact": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def _fmt(v) -> str:
    return repr(float(v))


def _write_table(path: Path, header: list[str], cols) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _ti(model: Model, scheme: int, M: int):
    s = model.config["solver"]
    t0 = time.perf_counter()
    w = model.weights(scheme, M)
    t1 = time.perf_counter()
    res = ti_solve(model.grid, model.angles, w, model.water, model.source,
                   max_sweeps=s["max_sweeps"], tol=s["tol"], method=s["method"],
                   source_scaling=s["source_scaling"])
    t2 = time.perf_counter()
    power = power_profile(res.field, model.receiver)[model.columns]
    info = {"scheme": scheme, "M": M, "sweeps": res.sweeps, "converged": res.converged,
            "weights_s": t1 - t0, "solve_s": t2 - t1}
    return power, info


def _mc(model: Model) -> MCResult:
    m = model.config["mc"]
    sampler = build_cdf(model.pf, m["resolution"])
    rec = MCReceiver(model.receiver.R, model.receiver.fov_half_angle, model.grid.dy, m["tally"],
                     model.receiver.ring_model)
    res = trace_planes(m["n_photons"], model.water, sampler, rec, model.distances,
                       x_max=model.grid.x_max, seed=model.config["seed"],
                       omega=model.source.omega, y_max=model.grid.y_max, cutoff=m["cutoff"],
                       survival=m["survival"], chunk=m["chunk"], workers=m["workers"])
    if np.any(res.fraction <= 0):
        bad = model.distances[np.flatnonzero(res.fraction <= 0)[0]]
        raise MCStatisticalError(f"no photon reached the receiver at {bad:.3g} m; "
                                 "increase mc.n_photons")
    return res


@dataclass
class RunResult:
    out_dir: Path
    files: list
    manifest: dict
    tables: dict


def run(cfg: ScenarioConfig, out_dir=None, plot: bool | None = None,
        progress=None) -> RunResult:
    """Execute the configured pipeline and write CSV, manifest and plots."""
    out = Path(out_dir if out_dir is not None else cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    plot = cfg["output"]["plot"] if plot is None else plot
    model = build_model(cfg)
    mode = cfg["mode"]
    d = model.distances
    files, tables, info = [], {}, {}
    timings = dict(model.timings)

    if mode == "ti":
        runs = cfg.quadrature_runs()
        curves = {}
        for scheme, M in runs:
            power, meta = _ti(model, scheme, M)
            curves[(scheme, M)] = power
            info.setdefault("ti", []).append(meta)
            name = "ti.csv" if len(runs) == 1 else f"ti_s{scheme}_M{M}.csv"
            _write_table(out / name, ["distance_m", "power_norm", "ber"],
                         [d, model.normalize(power), model.ber(power)])
            files.append(name)
            tables[name] = model.normalize(power)
        if len(runs) > 1:
            ref = curves[runs[0]]
            info["sweep_max_rel_diff"] = {
                f"{s}/{M}": float(np.max(np.abs(c / ref - 1))) for (s, M), c in curves.items()
            }
    elif mode == "td":
        q = cfg["quadrature"]
        t0 = time.perf_counter()
        w = model.weights(q["scheme"], q["M"])
        t1 = time.perf_counter()
        res = td_solve(model.grid, model.angles, w, model.water, model.source, model.receiver,
                       allow_unstable=cfg["solver"]["allow_unstable"], progress=progress)
        timings.update(weights_s=t1 - t0, solve_s=time.perf_counter() - t1)
        power = res.power[:, model.columns]
        tt = np.repeat(res.times, d.size)
        dd = np.tile(d, res.times.size)
        _write_table(out / "td.csv", ["distance_m", "time_s", "power_norm", "ber"],
                     [dd, tt, model.normalize(power).ravel(), model.ber(power).ravel()])
        n0 = int(0.75 * res.times.size)
        avg = power[n0:].mean(axis=0)
        _write_table(out / "td_average.csv", ["distance_m", "power_norm", "ber"],
                     [d, model.normalize(avg), model.ber(avg)])
        files += ["td.csv", "td_average.csv"]
        tables["td"] = model.normalize(power)
        tables["td_average"] = model.normalize(avg)
        info["cfl"] = res.cfl
    elif mode == "mc":
        res = _mc(model)
        timings["mc_s"] = res.elapsed
        write_mc_csv(res, out / "mc.csv")
        files.append("mc.csv")
        tables["mc"] = res.fraction
    else:
        q = cfg["quadrature"]
        power, meta = _ti(model, q["scheme"], q["M"])
        info["ti"] = [meta]
        res = _mc(model)
        timings["mc_s"] = res.elapsed
        rte = power / power[0]
        mc = res.normalized()
        ratio = np.abs(np.log10(rte / mc))
        _write_table(out / "compare.csv",
                     ["distance_m", "power_rte", "power_mc", "mc_stderr", "abs_log10_ratio"],
                     [d, rte, mc, res.stderr / res.fraction[0], ratio])
        files.append("compare.csv")
        tables["compare"] = ratio
        info["max_abs_log10_ratio"] = float(ratio.max())

    for meta in info.get("ti", []):
        timings[f"ti_{meta['scheme']}_{meta['M']}_weights_s"] = meta["weights_s"]
        timings[f"ti_{meta['scheme']}_{meta['M']}_solve_s"] = meta["solve_s"]

    if plot:
        from .plotting import plot_run

        files += plot_run(mode, model, tables, out)

    manifest = {
        "config": cfg.to_dict(),
        "versions": _versions(),
        "timings": timings,
        "grid": {"I": model.grid.I, "J": model.grid.J, "N": model.grid.N,
                 "cfl": model.grid.cfl(model.water.c)},
        "angles": {"K": model.angles.K, "iterations": model.angles.iterations,
                   "converged": model.angles.converged},
        "source": {"S0": model.source.S0, "omega": model.source.omega},
        "info": info,
        "files": files,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=float)
    files.append("manifest.json")
    return RunResult(out, files, manifest, tables)
