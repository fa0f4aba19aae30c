"""Discrete-ordinates solver of the 2-D radiative transfer equation for underwater optical links."""

__version__ = "0.1.0"

from .angles import AngularGrid, discretize_fov, optimal_scattering_angles
from .link import ReceiverElectronics, ber_ook, snr
from .montecarlo import MCReceiver, build_cdf, trace_photons, trace_planes
from .phase import PhaseFunction, WaterOpticalProperties, eval_density, fournier_forand, sthg, tthg
from .quadrature import WeightMatrix, weight_matrix
from .receiver import ReceiverGeometry, received_power, ring_areas
from .scenario import ConfigError, ScenarioConfig, load_config, run
from .solver import GridSpec, RadianceField, SourceSpec, td_solve, td_step, ti_solve

__all__ = [
    "AngularGrid", "discretize_fov", "optimal_scattering_angles",
    "ReceiverElectronics", "ber_ook", "snr",
    "MCReceiver", "build_cdf", "trace_photons", "trace_planes",
    "PhaseFunction", "WaterOpticalProperties", "eval_density", "fournier_forand", "sthg", "tthg",
    "WeightMatrix", "weight_matrix",
    "ReceiverGeometry", "received_power", "ring_areas",
    "ConfigError", "ScenarioConfig", "load_config", "run",
    "GridSpec", "RadianceField", "SourceSpec", "td_solve", "td_step", "ti_solve",
]
