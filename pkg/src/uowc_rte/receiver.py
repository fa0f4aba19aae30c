"""
Received optical power from a discretized radiance field.

The receiver aperture sits in the plane normal to the x axis at a grid
column. It is split into concentric rings of width ``dy`` around the beam
axis; the radiance in the grid row at each ring's radius stands in for the
whole ring, and only directions inside the field of view are summed,
each weighted by its angular step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angles import AngularGrid, discretize_fov

__all__ = ["RING_MODELS", "ReceiverGeometry", "ring_areas", "received_power", "power_profile"]

RING_MODELS = ("annular", "recurrence")


def ring_areas(dy: float, R: float, model: str = "annular") -> np.ndarray:
    """Areas of the aperture rings (m^2).

    ``"annular"``: ``pi*(dy/2)**2`` for the central disc and
    ``2*pi*dy**2*(l-1)`` for ring ``l >= 2``, with ``L = floor(R/dy)`` rings.
    ``"recurrence"``: the alternating recurrence ``s_n = pi*r_n**2 - s_{n-1}``
    with ``r_n = dy/2 + (n-1)*dy`` over ``L + 1`` rings.
    """
    if dy <= 0:
        raise ValueError("dy must be positive")
    if R < dy * (1 - 1e-12):
        raise ValueError(f"aperture radius R={R} is smaller than the grid step dy={dy}")
    L = int(np.floor(R / dy + 1e-9))
    if model == "annular":
        areas = 2.0 * np.pi * dy**2 * np.arange(L, dtype=float)
        areas[0] = np.pi * (dy / 2.0) ** 2
        return areas
    if model == "recurrence":
        r = dy / 2.0 + dy * np.arange(L + 1)
        s = np.empty(L + 1)
        s[0] = np.pi * r[0] ** 2
        for n in range(1, L + 1):
            s[n] = np.pi * r[n] ** 2 - s[n - 1]
        return s
    raise ValueError(f"ring model must be one of {RING_MODELS}, got {model!r}")


@dataclass(frozen=True)
class ReceiverGeometry:
    """Aperture rings plus the field-of-view directions of a receiver."""

    R: float
    dy: float
    fov_half_angle: float
    areas: np.ndarray
    directions: np.ndarray  # indices into the angular grid
    gaps: np.ndarray
    ring_model: str = "annular"

    @classmethod
    def build(cls, grid: AngularGrid, dy: float, R: float = 0.05,
              fov_half_angle: float = np.pi / 2, ring_model: str = "annular"):
        areas = ring_areas(dy, R, ring_model)
        idx, _, gaps, _ = discretize_fov(grid, fov_half_angle)
        return cls(R, dy, fov_half_angle, areas, idx, gaps, ring_model)

    @property
    def L(self) -> int:
        return self.areas.size

    @property
    def P(self) -> int:
        return self.directions.size

    def rows(self, I: int) -> np.ndarray:
        """Grid rows sampled by the rings, upward from the beam axis."""
        center = (I - 1) // 2
        if center + self.L > I:
            raise ValueError(
                f"{self.L} rings above row {center} do not fit in a grid of {I} rows"
            )
        return center + np.arange(self.L)


def _values(field):
    return getattr(field, "values", field)


def power_profile(field, geom: ReceiverGeometry) -> np.ndarray:
    """Received power (W) with the receiver placed at every grid column."""
    L = np.asarray(_values(field))
    rows = geom.rows(L.shape[0])
    block = L[rows][:, :, geom.directions]
    return np.einsum("l,ljp,p->j", geom.areas, block, geom.gaps)


def received_power(field, geom: ReceiverGeometry, column: int = -1) -> float:
    """Received power (W) at one grid column (the last one by default)."""
    L = np.asarray(_values(field))
    rows = geom.rows(L.shape[0])
    block = L[rows, column][:, geom.directions]
    if not np.all(np.isfinite(block)):
        raise FloatingPointError("radiance field holds non-finite values")
    return float(geom.areas @ block @ geom.gaps)
