"""
Finite-difference marching of the two-dimensional radiative transfer equation.

The radiance ``L[i, j, k]`` lives on ``I`` rows (y), ``J`` columns (x) and
``K`` discrete directions. Spatial derivatives use a two-neighbour upwind
stencil chosen by the signs of the direction cosines,

    dL/dy ~ (2 L[i] - L[i-1] - L[i-2]) / (3 dy)      for sin(phi_k) > 0

(and the mirrored stencil for negative sines, likewise in x). Cells outside
the grid hold zero radiance, so missing upstream neighbours simply drop out
of the stencil. In-scattering is the weighted sum ``b * w @ L`` over
directions.

Two solvers share the same discrete operator: explicit forward-Euler time
marching (:func:`td_solve`) and fixed-point sweeps of the steady equation
(:func:`ti_solve`), either Jacobi (whole-field update) or Gauss-Seidel
(in-place, swept in the upwind order of each direction).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numba as nb
import numpy as np

from .angles import AngularGrid
from .phase import WaterOpticalProperties
from .quadrature import WeightMatrix
from .receiver import ReceiverGeometry, power_profile

__all__ = [
    "LIGHT_SPEED_WATER",
    "InstabilityError",
    "DivergenceError",
    "GridSpec",
    "SourceSpec",
    "RadianceField",
    "TDResult",
    "TIResult",
    "source_array",
    "td_step",
    "td_solve",
    "ti_solve",
    "write_snapshot",
]

log = logging.getLogger(__name__)

LIGHT_SPEED_WATER = 299_792_458.0 / 1.33


class InstabilityError(FloatingPointError):
    """Explicit marching produced negative or non-finite radiance."""


class DivergenceError(FloatingPointError):
    """Steady-state sweeps stopped contracting."""


def _count(extent: float, step: float) -> int:
    return int(math.floor(extent / step + 1e-9)) + 1


@dataclass(frozen=True)
class GridSpec:
    dx: float = 0.05
    dy: float = 0.01
    dt: float = 25e-12
    x_max: float = 2.5
    y_max: float = 0.2
    t_max: float = 20e-9
    v: float = LIGHT_SPEED_WATER

    def __post_init__(self):
        for name in ("dx", "dy", "dt", "x_max", "y_max", "t_max", "v"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive, got {val}")
        if self.I < 5 or self.J < 5:
            raise ValueError(f"grid needs at least 5x5 points, got I={self.I}, J={self.J}")
        if self.I % 2 == 0:
            raise ValueError(f"I={self.I} must be odd so the beam axis falls on a row")

    @property
    def I(self) -> int:
        return _count(self.y_max, self.dy)

    @property
    def J(self) -> int:
        return _count(self.x_max, self.dx)

    @property
    def N(self) -> int:
        return _count(self.t_max, self.dt)

    @property
    def x(self) -> np.ndarray:
        """Column positions (m) measured from the source plane."""
        return self.dx * np.arange(self.J)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.N)

    def cfl(self, c: float) -> float:
        """Stability number of the explicit scheme for attenuation ``c``."""
        vdt = self.v * self.dt
        return vdt * (2.0 / (3.0 * self.dx) + 2.0 / (3.0 * self.dy)) + c * vdt


@dataclass(frozen=True)
class SourceSpec:
    """Point source injecting radiance ``S0`` into the first direction.

    Placed in the first column on the middle row unless ``row`` is given.
    """

    S0: float = 1.0
    x0: float = 1e-3
    omega: float = 0.01
    row: int | None = None
    direction: int = 0

    def __post_init__(self):
        if not self.x0 > 0:
            raise ValueError("beam waist x0 must be positive")
        if not 0 < self.omega < np.pi / 2:
            raise ValueError("divergence half-angle must lie in (0, pi/2)")
        if not (np.isfinite(self.S0) and self.S0 >= 0):
            raise ValueError("S0 must be finite and non-negative")

    @classmethod
    def from_power(cls, power: float, x0: float = 1e-3, omega: float = 0.01, **kw):
        """Source radiance of a beam of ``power`` W over a waist disc and ``2*omega``."""
        return cls(S0=power / (np.pi * x0**2 * 2.0 * omega), x0=x0, omega=omega, **kw)

    @property
    def focal_length(self) -> float:
        return -self.x0 / self.omega

    @property
    def reference_power(self) -> float:
        """``S0`` through the waist disc; received powers are divided by this."""
        return self.S0 * np.pi * self.x0**2


@dataclass
class RadianceField:
    values: np.ndarray
    index: int = 0
    time: float | None = None

    @classmethod
    def zeros(cls, grid: GridSpec, K: int) -> "RadianceField":
        return cls(np.zeros((grid.I, grid.J, K)), 0, 0.0)

    @property
    def shape(self):
        return self.values.shape


def source_array(grid: GridSpec, K: int, src: SourceSpec, scale: float = 1.0) -> np.ndarray:
    q = np.zeros((grid.I, grid.J, K))
    row = (grid.I - 1) // 2 if src.row is None else src.row
    q[row, 0, src.direction] = src.S0 * scale
    return q


@dataclass(frozen=True)
class _Operator:
    """Direction-dependent stencil coefficients shared by both solvers."""

    ay: np.ndarray  # |eta_k| / (3 dy)
    ax: np.ndarray  # |xi_k| / (3 dx)
    up_i: np.ndarray  # bool: upstream rows are i-1, i-2
    up_j: np.ndarray
    w: np.ndarray
    b: float
    c: float

    @classmethod
    def build(cls, grid: GridSpec, angles: AngularGrid, w: WeightMatrix,
              water: WaterOpticalProperties):
        if w.K != angles.K:
            raise ValueError(f"weight matrix is {w.K}x{w.K} but the grid has K={angles.K}")
        eta, xi = angles.eta, angles.xi
        return cls(
            ay=np.abs(eta) / (3.0 * grid.dy),
            ax=np.abs(xi) / (3.0 * grid.dx),
            up_i=eta >= 0,
            up_j=xi >= 0,
            w=np.ascontiguousarray(w.w),
            b=water.b,
            c=water.c,
        )

    @property
    def loss(self) -> np.ndarray:
        return 2.0 * self.ay + 2.0 * self.ax + self.c

    def upstream(self, L: np.ndarray):
        """Sums of the two upstream neighbours along y and along x."""
        I, J, _ = L.shape
        P = np.zeros((I + 4, J + 4, L.shape[2]))
        P[2:-2, 2:-2] = L
        core_j = slice(2, J + 2)
        core_i = slice(2, I + 2)
        below = P[1:I + 1, core_j] + P[0:I, core_j]
        above = P[3:I + 3, core_j] + P[4:I + 4, core_j]
        left = P[core_i, 1:J + 1] + P[core_i, 0:J]
        right = P[core_i, 3:J + 3] + P[core_i, 4:J + 4]
        return np.where(self.up_i, below, above), np.where(self.up_j, left, right)

    def gain(self, L: np.ndarray) -> np.ndarray:
        """Inflow from upstream neighbours plus in-scattering."""
        ni, nj = self.upstream(L)
        return self.ay * ni + self.ax * nj + self.b * (L @ self.w.T)


def td_step(field: RadianceField, grid: GridSpec, angles: AngularGrid, w: WeightMatrix,
            water: WaterOpticalProperties, src: SourceSpec, *, allow_unstable: bool = False,
            _op: _Operator | None = None, _q: np.ndarray | None = None) -> RadianceField:
    """Advance the radiance by one explicit time step."""
    op = _Operator.build(grid, angles, w, water) if _op is None else _op
    q = source_array(grid, angles.K, src) if _q is None else _q
    vdt = grid.v * grid.dt
    L = field.values
    new = L * (1.0 - vdt * op.loss) + vdt * (op.gain(L) + q)
    if not allow_unstable:
        if not np.all(np.isfinite(new)) or new.min() < 0.0:
            raise InstabilityError(
                f"negative or non-finite radiance at step {field.index + 1}; "
                f"CFL number is {grid.cfl(water.c):.3f}"
            )
    t = None if field.time is None else field.time + grid.dt
    return RadianceField(new, field.index + 1, t)


@dataclass
class TDResult:
    times: np.ndarray
    field: RadianceField
    power: np.ndarray | None = None  # (N, J) received power per column
    history: list[RadianceField] = field(default_factory=list)
    cfl: float = float("nan")


def td_solve(grid: GridSpec, angles: AngularGrid, w: WeightMatrix,
             water: WaterOpticalProperties, src: SourceSpec,
             receiver: ReceiverGeometry | None = None, *, keep_history: bool = False,
             allow_unstable: bool = False,
             progress: Callable[[int, int], None] | None = None) -> TDResult:
    """March from a zero field over ``grid.N`` time instants.

    Only the current slice is kept unless ``keep_history``; with a
    ``receiver`` the power at every column is recorded for every instant.
    """
    nu = grid.cfl(water.c)
    if nu >= 1.0 and not allow_unstable:
        raise InstabilityError(f"CFL number {nu:.3f} >= 1; refine dt or pass allow_unstable")
    op = _Operator.build(grid, angles, w, water)
    q = source_array(grid, angles.K, src)
    cur = RadianceField.zeros(grid, angles.K)
    N = grid.N
    power = None
    if receiver is not None:
        power = np.zeros((N, grid.J))
        power[0] = power_profile(cur, receiver)
    history = [cur] if keep_history else []
    for n in range(1, N):
        cur = td_step(cur, grid, angles, w, water, src, allow_unstable=allow_unstable,
                      _op=op, _q=q)
        if power is not None:
            power[n] = power_profile(cur, receiver)
        if keep_history:
            history.append(cur)
        if progress is not None:
            progress(n, N)
    return TDResult(grid.t, cur, power, history, nu)


@nb.njit(cache=True)
def _gs_sweep(L, w, ay, ax, up_i, up_j, b, loss, q):  # pragma: no cover - numba
    I, J, K = L.shape
    change = 0.0
    for k in range(K):
        for ii in range(I):
            i = ii if up_i[k] else I - 1 - ii
            si = -1 if up_i[k] else 1
            for jj in range(J):
                j = jj if up_j[k] else J - 1 - jj
                sj = -1 if up_j[k] else 1
                ni = 0.0
                if 0 <= i + si < I:
                    ni += L[i + si, j, k]
                if 0 <= i + 2 * si < I:
                    ni += L[i + 2 * si, j, k]
                nj = 0.0
                if 0 <= j + sj < J:
                    nj += L[i, j + sj, k]
                if 0 <= j + 2 * sj < J:
                    nj += L[i, j + 2 * sj, k]
                scat = 0.0
                for m in range(K):
                    scat += w[k, m] * L[i, j, m]
                new = (ay[k] * ni + ax[k] * nj + b * scat + q[i, j, k]) / loss[k]
                d = abs(new - L[i, j, k])
                if d > change:
                    change = d
                L[i, j, k] = new
    return change


@dataclass
class TIResult:
    field: RadianceField
    sweeps: int
    converged: bool
    residuals: np.ndarray


def ti_solve(grid: GridSpec, angles: AngularGrid, w: WeightMatrix,
             water: WaterOpticalProperties, src: SourceSpec, *, max_sweeps: int = 320,
             tol: float = 1e-10, method: str = "jacobi", source_scaling: str = "none",
             initial: RadianceField | None = None) -> TIResult:
    """Steady-state radiance by fixed-point sweeps.

    ``tol`` bounds the max-norm change of a sweep relative to the max-norm of
    the field. ``source_scaling="times_c"`` multiplies the source by the
    attenuation coefficient, a variant of the steady-state source term.
    """
    if method not in ("jacobi", "gauss-seidel"):
        raise ValueError(f"method must be 'jacobi' or 'gauss-seidel', got {method!r}")
    if source_scaling not in ("none", "times_c"):
        raise ValueError("source_scaling must be 'none' or 'times_c'")
    op = _Operator.build(grid, angles, w, water)
    scale = water.c if source_scaling == "times_c" else 1.0
    q = source_array(grid, angles.K, src, scale)
    L = np.zeros((grid.I, grid.J, angles.K)) if initial is None else initial.values.copy()
    loss = op.loss
    residuals = []
    growth = 0
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        if method == "jacobi":
            new = (op.gain(L) + q) / loss
            change = float(np.max(np.abs(new - L)))
            L = new
        else:
            change = _gs_sweep(L, op.w, op.ay, op.ax, op.up_i, op.up_j, op.b, loss, q)
        if not np.isfinite(change):
            raise DivergenceError(f"non-finite radiance after sweep {sweep}")
        scale_norm = float(np.max(np.abs(L)))
        rel = change / scale_norm if scale_norm > 0 else 0.0
        if residuals and rel > residuals[-1]:
            growth += 1
            if growth >= 10:
                raise DivergenceError(f"residual grew for 10 consecutive sweeps (sweep {sweep})")
        else:
            growth = 0
        residuals.append(rel)
        if rel < tol:
            converged = True
            break
    if not converged:
        log.warning("TI sweeps stopped at %d with relative change %.3g", sweep, residuals[-1])
    return TIResult(RadianceField(L, sweep), sweep, converged, np.array(residuals))


def write_snapshot(field: RadianceField, path) -> None:
    """Dump a radiance field: ``.npy`` binary, otherwise CSV rows ``i,j,k,value``."""
    path = str(path)
    if path.endswith(".npy"):
        np.save(path, field.values)
        return
    I, J, K = field.values.shape
    ii, jj, kk = np.meshgrid(np.arange(I), np.arange(J), np.arange(K), indexing="ij")
    table = np.column_stack([ii.ravel(), jj.ravel(), kk.ravel(), field.values.ravel()])
    np.savetxt(path, table, delimiter=",", header="i,j,k,value", comments="",
               fmt=["%d", "%d", "%d", "%.17g"])
