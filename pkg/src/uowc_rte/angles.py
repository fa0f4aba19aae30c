"""
Optimal non-uniform discretization of the scattering directions.

The ``K`` directions minimize the density-weighted mean squared
quantization error over ``[0, 2*pi)`` through a Lloyd-Max iteration:
thresholds are the midpoints of neighbouring directions, and each direction
is then moved to the centroid of the density over its cell. The first
threshold is pinned at 0 and the last one at the midpoint between the last
direction and ``2*pi``, so the grid is not forced to be symmetric about the
forward direction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .phase import TWO_PI, PhaseFunction, eval_density

__all__ = [
    "AngularGrid",
    "ConvergenceWarning",
    "DegenerateCellError",
    "EmptyFOVError",
    "thresholds",
    "MomentTable",
    "cell_moments",
    "lloyd_step",
    "quantization_mse",
    "optimal_scattering_angles",
    "discretize_fov",
]


class ConvergenceWarning(RuntimeWarning):
    pass


class DegenerateCellError(ArithmeticError):
    """A quantization cell carries no probability mass."""


class EmptyFOVError(ValueError):
    """No grid direction falls inside the receiver field of view."""


@dataclass(frozen=True)
class AngularGrid:
    angles: np.ndarray
    thresholds: np.ndarray
    mse: float
    iterations: int
    converged: bool
    mse_history: tuple[float, ...] = ()

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)
        t = np.asarray(self.thresholds, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "thresholds", t)
        if np.any(np.diff(a) <= 0):
            raise ValueError("grid angles must be strictly increasing")
        if a[0] < 0 or a[-1] >= TWO_PI:
            raise ValueError("grid angles must lie in [0, 2*pi)")

    @classmethod
    def from_angles(cls, angles) -> "AngularGrid":
        """Wrap an explicit set of directions (no optimization)."""
        a = np.asarray(angles, dtype=float)
        return cls(a, thresholds(a), mse=float("nan"), iterations=0, converged=True)

    @property
    def K(self) -> int:
        return self.angles.size

    @property
    def xi(self) -> np.ndarray:
        return np.cos(self.angles)

    @property
    def eta(self) -> np.ndarray:
        return np.sin(self.angles)

    @property
    def gaps(self) -> np.ndarray:
        """Angular step from each direction to the next one, wrapping at 2*pi."""
        return np.diff(np.append(self.angles, self.angles[0] + TWO_PI))


def thresholds(angles: np.ndarray) -> np.ndarray:
    """Decision thresholds ``d_0..d_K`` for the given directions."""
    a = np.asarray(angles, dtype=float)
    d = np.empty(a.size + 1)
    d[0] = 0.0
    d[1:-1] = 0.5 * (a[:-1] + a[1:])
    # the wrap direction is 2*pi itself, i.e. the forward axis seen from below
    d[-1] = 0.5 * (a[-1] + TWO_PI)
    return d


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_GL10_X, _GL10_W = np.polynomial.legendre.leggauss(10)


def _gauss(f, a, b, x=_GL_X, w=_GL_W):
    """Gauss-Legendre moments of ``f`` over each ``[a, b]`` (vectorized)."""
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    t = a + half * (x + 1.0)
    ft = f(t.ravel()).reshape(t.shape) * half * w
    return np.stack([ft.sum(-1), (t * ft).sum(-1), (t * t * ft).sum(-1)])


class MomentTable:
    """Cumulative moments of a density on ``[0, 2*pi]``.

    Panels are bisected until 10- and 20-point Gauss-Legendre rules agree to
    ``tol``; the running sums then give ``int_0^x phi**n f(phi) dphi`` for
    ``n = 0, 1, 2`` at any ``x`` by one extra partial-panel rule.
    """

    def __init__(self, pf: PhaseFunction, tol: float = 1e-13, max_panels: int = 200_000):
        self.pf = pf
        f = lambda t: eval_density(pf, t)
        brk = [0.0, TWO_PI]
        if pf.variant == "ff":
            brk += [pf.clamp, TWO_PI - pf.clamp]
        edges = np.unique(np.concatenate([np.linspace(0.0, TWO_PI, 65), brk]))
        done_lo, done_hi, done_m = [], [], []
        lo, hi = edges[:-1], edges[1:]
        while lo.size:
            fine = _gauss(f, lo, hi)
            coarse = _gauss(f, lo, hi, _GL10_X, _GL10_W)
            ok = np.all(np.abs(fine - coarse) <= tol * np.maximum(1.0, hi - lo), axis=0)
            ok |= (hi - lo) < 1e-12
            done_lo.append(lo[ok])
            done_hi.append(hi[ok])
            done_m.append(fine[:, ok])
            mid = 0.5 * (lo[~ok] + hi[~ok])
            lo, hi = np.concatenate([lo[~ok], mid]), np.concatenate([mid, hi[~ok]])
            if sum(a.size for a in done_lo) + lo.size > max_panels:
                raise RuntimeError("moment table exceeded its panel budget")
        lo = np.concatenate(done_lo)
        order = np.argsort(lo)
        self.edges = np.append(lo[order], TWO_PI)
        m = np.concatenate(done_m, axis=1)[:, order]
        self.cum = np.concatenate([np.zeros((3, 1)), np.cumsum(m, axis=1)], axis=1)
        self._f = f

    def __call__(self, x):
        """Cumulative moments at ``x``; shape ``(3,) + x.shape``."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, TWO_PI)
        p = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.edges.size - 2)
        a = self.edges[p]
        return self.cum[:, p] + _gauss(self._f, a, x)

    def cells(self, edges):
        """Moments over consecutive cells ``[edges[i], edges[i+1]]``."""
        c = self(edges)
        return np.diff(c, axis=1)


def cell_moments(pf, edges: np.ndarray, table: MomentTable | None = None):
    """Zeroth, first and second moments of the density over each cell."""
    table = MomentTable(pf) if table is None else table
    m = table.cells(np.asarray(edges, dtype=float))
    return m[0], m[1], m[2]


def quantization_mse(pf: PhaseFunction, angles, edges=None, table: MomentTable | None = None) -> float:
    """Density-weighted squared quantization error of a set of directions.

    The sum runs over the ``K`` cells plus the wrap cell
    ``[d_K, 2*pi]``, whose representative is the forward direction at
    ``2*pi``.
    """
    a = np.asarray(angles, dtype=float)
    d = thresholds(a) if edges is None else np.asarray(edges, dtype=float)
    rep = np.append(a, TWO_PI)
    full = np.append(d, TWO_PI)
    m0, m1, m2 = cell_moments(pf, full, table)
    return float(np.sum(m2 - 2.0 * rep * m1 + rep * rep * m0))


def lloyd_step(pf: PhaseFunction, angles, table: MomentTable | None = None):
    """One threshold + centroid update. Returns ``(new_angles, thresholds)``."""
    d = thresholds(angles)
    m0, m1, _ = cell_moments(pf, d, table)
    if np.any(m0 <= 0):
        bad = int(np.flatnonzero(m0 <= 0)[0])
        raise DegenerateCellError(f"cell {bad} [{d[bad]:.6g}, {d[bad + 1]:.6g}] has no mass")
    return m1 / m0, d


def optimal_scattering_angles(
    pf: PhaseFunction,
    K: int = 22,
    eps: float = 1e-8,
    max_iters: int = 5000,
    tol: float = 1e-13,
    track_mse: bool = False,
) -> AngularGrid:
    """Lloyd-Max optimal scattering directions for the density ``pf``.

    Starts from the uniform grid ``(k-1)*2*pi/K`` and iterates until no
    direction moves by more than ``eps`` rad or ``max_iters`` is hit. With
    ``track_mse`` the quantization error of every iterate is kept in
    ``mse_history``.
    """
    if K < 4 or K % 2:
        raise ValueError(f"K must be an even integer >= 4, got {K}")
    if eps <= 0:
        raise ValueError("eps must be positive")

    table = MomentTable(pf, tol=tol)
    phi = np.arange(K) * TWO_PI / K
    history = []
    if track_mse:
        history.append(quantization_mse(pf, phi, table=table))
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        new, _ = lloyd_step(pf, phi, table)
        move = np.max(np.abs(new - phi))
        phi = new
        if track_mse:
            history.append(quantization_mse(pf, phi, table=table))
        if move < eps:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"Lloyd-Max did not reach eps={eps:g} in {max_iters} iterations "
            f"(last move {move:.3g} rad)",
            ConvergenceWarning,
            stacklevel=2,
        )
    mse = history[-1] if track_mse else quantization_mse(pf, phi, table=table)
    return AngularGrid(phi, thresholds(phi), mse, it, converged, tuple(history))


def discretize_fov(grid: AngularGrid, fov_half_angle: float = np.pi / 2):
    """Grid directions inside the receiver field of view.

    Returns ``(indices, angles, gaps, P)``; ``gaps`` are the angular steps
    from each selected direction to the next grid direction. Angles are
    measured from the +x axis after folding to ``[-pi, pi]``.
    """
    if not 0.0 < fov_half_angle <= np.pi:
        raise ValueError("fov_half_angle must lie in (0, pi]")
    folded = np.angle(np.exp(1j * grid.angles))
    idx = np.flatnonzero(np.abs(folded) <= fov_half_angle + 1e-12)
    if idx.size == 0:
        raise EmptyFOVError(
            f"no direction within +/-{fov_half_angle:.3g} rad; the closest grid "
            f"direction is {np.min(np.abs(folded)):.3g} rad off axis"
        )
    return idx, grid.angles[idx], grid.gaps[idx], int(idx.size)
