"""
Quadrature weights replacing the in-scattering integral.

Each interval between two successive scattering directions is split into
``M - 1`` sub-steps of width ``h`` and integrated with overlapping
Newton-Cotes panels (2-, 3-, 5- and 7-point rules), each rescaled so that
their union tiles the interval. The first row of the weight matrix holds
the interval integrals, normalized to sum to one; every other row is a
shifted copy of it (``w[k, ks] = w[0, |k - ks|]``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .angles import AngularGrid
from .phase import TWO_PI, PhaseFunction, eval_density

__all__ = [
    "SCHEMES",
    "MIN_POINTS",
    "WeightMatrix",
    "composite_coefficients",
    "panel_terms",
    "row_weights",
    "weight_matrix",
    "write_csv",
]

SCHEMES = (3, 5, 7)
MIN_POINTS = {3: 3, 5: 5, 7: 7}

_BOOLE = np.array([7.0, 32.0, 12.0, 32.0, 7.0])
_WEDDLE = np.array([41.0, 216.0, 27.0, 272.0, 27.0, 216.0, 41.0])
_SIMPSON = np.array([1.0, 4.0, 1.0])


@dataclass(frozen=True)
class WeightMatrix:
    w: np.ndarray
    scheme: int
    M: int
    raw: np.ndarray  # first row before normalization
    steps: np.ndarray  # sub-step h per interval

    @property
    def K(self) -> int:
        return self.w.shape[0]

    def row_sums(self) -> np.ndarray:
        return self.w.sum(axis=1)


def _check(scheme: int, M: int):
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme}")
    if M < MIN_POINTS[scheme]:
        raise ValueError(f"{scheme}-point scheme needs M >= {MIN_POINTS[scheme]}, got M={M}")


def _terms(f, h, scheme: int, M: int):
    """Panel terms for sample values ``f[..., 0:M]`` on a step ``h``."""
    h = np.asarray(h, dtype=float)[..., None]
    out = np.empty(f.shape[:-1] + (M,))
    if scheme == 7:
        out[..., 0] = h[..., 0] / 18.0 * (f[..., 0] + 2.0 * f[..., 1])
        out[..., 1] = 2.0 * h[..., 0] / 36.0 * (f[..., 0:3] @ _SIMPSON)
        out[..., 2] = 4.0 * h[..., 0] / 180.0 * (f[..., 0:5] @ _BOOLE)
        # interior band l = 4..M-3 (1-based) uses samples l-4 .. l+2
        n_mid = M - 6
        if n_mid > 0:
            win = np.lib.stride_tricks.sliding_window_view(f, 7, axis=-1)
            out[..., 3 : M - 3] = 6.0 * h / 5040.0 * (win[..., :n_mid, :] @ _WEDDLE)
        out[..., M - 3] = 4.0 * h[..., 0] / 180.0 * (f[..., M - 5 : M] @ _BOOLE)
        out[..., M - 2] = 2.0 * h[..., 0] / 36.0 * (f[..., M - 3 : M] @ _SIMPSON)
        out[..., M - 1] = h[..., 0] / 18.0 * (f[..., M - 2] + 2.0 * f[..., M - 1])
    elif scheme == 5:
        out[..., 0] = h[..., 0] / 12.0 * (2.0 * f[..., 0] + f[..., 1])
        out[..., 1] = 2.0 * h[..., 0] / 12.0 * (f[..., 0:3] @ _SIMPSON)
        n_mid = M - 4
        if n_mid > 0:
            win = np.lib.stride_tricks.sliding_window_view(f, 5, axis=-1)
            out[..., 2 : M - 2] = 4.0 * h / 360.0 * (win[..., :n_mid, :] @ _BOOLE)
        out[..., M - 2] = 2.0 * h[..., 0] / 12.0 * (f[..., M - 3 : M] @ _SIMPSON)
        out[..., M - 1] = h[..., 0] / 12.0 * (f[..., M - 2] + 2.0 * f[..., M - 1])
    else:
        out[..., 0] = h[..., 0] / 6.0 * (2.0 * f[..., 0] + f[..., 1])
        win = np.lib.stride_tricks.sliding_window_view(f, 3, axis=-1)
        out[..., 1 : M - 1] = 2.0 * h / 12.0 * (win[..., : M - 2, :] @ _SIMPSON)
        out[..., M - 1] = h[..., 0] / 6.0 * (f[..., M - 2] + 2.0 * f[..., M - 1])
    return out


@lru_cache(maxsize=None)
def composite_coefficients(scheme: int, M: int) -> np.ndarray:
    """Per-sample coefficients ``c`` with ``sum_l S(l) = h * (c @ f)``."""
    _check(scheme, M)
    c = _terms(np.eye(M), np.ones(M), scheme, M).sum(axis=1)
    c.setflags(write=False)
    return c


def _density_on(pf, lo, hi, M):
    h = (hi - lo) / (M - 1)
    x = lo[:, None] + h[:, None] * np.arange(M)
    x[:, -1] = hi
    f = eval_density(pf, np.clip(x, 0.0, TWO_PI))
    if not np.all(np.isfinite(f)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(f), axis=1))[0])
        raise FloatingPointError(
            f"non-finite density on interval {bad} [{lo[bad]:.6g}, {hi[bad]:.6g}]"
        )
    return f, h


def _intervals(grid: AngularGrid, mirror: bool):
    a = grid.angles
    if mirror:
        n = grid.K // 2
        return a[:n], a[1 : n + 1]
    nxt = np.append(a[1:], TWO_PI)
    return a, nxt


def panel_terms(pf: PhaseFunction, grid: AngularGrid, ks: int, M: int = 7, scheme: int = 7):
    """Quadrature terms ``S(1..M)`` over ``[phi_ks, phi_ks+1]`` (``ks`` 0-based).

    The last interval ends at ``2*pi``.
    """
    _check(scheme, M)
    if not 0 <= ks < grid.K:
        raise IndexError(f"interval index {ks} out of range for K={grid.K}")
    lo, hi = _intervals(grid, mirror=False)
    f, h = _density_on(pf, lo[ks : ks + 1], hi[ks : ks + 1], M)
    return _terms(f, h, scheme, M)[0]


def row_weights(pf: PhaseFunction, grid: AngularGrid, M: int = 7, scheme: int = 7,
                mirror: bool = True):
    """Un-normalized first row of the weight matrix and the sub-steps used.

    With ``mirror`` (the default) only the first ``K/2`` intervals are
    integrated and the row is completed symmetrically,
    ``w[K-1-ks] = w[ks]``; otherwise all ``K`` intervals are integrated,
    the last one ending at ``2*pi``.
    """
    _check(scheme, M)
    lo, hi = _intervals(grid, mirror)
    f, h = _density_on(pf, lo, hi, M)
    half = h * (f @ composite_coefficients(scheme, M))
    if mirror:
        return np.concatenate([half, half[::-1]]), np.concatenate([h, h[::-1]])
    return half, h


def weight_matrix(pf: PhaseFunction, grid: AngularGrid, M: int = 7, scheme: int = 7,
                  mirror: bool = True) -> WeightMatrix:
    raw, h = row_weights(pf, grid, M, scheme, mirror)
    total = raw.sum()
    if not np.isfinite(total) or total <= 0:
        raise FloatingPointError("weight row does not sum to a positive finite value")
    row = raw / total
    K = grid.K
    idx = np.abs(np.arange(K)[:, None] - np.arange(K)[None, :])
    w = row[idx]
    w.setflags(write=False)
    return WeightMatrix(w=w, scheme=scheme, M=M, raw=raw, steps=h)


def write_csv(wm: WeightMatrix, path) -> None:
    """Row-major dump with header ``k,k_s,w`` (1-based indices)."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "k_s", "w"])
        for k in range(wm.K):
            for ks in range(wm.K):
                out.writerow([k + 1, ks + 1, repr(float(wm.w[k, ks]))])
