"""
Two-dimensional phase scattering functions for sea water.

Three analytical models are supported: the single-term Henyey-Greenstein
(STHG) function, its two-term linear combination (TTHG) and the
Fournier-Forand (FF) function. Densities are expressed per radian of
scattering angle ``phi`` in ``[0, 2*pi]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

__all__ = [
    "FF_EPS",
    "ParameterError",
    "SingularityError",
    "PhaseFunction",
    "WaterOpticalProperties",
    "sthg",
    "tthg",
    "fournier_forand",
    "eval_density",
    "normalization_integral",
]

#: Forward clamp of the FF scattering angle (rad).
FF_EPS = 7.5e-4

TWO_PI = 2.0 * np.pi


class ParameterError(ValueError):
    """A phase function or water parameter lies outside its domain."""


class SingularityError(ValueError):
    """FF evaluated at its forward singularity."""


@dataclass(frozen=True)
class PhaseFunction:
    """Tagged phase function.

    ``variant`` is one of ``"sthg"``, ``"tthg"`` or ``"ff"`` and ``params``
    holds the matching parameters: ``(g,)``, ``(alpha, g1, g2)`` or
    ``(mu, n_p)``. Use the :func:`sthg`, :func:`tthg` and
    :func:`fournier_forand` constructors rather than building it by hand.
    """

    variant: str
    params: tuple[float, ...]
    clamp: float = field(default=FF_EPS)

    def __post_init__(self):
        v = self.variant.lower()
        object.__setattr__(self, "variant", v)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        p = self.params
        if v == "sthg":
            if len(p) != 1:
                raise ParameterError("STHG takes a single parameter g")
            if not 0.0 <= p[0] <= 1.0:
                raise ParameterError(f"STHG requires 0 <= g <= 1, got g={p[0]}")
        elif v == "tthg":
            if len(p) != 3:
                raise ParameterError("TTHG takes (alpha, g1, g2)")
            alpha, g1, g2 = p
            if not 0.0 <= alpha <= 1.0:
                raise ParameterError(f"TTHG requires 0 <= alpha <= 1, got {alpha}")
            for name, g in (("g1", g1), ("g2", g2)):
                if not -1.0 < g < 1.0:
                    raise ParameterError(f"TTHG requires |{name}| < 1, got {g}")
        elif v == "ff":
            if len(p) != 2:
                raise ParameterError("FF takes (mu, n_p)")
            mu, n_p = p
            if not 3.0 <= mu <= 5.0:
                raise ParameterError(f"FF requires 3 <= mu <= 5, got mu={mu}")
            if not n_p > 1.0:
                raise ParameterError(f"FF requires n_p > 1, got n_p={n_p}")
            if not 0.0 < self.clamp < np.pi:
                raise ParameterError("FF clamp angle must lie in (0, pi)")
        else:
            raise ParameterError(
                f"unknown phase function {self.variant!r}; expected sthg, tthg or ff"
            )

    def __call__(self, phi):
        return eval_density(self, phi, clamp=True)

    @property
    def label(self) -> str:
        return self.variant.upper()


def sthg(g: float = 0.93) -> PhaseFunction:
    return PhaseFunction("sthg", (g,))


def tthg(alpha: float = 0.9832, g1: float = 0.8838, g2: float = -0.9835) -> PhaseFunction:
    return PhaseFunction("tthg", (alpha, g1, g2))


def fournier_forand(mu: float = 3.483, n_p: float = 1.33) -> PhaseFunction:
    return PhaseFunction("ff", (mu, n_p))


@dataclass(frozen=True)
class WaterOpticalProperties:
    """Inherent optical properties at a single wavelength.

    Built from absorption ``a`` and scattering ``b`` (both 1/m); the
    attenuation ``c = a + b``. Use :meth:`from_bc` when the water type is
    tabulated by ``(b, c)`` as for the harbor presets.
    """

    a: float
    b: float
    wavelength: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a >= 0):
            raise ParameterError(f"absorption must be >= 0, got a={self.a}")
        if not (np.isfinite(self.b) and self.b >= 0):
            raise ParameterError(f"scattering must be >= 0, got b={self.b}")
        if self.a + self.b <= 0:
            raise ParameterError("attenuation c = a + b must be positive")

    @classmethod
    def from_bc(cls, b: float, c: float, wavelength: float | None = None):
        if b > c:
            raise ParameterError(f"scattering b={b} exceeds attenuation c={c}")
        return cls(a=c - b, b=b, wavelength=wavelength)

    @property
    def c(self) -> float:
        return self.a + self.b

    @property
    def albedo(self) -> float:
        return self.b / self.c


def _hg(g, phi):
    return (1.0 - g * g) / (TWO_PI * (1.0 + g * g - 2.0 * g * np.cos(phi)))


def _ff_excess(e, nu):
    """``(1 - (1+e)**nu + nu*e) / e**2`` without cancellation near e = 0."""
    e = np.asarray(e, dtype=float)
    out = np.empty_like(e)
    small = np.abs(e) < 0.05
    big = ~small
    eb = e[big]
    out[big] = -(np.expm1(nu * np.log1p(eb)) - nu * eb) / (eb * eb)
    # binomial series: -sum_{n>=2} C(nu, n) e**(n-2)
    es = e[small]
    coef = nu * (nu - 1.0) / 2.0
    acc = np.zeros_like(es)
    term_pow = np.ones_like(es)
    for n in range(2, 16):
        acc += coef * term_pow
        coef *= (nu - n) / (n + 1.0)
        term_pow = term_pow * es
    out[small] = -acc
    return out


def _ff(mu, n_p, phi):
    nu = (3.0 - mu) / 2.0
    scale = 4.0 / (3.0 * (n_p - 1.0) ** 2)
    s2 = np.sin(phi / 2.0) ** 2
    delta = scale * s2
    d_pi = scale
    # The classical form divides two O((delta-1)**2) brackets by (1-delta)**2;
    # factoring the excess term out keeps the ratio exact at delta = 1.
    excess = _ff_excess(delta - 1.0, nu)
    head = ((delta * excess - nu) / s2 - excess) / (4.0 * np.pi * delta**nu)
    tail = (1.0 - d_pi**nu) / (16.0 * np.pi * (d_pi - 1.0) * d_pi**nu)
    return head + tail * (3.0 * np.cos(phi) ** 2 - 1.0)


def eval_density(pf: PhaseFunction, phi, clamp: bool = True):
    """Phase function density at scattering angle(s) ``phi`` (1/rad).

    For FF the forward singularity is avoided by evaluating at
    ``max(phi, eps)`` on both sides of the forward direction; with
    ``clamp=False`` an angle inside the clamp band raises
    :class:`SingularityError` instead.
    """
    phi_arr = np.asarray(phi, dtype=float)
    scalar = phi_arr.ndim == 0
    phi_arr = np.atleast_1d(phi_arr)
    if np.any(phi_arr < -1e-12) or np.any(phi_arr > TWO_PI + 1e-12):
        raise ParameterError("scattering angle must lie in [0, 2*pi]")

    v, p = pf.variant, pf.params
    if v == "sthg":
        out = _hg(p[0], phi_arr)
    elif v == "tthg":
        alpha, g1, g2 = p
        out = alpha * _hg(g1, phi_arr) + (1.0 - alpha) * _hg(g2, phi_arr)
    else:
        folded = np.minimum(phi_arr, TWO_PI - phi_arr)
        if clamp:
            folded = np.maximum(folded, pf.clamp)
        elif np.any(folded < pf.clamp):
            raise SingularityError(
                f"FF is singular at phi=0; angles below {pf.clamp} rad must be clamped"
            )
        out = _ff(p[0], p[1], folded)
    return out[0] if scalar else out


def normalization_integral(pf: PhaseFunction) -> float:
    """Integral of the density over ``[0, 2*pi]`` by adaptive quadrature.

    Diagnostic only; the solver works with row-normalized weights.
    """
    f = lambda x: float(eval_density(pf, x))
    if pf.variant == "ff":
        eps = pf.clamp
        # flat clamp band on both ends, peaked tail just outside it
        inner, _ = integrate.quad(f, eps, np.pi, limit=500, epsabs=1e-13, epsrel=1e-12,
                                  points=[2 * eps, 10 * eps, 0.1, 0.58])
        return 2.0 * (inner + eps * f(eps))
    val, _ = integrate.quad(f, 0.0, np.pi, limit=500, epsabs=1e-13, epsrel=1e-12)
    val2, _ = integrate.quad(f, np.pi, TWO_PI, limit=500, epsabs=1e-13, epsrel=1e-12)
    return val + val2
