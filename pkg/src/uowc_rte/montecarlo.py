"""
Two-dimensional Monte Carlo photon transport.

Photons are launched from the source plane ``x = 0`` on the beam axis with
directions uniform in ``[-omega, omega]`` and travel through the same
rectangular tank as the RTE grid (``0 <= x <= x_max``, ``|y| <= y_max/2``);
leaving it means escape. Free paths are exponential with rate ``c``. At each
interaction the photon weight is multiplied by the albedo ``b/c`` (implicit
capture) and the direction is rotated by a deflection drawn from the phase
function by inverse-CDF lookup. Weights below a cutoff play Russian roulette.

Random streams come from ``SeedSequence(seed).spawn`` with one Philox
generator per chunk of photons, so results depend only on the seed and chunk
size, never on the number of worker threads.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .phase import TWO_PI, PhaseFunction, WaterOpticalProperties, eval_density
from .receiver import ring_areas

__all__ = [
    "MCStatisticalError",
    "PhotonState",
    "ScatterSampler",
    "MCReceiver",
    "MCResult",
    "build_cdf",
    "trace_photons",
    "trace_planes",
    "write_csv",
]


class MCStatisticalError(RuntimeError):
    """A tally is empty or too noisy to be used."""


@dataclass
class PhotonState:
    """Positions (m), direction angles (rad) and weights of a photon batch."""

    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    weight: np.ndarray
    path: np.ndarray

    @classmethod
    def launch(cls, n: int, omega: float, rng: np.random.Generator) -> "PhotonState":
        theta = np.mod(rng.uniform(-omega, omega, n), TWO_PI)
        zero = np.zeros(n)
        return cls(zero.copy(), zero.copy(), theta, np.ones(n), zero.copy())

    def select(self, keep: np.ndarray) -> "PhotonState":
        return PhotonState(self.x[keep], self.y[keep], self.theta[keep],
                           self.weight[keep], self.path[keep])


@dataclass(frozen=True)
class ScatterSampler:
    """Tabulated CDF of the deflection angle over ``[eps, 2*pi]``."""

    grid: np.ndarray
    cdf: np.ndarray
    label: str = ""

    @property
    def resolution(self) -> int:
        return self.grid.size

    def __call__(self, u):
        """Deflection angles for uniform variates ``u`` in ``[0, 1)``."""
        return np.interp(u, self.cdf, self.grid)

    def cdf_at(self, phi):
        return np.interp(phi, self.grid, self.cdf)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self(rng.random(n))


def build_cdf(pf: PhaseFunction, resolution: int = 2**16, eps: float = 0.0) -> ScatterSampler:
    """Numerical CDF of ``pf`` by the cumulative trapezoid rule.

    Nodes cluster quadratically towards the forward direction at both ends
    of ``[eps, 2*pi]`` where the peaked densities vary fastest. The table is
    rescaled to end exactly at one.
    """
    if resolution < 2**14:
        raise ValueError(f"resolution must be at least 2**14, got {resolution}")
    if not 0.0 <= eps < np.pi:
        raise ValueError("eps must lie in [0, pi)")
    half = resolution // 2 + 1
    u = np.linspace(0.0, 1.0, half)
    left = eps + (np.pi - eps) * 0.5 * (1.0 - np.cos(np.pi * u))
    grid = np.concatenate([left, TWO_PI - left[-2::-1]])
    f = eval_density(pf, grid)
    if not np.all(np.isfinite(f)) or np.any(f < 0):
        raise FloatingPointError(f"{pf.label} density is not finite and non-negative on the CDF grid")
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(grid))])
    if cdf[-1] <= 0:
        raise FloatingPointError("density integrates to zero")
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    grid.setflags(write=False)
    cdf.setflags(write=False)
    return ScatterSampler(grid, cdf, pf.label)


@dataclass(frozen=True)
class MCReceiver:
    """Aperture and tally weighting of the Monte Carlo detector.

    ``tally="rings"`` weights a crossing at height ``y`` by the area of the
    receiver ring whose grid row is nearest ``|y|``, divided by the width of
    the band it represents. This mirrors the RTE receiver, which samples one
    row per ring. ``tally="fraction"`` counts captured weight inside
    ``|y| <= R``.
    """

    R: float = 0.05
    fov_half_angle: float = np.pi / 2
    dy: float = 0.01
    tally: str = "fraction"
    ring_model: str = "annular"

    def __post_init__(self):
        if self.tally not in ("rings", "fraction"):
            raise ValueError("tally must be 'rings' or 'fraction'")
        if not 0 < self.fov_half_angle <= np.pi:
            raise ValueError("fov_half_angle must lie in (0, pi]")
        if self.R <= 0:
            raise ValueError("aperture radius must be positive")

    def in_aperture(self, y: np.ndarray) -> np.ndarray:
        return np.abs(y) <= self.R

    def score(self, y: np.ndarray) -> np.ndarray:
        if self.tally == "fraction":
            return self.in_aperture(y).astype(float)
        areas = ring_areas(self.dy, self.R, self.ring_model)
        band = np.full(areas.size, 2.0 * self.dy)
        band[0] = self.dy
        l = np.floor(np.abs(y) / self.dy + 0.5).astype(int)
        ok = l < areas.size
        out = np.zeros(y.shape)
        out[ok] = areas[l[ok]] / band[l[ok]]
        return out

    def in_fov(self, theta: np.ndarray) -> np.ndarray:
        folded = np.mod(theta + np.pi, TWO_PI) - np.pi
        return np.abs(folded) <= self.fov_half_angle + 1e-12


@dataclass
class MCResult:
    distances: np.ndarray
    fraction: np.ndarray  # tally per launched photon at each plane
    stderr: np.ndarray
    n_photons: int
    seed: int
    captured: float = 0.0  # raw weight, terminating plane only
    absorbed: float = 0.0
    escaped: float = 0.0
    interactions: int = 0
    elapsed: float = 0.0

    @property
    def launched(self) -> float:
        return float(self.n_photons)

    @property
    def balance(self) -> float:
        """``captured + absorbed + escaped - launched``."""
        return self.captured + self.absorbed + self.escaped - self.launched

    def normalized(self) -> np.ndarray:
        return self.fraction / self.fraction[0]


@dataclass(frozen=True)
class _Setup:
    c: float
    albedo: float
    omega: float
    x_max: float
    y_half: float
    planes: np.ndarray
    terminal: bool
    cutoff: float
    survival: float
    pool: int


def _chunk(setup: _Setup, sampler: ScatterSampler, rec: MCReceiver, n: int, seq):
    rng = np.random.Generator(np.random.Philox(seq))
    P = setup.planes.size
    score = np.zeros((n, P))
    ids = np.arange(n)
    st = PhotonState.launch(n, setup.omega, rng)
    captured = absorbed = escaped = 0.0
    interactions = 0
    angles = sampler.sample(rng, setup.pool)
    used = 0
    while ids.size:
        m = ids.size
        s = rng.exponential(1.0 / setup.c, m)
        cx, cy = np.cos(st.theta), np.sin(st.theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            tx = np.where(cx > 0, (setup.x_max - st.x) / cx, np.where(cx < 0, -st.x / cx, np.inf))
            ty = np.where(cy > 0, (setup.y_half - st.y) / cy,
                          np.where(cy < 0, (-setup.y_half - st.y) / cy, np.inf))
        t_exit = np.maximum(np.minimum(tx, ty), 0.0)
        leaving = s >= t_exit
        seg = np.where(leaving, t_exit, s)
        x_end = st.x + seg * cx
        through_x = leaving & (tx <= ty) & (cx > 0)
        x_end[through_x] = setup.x_max
        fov = rec.in_fov(st.theta)
        for p, d in enumerate(setup.planes):
            if setup.terminal:
                break
            hit = fov & (((st.x < d) & (x_end >= d)) | ((st.x > d) & (x_end <= d)))
            if hit.any():
                yc = st.y[hit] + (d - st.x[hit]) / cx[hit] * cy[hit]
                np.add.at(score[:, p], ids[hit], st.weight[hit] * rec.score(yc))
        if setup.terminal:
            y_end = st.y + seg * cy
            det = through_x & fov & rec.in_aperture(y_end)
            score[ids[det], 0] += st.weight[det] * rec.score(y_end[det])
            captured += float(st.weight[det].sum())
            escaped += float(st.weight[leaving & ~det].sum())
        else:
            escaped += float(st.weight[leaving].sum())

        stay = ~leaving
        st = st.select(stay)
        st.x = x_end[stay]
        st.y = st.y + seg[stay] * cy[stay]
        st.path = st.path + seg[stay]
        ids = ids[stay]
        k = ids.size
        if not k:
            break
        interactions += k
        absorbed += float(st.weight.sum()) * (1.0 - setup.albedo)
        st.weight = st.weight * setup.albedo
        if used + k > angles.size:
            angles = sampler.sample(rng, max(setup.pool, k))
            used = 0
        st.theta = np.mod(st.theta + angles[used:used + k], TWO_PI)
        used += k

        low = st.weight < setup.cutoff
        if low.any():
            win = rng.random(k) < setup.survival
            killed = low & ~win
            boosted = low & win
            absorbed += float(st.weight[killed].sum())
            # the weight created by surviving the roulette is booked as negative absorption
            gain = st.weight[boosted] * (1.0 / setup.survival - 1.0)
            absorbed -= float(gain.sum())
            st.weight[boosted] /= setup.survival
            keep = ~killed
            st = st.select(keep)
            ids = ids[keep]
    s1 = score.sum(axis=0)
    s2 = (score * score).sum(axis=0)
    return s1, s2, captured, absorbed, escaped, interactions


def _run(n_photons, setup, sampler, rec, seed, chunk, workers, distances):
    if n_photons < 1:
        raise ValueError("n_photons must be positive")
    t0 = time.perf_counter()
    sizes = [chunk] * (n_photons // chunk)
    if n_photons % chunk:
        sizes.append(n_photons % chunk)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seqs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _chunk(setup, sampler, rec, *a), jobs))
    else:
        parts = [_chunk(setup, sampler, rec, *a) for a in jobs]
    # merged in chunk order, so the sum does not depend on scheduling
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    n = float(n_photons)
    mean = s1 / n
    var = np.maximum(s2 / n - mean**2, 0.0) / max(n - 1.0, 1.0)
    return MCResult(
        distances=np.atleast_1d(np.asarray(distances, dtype=float)),
        fraction=mean,
        stderr=np.sqrt(var),
        n_photons=n_photons,
        seed=seed,
        captured=sum(p[2] for p in parts),
        absorbed=sum(p[3] for p in parts),
        escaped=sum(p[4] for p in parts),
        interactions=sum(p[5] for p in parts),
        elapsed=time.perf_counter() - t0,
    )


def _setup(water, omega, x_max, y_max, planes, terminal, cutoff, survival, n_pool):
    if not 0.0 < survival <= 1.0:
        raise ValueError("roulette survival probability must lie in (0, 1]")
    return _Setup(water.c, water.albedo, omega, x_max, y_max / 2.0,
                  np.asarray(planes, dtype=float), terminal, cutoff, survival, n_pool)


def trace_photons(n_photons: int, water: WaterOpticalProperties, sampler: ScatterSampler,
                  receiver: MCReceiver, r: float, seed: int = 0, *, omega: float = 0.01,
                  y_max: float = 0.2, cutoff: float = 1e-4, survival: float = 0.1,
                  chunk: int = 2**16, workers: int = 1) -> MCResult:
    """Photon tally at a receiver plane ``x = r`` that ends the tank.

    Photons reaching the plane inside the aperture and field of view are
    captured; all others that reach it escape. The scattering-angle buffer
    holds ``chunk * ceil(c*r)`` draws, the expected number of interactions
    on the way to the receiver.
    """
    if not r > 0:
        raise ValueError("receiver distance must be positive")
    pool = chunk * max(1, int(np.ceil(water.c * r)))
    setup = _setup(water, omega, r, y_max, [r], True, cutoff, survival, pool)
    return _run(n_photons, setup, sampler, receiver, seed, chunk, workers, [r])


def trace_planes(n_photons: int, water: WaterOpticalProperties, sampler: ScatterSampler,
                 receiver: MCReceiver, distances, x_max: float | None = None, seed: int = 0, *,
                 omega: float = 0.01, y_max: float = 0.2, cutoff: float = 1e-4,
                 survival: float = 0.1, chunk: int = 2**16, workers: int = 1) -> MCResult:
    """Tallies at several transparent receiver planes in one pass.

    Every crossing within the field of view is scored, as a radiance
    sampled at each grid column would be. The tank extends to ``x_max``
    (default: the farthest plane).
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 1 or d.size == 0 or np.any(d <= 0):
        raise ValueError("distances must be a non-empty list of positive values")
    x_max = float(d.max()) if x_max is None else x_max
    if x_max < d.max():
        raise ValueError("x_max must reach the farthest receiver plane")
    pool = chunk * max(1, int(np.ceil(water.c * x_max)))
    setup = _setup(water, omega, x_max, y_max, d, False, cutoff, survival, pool)
    return _run(n_photons, setup, sampler, receiver, seed, chunk, workers, d)


def write_csv(result: MCResult, path) -> None:
    """Columns ``distance_m, captured_fraction, stderr, n_photons, seed``."""
    with open(path, "w") as fh:
        fh.write("distance_m,captured_fraction,stderr,n_photons,seed\n")
        for d, f, e in zip(result.distances, result.fraction, result.stderr):
            fh.write(f"{d!r},{f!r},{e!r},{result.n_photons},{result.seed}\n")
