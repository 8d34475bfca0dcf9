"""Output densities, photon-arrival sampling and pixelated detection.

Models the 1-D marginal of the camera: the theoretical arrival density of
surviving photons is the squared modulus of the channel's output wavepacket,
photon arrivals are drawn by inverse-CDF sampling on a dense grid, and
detection bins arrivals into half-open pixels of fixed pitch. Default
geometry mirrors a 1024-pixel row of 13 um pixels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from zenosense.noise_model import Configuration, NoiseAlphabet
from zenosense.seeds import as_rng
from zenosense.wavepacket import (
    GaussianSum,
    apply_noise_kernel,
    cumulative_mass,
    density_at,
    make_gaussian,
    moment,
)

__all__ = [
    "DEFAULT_PIXEL_PITCH_UM",
    "DEFAULT_PIXEL_COUNT",
    "SpatialHistogram",
    "OutputDensity",
    "HistogramFormatError",
    "theoretical_state",
    "theoretical_density",
    "sample_positions",
    "bin_to_pixels",
    "empirical_moment",
    "pixel_masses",
    "write_histogram_csv",
    "read_histogram_csv",
]

DEFAULT_PIXEL_PITCH_UM = 13.0
DEFAULT_PIXEL_COUNT = 1024

# Fraction of photons allowed to fall outside the pixel span before binning
# is treated as a geometry error.
MAX_OVERFLOW_FRACTION = 0.01

_SUPPORT_SIGMAS = 8.0
_GRID_POINTS_PER_SIGMA = 200


@dataclass(frozen=True)
class SpatialHistogram:
    """Pixel-binned photon counts.

    Pixel i covers the half-open interval
    [offset + i * pitch, offset + (i+1) * pitch). ``overflow`` counts
    photons that fell outside the pixel span.
    """

    pitch: float
    offset: float
    counts: np.ndarray
    overflow: int = 0

    def __post_init__(self) -> None:
        if not (self.pitch > 0.0):
            raise ValueError(f"pixel pitch must be positive, got {self.pitch!r}")
        counts = np.asarray(self.counts, dtype=np.int64).copy()
        if counts.ndim != 1 or counts.size < 2:
            raise ValueError("histogram needs at least 2 pixels")
        if np.any(counts < 0):
            raise ValueError("pixel counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "pitch", float(self.pitch))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "overflow", int(self.overflow))

    @property
    def n_pixels(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def centers(self) -> np.ndarray:
        return self.offset + (np.arange(self.n_pixels) + 0.5) * self.pitch

    def edges(self) -> np.ndarray:
        return self.offset + np.arange(self.n_pixels + 1) * self.pitch


class OutputDensity:
    """Normalized arrival density handle for a channel output state."""

    __slots__ = ("state",)

    def __init__(self, state: GaussianSum) -> None:
        if not (state.norm_sq > 0.0):
            raise ValueError("cannot build a density from a zero-norm state")
        self.state = state

    @property
    def sigma(self) -> float:
        return self.state.sigma

    def __call__(self, x) -> np.ndarray | float:
        return density_at(self.state, x)

    def support(self) -> tuple[float, float]:
        """Interval containing all but ~1e-15 of the arrival probability."""
        pad = _SUPPORT_SIGMAS * self.sigma
        return (
            float(self.state.centers.min() - pad),
            float(self.state.centers.max() + pad),
        )

    def grid(self, resolution: float | None = None) -> np.ndarray:
        """Dense sampling grid over the support (resolution <= sigma/200)."""
        lo, hi = self.support()
        res = self.sigma / _GRID_POINTS_PER_SIGMA if resolution is None else resolution
        n = int(math.ceil((hi - lo) / res)) + 1
        return np.linspace(lo, hi, n)


def theoretical_state(
    config: Configuration, theta: float, sigma: float, alphabet: NoiseAlphabet
) -> GaussianSum:
    """Non-normalized output wavepacket for a noise configuration.

    Applies one kernel per event; the kernels commute, so the result depends
    only on the multiset of couplings, and its squared norm is the protected
    survival probability of that configuration.
    """
    if len(config.counts) != alphabet.size:
        raise ValueError("configuration and alphabet sizes differ")
    state = make_gaussian(sigma)
    for nk, value in zip(config.counts, alphabet.values):
        for _ in range(nk):
            state = apply_noise_kernel(state, theta, value)
    return state


def theoretical_density(
    config: Configuration, theta: float, sigma: float, alphabet: NoiseAlphabet
) -> OutputDensity:
    """Normalized arrival density of the surviving photons."""
    return OutputDensity(theoretical_state(config, theta, sigma, alphabet))


def sample_positions(
    density: OutputDensity | GaussianSum,
    count: int,
    seed: int | np.random.Generator,
) -> np.ndarray:
    """Draw photon arrival positions by inverse-CDF sampling.

    The CDF is tabulated by trapezoidal accumulation on the density's dense
    grid, then inverted with linear interpolation; deterministic under a
    fixed seed. Rejects degenerate densities (zero or non-finite mass).
    """
    if count < 1:
        raise ValueError(f"sample count must be >= 1, got {count}")
    if isinstance(density, GaussianSum):
        density = OutputDensity(density)
    rng = as_rng(seed)
    xs = density.grid()
    pdf = np.asarray(density(xs))
    if not np.all(np.isfinite(pdf)) or np.any(pdf < 0.0):
        raise ValueError("density evaluates to invalid values on the grid")
    dx = np.diff(xs)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * dx)))
    mass = cdf[-1]
    if not (mass > 0.0) or not math.isfinite(mass):
        raise ValueError("degenerate density: no probability mass on the grid")
    cdf /= mass
    u = rng.random(int(count))
    return np.interp(u, cdf, xs)


def bin_to_pixels(
    positions,
    pitch: float = DEFAULT_PIXEL_PITCH_UM,
    n_pixels: int = DEFAULT_PIXEL_COUNT,
    offset: float | None = None,
) -> SpatialHistogram:
    """Bin arrival positions into half-open pixels.

    A position exactly on a pixel boundary lands in the pixel to its right.
    Counts are conserved: positions outside the span are tallied in
    ``overflow``, and more than ``MAX_OVERFLOW_FRACTION`` of them is an
    error (the geometry does not cover the beam).
    """
    if n_pixels < 2:
        raise ValueError(f"need at least 2 pixels, got {n_pixels}")
    if not (pitch > 0.0):
        raise ValueError(f"pixel pitch must be positive, got {pitch!r}")
    if offset is None:
        offset = -0.5 * n_pixels * pitch
    pos = np.asarray(positions, dtype=np.float64)
    if pos.size == 0:
        return SpatialHistogram(pitch, offset, np.zeros(n_pixels, dtype=np.int64))
    idx = np.floor((pos - offset) / pitch).astype(np.int64)
    inside = (idx >= 0) & (idx < n_pixels)
    overflow = int(pos.size - np.count_nonzero(inside))
    if overflow > MAX_OVERFLOW_FRACTION * pos.size:
        raise ValueError(
            f"{overflow} of {pos.size} positions "
            f"({overflow / pos.size:.2%}) fall outside the pixel span"
        )
    counts = np.bincount(idx[inside], minlength=n_pixels)
    return SpatialHistogram(pitch, offset, counts, overflow=overflow)


def empirical_moment(histogram: SpatialHistogram, order: int) -> float:
    """Moment of the normalized histogram, pixel centers as x values."""
    if order not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {order!r}")
    total = histogram.total
    if total <= 0:
        raise ValueError("cannot take moments of an empty histogram")
    centers = histogram.centers()
    weights = histogram.counts / total
    return float(np.sum(weights * centers**order))


def pixel_masses(
    state: GaussianSum,
    pitch: float,
    n_pixels: int,
    offset: float,
) -> np.ndarray:
    """Exact per-pixel probability masses of the normalized density.

    This is the pixel-averaged theoretical density (times the pitch): what an
    ideal detector with infinite statistics would record. Evaluation is
    windowed to pixels within 9 sigma of the outermost packet centers; the
    remainder carries < 1e-18 of the mass and is returned as zero.
    """
    if n_pixels < 2:
        raise ValueError(f"need at least 2 pixels, got {n_pixels}")
    if not (pitch > 0.0):
        raise ValueError(f"pixel pitch must be positive, got {pitch!r}")
    edges = offset + np.arange(n_pixels + 1) * pitch
    lo = state.centers.min() - 9.0 * state.sigma
    hi = state.centers.max() + 9.0 * state.sigma
    i0 = int(np.clip(np.searchsorted(edges, lo) - 1, 0, n_pixels))
    i1 = int(np.clip(np.searchsorted(edges, hi) + 1, 0, n_pixels))
    masses = np.zeros(n_pixels)
    if i1 > i0:
        cum = np.asarray(cumulative_mass(state, edges[i0 : i1 + 1]))
        masses[i0:i1] = np.maximum(np.diff(cum), 0.0)
    return masses


def pixel_moments(
    state: GaussianSum, pitch: float, n_pixels: int, offset: float
) -> tuple[float, float]:
    """(mean, variance) a pixelated detector would report at infinite statistics.

    Matches the functional applied to measured histograms (pixel centers as
    representative positions), so theoretical and empirical moments share
    the same pitch-scale discretization and it cancels in comparisons.
    """
    masses = pixel_masses(state, pitch, n_pixels, offset)
    total = masses.sum()
    if not (total > 0.0):
        raise ValueError("state carries no mass on the pixel span")
    centers = offset + (np.arange(n_pixels) + 0.5) * pitch
    w = masses / total
    m1 = float(np.sum(w * centers))
    m2 = float(np.sum(w * centers**2))
    return m1, m2 - m1 * m1


def continuous_moments(state: GaussianSum) -> tuple[float, float]:
    """(mean, variance) of the un-pixelated density, closed form."""
    m1 = moment(state, 1)
    return m1, moment(state, 2) - m1 * m1


# --- CSV serialization -------------------------------------------------------

_CSV_HEADER = ["pixel_index", "center_x_um", "count"]


class HistogramFormatError(ValueError):
    """Raised when a histogram CSV file is malformed."""


def write_histogram_csv(histogram: SpatialHistogram, path) -> None:
    """Write `pixel_index,center_x_um,count` rows, one per pixel."""
    centers = histogram.centers()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for i, (c, n) in enumerate(zip(centers, histogram.counts)):
            writer.writerow([i, repr(float(c)), int(n)])


def read_histogram_csv(path) -> SpatialHistogram:
    """Read a histogram CSV; errors name the offending file and row."""
    rows: list[tuple[int, float, int]] = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                if row != _CSV_HEADER:
                    raise HistogramFormatError(
                        f"{path}:1: expected header {','.join(_CSV_HEADER)!r}"
                    )
                continue
            if not row:
                continue
            if len(row) != 3:
                raise HistogramFormatError(
                    f"{path}:{lineno}: expected 3 fields, got {len(row)}"
                )
            try:
                idx, center, count = int(row[0]), float(row[1]), int(row[2])
            except ValueError as exc:
                raise HistogramFormatError(f"{path}:{lineno}: {exc}") from exc
            if idx != len(rows):
                raise HistogramFormatError(
                    f"{path}:{lineno}: pixel index {idx} out of order"
                )
            if count < 0:
                raise HistogramFormatError(f"{path}:{lineno}: negative count {count}")
            rows.append((idx, center, count))
    if len(rows) < 2:
        raise HistogramFormatError(f"{path}: histogram needs at least 2 pixels")
    centers = np.array([r[1] for r in rows])
    pitches = np.diff(centers)
    pitch = float(pitches[0])
    if pitch <= 0.0 or np.any(np.abs(pitches - pitch) > 1e-9 * abs(pitch)):
        raise HistogramFormatError(f"{path}: pixel centers are not uniformly spaced")
    offset = float(centers[0] - 0.5 * pitch)
    counts = np.array([r[2] for r in rows], dtype=np.int64)
    return SpatialHistogram(pitch, offset, counts)
