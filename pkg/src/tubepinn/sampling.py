"""Collocation point generation, input normalization and resolution diagnostics.

Interior points come from an unscrambled 2-D Sobol sequence (a seeded
uniform-random fallback exists for ablations); boundary/coupling/period
grids are uniform with inclusive endpoints.  Point sets are generated once
per run and stay fixed across epochs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

__all__ = [
    "sobol_2d",
    "uniform_grid",
    "points_per_wavelength",
    "NormalizationMap",
    "CollocationCounts",
    "CollocationSets",
    "build_collocation",
    "collocation_diagnostics",
]


def sobol_2d(n: int, skip: int = 0) -> np.ndarray:
    """First ``n`` points of the standard 2-D Sobol sequence, shape (n, 2).

    ``skip`` drops that many points off the front.  No scrambling, so the
    sequence starts at (0, 0) and is fully deterministic.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if skip < 0:
        raise ValueError("skip must be >= 0")
    total = n + skip
    m = max(1, int(math.ceil(math.log2(total))))
    sampler = qmc.Sobol(d=2, scramble=False)
    points = sampler.random_base2(m)
    return points[skip : skip + n].copy()


def uniform_random_2d(n: int, seed: int = 0) -> np.ndarray:
    """Pseudo-random fallback with the same interface as `sobol_2d`."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.random.default_rng(seed).uniform(size=(n, 2))


def uniform_grid(n: int, lo: float, hi: float) -> np.ndarray:
    """n equally spaced values, endpoints included, spacing (hi-lo)/(n-1)."""
    if n < 2:
        raise ValueError("uniform_grid needs n >= 2")
    if not hi > lo:
        raise ValueError("uniform_grid needs hi > lo")
    return np.linspace(lo, hi, n)


def points_per_wavelength(delta_x: float, c: float, f_max: float) -> float:
    """Sampling-adequacy diagnostic: ppw = c / (f_max * delta_x)."""
    if delta_x <= 0 or c <= 0 or f_max <= 0:
        raise ValueError("points_per_wavelength needs positive arguments")
    return c / (f_max * delta_x)


@dataclass(frozen=True)
class NormalizationMap:
    """Affine maps between physical (x, t) and the network's [-1, 1] inputs."""

    length: float
    period: float

    def __post_init__(self):
        if self.length <= 0 or self.period <= 0:
            raise ValueError("length and period must be positive")

    @property
    def scale_x(self) -> float:
        """d x_norm / d x = 2 / length."""
        return 2.0 / self.length

    @property
    def scale_t(self) -> float:
        return 2.0 / self.period

    def to_norm_x(self, x):
        return 2.0 * np.asarray(x, dtype=float) / self.length - 1.0

    def from_norm_x(self, xn):
        return (np.asarray(xn, dtype=float) + 1.0) * (self.length / 2.0)

    def to_norm_t(self, t):
        return 2.0 * np.asarray(t, dtype=float) / self.period - 1.0

    def from_norm_t(self, tn):
        return (np.asarray(tn, dtype=float) + 1.0) * (self.period / 2.0)


@dataclass(frozen=True)
class CollocationCounts:
    n_interior: int = 5000
    n_boundary: int = 1000
    n_coupling: int = 1000
    n_periodic: int = 1000
    n_measurement: int = 1000

    def scaled(self, factor: float) -> "CollocationCounts":
        """Proportionally reduced profile (desk-scale testing)."""

        def s(n):
            return max(2, int(round(n * factor)))

        return CollocationCounts(
            n_interior=s(self.n_interior),
            n_boundary=s(self.n_boundary),
            n_coupling=s(self.n_coupling),
            n_periodic=s(self.n_periodic),
            n_measurement=s(self.n_measurement),
        )


@dataclass(frozen=True)
class CollocationSets:
    """Fixed point sets for one run, in physical coordinates."""

    interior_x: np.ndarray
    interior_t: np.ndarray
    boundary_t: np.ndarray
    coupling_t: np.ndarray
    periodic_x: np.ndarray
    measurement_t: np.ndarray
    norm: NormalizationMap = field(repr=False, default=None)


def build_collocation(
    length: float,
    period: float,
    counts: CollocationCounts,
    sequence: str = "sobol",
    seed: int = 0,
    skip: int = 0,
) -> CollocationSets:
    if sequence == "sobol":
        unit = sobol_2d(counts.n_interior, skip=skip)
    elif sequence == "random":
        unit = uniform_random_2d(counts.n_interior, seed=seed)
    else:
        raise ValueError("sequence must be 'sobol' or 'random'")
    norm = NormalizationMap(length, period)
    return CollocationSets(
        interior_x=unit[:, 0] * length,
        interior_t=unit[:, 1] * period,
        boundary_t=uniform_grid(counts.n_boundary, 0.0, period),
        coupling_t=uniform_grid(counts.n_coupling, 0.0, period),
        periodic_x=uniform_grid(counts.n_periodic, 0.0, length),
        measurement_t=uniform_grid(counts.n_measurement, 0.0, period),
        norm=norm,
    )


def collocation_diagnostics(sets: CollocationSets, c: float, f_max: float = 5000.0) -> dict:
    """Resolution summary: divisions per axis, mean spacing, ppw, Nyquist flags."""
    n = sets.interior_x.size
    divisions = math.sqrt(n)
    length = sets.norm.length
    period = sets.norm.period
    delta_x = length / divisions
    delta_t = period / divisions
    ppw = points_per_wavelength(delta_x, c, f_max)
    fs_time = divisions / period
    return {
        "n_interior": n,
        "divisions_per_axis": divisions,
        "mean_delta_x": delta_x,
        "mean_delta_t": delta_t,
        "time_sampling_hz": fs_time,
        "ppw_at_f_max": ppw,
        "nyquist_ok_space": ppw >= 2.0,
        "nyquist_ok_time": fs_time >= 2.0 * f_max,
    }
