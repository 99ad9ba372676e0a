"""Forced-flow boundary waveform: a smoothed glottal-style pulse.

The pulse is the classic two-arc glottal flow shape: a cubic rise over the
opening phase, a parabolic fall over the closing phase, and a zero closed
phase, periodically extended.  A circular moving-average pass rounds off the
arc joints; the result is rescaled so its sampled maximum equals the target
peak particle velocity.  The same generated waveform feeds both the
finite-difference solver and the network boundary loss, so comparisons are
self-consistent regardless of the exact pulse parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RosenbergSpec", "rosenberg_wave", "rosenberg_table", "smooth_periodic"]


@dataclass(frozen=True)
class RosenbergSpec:
    """Pulse shape parameters.

    f0             fundamental frequency [Hz]
    peak_velocity  maximum particle velocity [m/s]
    rise_fraction  opening phase tau1/T
    fall_fraction  closing phase tau2/T
    smoothing_window  moving-average width in samples (odd); None picks
                      ~1/20 of a period
    sample_count   samples per period of the internal lookup table
    n_harmonics    optional hard band limit: keep only this many Fourier
                   harmonics of the smoothed pulse and evaluate the series
                   exactly.  Keeps every consumer (reference solver at any
                   grid, network targets) inside one resolved band; the
                   closed phase then carries a ripple below ~0.2% of the
                   peak instead of exact zeros.  None disables it.
    """

    f0: float = 261.6
    peak_velocity: float = 1.0
    rise_fraction: float = 0.4
    fall_fraction: float = 0.16
    smoothing_window: int | None = None
    sample_count: int = 8192
    n_harmonics: int | None = None

    def __post_init__(self):
        if self.f0 <= 0 or self.peak_velocity <= 0:
            raise ValueError("f0 and peak_velocity must be positive")
        if self.rise_fraction <= 0 or self.fall_fraction <= 0:
            raise ValueError("rise and fall fractions must be positive")
        if self.rise_fraction + self.fall_fraction > 1.0:
            raise ValueError("open phase tau1 + tau2 must not exceed the period")
        if self.sample_count < 16:
            raise ValueError("sample_count too small")
        if self.n_harmonics is not None and self.n_harmonics < 2:
            raise ValueError("n_harmonics must be >= 2 when set")

    @property
    def period(self) -> float:
        return 1.0 / self.f0

    @property
    def window(self) -> int:
        if self.smoothing_window is not None:
            w = int(self.smoothing_window)
        else:
            w = int(round(self.sample_count / 20.0))
        if w < 1:
            w = 1
        if w % 2 == 0:
            w += 1
        return w


def smooth_periodic(samples: np.ndarray, window: int) -> np.ndarray:
    """Circular moving average with an odd window; preserves the mean exactly."""
    samples = np.asarray(samples, dtype=float)
    if window % 2 == 0 or window < 1:
        raise ValueError("smoothing window must be odd and >= 1")
    if window == 1:
        return samples.copy()
    half = window // 2
    padded = np.concatenate([samples[-half:], samples, samples[:half]])
    kernel = np.full(window, 1.0 / window)
    return np.convolve(padded, kernel, mode="valid")


def _raw_pulse(phase: np.ndarray, rise: float, fall: float) -> np.ndarray:
    """Unit pulse on phase in [0, 1): cubic rise to 1, parabolic fall, zero tail."""
    out = np.zeros_like(phase)
    rising = phase < rise
    z = phase[rising] / rise
    out[rising] = 3.0 * z**2 - 2.0 * z**3
    falling = (phase >= rise) & (phase < rise + fall)
    z = (phase[falling] - rise) / fall
    out[falling] = 1.0 - z**2
    return out


def _smoothed_table(spec: RosenbergSpec) -> np.ndarray:
    phase = np.arange(spec.sample_count) / spec.sample_count
    raw = _raw_pulse(phase, spec.rise_fraction, spec.fall_fraction)
    return smooth_periodic(raw, spec.window)


def _harmonics(spec: RosenbergSpec) -> np.ndarray:
    """Truncated Fourier coefficients c_0..c_n of the unit-peak pulse."""
    table = _smoothed_table(spec)
    coef = np.fft.rfft(table)[: spec.n_harmonics + 1] / table.size
    dense = _eval_harmonics(coef, np.arange(4 * spec.sample_count) / (4 * spec.sample_count))
    return coef * (spec.peak_velocity / dense.max())


def _eval_harmonics(coef: np.ndarray, phase: np.ndarray) -> np.ndarray:
    out = np.real(coef[0]) * np.ones_like(phase)
    for m in range(1, coef.size):
        out = out + 2.0 * np.real(coef[m] * np.exp(2j * np.pi * m * phase))
    return out


def rosenberg_table(spec: RosenbergSpec) -> np.ndarray:
    """One period of the pulse, sampled at spec.sample_count points."""
    if spec.n_harmonics is not None:
        coef = _harmonics(spec)
        return _eval_harmonics(coef, np.arange(spec.sample_count) / spec.sample_count)
    smooth = _smoothed_table(spec)
    return smooth * (spec.peak_velocity / smooth.max())


def rosenberg_wave(spec: RosenbergSpec, t) -> np.ndarray:
    """Particle velocity at time(s) t >= 0, periodically extended.

    The band-limited variant evaluates its Fourier series exactly (smooth in
    t); the default variant interpolates the sampled table linearly.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("waveform is defined for t >= 0")
    phase = (t * spec.f0) % 1.0
    if spec.n_harmonics is not None:
        out = _eval_harmonics(_harmonics(spec), phase)
        return out if out.ndim else float(out)
    table = rosenberg_table(spec)
    n = table.size
    pos = phase * n
    i0 = np.floor(pos).astype(int) % n
    i1 = (i0 + 1) % n
    frac = pos - np.floor(pos)
    out = table[i0] * (1.0 - frac) + table[i1] * frac
    return out if out.ndim else float(out)
