"""Loss terms for the physics-informed training objective.

All functions accept vectorized derivative bundles whose entries are either
autodiff nodes (training path) or plain arrays (mock fields in tests), plus
coefficients that may themselves be nodes when physics parameters are
trainable.  Bundles arrive in normalized network coordinates together with
the derivative scale factors (2/length for x, 2/period for t); conversion to
physical units happens here, immediately before the physical relations are
applied.

Weighting layout: the coupling term carries its two internal weights and the
periodicity term its three, while the totals combine the per-term weights
(lambda_E, lambda_B, lambda_P, lambda_C, lambda_M).  The boundary-, flow- and
coupling-related weights are normalized by the known boundary amplitudes:
lambda_B = lambda'_B / A0^2, lambda_u = lambda'_u / A0^2,
lambda_l = lambda'_l / (R_r A0)^2, lambda_r = lambda'_r / (R_r A0)^2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .autodiff import DerivBundle
from .physics import (
    AirProperties,
    LossCoefficients,
    RadiationConstants,
    pressure_from_potential,
    velocity_from_potential,
    wave_residual,
)

__all__ = [
    "PrimedWeights",
    "LossWeights",
    "LossReport",
    "normalize_weights",
    "pde_loss",
    "bc_loss",
    "coupling_loss",
    "periodicity_loss",
    "measurement_loss",
    "total_loss",
]


@dataclass(frozen=True)
class PrimedWeights:
    """Config-facing weights; the primed entries await amplitude normalization."""

    lambda_E: float = 0.58
    lambda_P: float = 1.0
    lambda_C: float = 1.0
    lambda_p: float = 8.7e-6
    lambda_t: float = 1.3e-12
    lambda_M: float = 0.0
    lambda_B_primed: float = 1.0
    lambda_u_primed: float = 1.0
    lambda_l_primed: float = 1.0
    lambda_r_primed: float = 50.0

    @classmethod
    def forward_defaults(cls) -> "PrimedWeights":
        return cls()

    @classmethod
    def inverse_defaults(cls) -> "PrimedWeights":
        return cls(lambda_E=5.8, lambda_M=5.0e-3)

    def replace(self, **kw) -> "PrimedWeights":
        return replace(self, **kw)


@dataclass(frozen=True)
class LossWeights:
    """Fully normalized weights, ready for the training objective."""

    lambda_E: float
    lambda_B: float
    lambda_P: float
    lambda_C: float
    lambda_l: float
    lambda_r: float
    lambda_u: float
    lambda_p: float
    lambda_t: float
    lambda_M: float

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) < 0:
                raise ValueError(f"loss weight {name} must be >= 0")


def normalize_weights(primed: PrimedWeights, area0: float, R_r: float) -> LossWeights:
    """Resolve the primed weights against the inlet area and radiation resistance."""
    if area0 <= 0 or R_r <= 0:
        raise ValueError("area0 and R_r must be positive")
    return LossWeights(
        lambda_E=primed.lambda_E,
        lambda_B=primed.lambda_B_primed / area0**2,
        lambda_P=primed.lambda_P,
        lambda_C=primed.lambda_C,
        lambda_l=primed.lambda_l_primed / (R_r * area0) ** 2,
        lambda_r=primed.lambda_r_primed / (R_r * area0) ** 2,
        lambda_u=primed.lambda_u_primed / area0**2,
        lambda_p=primed.lambda_p,
        lambda_t=primed.lambda_t,
        lambda_M=primed.lambda_M,
    )


@dataclass
class LossReport:
    """Per-term loss values at one epoch (plus run metadata for the history)."""

    epoch: int
    L_E: float
    L_B: float
    L_C: float
    L_P: float
    L_u: float
    L_p: float
    L_t: float
    L_all: float
    L_M: float | None = None
    lr: float | None = None
    omega_c: float | None = None
    l_v: float | None = None
    d_v: float | None = None


def _to_physical(bundle: DerivBundle, scale_x, scale_t) -> DerivBundle:
    """Convert normalized-coordinate derivatives to physical units."""

    def m(entry, factor):
        return None if entry is None else entry * factor

    return DerivBundle(
        value=bundle.value,
        d_dx=m(bundle.d_dx, scale_x),
        d_dt=m(bundle.d_dt, scale_t),
        d2_dx2=m(bundle.d2_dx2, scale_x * scale_x),
        d2_dt2=m(bundle.d2_dt2, scale_t * scale_t),
    )


def _npoints(entry) -> int:
    return int(np.asarray(ad.value_of(entry)).shape[0])


def _as_column(target, n: int, what: str):
    target = np.asarray(ad.value_of(target), dtype=float).reshape(-1, 1)
    if target.shape[0] != n:
        raise ValueError(f"{what}: target grid has {target.shape[0]} points, bundle has {n}")
    return target


def pde_loss(
    bundle: DerivBundle,
    area,
    d_area_dx,
    coeffs: LossCoefficients,
    air: AirProperties,
    scale_x,
    scale_t,
):
    """Mean squared residual of the lossy wave equation over interior points."""
    if _npoints(bundle.value) < 1:
        raise ValueError("pde_loss needs at least one collocation point")
    phys = _to_physical(bundle, scale_x, scale_t)
    residual = wave_residual(phys, area, d_area_dx, coeffs, air)
    return ad.mean(ad.square(residual))


def bc_loss(bundle: DerivBundle, target_u, area0, scale_x):
    """Mean squared inlet volume-velocity mismatch, u_hat = -A0 dphi/dx."""
    n = _npoints(bundle.d_dx)
    target = _as_column(target_u, n, "bc_loss")
    u_hat = velocity_from_potential(bundle.d_dx * scale_x, area0)
    return ad.mean(ad.square(u_hat - target))


def coupling_loss(
    bundle: DerivBundle,
    rad_bundle: DerivBundle,
    rad: RadiationConstants,
    area_l,
    coeffs: LossCoefficients,
    air: AirProperties,
    scale_x,
    scale_t,
    lambda_l: float,
    lambda_r: float,
):
    """Radiation-circuit residuals at the outlet, both equations, weighted.

    term 1: (u_r - u_C) R_r - L_r du_r/dt  (circuit dynamics)
    term 2: p_C - (u_r - u_C) R_r          (pressure across the circuit)
    """
    n = _npoints(bundle.value)
    if _npoints(rad_bundle.value) != n:
        raise ValueError("coupling_loss: wave and radiation nets use different time grids")
    u_c = velocity_from_potential(bundle.d_dx * scale_x, area_l)
    p_c = pressure_from_potential(bundle.value, bundle.d_dt * scale_t, coeffs.R, area_l, air.rho)
    u_r = rad_bundle.value
    du_r_dt = rad_bundle.d_dt * scale_t
    diff_r = (u_r - u_c) * rad.R_r
    term_l = ad.mean(ad.square(diff_r - rad.L_r * du_r_dt))
    term_r = ad.mean(ad.square(p_c - diff_r))
    return lambda_l * term_l + lambda_r * term_r


def periodicity_loss(
    bundle_start: DerivBundle,
    bundle_end: DerivBundle,
    area,
    coeffs: LossCoefficients,
    air: AirProperties,
    scale_x,
    scale_t,
    lambda_u: float,
    lambda_p: float,
    lambda_t: float,
):
    """Start/end-of-period continuity of u, p and the second time derivative.

    Returns (L_u, L_p, L_t, L_P) with L_P the weighted combination.
    """
    n = _npoints(bundle_start.value)
    if _npoints(bundle_end.value) != n:
        raise ValueError("periodicity_loss: the two bundles use different position sets")
    s1 = _to_physical(bundle_start, scale_x, scale_t)
    s2 = _to_physical(bundle_end, scale_x, scale_t)
    u1 = velocity_from_potential(s1.d_dx, area)
    u2 = velocity_from_potential(s2.d_dx, area)
    p1 = pressure_from_potential(s1.value, s1.d_dt, coeffs.R, area, air.rho)
    p2 = pressure_from_potential(s2.value, s2.d_dt, coeffs.R, area, air.rho)
    L_u = ad.mean(ad.square(u1 - u2))
    L_p = ad.mean(ad.square(p1 - p2))
    L_t = ad.mean(ad.square(s1.d2_dt2 - s2.d2_dt2))
    L_P = lambda_u * L_u + lambda_p * L_p + lambda_t * L_t
    return L_u, L_p, L_t, L_P


def measurement_loss(bundle: DerivBundle, target_p, area_l, coeffs: LossCoefficients, air: AirProperties, scale_t):
    """Mean squared outlet-pressure mismatch against measured data."""
    if target_p is None:
        raise ValueError("measurement_loss: no target pressure waveform loaded")
    n = _npoints(bundle.value)
    target = _as_column(target_p, n, "measurement_loss")
    p_hat = pressure_from_potential(bundle.value, bundle.d_dt * scale_t, coeffs.R, area_l, air.rho)
    return ad.mean(ad.square(p_hat - target))


def total_loss(terms: dict, weights: LossWeights, mode: str = "forward"):
    """Weighted sum of the per-term losses.

    ``terms`` must contain L_E, L_B, L_P, L_C (and L_M for inverse modes).
    L_C and L_P arrive with their internal weights already applied.
    """
    required = ["L_E", "L_B", "L_P", "L_C"]
    if mode not in ("forward", "inverse"):
        raise ValueError("mode must be 'forward' or 'inverse'")
    if mode == "inverse":
        required.append("L_M")
    missing = [k for k in required if terms.get(k) is None]
    if missing:
        raise ValueError(f"total_loss missing terms for mode {mode!r}: {missing}")
    total = (
        weights.lambda_E * terms["L_E"]
        + weights.lambda_B * terms["L_B"]
        + weights.lambda_P * terms["L_P"]
        + weights.lambda_C * terms["L_C"]
    )
    if mode == "inverse":
        total = total + weights.lambda_M * terms["L_M"]
    return total
