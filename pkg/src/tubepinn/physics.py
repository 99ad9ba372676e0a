"""Physical constants, tube geometry and the pointwise acoustic relations.

Units are SI throughout with one documented exception: the specific heat
``cp`` can be carried either as the raw kJ/(kg K) figure (1.01, convention
``"paper_kJ"``) or as the SI value in J/(kg K) (1010.0, convention
``"si_J"``).  The widely quoted thermal loss coefficient G ~ 3.65e-7 for a
10 mm tube at omega_c = 1643.7 rad/s is only reproduced with the kJ figure
used verbatim, so that is the default convention; the SI evaluation gives
~1.16e-8.  Both are selectable.

The viscous coefficient R is reported in the literature with inconsistent
units; here its units are whatever the defining formula
``R = (S/A^2) sqrt(omega_c rho mu / 2)`` yields, which is what the
time-domain telegrapher system consumes.

All operations accept plain floats/arrays or autodiff nodes, so the same
formulas serve the finite-difference solver and the trainable-parameter
paths of the inverse analyses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import DerivBundle, sqrt, value_of

__all__ = [
    "CP_CONVENTIONS",
    "AirProperties",
    "TubeGeometry",
    "TabulatedTubeGeometry",
    "LossCoefficients",
    "RadiationConstants",
    "FieldPoint",
    "circular_area",
    "circular_circumference",
    "viscous_loss_coefficient",
    "thermal_loss_coefficient",
    "loss_coefficients",
    "radiation_constants",
    "wave_residual",
    "velocity_from_potential",
    "pressure_from_potential",
    "field_point",
]

CP_CONVENTIONS = ("paper_kJ", "si_J")

# specific heat of air at constant pressure, the two carried conventions
_CP_KJ = 1.01
_CP_SI = 1010.0


@dataclass(frozen=True)
class AirProperties:
    """Physical properties of air (defaults: dry air around 15 C).

    rho        density [kg/m^3]
    K          bulk modulus [Pa]
    c          speed of sound [m/s]
    mu         dynamic viscosity [Pa s]
    eta        heat-capacity ratio [-]
    lambda_th  thermal conductivity [W/(m K)]
    cp         specific heat at constant pressure, numeric value under
               `cp_unit_convention` (see module docstring)
    """

    rho: float = 1.20
    K: float = 1.39e5
    c: float = 340.0
    mu: float = 19.0e-6
    eta: float = 1.40
    lambda_th: float = 2.41e-2
    cp: float = _CP_KJ
    cp_unit_convention: str = "paper_kJ"

    def __post_init__(self):
        for name in ("rho", "K", "c", "mu", "eta", "lambda_th", "cp"):
            if not getattr(self, name) > 0:
                raise ValueError(f"air property {name} must be strictly positive")
        if self.eta <= 1.0:
            raise ValueError("heat-capacity ratio eta must exceed 1")
        if self.cp_unit_convention not in CP_CONVENTIONS:
            raise ValueError(f"cp_unit_convention must be one of {CP_CONVENTIONS}")

    @classmethod
    def standard(cls, cp_unit_convention: str = "paper_kJ") -> "AirProperties":
        """Default property table with cp set to match the chosen convention."""
        if cp_unit_convention == "paper_kJ":
            return cls()
        if cp_unit_convention == "si_J":
            return cls(cp=_CP_SI, cp_unit_convention="si_J")
        raise ValueError(f"cp_unit_convention must be one of {CP_CONVENTIONS}")


def circular_area(diameter):
    return math.pi * diameter * diameter / 4.0


def circular_circumference(diameter):
    return math.pi * diameter


@dataclass(frozen=True)
class TubeGeometry:
    """Straight tube of circular cross-section, constant diameter.

    Exposes the area/circumference profile as functions of x so that a
    varying profile (see `TabulatedTubeGeometry`) can be swapped in.
    """

    length: float
    diameter: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("tube length must be strictly positive")
        if not self.diameter > 0:
            raise ValueError("tube diameter must be strictly positive")

    def area(self, x=None):
        a = circular_area(self.diameter)
        if x is None or np.isscalar(x):
            return a
        return np.full(np.shape(x), a)

    def circumference(self, x=None):
        s = circular_circumference(self.diameter)
        if x is None or np.isscalar(x):
            return s
        return np.full(np.shape(x), s)

    def area_gradient(self, x=None):
        if x is None or np.isscalar(x):
            return 0.0
        return np.zeros(np.shape(x))


class TabulatedTubeGeometry:
    """Profile hook: area given on a grid, linearly interpolated in between."""

    def __init__(self, length: float, x_points, areas, circumferences=None):
        if not length > 0:
            raise ValueError("tube length must be strictly positive")
        x_points = np.asarray(x_points, dtype=float)
        areas = np.asarray(areas, dtype=float)
        if x_points.ndim != 1 or x_points.size < 2 or np.any(np.diff(x_points) <= 0):
            raise ValueError("x_points must be strictly increasing with >= 2 entries")
        if areas.shape != x_points.shape:
            raise ValueError("areas must match x_points")
        if np.any(areas <= 0):
            raise ValueError("area profile must be strictly positive everywhere")
        self.length = float(length)
        self._x = x_points
        self._a = areas
        if circumferences is None:
            # circular sections implied by the tabulated areas
            circumferences = 2.0 * np.sqrt(math.pi * areas)
        self._s = np.asarray(circumferences, dtype=float)
        self._dadx = np.gradient(areas, x_points)

    def area(self, x):
        return np.interp(x, self._x, self._a)

    def circumference(self, x):
        return np.interp(x, self._x, self._s)

    def area_gradient(self, x):
        return np.interp(x, self._x, self._dadx)


@dataclass(frozen=True)
class LossCoefficients:
    """Wall-loss coefficients of the telegrapher system, at a fixed omega_c.

    Entries may be autodiff nodes when omega_c (or the geometry) is a
    trainable parameter.
    """

    R: object
    G: object
    omega_c: object


@dataclass(frozen=True)
class RadiationConstants:
    """Open-end radiation circuit: series resistance R_r, inductance L_r."""

    R_r: object
    L_r: object
    A_l: object


@dataclass(frozen=True)
class FieldPoint:
    """Velocity potential with the derived volume velocity and pressure."""

    phi: float
    u: float
    p: float
    x: float
    t: float


def viscous_loss_coefficient(S, A, omega_c, air: AirProperties):
    """R = (S/A^2) sqrt(omega_c rho mu / 2); grows like sqrt(omega_c)."""
    return (S / (A * A)) * sqrt(omega_c * (air.rho * air.mu / 2.0))


def thermal_loss_coefficient(S, omega_c, air: AirProperties):
    """G = S (eta-1)/(rho c^2) sqrt(lambda_th omega_c / (2 cp rho))."""
    factor = (air.eta - 1.0) / (air.rho * air.c * air.c)
    return S * factor * sqrt(omega_c * (air.lambda_th / (2.0 * air.cp * air.rho)))


def loss_coefficients(air: AirProperties, geom, x, omega_c) -> LossCoefficients:
    """Evaluate both wall-loss coefficients at position x for a given omega_c."""
    if not float(value_of(omega_c)) > 0:
        raise ValueError("omega_c must be strictly positive")
    xv = float(value_of(x))
    if xv < 0 or xv > geom.length:
        raise ValueError(f"x={xv} outside tube [0, {geom.length}]")
    S = geom.circumference(x)
    A = geom.area(x)
    if float(value_of(A)) <= 0 or float(value_of(S)) <= 0:
        raise ValueError("degenerate geometry: area and circumference must be positive")
    return LossCoefficients(
        R=viscous_loss_coefficient(S, A, omega_c, air),
        G=thermal_loss_coefficient(S, omega_c, air),
        omega_c=omega_c,
    )


def radiation_constants(air: AirProperties, A_l) -> RadiationConstants:
    """Radiation circuit constants of an open end in an infinite baffle."""
    if not float(value_of(A_l)) > 0:
        raise ValueError("open-end area A_l must be strictly positive")
    R_r = (128.0 * air.rho * air.c / (9.0 * math.pi**2)) / A_l
    L_r = (8.0 * air.rho / (3.0 * math.pi)) / sqrt(math.pi * A_l)
    return RadiationConstants(R_r=R_r, L_r=L_r, A_l=A_l)


def wave_residual(bundle: DerivBundle, A, dA_dx, coeffs: LossCoefficients, air: AirProperties):
    """Pointwise residual of the lossy wave equation for the velocity potential.

    residual = phi_xx + (1/A)(dA/dx) phi_x - G R phi
               - (G rho / A + R A / K) phi_t - (rho / K) phi_tt

    The bundle must carry physical-coordinate derivatives.
    """
    phi = bundle.value
    res = bundle.d2_dx2 - (air.rho / air.K) * bundle.d2_dt2
    res = res - (coeffs.G * coeffs.R) * phi
    res = res - (coeffs.G * (air.rho / A) + coeffs.R * (A / air.K)) * bundle.d_dt
    if dA_dx is not None and np.any(value_of(dA_dx) != 0.0):
        res = res + (dA_dx / A) * bundle.d_dx
    return res


def velocity_from_potential(phi_x, A):
    """Volume velocity u = -A dphi/dx."""
    return -(A * phi_x)


def pressure_from_potential(phi, phi_t, R, A, rho):
    """Sound pressure p = R A phi + rho dphi/dt."""
    return R * A * phi + rho * phi_t


def field_point(phi, phi_x, phi_t, x, t, A, coeffs: LossCoefficients, air: AirProperties) -> FieldPoint:
    """Assemble a FieldPoint with u and p derived from the potential."""
    return FieldPoint(
        phi=phi,
        u=velocity_from_potential(phi_x, A),
        p=pressure_from_potential(phi, phi_t, coeffs.R, A, air.rho),
        x=x,
        t=t,
    )
