"""Finite-difference reference solver for the lossy telegrapher system.

Centered-time centered-space stepping of the first-order (p, u) pair on a
staggered grid: pressure at the nodes and integer steps, volume velocity at
half cells and half steps, every update centered in both coordinates.  The
boundary nodes close with half-cell differences against the exact boundary
velocities: the forced inlet flow at x = 0 and the radiation-circuit flow
at x = l.  Wall-loss damping and the stiff circuit relation are handled
with trapezoidal (time-averaged) terms, which keeps the long leapfrog runs
free of the parasitic-mode growth an explicit treatment exhibits.

The stored field collocates u back onto the pressure nodes (half-cell
average inside, exact boundary values at the ends).

Memory policy: the probe waveforms at both ends are kept at full time
resolution for the whole run, while the (p, u) field is kept for the final
``field_periods`` periods only, sampled every ``store_stride`` steps (the
stride must divide the steps per period).  Small grids can set
``field_periods=None`` to store everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .autodiff import value_of
from .physics import AirProperties, LossCoefficients, RadiationConstants

__all__ = [
    "FdmConfig",
    "FdmField",
    "NotConvergedError",
    "fdm_simulate",
    "extract_steady_period",
    "resample_field",
    "acoustic_energy",
]


class NotConvergedError(RuntimeError):
    """Steady state was not reached within the simulated periods."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class FdmConfig:
    delta_x: float = 1e-3
    delta_t: float = 0.5e-6
    n_periods: int = 20
    steady_tol: float = 1e-3
    store_stride: int = 5
    field_periods: int | None = 3
    inlet: str = "forced"
    outlet: str = "radiation"

    def __post_init__(self):
        if self.delta_x <= 0 or self.delta_t <= 0:
            raise ValueError("step sizes must be positive")
        if self.n_periods < 1:
            raise ValueError("n_periods must be >= 1")
        if self.store_stride < 1:
            raise ValueError("store_stride must be >= 1")
        if self.inlet not in ("forced", "rigid"):
            raise ValueError("inlet must be 'forced' or 'rigid'")
        if self.outlet not in ("radiation", "rigid"):
            raise ValueError("outlet must be 'radiation' or 'rigid'")


@dataclass
class FdmField:
    """Sampled (p, u) field on a rectilinear grid."""

    x: np.ndarray
    t: np.ndarray
    p: np.ndarray  # shape (n_x, n_t)
    u: np.ndarray  # shape (n_x, n_t)
    one_period: bool = False
    meta: dict = dataclass_field(default_factory=dict)
    probe_t: np.ndarray | None = None
    probe_p_outlet: np.ndarray | None = None
    probe_u_outlet: np.ndarray | None = None
    probe_u_inlet: np.ndarray | None = None

    def __post_init__(self):
        if self.p.shape != (self.x.size, self.t.size) or self.u.shape != self.p.shape:
            raise ValueError("field grids must have shape (n_x, n_t)")


def fdm_simulate(
    air: AirProperties,
    geom,
    coeffs: LossCoefficients,
    rad: RadiationConstants | None,
    source,
    period: float,
    config: FdmConfig,
    initial_pressure=None,
) -> FdmField:
    """Run the solver for ``config.n_periods`` periods of the source.

    ``source`` maps time [s] to inlet volume velocity [m^3/s] (ignored for a
    rigid inlet).  ``initial_pressure`` is an optional array or callable
    giving p(x, 0); the default is silence.  The actual time step is snapped
    so that a period is an integer number of steps.
    """
    length = geom.length
    dx = config.delta_x
    n_cells = length / dx
    if abs(n_cells - round(n_cells)) > 1e-9 * max(1.0, n_cells):
        raise ValueError(f"delta_x={dx} does not divide the tube length {length}")
    n_x = int(round(n_cells)) + 1
    if n_x < 4:
        raise ValueError("grid too coarse: need at least 3 cells along the tube")
    x = np.linspace(0.0, length, n_x)

    spp = int(round(period / config.delta_t))
    if spp < 8:
        raise ValueError("delta_t too coarse: fewer than 8 steps per period")
    dt = period / spp
    cfl = air.c * dt / dx
    if not cfl < 1.0:
        raise ValueError(f"CFL violation: c*dt/dx = {cfl:.3f} >= 1")

    R = float(value_of(coeffs.R))
    G = float(value_of(coeffs.G))
    K, rho = air.K, air.rho
    # u lives on the cell edges x (where both boundary conditions act),
    # p on the cell centers; both stored collocated on the edge grid
    x_cells = x[:-1] + dx / 2.0
    A_u = np.asarray(geom.area(x), dtype=float)
    A_p = np.asarray(geom.area(x_cells), dtype=float)

    # trapezoidal damping factors (2nd order, unconditionally stable)
    a_p = dt * (K / A_p) * G / 2.0
    p_gain = (1.0 - a_p) / (1.0 + a_p)
    p_step = (dt * (K / A_p)) / (1.0 + a_p) / dx
    b_u = dt * (A_u[1:-1] / rho) * R / 2.0
    u_gain = (1.0 - b_u) / (1.0 + b_u)
    u_step = (dt * (A_u[1:-1] / rho)) / (1.0 + b_u) / dx

    if config.outlet == "radiation":
        if rad is None:
            raise ValueError("radiation outlet requires RadiationConstants")
        R_r = float(value_of(rad.R_r))
        L_r = float(value_of(rad.L_r))

    n_steps = config.n_periods * spp
    times = dt * np.arange(n_steps + 1)

    if config.inlet == "forced":
        u_in = np.asarray(source(times), dtype=float)  # integer steps (probe)
        u_in_half = np.asarray(source(times[:-1] + dt / 2.0), dtype=float)
    else:
        u_in = np.zeros(n_steps + 1)
        u_in_half = np.zeros(n_steps)

    # storage layout
    stride = config.store_stride
    if spp % stride != 0:
        raise ValueError(f"store_stride={stride} must divide steps per period {spp}")
    if config.field_periods is None:
        first_stored_step = 0
    else:
        keep = min(config.field_periods, config.n_periods)
        first_stored_step = (config.n_periods - keep) * spp
    stored_steps = np.arange(first_stored_step, n_steps + 1, stride)
    p_store = np.empty((n_x, stored_steps.size))
    u_store = np.empty((n_x, stored_steps.size))
    store_pos = {step: j for j, step in enumerate(stored_steps)}

    probe_p_out = np.empty(n_steps + 1)
    probe_u_out = np.empty(n_steps + 1)

    # third-order extrapolation of cell-centered pressure onto the end faces;
    # the outlet value feeds the radiation circuit, so its accuracy sets the
    # coarse-grid quality of the whole boundary coupling
    _E0, _E1, _E2 = 15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0

    def p_at_outlet(p_cells):
        return _E0 * p_cells[-1] + _E1 * p_cells[-2] + _E2 * p_cells[-3]

    def p_at_inlet(p_cells):
        return _E0 * p_cells[0] + _E1 * p_cells[1] + _E2 * p_cells[2]

    # state: p at integer steps (cells), u at half steps (edges),
    # coil current u_r at integer steps
    p_curr = np.zeros(n_x - 1)
    if initial_pressure is not None:
        p_curr[:] = initial_pressure(x_cells) if callable(initial_pressure) else initial_pressure
    u_half_old = np.zeros(n_x)  # u^{n-1/2} on edges
    u_r_curr = 0.0

    if config.outlet == "radiation":
        # The circuit couples stiffly to the last cell (fast LC-type mode of
        # coil + cell compliance, and a resistive feedback whose explicit
        # loop gain is dt K / (A dx R_r)).  Both branches are integrated
        # trapezoidally: with p_l averaged over the step, the coil current,
        # the outlet flow and the last-cell pressure reduce to one scalar
        # linear equation once the neighbouring cell's new pressure is known.
        c1 = dt / (2.0 * L_r) + 1.0 / R_r  # u_l^{n+1/2} = u_r^n + c1 * p_l_avg
        denom_last = 1.0 + p_step[-1] * c1 * (_E0 / 2.0)

    def commit(step, p_cells, u_half_a, u_half_b, u_l_node):
        p_nodes = np.empty(n_x)
        p_nodes[1:-1] = 0.5 * (p_cells[:-1] + p_cells[1:])
        p_nodes[0] = p_at_inlet(p_cells)
        p_nodes[-1] = p_at_outlet(p_cells)
        probe_p_out[step] = p_nodes[-1]
        probe_u_out[step] = u_l_node
        j = store_pos.get(step)
        if j is not None:
            p_store[:, j] = p_nodes
            u_store[:, j] = 0.5 * (u_half_a + u_half_b)
            u_store[0, j] = u_in[step]  # exact at integer times
            u_store[-1, j] = u_l_node

    def u_inner_halfstep(p_cells):
        out = np.empty(n_x)
        out[1:-1] = u_gain * u_half_old[1:-1] - u_step * (p_cells[1:] - p_cells[:-1])
        return out

    for step in range(n_steps):
        # u update: n-1/2 -> n+1/2, driven by p at step n (the outlet edge is
        # filled during the implicit solve below; its stored value at integer
        # steps comes from the exact circuit relation, so the placeholder
        # never reaches the output)
        u_half_new = u_inner_halfstep(p_curr)
        u_half_new[0] = u_in_half[step] if config.inlet == "forced" else 0.0
        u_half_new[-1] = 0.0
        p_l_n = p_at_outlet(p_curr)
        u_l_at_n = u_r_curr + p_l_n / R_r if config.outlet == "radiation" else 0.0
        commit(step, p_curr, u_half_old, u_half_new, u_l_at_n)

        # p update: n -> n+1; all cells but the last are fully explicit
        p_new = np.empty(n_x - 1)
        p_new[:-1] = p_gain[:-1] * p_curr[:-1] - p_step[:-1] * (
            u_half_new[1:-1] - u_half_new[:-2]
        )
        if config.outlet == "radiation":
            known_tail = _E1 * p_new[-2] + _E2 * p_new[-3]
            rhs = p_gain[-1] * p_curr[-1] - p_step[-1] * (
                u_r_curr + c1 * (p_l_n + known_tail) / 2.0 - u_half_new[-2]
            )
            p_new[-1] = rhs / denom_last
            p_l_new = _E0 * p_new[-1] + known_tail
            p_l_avg = 0.5 * (p_l_n + p_l_new)
            u_half_new[-1] = u_r_curr + c1 * p_l_avg
            u_r_curr = u_r_curr + (dt / L_r) * p_l_avg
        else:
            p_new[-1] = p_gain[-1] * p_curr[-1] - p_step[-1] * (0.0 - u_half_new[-2])

        p_curr = p_new
        u_half_old = u_half_new

    # final commit needs one more interior u half-level
    u_half_new = u_inner_halfstep(p_curr)
    u_half_new[0] = u_in[n_steps] if config.inlet == "forced" else 0.0
    u_half_new[-1] = 0.0
    p_l_n = p_at_outlet(p_curr)
    u_l_at_n = u_r_curr + p_l_n / R_r if config.outlet == "radiation" else 0.0
    commit(n_steps, p_curr, u_half_old, u_half_new, u_l_at_n)

    if not (np.isfinite(p_store).all() and np.isfinite(u_store).all()):
        raise FloatingPointError("solver produced non-finite field values")

    return FdmField(
        x=x,
        t=times[stored_steps],
        p=p_store,
        u=u_store,
        one_period=False,
        meta={
            "dt": dt,
            "dx": dx,
            "cfl": cfl,
            "steps_per_period": spp,
            "stored_stride": stride,
            "n_periods": config.n_periods,
            "period": period,
        },
        probe_t=times,
        probe_p_outlet=probe_p_out,
        probe_u_outlet=probe_u_out,
        probe_u_inlet=u_in,
    )


def extract_steady_period(field: FdmField, period: float, steady_tol: float) -> FdmField:
    """First stored period whose pressure field repeats its predecessor.

    Scans consecutive stored periods in order and returns the first whose
    relative L2 difference (over the p grid) from the period before is below
    ``steady_tol``; raises NotConvergedError with the best achieved
    difference otherwise.  The returned one-period field includes both
    endpoint samples and a time axis rebased to [0, period].
    """
    t = field.t
    if t.size < 3:
        raise ValueError("field too short for period extraction")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0):
        raise ValueError("field time axis must be uniform")
    spp = period / dt
    if abs(spp - round(spp)) > 1e-6 * spp:
        raise ValueError("stored time step does not divide the period")
    spp = int(round(spp))
    n_whole = (t.size - 1) // spp
    if n_whole < 2:
        raise ValueError("period extraction needs at least two stored periods")

    best = np.inf
    for k in range(1, n_whole):
        a = field.p[:, (k - 1) * spp : k * spp + 1]
        b = field.p[:, k * spp : (k + 1) * spp + 1]
        denom = np.linalg.norm(b)
        diff = np.linalg.norm(b - a) / denom if denom > 0 else 0.0
        best = min(best, diff)
        if diff < steady_tol:
            sl = slice(k * spp, (k + 1) * spp + 1)
            return FdmField(
                x=field.x,
                t=field.t[sl] - field.t[sl][0],
                p=field.p[:, sl].copy(),
                u=field.u[:, sl].copy(),
                one_period=True,
                meta={
                    **field.meta,
                    "achieved_period_diff": diff,
                    "period_index": k,
                    "extract_start_time": float(field.t[sl.start]),
                },
            )
    raise NotConvergedError(
        f"steady state not reached: best period-to-period difference "
        f"{best:.3e} >= tolerance {steady_tol:.3e}",
        achieved=best,
    )


def resample_field(field: FdmField, x_query, t_query):
    """Bilinear interpolation of (p, u) at query points inside the grid hull."""
    xq = np.asarray(x_query, dtype=float)
    tq = np.asarray(t_query, dtype=float)
    if xq.shape != tq.shape:
        raise ValueError("x_query and t_query must have the same shape")
    x, t = field.x, field.t
    eps_x = 1e-9 * (x[-1] - x[0])
    eps_t = 1e-9 * (t[-1] - t[0])
    if xq.size and (xq.min() < x[0] - eps_x or xq.max() > x[-1] + eps_x):
        raise ValueError("x_query outside the field hull")
    if tq.size and (tq.min() < t[0] - eps_t or tq.max() > t[-1] + eps_t):
        raise ValueError("t_query outside the field hull")
    ix = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, x.size - 2)
    it = np.clip(np.searchsorted(t, tq, side="right") - 1, 0, t.size - 2)
    wx = np.clip((xq - x[ix]) / (x[ix + 1] - x[ix]), 0.0, 1.0)
    wt = np.clip((tq - t[it]) / (t[it + 1] - t[it]), 0.0, 1.0)

    def interp(grid):
        g00 = grid[ix, it]
        g10 = grid[ix + 1, it]
        g01 = grid[ix, it + 1]
        g11 = grid[ix + 1, it + 1]
        return (
            g00 * (1 - wx) * (1 - wt)
            + g10 * wx * (1 - wt)
            + g01 * (1 - wx) * wt
            + g11 * wx * wt
        )

    return interp(field.p), interp(field.u)


def acoustic_energy(field: FdmField, air: AirProperties, geom) -> np.ndarray:
    """Discrete acoustic energy at each stored time (trapezoid over x).

    E = integral [ A p^2 / (2K) + rho u^2 / (2A) ] dx, conserved exactly by
    the continuous lossless system with rigid ends.
    """
    A = np.asarray(geom.area(field.x), dtype=float).reshape(-1, 1)
    dx = field.x[1] - field.x[0]
    density = A * field.p**2 / (2 * air.K) + air.rho * field.u**2 / (2 * A)
    weights = np.full(field.x.size, dx)
    weights[0] = weights[-1] = dx / 2
    return weights @ density
