"""Reference-solver tests: config validation, invariants, extraction, resampling."""

import numpy as np
import pytest

from tubepinn.excitation import RosenbergSpec, rosenberg_wave
from tubepinn.fdm import (
    FdmConfig,
    FdmField,
    NotConvergedError,
    acoustic_energy,
    extract_steady_period,
    fdm_simulate,
    resample_field,
)
from tubepinn.physics import (
    AirProperties,
    LossCoefficients,
    TubeGeometry,
    loss_coefficients,
    radiation_constants,
)

AIR = AirProperties.standard()
TUBE = TubeGeometry(1.0, 0.01)
COEFFS = loss_coefficients(AIR, TUBE, 0.5, 1643.7)
RAD = radiation_constants(AIR, TUBE.area())
SPEC = RosenbergSpec(n_harmonics=20)
A0 = TUBE.area()


def source(t):
    return A0 * rosenberg_wave(SPEC, t)


@pytest.fixture(scope="module")
def default_run():
    return fdm_simulate(AIR, TUBE, COEFFS, RAD, source, SPEC.period, FdmConfig())


def test_config_validation():
    with pytest.raises(ValueError, match="CFL"):
        fdm_simulate(AIR, TUBE, COEFFS, RAD, source, SPEC.period, FdmConfig(delta_t=1e-5, delta_x=1e-3))
    with pytest.raises(ValueError, match="divide"):
        fdm_simulate(AIR, TUBE, COEFFS, RAD, source, SPEC.period, FdmConfig(delta_x=3e-3))
    with pytest.raises(ValueError, match="store_stride"):
        fdm_simulate(AIR, TUBE, COEFFS, RAD, source, SPEC.period, FdmConfig(store_stride=7))
    with pytest.raises(ValueError):
        FdmConfig(inlet="weird")
    with pytest.raises(ValueError, match="Radiation|radiation"):
        fdm_simulate(AIR, TUBE, COEFFS, None, source, SPEC.period, FdmConfig(delta_x=1e-2))


def test_zero_source_stays_silent():
    cfg = FdmConfig(delta_x=1e-2, n_periods=2, field_periods=None)
    field = fdm_simulate(AIR, TUBE, COEFFS, RAD, lambda t: 0.0 * t, SPEC.period, cfg)
    assert np.abs(field.p).max() == 0.0
    assert np.abs(field.u).max() == 0.0


def test_default_run_reaches_steady_state(default_run):
    one = extract_steady_period(default_run, SPEC.period, 1e-3)
    assert one.one_period
    assert one.meta["achieved_period_diff"] < 1e-3
    # golden regression, frozen from the first verified run of this setup
    p_l = one.p[-1]
    assert p_l.max() - p_l.min() == pytest.approx(13.380898, rel=1e-6)
    assert np.abs(one.p).max() == pytest.approx(318.02, rel=1e-3)
    assert one.t[0] == 0.0
    assert one.t[-1] == pytest.approx(SPEC.period, rel=1e-9)


def test_cfl_number_reported(default_run):
    assert default_run.meta["cfl"] == pytest.approx(0.17, abs=0.002)


def test_radiated_power_nonnegative(default_run):
    mask = default_run.probe_t >= default_run.probe_t[-1] - SPEC.period
    power = np.mean(default_run.probe_p_outlet[mask] * default_run.probe_u_outlet[mask])
    assert power > 0.0


def test_lossless_rigid_pipe_energy_conservation():
    lossless = LossCoefficients(R=0.0, G=0.0, omega_c=1.0)
    cfg = FdmConfig(
        delta_x=1e-3, n_periods=5, inlet="rigid", outlet="rigid", field_periods=None, store_stride=5
    )
    bump = lambda x: 10.0 * np.exp(-0.5 * ((x - 0.5) / 0.07) ** 2)
    field = fdm_simulate(AIR, TUBE, lossless, None, lambda t: 0.0 * t, SPEC.period, cfg, initial_pressure=bump)
    energies = acoustic_energy(field, AIR, TUBE)
    spp_stored = field.meta["steps_per_period"] // field.meta["stored_stride"]
    at_bounds = energies[::spp_stored]
    drift = np.abs(np.diff(at_bounds)) / at_bounds[:-1]
    assert drift.max() < 1e-3


def synthetic_field(n_periods=4, settle_tau=None, spp=64, nx=21):
    """p(x,t) = a(t) sin(pi x) with a either periodic or settling."""
    T = 1.0
    x = np.linspace(0, 1, nx)
    t = np.arange(n_periods * spp + 1) * (T / spp)
    envelope = 1.0 if settle_tau is None else (1.0 - np.exp(-t / settle_tau))
    a = envelope * np.sin(2 * np.pi * t / T + 0.3)
    p = np.sin(np.pi * x)[:, None] * a[None, :]
    return FdmField(x=x, t=t, p=p, u=np.zeros_like(p)), T


def test_extract_exactly_periodic_returns_first_eligible():
    field, T = synthetic_field()
    one = extract_steady_period(field, T, 1e-6)
    assert one.meta["period_index"] == 1
    assert one.meta["achieved_period_diff"] < 1e-12
    assert one.p.shape[1] == 65
    assert one.t[0] == 0.0 and one.t[-1] == pytest.approx(T)


def test_extract_settling_signal_matches_closed_form():
    # envelope 1 - exp(-t/tau): relative L2 difference between periods k and
    # k-1 is ~ exp(-(k-1)T/tau)(1 - exp(-T/tau)); extraction must succeed at
    # the first k where that drops below the tolerance
    tau = 1.3
    tol = 5e-2
    field, T = synthetic_field(n_periods=10, settle_tau=tau)
    predicted = None
    for k in range(1, 10):
        approx = np.exp(-(k - 1) * T / tau) * (1 - np.exp(-T / tau))
        if approx < tol:
            predicted = k
            break
    one = extract_steady_period(field, T, tol)
    assert abs(one.meta["period_index"] - predicted) <= 1
    # the returned period is close to the settled limit cycle
    settled = np.sin(np.pi * field.x)[:, None] * np.sin(2 * np.pi * one.t / T + 0.3)[None, :]
    rel = np.linalg.norm(one.p - settled) / np.linalg.norm(settled)
    assert rel < 2 * tol


def test_extract_zero_tolerance_never_converges():
    field, T = synthetic_field()
    with pytest.raises(NotConvergedError) as err:
        extract_steady_period(field, T, 0.0)
    assert err.value.achieved is not None


def test_extract_needs_two_periods():
    field, T = synthetic_field(n_periods=1)
    with pytest.raises(ValueError, match="two"):
        extract_steady_period(field, T, 1e-3)


def test_resample_field_bilinear():
    x = np.linspace(0, 1, 11)
    t = np.linspace(0, 2, 21)
    a, b = 3.0, -1.5
    p = a * x[:, None] + b * t[None, :]
    field = FdmField(x=x, t=t, p=p, u=2 * p)
    # grid nodes reproduce stored values exactly
    pv, uv = resample_field(field, np.array([x[3]]), np.array([t[7]]))
    assert pv[0] == p[3, 7] and uv[0] == 2 * p[3, 7]
    # cell midpoint equals the average of the four corners
    xm, tm = (x[2] + x[3]) / 2, (t[5] + t[6]) / 2
    pv, _ = resample_field(field, np.array([xm]), np.array([tm]))
    assert pv[0] == pytest.approx(np.mean(p[2:4, 5:7]))
    # bilinear reproduces any linear field to round-off
    rng = np.random.default_rng(0)
    xq = rng.uniform(0, 1, 200)
    tq = rng.uniform(0, 2, 200)
    pv, _ = resample_field(field, xq, tq)
    assert np.max(np.abs(pv - (a * xq + b * tq))) < 1e-12
    with pytest.raises(ValueError, match="hull"):
        resample_field(field, np.array([1.2]), np.array([0.5]))


def test_time_step_snaps_to_period(default_run):
    spp = default_run.meta["steps_per_period"]
    assert spp * default_run.meta["dt"] == pytest.approx(SPEC.period, rel=1e-12)
