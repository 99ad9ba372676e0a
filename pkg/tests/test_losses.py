"""Loss terms checked against closed-form mock fields and published weights."""

import math

import numpy as np
import pytest

from tubepinn import autodiff as ad
from tubepinn.autodiff import DerivBundle
from tubepinn.excitation import RosenbergSpec, rosenberg_wave
from tubepinn.losses import (
    LossWeights,
    PrimedWeights,
    bc_loss,
    coupling_loss,
    measurement_loss,
    normalize_weights,
    pde_loss,
    periodicity_loss,
    total_loss,
)
from tubepinn.network import ArchitectureConfig, eval_with_input_derivs, init_network
from tubepinn.physics import (
    AirProperties,
    LossCoefficients,
    TubeGeometry,
    loss_coefficients,
    radiation_constants,
)

AIR = AirProperties.standard()
TUBE = TubeGeometry(length=1.0, diameter=0.01)
COEFFS = loss_coefficients(AIR, TUBE, 0.5, 1643.7)
RAD = radiation_constants(AIR, TUBE.area())
PERIOD = 1.0 / 261.6


def zero_bundle(n):
    z = np.zeros((n, 1))
    return DerivBundle(z, z, z, z, z)


def test_pde_loss_zero_field_and_positivity():
    assert pde_loss(zero_bundle(40), TUBE.area(), 0.0, COEFFS, AIR, 2.0, 2 / PERIOD) == 0.0
    cfg = ArchitectureConfig(n_nodes=8, n_blocks=1, alpha_phi=0.01, alpha_u=0.01, seed=0)
    params = init_network(cfg)
    tape = ad.Tape()
    b = eval_with_input_derivs(tape, params, "wave", np.linspace(-1, 1, 32), np.linspace(-1, 1, 32))
    val = pde_loss(b, TUBE.area(), 0.0, COEFFS, AIR, 2.0, 2 / PERIOD)
    assert float(val.value) > 0.0


def test_pde_loss_on_analytic_standing_wave():
    # lossless standing wave phi = sin(kx) sin(ckt); exact solution, so the
    # residual (hence the loss) must vanish to round-off.  The bundle is
    # built in normalized coordinates and converted via the scale factors.
    c = math.sqrt(AIR.K / AIR.rho)
    length, T = 1.0, PERIOD
    k = 2 * math.pi / 0.61
    xn = np.linspace(-1, 1, 25).reshape(-1, 1)
    tn = np.linspace(-1, 1, 25).reshape(-1, 1)
    x = (xn + 1) * length / 2
    t = (tn + 1) * T / 2
    sx, st = length / 2, T / 2  # dx/dx_norm and dt/dt_norm
    b = DerivBundle(
        value=np.sin(k * x) * np.sin(c * k * t),
        d_dx=k * np.cos(k * x) * np.sin(c * k * t) * sx,
        d_dt=c * k * np.sin(k * x) * np.cos(c * k * t) * st,
        d2_dx2=-(k**2) * np.sin(k * x) * np.sin(c * k * t) * sx**2,
        d2_dt2=-((c * k) ** 2) * np.sin(k * x) * np.sin(c * k * t) * st**2,
    )
    lossless = LossCoefficients(R=0.0, G=0.0, omega_c=1.0)
    val = pde_loss(b, TUBE.area(), 0.0, lossless, AIR, 2.0 / length, 2.0 / T)
    assert val < 1e-10


def test_pde_loss_rejects_empty_sets():
    with pytest.raises(ValueError, match="at least one"):
        pde_loss(zero_bundle(0), TUBE.area(), 0.0, COEFFS, AIR, 2.0, 2 / PERIOD)


def test_bc_loss_cases():
    n = 64
    area0 = TUBE.area()
    sx = 2.0
    # u_hat == u_bar -> 0
    target = 0.3 * np.ones(n) * area0
    b = DerivBundle(value=None, d_dx=np.full((n, 1), -0.3 * area0 / (area0 * sx)))
    assert bc_loss(b, target, area0, sx) == pytest.approx(0.0, abs=1e-30)
    # u_hat == 0 against a pulse target -> mean of squared target
    spec = RosenbergSpec()
    t = np.linspace(0, spec.period, n)
    u_bar = area0 * rosenberg_wave(spec, t)
    bz = DerivBundle(value=None, d_dx=np.zeros((n, 1)))
    assert bc_loss(bz, u_bar, area0, sx) == pytest.approx(np.mean(u_bar**2), rel=1e-12)
    # constant offset delta -> delta^2
    delta = 2.5e-5
    b_off = DerivBundle(value=None, d_dx=np.full((n, 1), -delta / (area0 * sx)))
    assert bc_loss(b_off, np.zeros(n), area0, sx) == pytest.approx(delta**2, rel=1e-12)
    with pytest.raises(ValueError, match="grid"):
        bc_loss(bz, np.zeros(n + 1), area0, sx)


def test_coupling_loss_cases():
    n = 32
    area = TUBE.area()
    sx, st = 2.0, 2 / PERIOD
    lam_l, lam_r = 3.0, 7.0
    zero = np.zeros((n, 1))
    wave_zero = DerivBundle(value=zero, d_dx=zero, d_dt=zero)
    rad_zero = DerivBundle(value=zero, d_dt=zero)
    assert coupling_loss(wave_zero, rad_zero, RAD, area, COEFFS, AIR, sx, st, lam_l, lam_r) == 0.0

    # constant equal currents with zero pressure satisfy both equations
    c0 = 1e-4
    wave_const = DerivBundle(value=zero, d_dx=np.full((n, 1), -c0 / (area * sx)), d_dt=zero)
    rad_const = DerivBundle(value=np.full((n, 1), c0), d_dt=zero)
    assert coupling_loss(wave_const, rad_const, RAD, area, COEFFS, AIR, sx, st, lam_l, lam_r) == pytest.approx(0.0, abs=1e-30)

    # pressure offset delta with the circuit equation satisfied -> lambda_r delta^2
    delta = 4.2
    wave_p = DerivBundle(value=zero, d_dx=zero, d_dt=np.full((n, 1), (delta / AIR.rho) / st))
    assert coupling_loss(wave_p, rad_zero, RAD, area, COEFFS, AIR, sx, st, lam_l, lam_r) == pytest.approx(
        lam_r * delta**2, rel=1e-12
    )
    with pytest.raises(ValueError, match="time grids"):
        coupling_loss(wave_zero, DerivBundle(value=np.zeros((n + 1, 1)), d_dt=np.zeros((n + 1, 1))), RAD, area, COEFFS, AIR, sx, st, lam_l, lam_r)


def test_periodicity_loss_exactly_periodic_field():
    n = 41
    length, T = 1.0, PERIOD
    x = np.linspace(0, length, n).reshape(-1, 1)
    g = np.sin(2.3 * x) + 0.3
    sx, st = 2 / length, 2 / T

    def bundle_at(t_phys):
        # phi(x, t) = sin(2 pi t / T) g(x), in normalized coordinates
        w = 2 * math.pi / T
        return DerivBundle(
            value=np.sin(w * t_phys) * g,
            d_dx=np.sin(w * t_phys) * np.gradient(g[:, 0], x[:, 0]).reshape(-1, 1) / sx,
            d_dt=w * np.cos(w * t_phys) * g / st,
            d2_dx2=None,
            d2_dt2=-(w**2) * np.sin(w * t_phys) * g / st**2,
        )

    # exact periodicity: identical field state at both ends -> exactly zero
    L_u, L_p, L_t, L_P = periodicity_loss(
        bundle_at(0.0), bundle_at(0.0), TUBE.area(), COEFFS, AIR, sx, st, 1.0, 2.0, 3.0
    )
    assert L_P == 0.0
    # same field evaluated analytically at t = T: zero up to sin(2 pi) round-off
    L_u, L_p, L_t, L_P = periodicity_loss(
        bundle_at(0.0), bundle_at(T), TUBE.area(), COEFFS, AIR, sx, st, 1.0, 2.0, 3.0
    )
    assert L_P < 1e-12


def test_periodicity_loss_linear_drift_field():
    # phi(x, t) = t: u and the second time derivative stay periodic, the
    # pressure mismatch is exactly (R A T)^2
    n = 17
    length, T = 1.0, PERIOD
    sx, st = 2 / length, 2 / T
    area = TUBE.area()
    zeros = np.zeros((n, 1))

    def bundle_at(t_phys):
        return DerivBundle(
            value=np.full((n, 1), t_phys),
            d_dx=zeros,
            d_dt=np.full((n, 1), 1.0 / st),
            d2_dx2=zeros,
            d2_dt2=zeros,
        )

    lam_u, lam_p, lam_t = 1.0, 8.7e-6, 1.3e-12
    L_u, L_p, L_t, L_P = periodicity_loss(
        bundle_at(0.0), bundle_at(T), area, COEFFS, AIR, sx, st, lam_u, lam_p, lam_t
    )
    expected_Lp = (COEFFS.R * area * T) ** 2
    assert L_u == 0.0 and L_t == 0.0
    assert L_p == pytest.approx(expected_Lp, rel=1e-12)
    assert L_P == pytest.approx(lam_p * expected_Lp, rel=1e-12)
    # doubling lambda_p doubles its contribution
    _, _, _, L_P2 = periodicity_loss(
        bundle_at(0.0), bundle_at(T), area, COEFFS, AIR, sx, st, lam_u, 2 * lam_p, lam_t
    )
    assert L_P2 == pytest.approx(2 * L_P, rel=1e-12)


def test_measurement_loss_cases():
    n = 50
    st = 2 / PERIOD
    area = TUBE.area()
    target = 3.0 * np.sin(np.linspace(0, 2 * np.pi, n))
    # p_hat == p_bar -> 0 (build phi_t so that rho phi_t = target, phi = 0)
    b = DerivBundle(value=np.zeros((n, 1)), d_dt=(target / AIR.rho / st).reshape(-1, 1))
    assert measurement_loss(b, target, area, COEFFS, AIR, st) == pytest.approx(0.0, abs=1e-25)
    # constant 1 Pa offset -> 1
    b1 = DerivBundle(value=np.zeros((n, 1)), d_dt=((target + 1.0) / AIR.rho / st).reshape(-1, 1))
    assert measurement_loss(b1, target, area, COEFFS, AIR, st) == pytest.approx(1.0, rel=1e-10)
    # zero prediction -> mean of squared target
    bz = DerivBundle(value=np.zeros((n, 1)), d_dt=np.zeros((n, 1)))
    assert measurement_loss(bz, target, area, COEFFS, AIR, st) == pytest.approx(np.mean(target**2), rel=1e-12)
    with pytest.raises(ValueError, match="target"):
        measurement_loss(bz, None, area, COEFFS, AIR, st)


def table_weights(mode):
    primed = PrimedWeights.forward_defaults() if mode == "forward" else PrimedWeights.inverse_defaults()
    return normalize_weights(primed, TUBE.area(), float(RAD.R_r))


def test_normalize_weights_reproduces_published_table():
    w = table_weights("forward")
    assert w.lambda_B == pytest.approx(1.6e8, rel=0.05)
    assert w.lambda_u == pytest.approx(1.6e8, rel=0.05)
    assert w.lambda_l == pytest.approx(2.9e-6, rel=0.05)
    assert w.lambda_r == pytest.approx(1.4e-4, rel=0.05)
    assert w.lambda_E == 0.58
    assert w.lambda_P == 1.0 and w.lambda_C == 1.0
    assert w.lambda_p == pytest.approx(8.7e-6)
    assert w.lambda_t == pytest.approx(1.3e-12)
    wi = table_weights("inverse")
    assert wi.lambda_E == pytest.approx(5.8)
    assert wi.lambda_M == pytest.approx(5.0e-3)


def test_total_loss_weighting():
    w = table_weights("forward")
    zero_terms = {"L_E": 0.0, "L_B": 0.0, "L_P": 0.0, "L_C": 0.0}
    assert total_loss(zero_terms, w, "forward") == 0.0
    only_E = {"L_E": 1.0, "L_B": 0.0, "L_P": 0.0, "L_C": 0.0}
    assert total_loss(only_E, w, "forward") == pytest.approx(0.58)
    wi = table_weights("inverse")
    only_M = {"L_E": 0.0, "L_B": 0.0, "L_P": 0.0, "L_C": 0.0, "L_M": 1.0}
    assert total_loss(only_M, wi, "inverse") == pytest.approx(5.0e-3)
    with pytest.raises(ValueError, match="missing"):
        total_loss({"L_E": 1.0, "L_B": 0.0, "L_P": 0.0, "L_C": 0.0}, wi, "inverse")
    with pytest.raises(ValueError, match="missing"):
        total_loss({"L_E": 1.0, "L_B": None, "L_P": 0.0, "L_C": 0.0}, w, "forward")


def test_loss_weights_reject_negatives():
    with pytest.raises(ValueError):
        LossWeights(-1, 1, 1, 1, 1, 1, 1, 1, 1, 1)


def test_pde_loss_gradient_matches_finite_differences():
    cfg = ArchitectureConfig(n_nodes=6, n_blocks=1, alpha_phi=0.05, alpha_u=0.05, seed=9)
    params = init_network(cfg)
    xn = np.linspace(-0.9, 0.9, 12)
    tn = np.linspace(-0.9, 0.9, 12)

    def value():
        tape = ad.Tape()
        b = eval_with_input_derivs(tape, params, "wave", xn, tn)
        return tape, pde_loss(b, TUBE.area(), 0.0, COEFFS, AIR, 2.0, 2 / PERIOD)

    tape, loss = value()
    grads = ad.backward(tape, loss)
    h = 1e-6
    p = params["wave.out.W"]
    fd = np.zeros_like(p.value)
    for i in range(p.value.shape[0]):
        orig = p.value[i, 0]
        p.value[i, 0] = orig + h
        up = float(value()[1].value)
        p.value[i, 0] = orig - h
        dn = float(value()[1].value)
        p.value[i, 0] = orig
        fd[i, 0] = (up - dn) / (2 * h)
    scale = np.maximum(np.abs(fd), 1e-3 * np.abs(fd).max())
    assert np.max(np.abs(grads["wave.out.W"] - fd) / scale) < 1e-4
