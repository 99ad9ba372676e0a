"""Optimizer pieces and the training loop mechanics (fast configurations)."""

import numpy as np
import pytest

from tubepinn import autodiff as ad
from tubepinn.autodiff import DerivBundle, ParameterSet
from tubepinn.excitation import RosenbergSpec
from tubepinn.losses import PrimedWeights
from tubepinn.network import ArchitectureConfig
from tubepinn.physics import AirProperties, TubeGeometry
from tubepinn.sampling import CollocationCounts, build_collocation
from tubepinn.training import (
    AdamState,
    TrainConfig,
    TrainingProblem,
    adam_step,
    apply_length_scaling,
    corrupt_targets,
    lr_schedule,
    train,
)

AIR = AirProperties.standard()
TUBE = TubeGeometry(1.0, 0.01)
SPEC = RosenbergSpec(n_harmonics=20)


def tiny_problem(mode="forward", **overrides):
    counts = CollocationCounts(n_interior=120, n_boundary=40, n_coupling=40, n_periodic=40, n_measurement=40)
    sets = build_collocation(TUBE.length, SPEC.period, counts)
    arch = ArchitectureConfig(n_nodes=8, n_blocks=1, alpha_phi=0.002, alpha_u=3.4e-5, seed=3)
    kwargs = dict(
        air=AIR,
            geom=TUBE,
        omega_c=1643.7,
        arch=arch,
        sets=sets,
        weights=PrimedWeights.forward_defaults() if mode == "forward" else PrimedWeights.inverse_defaults(),
        mode=mode,
        source=SPEC,
    )
    kwargs.update(overrides)
    return TrainingProblem(**kwargs)


def test_lr_schedule():
    assert lr_schedule(0.001, 0.007, 0) == 0.001
    assert lr_schedule(0.001, 0.007, 1000) == pytest.approx(1.25e-4)
    assert lr_schedule(0.5, 0.0, 12345) == 0.5
    epochs = np.arange(100)
    rates = [lr_schedule(0.001, 0.007, int(e)) for e in epochs]
    assert np.all(np.diff(rates) < 0)
    with pytest.raises(ValueError):
        lr_schedule(0.001, 0.007, -1)


def test_adam_zero_gradient_leaves_parameters():
    params = ParameterSet()
    w = params.add("w", np.array([1.0, -2.0]))
    state = AdamState()
    grads = ad.GradientSet()
    grads._grads["w"] = np.zeros(2)
    before = w.value.copy()
    adam_step(params, grads, state, lr=0.1)
    assert np.array_equal(w.value, before)


def test_adam_minimizes_scalar_quadratic():
    params = ParameterSet()
    w = params.add("w", np.array(1.0))
    state = AdamState()
    values = [float(w.value)]
    for _ in range(100):
        grads = ad.GradientSet()
        grads._grads["w"] = np.array(2.0 * w.value)
        adam_step(params, grads, state, lr=0.01)
        values.append(float(w.value))
    diffs = np.diff(np.abs(values))
    assert np.all(diffs < 0)
    assert abs(values[-1]) < abs(values[0])


def test_adam_shape_mismatch_rejected():
    params = ParameterSet()
    params.add("w", np.zeros((2, 2)))
    grads = ad.GradientSet()
    grads._grads["w"] = np.zeros(3)
    with pytest.raises(ValueError, match="shape"):
        adam_step(params, grads, AdamState(), lr=0.1)


def test_corrupt_targets():
    wave = np.sin(np.linspace(0, 2 * np.pi, 10000))
    assert np.array_equal(corrupt_targets(wave, 0.0, 1), wave)
    noisy = corrupt_targets(wave, 0.01, seed=9)
    sigma = np.std(noisy - wave)
    assert 0.008 < sigma < 0.012
    assert np.array_equal(noisy, corrupt_targets(wave, 0.01, seed=9))
    assert not np.array_equal(noisy, corrupt_targets(wave, 0.01, seed=10))


def test_apply_length_scaling_closed_form():
    # phi = x^2 on [0, l0]; reinterpreting the network on a stretched tube of
    # length l_v must reproduce the analytic derivatives of the stretched
    # field phi'(x') = (x' l0/l_v)^2
    l0 = 1.0
    x = np.linspace(0, l0, 11).reshape(-1, 1)
    bundle = DerivBundle(value=x**2, d_dx=2 * x, d_dt=np.zeros_like(x), d2_dx2=np.full_like(x, 2.0), d2_dt2=None)
    same = apply_length_scaling(bundle, l0, l0)
    assert np.array_equal(same.d_dx, bundle.d_dx)
    assert np.array_equal(same.d2_dx2, bundle.d2_dx2)

    l_v = 2.0
    scaled = apply_length_scaling(bundle, l0, l_v)
    assert np.allclose(scaled.d_dx, bundle.d_dx / 2)
    assert np.allclose(scaled.d2_dx2, bundle.d2_dx2 / 4)
    x_prime = x * (l_v / l0)
    analytic_first = 2 * x_prime * (l0 / l_v) ** 2
    analytic_second = np.full_like(x, 2.0 * (l0 / l_v) ** 2)
    assert np.allclose(scaled.d_dx, analytic_first)
    assert np.allclose(scaled.d2_dx2, analytic_second)
    assert scaled.d_dt is bundle.d_dt  # time derivatives untouched


def test_training_decreases_loss_and_is_deterministic():
    problem = tiny_problem()
    cfg = TrainConfig(epochs=120, mode="forward", seed=0)
    res = train(problem, cfg)
    assert res.history[-1].L_all < res.history[0].L_all / 3
    res2 = train(tiny_problem(), cfg)
    assert res2.history[-1].L_all == res.history[-1].L_all
    for p, q in zip(res.params, res2.params):
        assert np.array_equal(p.value, q.value)


def test_early_stopping_at_epoch_boundary():
    res = train(tiny_problem(), TrainConfig(epochs=50, mode="forward", early_stop=1e9))
    assert res.stopped_early and res.epochs_run == 1
    res = train(tiny_problem(), TrainConfig(epochs=5, mode="forward", early_stop=0.0))
    assert not res.stopped_early and res.epochs_run == 5


def test_nonfinite_targets_abort_with_term_name():
    problem = tiny_problem()
    problem.target_u = np.full_like(problem.target_u, np.inf)
    with pytest.raises(FloatingPointError, match="L_B"):
        train(problem, TrainConfig(epochs=3, mode="forward"))


def test_mode_mismatch_rejected():
    with pytest.raises(ValueError, match="mode"):
        train(tiny_problem(), TrainConfig(epochs=1, mode="inverse_omega"))


def test_inverse_requires_measurement_target():
    with pytest.raises(ValueError, match="measured"):
        tiny_problem(mode="inverse_omega", omega_c_init=1.3e3)


def test_inverse_omega_mechanics():
    n_meas = 40
    target_p = 5.0 * np.sin(2 * np.pi * np.arange(n_meas) / n_meas)
    problem = tiny_problem(mode="inverse_omega", omega_c_init=1.3149e3, target_p=target_p)
    res = train(problem, TrainConfig(epochs=25, mode="inverse_omega", seed=1))
    assert res.inverse is not None
    traj = res.inverse.trajectory
    assert traj[0]["omega_c"] == pytest.approx(1.3149e3)
    assert traj[-1]["omega_c"] > 0
    assert len(traj) == res.epochs_run
    assert res.history[-1].omega_c == traj[-1]["omega_c"]
    assert res.history[-1].L_M is not None


def test_inverse_design_mechanics():
    n_meas = 40
    target_p = 5.0 * np.sin(2 * np.pi * np.arange(n_meas) / n_meas)
    geom0 = TubeGeometry(0.8, 0.008)
    problem = tiny_problem(
        mode="inverse_design",
        geom=geom0,
        target_p=target_p,
        length_init=0.8,
        diameter_init_mm=8.0,
    )
    res = train(problem, TrainConfig(epochs=25, mode="inverse_design", seed=1))
    traj = res.inverse.trajectory
    assert traj[0]["length"] == pytest.approx(0.8)
    assert traj[0]["diameter_mm"] == pytest.approx(8.0)
    assert res.history[-1].l_v == traj[-1]["length"]
    assert res.history[-1].d_v == traj[-1]["diameter_mm"]
    # with identical scalars the inverse-mode loss layout matches forward
    assert all(s["length"] > 0 and s["diameter_mm"] > 0 for s in traj)


def test_pipeline_works_without_periodicity_loss():
    problem = tiny_problem(include_periodicity=False)
    res = train(problem, TrainConfig(epochs=10, mode="forward"))
    assert all(r.L_P == 0.0 for r in res.history)
    assert res.history[-1].L_all < res.history[0].L_all


def test_noise_fraction_is_deterministic():
    cfg = TrainConfig(epochs=5, mode="forward", noise_fraction=0.01, seed=7)
    a = train(tiny_problem(), cfg).history[-1].L_all
    b = train(tiny_problem(), cfg).history[-1].L_all
    assert a == b


def test_scalar_warmup_holds_then_releases():
    n_meas = 40
    target_p = 5.0 * np.sin(2 * np.pi * np.arange(n_meas) / n_meas)
    problem = tiny_problem(mode="inverse_omega", omega_c_init=1.3149e3, target_p=target_p)
    cfg = TrainConfig(epochs=30, mode="inverse_omega", seed=2, scalar_warmup_epochs=20)
    res = train(problem, cfg)
    traj = np.array([s["omega_c"] for s in res.inverse.trajectory])
    assert np.all(traj[:21] == traj[0])  # held through the warmup window
    assert np.any(traj[21:] != traj[0])  # then participates in the updates
