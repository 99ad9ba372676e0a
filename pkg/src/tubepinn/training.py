"""Training orchestration: Adam over single-batch epochs on fixed point sets.

One epoch = build a fresh tape over every collocation set, evaluate the
mode-appropriate total loss, reverse-sweep, Adam-update the network weights
and any registered physics scalars, then release the tape.  Collocation
sets, targets and loss weights are fixed for the whole run; the decaying
learning rate is the only schedule.

Inverse modes register extra trainable scalars:
  inverse_omega   the loss-coefficient frequency omega_c
  inverse_design  tube length l_v [m] and diameter d_v [mm]; each epoch the
                  area, circumference, wall-loss and radiation constants are
                  rebuilt from d_v, and spatial derivatives are rescaled by
                  l_0/l_v (the collocation points keep their relative
                  positions while the tube stretches)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import DerivBundle, GradientSet, ParameterSet, Tape
from .excitation import RosenbergSpec, rosenberg_wave
from .losses import (
    LossReport,
    PrimedWeights,
    bc_loss,
    coupling_loss,
    measurement_loss,
    normalize_weights,
    pde_loss,
    periodicity_loss,
    total_loss,
)
from .network import ArchitectureConfig, NetworkParams, eval_with_input_derivs, init_network
from .physics import (
    AirProperties,
    LossCoefficients,
    TubeGeometry,
    circular_area,
    radiation_constants,
    thermal_loss_coefficient,
    viscous_loss_coefficient,
)
from .sampling import CollocationSets

logger = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "InverseState",
    "TrainResult",
    "TrainingProblem",
    "lr_schedule",
    "AdamState",
    "adam_step",
    "corrupt_targets",
    "apply_length_scaling",
    "train",
]

MODES = ("forward", "inverse_omega", "inverse_design")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20000
    lr_init: float = 0.001
    lr_decay: float = 0.007
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    early_stop: float = 1e-5
    seed: int = 0
    mode: str = "forward"
    noise_fraction: float = 0.0
    log_every: int = 0
    # inverse modes: hold the physics scalars at their initial values for
    # this many epochs while the field trains.  While the networks are
    # underfit, every loss term's scalar gradient points toward more
    # damping, so a joint start overshoots and needs very long runs to
    # recover; letting the field form first removes that arc.
    scalar_warmup_epochs: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr_init <= 0 or self.lr_decay < 0:
            raise ValueError("learning rates must be positive (decay >= 0)")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.noise_fraction < 0:
            raise ValueError("noise_fraction must be >= 0")
        if self.scalar_warmup_epochs < 0:
            raise ValueError("scalar_warmup_epochs must be >= 0")


def lr_schedule(lr_init: float, decay: float, epoch: int) -> float:
    """lr_init / (1 + decay * epoch); epoch counts from 0."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return lr_init / (1.0 + decay * epoch)


class AdamState:
    """First/second moment accumulators keyed by parameter name."""

    def __init__(self, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(params: ParameterSet, grads: GradientSet, state: AdamState, lr: float):
    """One standard Adam update with bias correction, in registration order."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for p in params:
        g = grads.get(p.name)
        if g is None:
            g = np.zeros_like(p.value)
        g = np.asarray(g)
        if g.shape != p.value.shape:
            raise ValueError(f"gradient shape {g.shape} does not match {p.name} {p.value.shape}")
        m = state.m.get(p.name)
        if m is None:
            m = np.zeros_like(p.value)
            state.m[p.name] = m
            state.v[p.name] = np.zeros_like(p.value)
        v = state.v[p.name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.value = p.value - lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def corrupt_targets(waveform: np.ndarray, noise_fraction: float, seed: int) -> np.ndarray:
    """Add seeded zero-mean Gaussian noise, sigma = fraction * peak amplitude."""
    if noise_fraction < 0:
        raise ValueError("noise_fraction must be >= 0")
    waveform = np.asarray(waveform, dtype=float)
    if noise_fraction == 0.0:
        return waveform.copy()
    sigma = noise_fraction * np.max(np.abs(waveform))
    rng = np.random.default_rng(seed)
    return waveform + rng.normal(0.0, sigma, size=waveform.shape)


def apply_length_scaling(bundle: DerivBundle, l_0: float, l_v) -> DerivBundle:
    """Rescale spatial derivatives for a stretched tube: d/dx by l_0/l_v,
    d2/dx2 by (l_0/l_v)^2; time derivatives unchanged."""
    factor = l_0 / l_v if isinstance(l_v, ad.Node) else float(l_0) / float(l_v)
    return DerivBundle(
        value=bundle.value,
        d_dx=None if bundle.d_dx is None else bundle.d_dx * factor,
        d_dt=bundle.d_dt,
        d2_dx2=None if bundle.d2_dx2 is None else bundle.d2_dx2 * (factor * factor),
        d2_dt2=bundle.d2_dt2,
    )


@dataclass
class InverseState:
    """Registered physics scalars with their initial values and history."""

    mode: str
    initial: dict
    trajectory: list = field(default_factory=list)

    def record(self, values: dict):
        self.trajectory.append(dict(values))

    @property
    def current(self) -> dict:
        return self.trajectory[-1] if self.trajectory else dict(self.initial)


@dataclass
class TrainResult:
    params: NetworkParams
    history: list
    inverse: InverseState | None
    stopped_early: bool
    epochs_run: int


@dataclass
class TrainingProblem:
    """Everything the loop needs besides the optimizer settings.

    Targets are in physical units: ``target_u`` is the inlet volume-velocity
    waveform on the boundary grid, ``target_p`` the outlet pressure waveform
    on the measurement grid (inverse modes only).
    """

    air: AirProperties
    geom: TubeGeometry
    omega_c: float
    arch: ArchitectureConfig
    sets: CollocationSets
    weights: PrimedWeights
    mode: str = "forward"
    target_u: np.ndarray | None = None
    target_p: np.ndarray | None = None
    source: RosenbergSpec | None = None
    omega_c_init: float | None = None
    length_init: float | None = None
    diameter_init_mm: float | None = None
    include_periodicity: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "inverse_omega" and self.omega_c_init is None:
            self.omega_c_init = self.omega_c
        if self.mode == "inverse_design":
            if self.length_init is None:
                self.length_init = self.geom.length
            if self.diameter_init_mm is None:
                self.diameter_init_mm = self.geom.diameter * 1e3
        if self.target_u is None:
            if self.source is None:
                raise ValueError("need either target_u or a source spec")
            area0 = self.geom.area(0.0)
            self.target_u = area0 * rosenberg_wave(self.source, self.sets.boundary_t)
        if self.mode != "forward" and self.target_p is None:
            raise ValueError(f"mode {self.mode!r} requires a measured outlet pressure waveform")

    def resolved_weights(self):
        """Normalized weights, frozen at the initial geometry."""
        if self.mode == "inverse_design":
            area0 = circular_area(self.diameter_init_mm * 1e-3)
        else:
            area0 = self.geom.area(0.0)
        R_r0 = float(ad.value_of(radiation_constants(self.air, area0).R_r))
        return normalize_weights(self.weights, area0, R_r0)


def _norm_inputs(problem: TrainingProblem):
    """Precompute normalized input arrays for every collocation segment."""
    sets = problem.sets
    norm = sets.norm
    n_p = sets.periodic_x.size
    seg = {
        "interior": (norm.to_norm_x(sets.interior_x), norm.to_norm_t(sets.interior_t)),
        "boundary": (np.full(sets.boundary_t.size, -1.0), norm.to_norm_t(sets.boundary_t)),
        "coupling": (np.full(sets.coupling_t.size, 1.0), norm.to_norm_t(sets.coupling_t)),
        "p_start": (norm.to_norm_x(sets.periodic_x), np.full(n_p, -1.0)),
        "p_end": (norm.to_norm_x(sets.periodic_x), np.full(n_p, 1.0)),
    }
    if problem.mode != "forward":
        seg["measurement"] = (
            np.full(sets.measurement_t.size, 1.0),
            norm.to_norm_t(sets.measurement_t),
        )
    return seg


def _epoch_loss(tape: Tape, params: NetworkParams, problem: TrainingProblem, inputs, weights):
    """Build the full loss for one epoch on the given tape.

    Returns (loss_node, terms) where terms maps names to scalar nodes.
    """
    air = problem.air
    geom = problem.geom
    norm = problem.sets.norm
    scale_t = norm.scale_t
    mode = problem.mode

    # physics quantities; plain floats in forward mode, nodes in inverse
    # modes.  Trainable scalars are dimensionless multipliers of their
    # initial values: Adam's per-step movement is bounded by ~lr regardless
    # of gradient scale, so raw SI values (omega_c ~ 1.6e3) could never
    # traverse a 20% error within the learning-rate budget.
    if mode == "inverse_omega":
        omega = tape.leaf(params["omega_c_scale"]) * problem.omega_c_init
        area = geom.area(0.0)
        circ = geom.circumference(0.0)
        scale_x = norm.scale_x
        length_factor = None
    elif mode == "inverse_design":
        l_v = tape.leaf(params["length_scale"]) * problem.length_init
        d_v = tape.leaf(params["diameter_scale"]) * problem.diameter_init_mm
        omega = problem.omega_c
        d_m = d_v * 1e-3
        area = (math.pi / 4.0) * ad.square(d_m)
        circ = math.pi * d_m
        scale_x = norm.scale_x  # bundles get the l_0/l_v factor separately
        length_factor = (problem.geom.length, l_v)
    else:
        omega = problem.omega_c
        area = geom.area(0.0)
        circ = geom.circumference(0.0)
        scale_x = norm.scale_x
        length_factor = None

    R = viscous_loss_coefficient(circ, area, omega, air)
    G = thermal_loss_coefficient(circ, omega, air)
    coeffs = LossCoefficients(R=R, G=G, omega_c=omega)
    rad = radiation_constants(air, area)

    def wave_bundle(key):
        x_n, t_n = inputs[key]
        b = eval_with_input_derivs(tape, params, "wave", x_n, t_n)
        if length_factor is not None:
            b = apply_length_scaling(b, *length_factor)
        return b

    terms = {}
    terms["L_E"] = pde_loss(
        wave_bundle("interior"), area, 0.0, coeffs, air, scale_x, scale_t
    )
    terms["L_B"] = bc_loss(wave_bundle("boundary"), problem.target_u, area, scale_x)
    rad_bundle = eval_with_input_derivs(tape, params, "radiation", t_norm=inputs["coupling"][1])
    terms["L_C"] = coupling_loss(
        wave_bundle("coupling"),
        rad_bundle,
        rad,
        area,
        coeffs,
        air,
        scale_x,
        scale_t,
        weights.lambda_l,
        weights.lambda_r,
    )
    if problem.include_periodicity:
        L_u, L_p, L_t, L_P = periodicity_loss(
            wave_bundle("p_start"),
            wave_bundle("p_end"),
            area,
            coeffs,
            air,
            scale_x,
            scale_t,
            weights.lambda_u,
            weights.lambda_p,
            weights.lambda_t,
        )
        terms["L_u"], terms["L_p"], terms["L_t"], terms["L_P"] = L_u, L_p, L_t, L_P
    else:
        terms["L_u"] = terms["L_p"] = terms["L_t"] = 0.0
        terms["L_P"] = tape.constant(0.0)
    if mode != "forward":
        terms["L_M"] = measurement_loss(
            wave_bundle("measurement"), problem.target_p, area, coeffs, air, scale_t
        )
    loss = total_loss(
        terms, weights, mode="inverse" if mode != "forward" else "forward"
    )
    return loss, terms


def _register_inverse_params(params: NetworkParams, problem: TrainingProblem) -> InverseState | None:
    """Register the trainable physics scalars as unit multipliers."""
    if problem.mode == "inverse_omega":
        ad.register_scalar_param(params, "omega_c_scale", 1.0)
        return InverseState(mode=problem.mode, initial={"omega_c": float(problem.omega_c_init)})
    if problem.mode == "inverse_design":
        ad.register_scalar_param(params, "length_scale", 1.0)
        ad.register_scalar_param(params, "diameter_scale", 1.0)
        return InverseState(
            mode=problem.mode,
            initial={
                "length": float(problem.length_init),
                "diameter_mm": float(problem.diameter_init_mm),
            },
        )
    return None


_SCALE_NAMES = {
    "omega_c": "omega_c_scale",
    "length": "length_scale",
    "diameter_mm": "diameter_scale",
}
_POSITIVE_FLOOR = 1e-6


def physical_scalars(params: NetworkParams, inverse: InverseState) -> dict:
    """Current physical values of the registered scalars."""
    return {
        name: float(params[_SCALE_NAMES[name]].value) * init
        for name, init in inverse.initial.items()
    }


def _project_positive(params: NetworkParams, inverse: InverseState):
    for name in inverse.initial:
        p = params[_SCALE_NAMES[name]]
        if float(p.value) <= 0.0:
            logger.warning("projected %s back to the positive domain", name)
            p.value = np.float64(_POSITIVE_FLOOR)


def train(problem: TrainingProblem, config: TrainConfig, callback=None) -> TrainResult:
    """Run the full optimization; returns trained parameters and history.

    ``callback(epoch, params, report)`` fires after each epoch when given
    (checkpointing, external logging).  Raises with the offending epoch and
    term if the loss goes non-finite.
    """
    if config.mode != problem.mode:
        raise ValueError(f"config mode {config.mode!r} != problem mode {problem.mode!r}")
    params = init_network(problem.arch)
    inverse = _register_inverse_params(params, problem)

    if config.noise_fraction > 0:
        problem.target_u = corrupt_targets(problem.target_u, config.noise_fraction, config.seed + 101)
        if problem.target_p is not None:
            problem.target_p = corrupt_targets(problem.target_p, config.noise_fraction, config.seed + 202)

    weights = problem.resolved_weights()
    inputs = _norm_inputs(problem)
    state = AdamState(beta1=config.beta1, beta2=config.beta2, eps=config.eps)

    history: list[LossReport] = []
    stopped_early = False
    epochs_run = 0
    for epoch in range(config.epochs):
        tape = Tape()
        loss, terms = _epoch_loss(tape, params, problem, inputs, weights)
        loss_val = float(loss.value)
        if not np.isfinite(loss_val):
            bad = [k for k, v in terms.items() if not np.isfinite(float(ad.value_of(v)))]
            tape.release()
            raise FloatingPointError(
                f"non-finite loss at epoch {epoch}; offending terms: {bad or ['L_all']}"
            )
        lr = lr_schedule(config.lr_init, config.lr_decay, epoch)
        scalars = physical_scalars(params, inverse) if inverse else {}
        report = LossReport(
            epoch=epoch,
            L_E=float(ad.value_of(terms["L_E"])),
            L_B=float(ad.value_of(terms["L_B"])),
            L_C=float(ad.value_of(terms["L_C"])),
            L_P=float(ad.value_of(terms["L_P"])),
            L_u=float(ad.value_of(terms["L_u"])),
            L_p=float(ad.value_of(terms["L_p"])),
            L_t=float(ad.value_of(terms["L_t"])),
            L_all=loss_val,
            L_M=float(ad.value_of(terms["L_M"])) if "L_M" in terms else None,
            lr=lr,
            omega_c=scalars.get("omega_c"),
            l_v=scalars.get("length"),
            d_v=scalars.get("diameter_mm"),
        )
        history.append(report)
        if inverse is not None:
            inverse.record(scalars)
        epochs_run = epoch + 1
        if config.log_every and epoch % config.log_every == 0:
            logger.info("epoch %d L_all=%.4e lr=%.3e %s", epoch, loss_val, lr, scalars or "")
        if loss_val < config.early_stop:
            # epoch-boundary stop: the qualifying parameters are kept as-is
            tape.release()
            stopped_early = True
            if callback is not None:
                callback(epoch, params, report)
            break

        grads = ad.backward(tape, loss, params)
        tape.release()
        if inverse is not None and epoch < config.scalar_warmup_epochs:
            for name in inverse.initial:
                grads._grads[_SCALE_NAMES[name]] = np.zeros(())
        adam_step(params, grads, state, lr)
        if inverse is not None:
            _project_positive(params, inverse)
        if callback is not None:
            callback(epoch, params, report)
    return TrainResult(
        params=params,
        history=history,
        inverse=inverse,
        stopped_early=stopped_early,
        epochs_run=epochs_run,
    )
