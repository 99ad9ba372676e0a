"""Scikit-learn style estimators wrapping the physics-informed solver.

Three estimators cover the toolkit's workflows:

- ``ForwardTubeSolver``: fit() trains the networks against the physics
  (PDE + boundary + radiation coupling + periodicity); predict(X) evaluates
  the sound pressure at (x, t) points of one steady period.
- ``EnergyLossIdentifier``: fit(t, y) with measured inlet-flow and
  outlet-pressure waveforms identifies the loss-coefficient frequency
  omega_c (exposed as ``omega_c_``).
- ``TubeDesigner``: same measurements, recovers tube length and diameter
  (``length_``, ``diameter_``).

All hyperparameters follow the sklearn convention (declared in __init__,
inherited get_params/set_params/clone); fitted attributes carry a trailing
underscore.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import autodiff as ad
from .excitation import RosenbergSpec
from .losses import PrimedWeights
from .network import ArchitectureConfig, eval_with_input_derivs
from .physics import (
    AirProperties,
    TubeGeometry,
    loss_coefficients,
    pressure_from_potential,
    velocity_from_potential,
)
from .sampling import CollocationCounts, build_collocation
from .training import TrainConfig, TrainingProblem, train

__all__ = ["ForwardTubeSolver", "EnergyLossIdentifier", "TubeDesigner"]


def _as_points(X) -> np.ndarray:
    """Validate an (n, 2) array of (x, t) query points."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of (x, t) points, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("query points must be finite")
    return X


def _as_waveforms(t, y):
    """Validate fit inputs: times (n,) and waveforms (n, 2) [u_inlet, p_outlet]."""
    t = np.asarray(t, dtype=float).ravel()
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] != 2 or y.shape[0] != t.size:
        raise ValueError("y must be (n, 2) columns [inlet volume velocity, outlet pressure]")
    if t.size < 4:
        raise ValueError("need at least 4 samples of the measured waveforms")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    if not (np.isfinite(t).all() and np.isfinite(y).all()):
        raise ValueError("measured waveforms must be finite")
    return t, y


def _periodic_resample(t_src, values, period, t_query):
    """Linear interpolation of one measured period onto a query grid."""
    phase_src = t_src % period
    order = np.argsort(phase_src)
    ps = phase_src[order]
    vs = values[order]
    # pad one sample on each side for wrap-around interpolation
    ps = np.concatenate([[ps[-1] - period], ps, [ps[0] + period]])
    vs = np.concatenate([[vs[-1]], vs, [vs[0]]])
    return np.interp(t_query % period, ps, vs)


class _PinnBase(BaseEstimator):
    """Shared plumbing: problem assembly, training, field prediction."""

    _mode = "forward"

    def _assemble(self):
        air = AirProperties.standard(self.cp_convention)
        geom = TubeGeometry(self.length, self.diameter)
        spec = RosenbergSpec(f0=self.f0, peak_velocity=self.peak_velocity, n_harmonics=self.source_harmonics)
        counts = CollocationCounts(
            n_interior=self.n_interior,
            n_boundary=self.n_boundary,
            n_coupling=self.n_coupling,
            n_periodic=self.n_periodic,
            n_measurement=self.n_measurement,
        )
        sets = build_collocation(geom.length, spec.period, counts, sequence=self.sequence, seed=self.seed)
        arch = ArchitectureConfig(
            n_nodes=self.n_nodes,
            n_blocks=self.n_blocks,
            alpha_phi=self.alpha_phi,
            alpha_u=self.alpha_u,
            seed=self.seed,
            activation=self.activation,
        )
        return air, geom, spec, sets, arch

    def _train_config(self):
        return TrainConfig(
            epochs=self.epochs,
            lr_init=self.lr_init,
            lr_decay=self.lr_decay,
            early_stop=self.early_stop,
            seed=self.seed,
            mode=self._mode,
            noise_fraction=self.noise_fraction,
            scalar_warmup_epochs=getattr(self, "scalar_warmup_epochs", 0),
        )

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise RuntimeError(f"{type(self).__name__} is not fitted yet; call fit() first")

    def predict_fields(self, X):
        """Velocity potential, volume velocity and pressure at (x, t) points.

        Inverse estimators evaluate on the *fitted* geometry: positions map
        through the identified tube length and the identified area and loss
        coefficient enter the field relations.
        """
        self._check_fitted()
        X = _as_points(X)
        norm = self.field_norm_
        tape = ad.Tape()
        b = eval_with_input_derivs(
            tape, self.params_, "wave", norm.to_norm_x(X[:, 0]), norm.to_norm_t(X[:, 1])
        )
        phi = b.value.value[:, 0]
        phi_x = b.d_dx.value[:, 0] * norm.scale_x
        phi_t = b.d_dt.value[:, 0] * norm.scale_t
        tape.release()
        area = self.field_area_
        u = velocity_from_potential(phi_x, area)
        p = pressure_from_potential(phi, phi_t, float(ad.value_of(self.coeffs_.R)), area, self.air_.rho)
        return {"phi": phi, "u": u, "p": p}

    def predict(self, X):
        """Sound pressure [Pa] at (x, t) points, shape (n,)."""
        return self.predict_fields(X)["p"]


class ForwardTubeSolver(_PinnBase):
    """Physics-informed forward solver for one steady resonance period."""

    _mode = "forward"

    def __init__(
        self,
        length=1.0,
        diameter=0.01,
        f0=261.6,
        peak_velocity=1.0,
        omega_c=1643.7,
        cp_convention="paper_kJ",
        n_nodes=200,
        n_blocks=5,
        alpha_phi=0.002,
        alpha_u=3.4e-5,
        activation="snake",
        n_interior=5000,
        n_boundary=1000,
        n_coupling=1000,
        n_periodic=1000,
        n_measurement=1000,
        sequence="sobol",
        source_harmonics=20,
        epochs=20000,
        lr_init=0.001,
        lr_decay=0.007,
        early_stop=1e-5,
        noise_fraction=0.0,
        include_periodicity=True,
        seed=0,
    ):
        self.length = length
        self.diameter = diameter
        self.f0 = f0
        self.peak_velocity = peak_velocity
        self.omega_c = omega_c
        self.cp_convention = cp_convention
        self.n_nodes = n_nodes
        self.n_blocks = n_blocks
        self.alpha_phi = alpha_phi
        self.alpha_u = alpha_u
        self.activation = activation
        self.n_interior = n_interior
        self.n_boundary = n_boundary
        self.n_coupling = n_coupling
        self.n_periodic = n_periodic
        self.n_measurement = n_measurement
        self.sequence = sequence
        self.source_harmonics = source_harmonics
        self.epochs = epochs
        self.lr_init = lr_init
        self.lr_decay = lr_decay
        self.early_stop = early_stop
        self.noise_fraction = noise_fraction
        self.include_periodicity = include_periodicity
        self.seed = seed

    def fit(self, X=None, y=None):
        """Train against the physics; X and y are ignored (self-supervised)."""
        air, geom, spec, sets, arch = self._assemble()
        problem = TrainingProblem(
            air=air,
            geom=geom,
            omega_c=self.omega_c,
            arch=arch,
            sets=sets,
            weights=PrimedWeights.forward_defaults(),
            mode="forward",
            source=spec,
            include_periodicity=self.include_periodicity,
        )
        result = train(problem, self._train_config())
        self.air_, self.geom_, self.source_, self.sets_ = air, geom, spec, sets
        self.coeffs_ = loss_coefficients(air, geom, 0.0, self.omega_c)
        self.params_ = result.params
        self.history_ = result.history
        self.n_epochs_ = result.epochs_run
        self.stopped_early_ = result.stopped_early
        self.loss_ = result.history[-1].L_all
        self.field_norm_ = sets.norm
        self.field_area_ = geom.area(0.0)
        return self

    def predict_radiation_flow(self, t):
        """Radiation-circuit volume velocity u_r at times t [s]."""
        self._check_fitted()
        from .network import forward_r

        t = np.asarray(t, dtype=float).ravel()
        return forward_r(self.params_, self.sets_.norm.to_norm_t(t))


class _InverseBase(_PinnBase):
    def fit(self, X, y):
        """Identify physics parameters from measured endpoint waveforms.

        X: sample times [s] covering one period; y: columns
        [inlet volume velocity, outlet pressure] at those times.
        """
        t, y = _as_waveforms(X, y)
        air, geom, spec, sets, arch = self._assemble()
        target_u = _periodic_resample(t, y[:, 0], spec.period, sets.boundary_t)
        target_p = _periodic_resample(t, y[:, 1], spec.period, sets.measurement_t)
        problem = self._problem(air, geom, spec, sets, arch, target_u, target_p)
        result = train(problem, self._train_config())
        self.air_, self.geom_, self.source_, self.sets_ = air, geom, spec, sets
        self.params_ = result.params
        self.history_ = result.history
        self.n_epochs_ = result.epochs_run
        self.stopped_early_ = result.stopped_early
        self.loss_ = result.history[-1].L_all
        self.inverse_ = result.inverse
        self.field_norm_ = sets.norm
        self.field_area_ = geom.area(0.0)
        self._finish(result)
        return self


class EnergyLossIdentifier(_InverseBase):
    """Identify the wall-loss frequency parameter omega_c from measurements."""

    _mode = "inverse_omega"

    def __init__(
        self,
        omega_c_init=1.3149e3,
        length=1.0,
        diameter=0.01,
        f0=261.6,
        peak_velocity=1.0,
        cp_convention="paper_kJ",
        n_nodes=400,
        n_blocks=2,
        alpha_phi=0.002,
        alpha_u=3.4e-5,
        activation="snake",
        n_interior=5000,
        n_boundary=1000,
        n_coupling=1000,
        n_periodic=1000,
        n_measurement=1000,
        sequence="sobol",
        source_harmonics=20,
        epochs=100000,
        lr_init=0.001,
        lr_decay=0.005,
        early_stop=1e-5,
        noise_fraction=0.0,
        include_periodicity=True,
        scalar_warmup_epochs=3000,
        seed=0,
    ):
        self.omega_c_init = omega_c_init
        self.length = length
        self.diameter = diameter
        self.f0 = f0
        self.peak_velocity = peak_velocity
        self.cp_convention = cp_convention
        self.n_nodes = n_nodes
        self.n_blocks = n_blocks
        self.alpha_phi = alpha_phi
        self.alpha_u = alpha_u
        self.activation = activation
        self.n_interior = n_interior
        self.n_boundary = n_boundary
        self.n_coupling = n_coupling
        self.n_periodic = n_periodic
        self.n_measurement = n_measurement
        self.sequence = sequence
        self.source_harmonics = source_harmonics
        self.epochs = epochs
        self.lr_init = lr_init
        self.lr_decay = lr_decay
        self.early_stop = early_stop
        self.noise_fraction = noise_fraction
        self.include_periodicity = include_periodicity
        self.scalar_warmup_epochs = scalar_warmup_epochs
        self.seed = seed

    def _problem(self, air, geom, spec, sets, arch, target_u, target_p):
        return TrainingProblem(
            air=air,
            geom=geom,
            omega_c=self.omega_c_init,
            arch=arch,
            sets=sets,
            weights=PrimedWeights.inverse_defaults(),
            mode="inverse_omega",
            target_u=target_u,
            target_p=target_p,
            omega_c_init=self.omega_c_init,
            include_periodicity=self.include_periodicity,
        )

    def _finish(self, result):
        self.omega_c_ = result.inverse.current["omega_c"]
        self.omega_c_path_ = np.array([s["omega_c"] for s in result.inverse.trajectory])
        self.coeffs_ = loss_coefficients(self.air_, self.geom_, 0.0, self.omega_c_)


class TubeDesigner(_InverseBase):
    """Recover tube length and diameter that realize measured waveforms."""

    _mode = "inverse_design"

    def __init__(
        self,
        length_init=0.8,
        diameter_init=0.008,
        omega_c=1643.7,
        f0=261.6,
        peak_velocity=1.0,
        cp_convention="paper_kJ",
        n_nodes=400,
        n_blocks=2,
        alpha_phi=0.002,
        alpha_u=3.4e-5,
        activation="snake",
        n_interior=5000,
        n_boundary=1000,
        n_coupling=1000,
        n_periodic=1000,
        n_measurement=1000,
        sequence="sobol",
        source_harmonics=20,
        epochs=100000,
        lr_init=0.001,
        lr_decay=0.005,
        early_stop=1e-5,
        noise_fraction=0.0,
        include_periodicity=True,
        scalar_warmup_epochs=3000,
        seed=0,
    ):
        self.length_init = length_init
        self.diameter_init = diameter_init
        self.omega_c = omega_c
        self.f0 = f0
        self.peak_velocity = peak_velocity
        self.cp_convention = cp_convention
        self.n_nodes = n_nodes
        self.n_blocks = n_blocks
        self.alpha_phi = alpha_phi
        self.alpha_u = alpha_u
        self.activation = activation
        self.n_interior = n_interior
        self.n_boundary = n_boundary
        self.n_coupling = n_coupling
        self.n_periodic = n_periodic
        self.n_measurement = n_measurement
        self.sequence = sequence
        self.source_harmonics = source_harmonics
        self.epochs = epochs
        self.lr_init = lr_init
        self.lr_decay = lr_decay
        self.early_stop = early_stop
        self.noise_fraction = noise_fraction
        self.include_periodicity = include_periodicity
        self.scalar_warmup_epochs = scalar_warmup_epochs
        self.seed = seed

    # the estimator's notion of tube geometry starts from the initial guess
    @property
    def length(self):
        return self.length_init

    @property
    def diameter(self):
        return self.diameter_init

    def _problem(self, air, geom, spec, sets, arch, target_u, target_p):
        return TrainingProblem(
            air=air,
            geom=geom,
            omega_c=self.omega_c,
            arch=arch,
            sets=sets,
            weights=PrimedWeights.inverse_defaults(),
            mode="inverse_design",
            target_u=target_u,
            target_p=target_p,
            length_init=self.length_init,
            diameter_init_mm=self.diameter_init * 1e3,
            include_periodicity=self.include_periodicity,
        )

    def _finish(self, result):
        from .sampling import NormalizationMap

        self.length_ = result.inverse.current["length"]
        self.diameter_ = result.inverse.current["diameter_mm"] * 1e-3
        self.length_path_ = np.array([s["length"] for s in result.inverse.trajectory])
        self.diameter_path_ = np.array([s["diameter_mm"] * 1e-3 for s in result.inverse.trajectory])
        geom_fit = TubeGeometry(self.length_, self.diameter_)
        self.coeffs_ = loss_coefficients(self.air_, geom_fit, 0.0, self.omega_c)
        self.field_norm_ = NormalizationMap(self.length_, self.source_.period)
        self.field_area_ = geom_fit.area(0.0)