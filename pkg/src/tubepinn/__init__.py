"""Physics-informed neural networks for 1D acoustic-tube resonance.

Forward analysis of the lossy wave equation over one steady period, a
finite-difference reference solver, and inverse analyses (wall-loss
identification, tube design optimization), exposed both as a library of
estimators and as a config-driven command line.
"""

from .estimators import EnergyLossIdentifier, ForwardTubeSolver, TubeDesigner
from .excitation import RosenbergSpec, rosenberg_wave, smooth_periodic
from .fdm import FdmConfig, FdmField, extract_steady_period, fdm_simulate, resample_field
from .losses import LossReport, LossWeights, PrimedWeights, normalize_weights
from .network import ArchitectureConfig, NetworkParams, load_checkpoint, save_checkpoint
from .physics import (
    AirProperties,
    LossCoefficients,
    RadiationConstants,
    TubeGeometry,
    loss_coefficients,
    radiation_constants,
)
from .sampling import CollocationCounts, CollocationSets, NormalizationMap, build_collocation
from .training import TrainConfig, TrainingProblem, train

__version__ = "0.1.0"

__all__ = [
    "AirProperties",
    "ArchitectureConfig",
    "CollocationCounts",
    "CollocationSets",
    "EnergyLossIdentifier",
    "FdmConfig",
    "FdmField",
    "ForwardTubeSolver",
    "LossCoefficients",
    "LossReport",
    "LossWeights",
    "NetworkParams",
    "NormalizationMap",
    "PrimedWeights",
    "RadiationConstants",
    "RosenbergSpec",
    "TrainConfig",
    "TrainingProblem",
    "TubeDesigner",
    "TubeGeometry",
    "build_collocation",
    "extract_steady_period",
    "fdm_simulate",
    "load_checkpoint",
    "loss_coefficients",
    "normalize_weights",
    "radiation_constants",
    "resample_field",
    "rosenberg_wave",
    "save_checkpoint",
    "smooth_periodic",
    "train",
    "__version__",
]
