"""Domain types of jmgtlab."""

from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.experiment import ExperimentConfig, RunManifest, TaskRecord
from jmgtlab.models.fields import DataFamily, DataTuple, FieldRole, Solution, SpaceTimeField
from jmgtlab.models.grid import DomainShape, Grid, NodeKind
from jmgtlab.models.linearization import EpsilonDesign, LinearizedPair, WReduction
from jmgtlab.models.measurement import AdjointProbe, MeasurementMode, MeasurementRecord
from jmgtlab.models.nonlinearity import NonlinearityField, PicardReport
from jmgtlab.models.probe import (
    AmplitudeField,
    AmplitudeSpec,
    AngularProfile,
    CGOProbe,
    Cutoff,
    PhaseField,
    ProbeGeometry,
    ProfileKind,
    RemainderNorms,
)
from jmgtlab.models.ray_system import (
    BasisAxes,
    RayTransformSystem,
    ReconstructedField,
    SourceSamples,
)

__all__ = [
    "Coefficients",
    "Grid",
    "DomainShape",
    "NodeKind",
    "FieldRole",
    "SpaceTimeField",
    "Solution",
    "DataTuple",
    "DataFamily",
    "NonlinearityField",
    "PicardReport",
    "ProbeGeometry",
    "ProfileKind",
    "AngularProfile",
    "Cutoff",
    "AmplitudeSpec",
    "PhaseField",
    "AmplitudeField",
    "RemainderNorms",
    "CGOProbe",
    "EpsilonDesign",
    "WReduction",
    "LinearizedPair",
    "MeasurementMode",
    "MeasurementRecord",
    "AdjointProbe",
    "BasisAxes",
    "SourceSamples",
    "RayTransformSystem",
    "ReconstructedField",
    "ExperimentConfig",
    "RunManifest",
    "TaskRecord",
]
