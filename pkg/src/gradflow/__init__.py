"""Energy-stable SAV-type time integrators for L2 and H^-1 gradient flows."""

from .errors import (
    ConfigError,
    EnergyShiftViolation,
    GradflowError,
    MeanNotZero,
    NegativeDiscriminant,
    NumericalBlowup,
    SizeMismatch,
    SolverStall,
)
from .models import (
    FlowKind,
    ManufacturedCase,
    ModelSpec,
    Potential,
    PotentialKind,
    allen_cahn,
    cahn_hilliard,
    thin_film,
)
from .schemes import (
    SchemeFamily,
    SchemeKind,
    SchemeOrder,
    SimState,
    StepReport,
    init_state,
    make_stepper,
    relax_R,
)
from .spectral import Grid, OperatorKind, RealField

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EnergyShiftViolation",
    "FlowKind",
    "GradflowError",
    "Grid",
    "ManufacturedCase",
    "MeanNotZero",
    "ModelSpec",
    "NegativeDiscriminant",
    "NumericalBlowup",
    "OperatorKind",
    "Potential",
    "PotentialKind",
    "RealField",
    "SchemeFamily",
    "SchemeKind",
    "SchemeOrder",
    "SimState",
    "SizeMismatch",
    "SolverStall",
    "StepReport",
    "allen_cahn",
    "cahn_hilliard",
    "init_state",
    "make_stepper",
    "relax_R",
    "thin_film",
    "__version__",
]
