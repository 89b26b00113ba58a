from arfima_misspec.models.arfima import (
    ArfimaSpec,
    EstimatorKind,
    EtaVector,
    FamilySpec,
    MisSpecPair,
    SimulationPlan,
)
from arfima_misspec.models.results import (
    Case1Law,
    Case2Law,
    Case3Law,
    EstimationResult,
    ExperimentConfig,
    LimitLaw,
    MonteCarloCell,
    MonteCarloReport,
    PseudoTrueSolution,
    TrueParameterCell,
    WSumSamplerSpec,
)

__all__ = [
    "ArfimaSpec",
    "Case1Law",
    "Case2Law",
    "Case3Law",
    "EstimationResult",
    "EstimatorKind",
    "EtaVector",
    "ExperimentConfig",
    "FamilySpec",
    "LimitLaw",
    "MisSpecPair",
    "MonteCarloCell",
    "MonteCarloReport",
    "PseudoTrueSolution",
    "SimulationPlan",
    "TrueParameterCell",
    "WSumSamplerSpec",
]
