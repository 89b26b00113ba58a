import math
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from arfima_misspec.models.arfima import EstimatorKind, EtaVector, MisSpecPair


class EstimationResult(BaseModel):
    """Outcome of one estimator run on one series."""
    kind: EstimatorKind
    eta_hat: EtaVector
    sigma2_hat: float = Field(gt=0)
    objective: float
    iterations: int
    converged: bool
    restarts_used: int
    converged_starts: int = 0


class PseudoTrueSolution(BaseModel):
    eta1: EtaVector
    d_star: float
    K: float
    grad_norm: float
    truncation_N: int
    newton_iters: int
    sigma2: float = Field(description="One-step prediction error variance 2Q(eta1) at the true innovation variance")


class WSumSamplerSpec(BaseModel):
    """Everything needed to draw from the truncated W-series limit."""
    s: int = Field(ge=1)
    d0: float
    dstar: float
    scale_const: float
    cov_chol: List[List[float]]


class _LawBase(BaseModel):
    kind: EstimatorKind
    n: int
    dstar: float

    def rate(self, n: int) -> float:
        raise NotImplementedError


class Case1Law(_LawBase):
    """d* > 0.25: non-Gaussian W-sum limit at rate n^(1-2d*)/log n."""
    case: Literal[1] = 1
    rate_descriptor: str = "n^(1-2d*)/log n"
    b_or_B: List[List[float]]
    mu_n: List[float]
    d0: float
    g_ratio_const: float
    s: int
    sampler: WSumSamplerSpec

    def rate(self, n: int) -> float:
        return n ** (1.0 - 2.0 * self.dstar) / math.log(n)


class Case2Law(_LawBase):
    """d* = 0.25: Gaussian limit after Lambda-bar normalization."""
    case: Literal[2] = 2
    rate_descriptor: str = "n^(1/2) Lambda_bar_dd^(-1/2)"
    b_or_B: List[List[float]]
    lambda_bar_dd: float

    def rate(self, n: int) -> float:
        return math.sqrt(n / self.lambda_bar_dd)


class Case3Law(_LawBase):
    """d* < 0.25: root-n Gaussian limit with covariance Xi."""
    case: Literal[3] = 3
    rate_descriptor: str = "n^(1/2)"
    Xi: List[List[float]]
    B: List[List[float]]
    Lambda: List[List[float]]

    def rate(self, n: int) -> float:
        return math.sqrt(n)


LimitLaw = Annotated[Union[Case1Law, Case2Law, Case3Law], Field(discriminator="case")]


class ExperimentConfig(BaseModel):
    """Monte Carlo design: one pair, several methods and sample sizes."""
    pair: MisSpecPair
    methods: List[EstimatorKind] = Field(
        default_factory=lambda: [EstimatorKind.FML, EstimatorKind.WHITTLE, EstimatorKind.TML, EstimatorKind.CSS]
    )
    n_list: List[int] = Field(min_length=1)
    replications: int = Field(default=1000, ge=2)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    outputs: str = "outputs"
    w_const_variant: Literal["sum_of_squares", "zero_frequency"] = "sum_of_squares"
    report_standardized: bool = True
    law_samples: int = Field(default=20000, ge=30)


class MonteCarloCell(BaseModel):
    method: EstimatorKind
    n: int
    bias: float
    variance: float
    mse: float
    rel_eff_vs_fml: Optional[float] = None
    failures: int = 0
    d_hat_samples: List[float]
    standardized_samples: Optional[List[float]] = None
    limit_law: Optional[LimitLaw] = None


class TrueParameterCell(BaseModel):
    """Bias and MSE of one cell measured against d0 instead of d1."""
    method: EstimatorKind
    n: int
    bias: float
    mse: float


class MonteCarloReport(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    config: ExperimentConfig
    pseudo_true: PseudoTrueSolution
    cells: List[MonteCarloCell]
    truncation_s: Dict[int, int] = Field(default_factory=dict)

    def cell(self, method: EstimatorKind, n: int) -> MonteCarloCell:
        for cell in self.cells:
            if cell.method == method and cell.n == n:
                return cell
        raise KeyError(f"No cell for ({method.value}, {n})")
