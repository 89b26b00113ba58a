from typing import List, Optional

from pydantic import BaseModel, Field

from arfima_misspec.models.arfima import ArfimaSpec, EstimatorKind, EtaVector, FamilySpec, MisSpecPair


class SpectralDensityRequest(BaseModel):
    """Schema for spectral density evaluation."""
    spec: ArfimaSpec
    frequencies: List[float] = Field(min_length=1)


class SpectralDensityResponse(BaseModel):
    frequencies: List[float]
    density: List[float]


class AutocovarianceRequest(BaseModel):
    spec: ArfimaSpec
    max_lag: int = Field(ge=0, le=100_000)


class AutocovarianceResponse(BaseModel):
    autocovariance: List[float]


class SimulationRequest(BaseModel):
    """Schema for a single exact draw."""
    spec: ArfimaSpec
    n: int = Field(ge=2, le=5000)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    replication: int = Field(default=0, ge=0)


class SimulationResponse(BaseModel):
    seed: int
    replication: int
    series: List[float]


class EstimationRequest(BaseModel):
    method: EstimatorKind
    family: FamilySpec
    series: List[float] = Field(min_length=2)
    n_starts: Optional[int] = Field(default=None, ge=1)


class PseudoTrueRequest(BaseModel):
    pair: MisSpecPair


class ContourRequest(BaseModel):
    """Schema for a limiting-objective grid over (d, beta_1)."""
    pair: MisSpecPair
    d_grid: List[float] = Field(min_length=1)
    beta_grid: List[float] = Field(default_factory=list)
    beta_rest: Optional[List[float]] = None


class ContourResponse(BaseModel):
    d_grid: List[float]
    beta_grid: List[float]
    values: List[List[Optional[float]]]


class LimitLawRequest(BaseModel):
    pair: MisSpecPair
    method: EstimatorKind = EstimatorKind.FML
    n: int = Field(ge=20)
    eta1: Optional[EtaVector] = None
    S_n: Optional[float] = Field(default=None, gt=0)
    w_const_variant: str = Field(default="zero_frequency", pattern="^(sum_of_squares|zero_frequency)$")
