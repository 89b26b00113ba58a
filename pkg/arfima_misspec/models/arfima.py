from enum import Enum
from typing import Any, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from arfima_misspec.utils.polynomials import lag_polynomial


class ArfimaSpec(BaseModel):
    """ARFIMA(p, d, q) process with zero mean.

    ``phi(z) = 1 + phi_1 z + ... + phi_p z^p`` and
    ``theta(z) = 1 + theta_1 z + ... + theta_q z^q`` (plus signs, not the
    Box-Jenkins minus convention). Used both for the true process and for
    fitted models.
    """
    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=0)
    d: float
    q: int = Field(ge=0)
    phi: Tuple[float, ...] = ()
    theta: Tuple[float, ...] = ()
    sigma2: float = Field(default=1.0, gt=0)

    @model_validator(mode="before")
    @classmethod
    def fill_orders(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            data.setdefault("p", len(data.get("phi") or ()))
            data.setdefault("q", len(data.get("theta") or ()))
        return data

    @model_validator(mode="after")
    def check_lengths(self) -> "ArfimaSpec":
        if len(self.phi) != self.p or len(self.theta) != self.q:
            raise ValueError(
                f"Orders (p={self.p}, q={self.q}) do not match coefficient lengths "
                f"({len(self.phi)}, {len(self.theta)})"
            )
        return self

    @property
    def ar_poly(self) -> np.ndarray:
        return lag_polynomial(self.phi)

    @property
    def ma_poly(self) -> np.ndarray:
        return lag_polynomial(self.theta)


class FamilySpec(BaseModel):
    """Orders of the fitted (possibly mis-specified) ARFIMA family."""
    model_config = ConfigDict(frozen=True)

    p: int = Field(default=0, ge=0)
    q: int = Field(default=0, ge=0)

    @property
    def l(self) -> int:
        return self.p + self.q

    @classmethod
    def parse(cls, text: str) -> "FamilySpec":
        """Parse the ``"p,q"`` form used on the command line."""
        p, q = (int(part) for part in text.split(","))
        return cls(p=p, q=q)

    def split(self, beta) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        beta = tuple(float(b) for b in beta)
        if len(beta) != self.l:
            raise ValueError(f"Family ({self.p},{self.q}) needs {self.l} short-memory parameters, got {len(beta)}")
        return beta[: self.p], beta[self.p:]

    def to_spec(self, eta: "EtaVector", sigma2: float = 1.0) -> ArfimaSpec:
        phi, theta = self.split(eta.beta)
        return ArfimaSpec(p=self.p, d=eta.d, q=self.q, phi=phi, theta=theta, sigma2=sigma2)


class EtaVector(BaseModel):
    """Estimable parameter (d, beta); beta stacks the AR then MA coefficients."""
    model_config = ConfigDict(frozen=True)

    d: float
    beta: Tuple[float, ...] = ()

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.d], np.asarray(self.beta, dtype=float)))

    @classmethod
    def from_array(cls, values) -> "EtaVector":
        values = np.asarray(values, dtype=float)
        return cls(d=float(values[0]), beta=tuple(float(v) for v in values[1:]))


class MisSpecPair(BaseModel):
    """True process together with the family that is fitted to it."""
    model_config = ConfigDict(frozen=True)

    tdgp: ArfimaSpec
    family: FamilySpec

    @model_validator(mode="after")
    def check_long_memory(self) -> "MisSpecPair":
        if not 0.0 < self.tdgp.d < 0.5:
            raise ValueError(f"True process needs d in (0, 0.5), got d={self.tdgp.d}")
        return self


class SimulationPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: ArfimaSpec
    n: int = Field(ge=2)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    replications: int = Field(default=1, ge=1)


class EstimatorKind(str, Enum):
    FML = "fml"
    WHITTLE = "whittle"
    TML = "tml"
    CSS = "css"
