import os
from dotenv import load_dotenv
from pydantic_settings import BaseSettings

# Load environment variables from .env file
load_dotenv()

class Settings(BaseSettings):
    # Application settings
    APP_NAME: str = "ARFIMA Mis-Specification Toolkit"
    API_V1_STR: str = "/api/v1"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Model validation
    STATIONARITY_MARGIN: float = 1e-8
    COMMON_ROOT_TOL: float = 1e-6
    AR_ROOT_SEPARATION: float = 1e-4

    # Singular quadrature policy
    QUAD_EPSABS: float = 1e-10
    QUAD_EPSREL: float = 1e-10
    QUAD_LIMIT: int = 200
    QUAD_SPLIT: float = 1e-3

    # Estimation (d is searched in (D_LOWER + D_INSET, D_UPPER - D_INSET))
    D_LOWER: float = float(os.getenv("D_LOWER", "-0.5"))
    D_UPPER: float = 0.5
    D_INSET: float = 1e-3
    SIMPLEX_XATOL: float = 1e-6
    SIMPLEX_FATOL: float = 1e-10
    SIMPLEX_MAXITER: int = 2000
    N_STARTS: int = 5
    MIN_SAMPLE_SIZE: int = 20

    # Pseudo-true solver
    NEWTON_TOL: float = 1e-10
    NEWTON_MAX_ITER: int = 50
    TRUNCATION_TOL: float = 1e-12
    TRUNCATION_CAP: int = 100_000

    # Limit laws
    CASE2_BAND: float = float(os.getenv("CASE2_BAND", "1e-5"))
    JITTER_START: float = 1e-12
    MAX_EXPECTED_GRADIENT_N: int = 2000

    # Experiments
    FAILURE_THRESHOLD: float = 0.02
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "outputs")
    THREADS: int = int(os.getenv("THREADS", "1"))

    class Config:
        case_sensitive = True

# Create a settings instance
settings = Settings()
