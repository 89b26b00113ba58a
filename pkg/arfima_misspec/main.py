import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from arfima_misspec.config import settings
from arfima_misspec.routers import asymptotics, estimation, pseudo_true, simulation, spectral
from arfima_misspec.services.storage_service import init_output_dir

# Setup logging
logging.basicConfig(
    level=settings.LOG_LEVEL,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)

# Create FastAPI application
app = FastAPI(
    title=settings.APP_NAME,
    description="API for simulating, fitting and analysing mis-specified ARFIMA models",
    version="1.0.0",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(
    spectral.router,
    prefix=f"{settings.API_V1_STR}/spectral",
    tags=["Spectral"]
)
app.include_router(
    simulation.router,
    prefix=f"{settings.API_V1_STR}/simulation",
    tags=["Simulation"]
)
app.include_router(
    estimation.router,
    prefix=f"{settings.API_V1_STR}/estimation",
    tags=["Estimation"]
)
app.include_router(
    pseudo_true.router,
    prefix=f"{settings.API_V1_STR}/pseudo-true",
    tags=["Pseudo-true"]
)
app.include_router(
    asymptotics.router,
    prefix=f"{settings.API_V1_STR}/asymptotics",
    tags=["Asymptotics"]
)


@app.get("/")
async def root():
    return {"message": f"Welcome to the {settings.APP_NAME} API"}


@app.get("/health")
async def health_check():
    return {"status": "healthy"}


@app.on_event("startup")
async def startup_event():
    logging.info("Initializing application...")
    init_output_dir()
    logging.info("Application startup complete")


if __name__ == "__main__":
    import uvicorn
    uvicorn.run("arfima_misspec.main:app", host="0.0.0.0", port=8000, reload=True)
