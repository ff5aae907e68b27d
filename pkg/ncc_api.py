from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field
from typing import List, Dict, Any, Optional
import os
import logging
from contextlib import asynccontextmanager

from ncc_minimax import ExperimentHandler
from ncc_minimax.config import Config
from ncc_minimax.harness import DEFAULT_THRESHOLDS
from ncc_minimax.models import ExperimentConfig, SchemeName

# Setup logging
Config.configure_logging()
logger = logging.getLogger(__name__)


# === Pydantic Models for API ===
class ParamsRequestModel(BaseModel):
    scheme: SchemeName = Field(..., description="pvr or zerosarah")
    L: float = Field(..., gt=0, description="Smoothness constant")
    p: float = Field(default=0.5, gt=0, le=1)
    n: Optional[int] = Field(None, ge=1, description="Component count (zerosarah)")
    a: float = Field(default=2.0, ge=1)
    r: Optional[float] = Field(None, gt=0)
    D_Y: float = Field(default=2 ** 0.5, ge=0)


class RunRequestModel(BaseModel):
    experiment: ExperimentConfig
    output_dir: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)


class ResultResponseModel(BaseModel):
    success: bool
    message: str
    data: Optional[Dict[str, Any]] = None
    error: Optional[str] = None


class HealthResponseModel(BaseModel):
    status: str
    message: str
    components: Dict[str, str]


# Global variables
app_state = {
    "handler": None
}


def get_handler() -> ExperimentHandler:
    if not app_state["handler"]:
        raise HTTPException(status_code=500, detail="Experiment handler not available")
    return app_state["handler"]


# === Startup and Shutdown ===
@asynccontextmanager
async def lifespan(app: FastAPI):
    """Startup and shutdown events."""
    logger.info("🚀 Starting NCC Minimax API Server...")
    try:
        app_state["handler"] = ExperimentHandler()
    except Exception as e:
        logger.warning(f"⚠️ Experiment Handler initialization failed: {e}")
        app_state["handler"] = None
    logger.info("🎯 NCC Minimax API Server is ready!")
    yield
    logger.info("🛑 Shutting down NCC Minimax API Server...")


# === FastAPI App ===
app = FastAPI(
    title="NCC Minimax API",
    description="Variance-reduced smoothed GDA solvers for nonconvex-concave minimax problems",
    version="1.0.0",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# === API Endpoints ===

@app.get("/")
async def root():
    """Root endpoint with API information."""
    return {
        "message": "NCC Minimax API Server",
        "version": "1.0.0",
        "description": "Variance-reduced smoothed GDA solvers for nonconvex-concave minimax problems",
        "endpoints": [
            "POST /params - Step-size bounds for PVR or ZeroSARAH",
            "POST /run - Run an experiment config",
            "GET /compare?dir=<run dir> - Summarize a run directory",
            "GET /health - Check system health",
            "GET /docs - API documentation"
        ]
    }


@app.get("/health", response_model=HealthResponseModel)
async def health_check():
    """Health check endpoint."""
    components = {}

    if app_state["handler"]:
        components["experiment_handler"] = "✅ OK"
    else:
        components["experiment_handler"] = "❌ Not initialized"

    components["config"] = "✅ OK" if Config.validate() else "❌ Invalid NCC_* variables"

    for var in ["NCC_OUTPUT_DIR", "NCC_DATA_DIR", "NCC_SEED"]:
        components[f"env_{var.lower()}"] = "✅ Set" if os.getenv(var) else "⚠️ Not set"

    failed_components = [k for k, v in components.items() if "❌" in v]
    if failed_components:
        status = "degraded"
        message = f"Some components failed: {', '.join(failed_components)}"
    else:
        status = "healthy"
        message = "All systems operational"

    return HealthResponseModel(status=status, message=message, components=components)


@app.post("/params", response_model=ResultResponseModel)
async def step_size_bounds(request: ParamsRequestModel):
    """Step-size bounds and derived constants."""
    result = get_handler().step_size_bounds(request.scheme, request.L, p=request.p, n=request.n, a=request.a,
                                            r=request.r, D_Y=request.D_Y)
    if not result.get("success"):
        raise HTTPException(status_code=400, detail=result.get("error", "Invalid parameters"))
    return result


@app.post("/run", response_model=ResultResponseModel)
def run_experiment(request: RunRequestModel):
    """Run an experiment synchronously and return the per-run statuses."""
    try:
        result = get_handler().run_experiment(request.experiment, output_dir=request.output_dir,
                                              workers=request.workers)
        if result.get("success"):
            return result
        raise HTTPException(status_code=500, detail=result.get("error", "Experiment failed"))
    except HTTPException:
        raise
    except Exception as e:
        logger.error(f"Error running experiment: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Experiment failed: {str(e)}")


@app.get("/compare", response_model=ResultResponseModel)
def compare_runs(dir: str, threshold: Optional[List[float]] = Query(None), budget: Optional[List[str]] = Query(None)):
    """Summarize a run directory."""
    try:
        handler = get_handler()
        result = handler.compare(dir, thresholds=threshold or DEFAULT_THRESHOLDS, budgets=budget or [])
        if result.get("success"):
            return result
        raise HTTPException(status_code=404, detail=result.get("error", "No runs found"))
    except HTTPException:
        raise
    except Exception as e:
        logger.error(f"Error comparing {dir}: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Failed to compare runs: {str(e)}")


if __name__ == "__main__":
    import uvicorn
    port = int(os.getenv("PORT", 8000))
    uvicorn.run(app, host="0.0.0.0", port=port)
