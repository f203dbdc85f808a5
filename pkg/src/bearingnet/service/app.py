"""FastAPI application wrapping the toolkit."""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import InputError, NotLocalizableError, SingularProjectionSumError
from . import handlers
from . import schemas as sc

API_VERSION = "0.1.0"


def create_app() -> FastAPI:
    app = FastAPI(
        title="bearingnet",
        version=API_VERSION,
        description="Bearing rigidity, localization, and formation control service",
    )

    def _error_response(status: int):
        def handler(request: Request, exc: Exception) -> JSONResponse:
            return JSONResponse(status_code=status, content={"detail": str(exc)})

        return handler

    app.add_exception_handler(InputError, _error_response(400))
    app.add_exception_handler(NotLocalizableError, _error_response(409))
    app.add_exception_handler(SingularProjectionSumError, _error_response(409))

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": API_VERSION}

    @app.post("/analyze", response_model=sc.AnalyzeResponse)
    def analyze(req: sc.AnalyzeRequest) -> sc.AnalyzeResponse:
        return handlers.analyze(req)

    @app.post("/localize", response_model=sc.LocalizeResponse)
    def localize(req: sc.LocalizeRequest) -> sc.LocalizeResponse:
        return handlers.localize(req)

    @app.post("/formation", response_model=sc.FormationResponse)
    def formation(req: sc.FormationRequest) -> sc.FormationResponse:
        return handlers.formation(req)

    @app.post("/construct", response_model=sc.ConstructResponse)
    def construct(req: sc.ConstructRequest) -> sc.ConstructResponse:
        return handlers.construct(req)

    return app
