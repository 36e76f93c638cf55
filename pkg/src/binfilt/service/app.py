"""FastAPI service exposing the scenario operations.

Every endpoint is stateless: the request carries the whole scenario, the
response carries the whole report. Domain errors map to 422 (bad scenario)
or 409 (model preconditions such as the no-arbitrage band).
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..engine import (
    run_arbitrage,
    run_check_martingale,
    run_price,
    run_risk_neutral,
    run_validate,
)
from ..errors import BinfiltError, NoSolutionError, ScenarioError
from ..scenario import parse_scenario
from .schemas import (
    ArbitrageResponse,
    MartingaleRequest,
    MartingaleResponse,
    PriceResponse,
    RiskNeutralResponse,
    ScenarioRequest,
    ValidateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="binfilt", version=__version__)

    def _scenario(payload):
        try:
            return parse_scenario(payload.to_doc())
        except ScenarioError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ScenarioRequest):
        return run_validate(_scenario(req.scenario))

    @app.post("/risk-neutral", response_model=RiskNeutralResponse)
    def risk_neutral(req: ScenarioRequest):
        try:
            return run_risk_neutral(_scenario(req.scenario))
        except NoSolutionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.post("/price", response_model=PriceResponse)
    def price(req: ScenarioRequest):
        try:
            return run_price(_scenario(req.scenario))
        except (NoSolutionError, ScenarioError) as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.post("/arbitrage", response_model=ArbitrageResponse)
    def arbitrage(req: ScenarioRequest):
        return run_arbitrage(_scenario(req.scenario))

    @app.post("/check-martingale", response_model=MartingaleResponse)
    def check_martingale(req: MartingaleRequest):
        try:
            return run_check_martingale(
                _scenario(req.scenario), req.process, req.under, req.custom_rows
            )
        except (BinfiltError, ScenarioError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    return app


app = create_app()
