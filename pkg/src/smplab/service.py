"""HTTP front end for the experiment runners.

One POST endpoint per experiment; each accepts the matching config model
and returns the rendered table.  The CLI mounts this app in process by
default, so the service is also the single formatting authority: rows
arrive pre-stringified and the csv field carries the exact bytes the CLI
writes out.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .experiments import (
    ExperimentTable,
    run_hamming,
    run_lemmas,
    run_margins,
    run_relation_p,
    run_yao_sim,
)
from .schemas import (
    HammingConfig,
    LemmasConfig,
    MarginsConfig,
    RelationPConfig,
    TableResponse,
    YaoSimConfig,
)


def _respond(table: ExperimentTable) -> TableResponse:
    return TableResponse(
        name=table.name,
        columns=list(table.columns),
        rows=table.rendered_rows(),
        all_pass=table.all_pass,
        notes=list(table.notes),
        csv=table.to_csv(),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="smplab", version="0.1.0")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/experiments/relation-p")
    def relation_p_endpoint(cfg: RelationPConfig) -> TableResponse:
        return _run(run_relation_p, cfg)

    @app.post("/experiments/margins")
    def margins_endpoint(cfg: MarginsConfig) -> TableResponse:
        return _run(run_margins, cfg)

    @app.post("/experiments/yao-sim")
    def yao_sim_endpoint(cfg: YaoSimConfig) -> TableResponse:
        return _run(run_yao_sim, cfg)

    @app.post("/experiments/hamming")
    def hamming_endpoint(cfg: HammingConfig) -> TableResponse:
        return _run(run_hamming, cfg)

    @app.post("/experiments/lemmas")
    def lemmas_endpoint(cfg: LemmasConfig) -> TableResponse:
        return _run(run_lemmas, cfg)

    return app


def _run(runner, cfg) -> TableResponse:
    # config models bound the shapes, but runners still validate values
    try:
        table = runner(cfg)
    except ValueError as err:
        raise HTTPException(status_code=422, detail=str(err)) from err
    return _respond(table)


app = create_app()
