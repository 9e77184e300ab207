"""HTTP front end: one POST route per subcommand, same handlers as the CLI.

Run with `uvicorn pcalab.service:app` (uvicorn is not a dependency of the
package; any ASGI server works).
"""
from __future__ import annotations

from typing import Any, Dict

from fastapi import FastAPI, HTTPException

from . import api


def create_app() -> FastAPI:
    app = FastAPI(title="pca-lab", version="0.1.0")

    @app.get("/health")
    def health() -> Dict[str, Any]:
        return {"status": "ok", "commands": sorted(api.HANDLERS)}

    @app.post("/run/{command}", response_model=api.Response)
    def run(command: str, payload: Dict[str, Any]) -> api.Response:
        if command not in api.HANDLERS:
            raise HTTPException(status_code=404, detail=f"unknown command {command!r}")
        return api.dispatch(command, payload)

    return app


app = create_app()
