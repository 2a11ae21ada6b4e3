"""HTTP API over a workbench, consumed by the tuning UI and the CLI."""

from __future__ import annotations

from fastapi import Body, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .data import Task
from .errors import (
    GaitTuneError,
    MissingModelError,
    NotFoundError,
    OutOfBoundsError,
    RegenerationInFlightError,
    RegenerationRejectedError,
    SeparationExceededError,
    ValidationFailedError,
)
from .session import Workbench
from .tuning import TuningProfile

_STATUS = {
    ValidationFailedError: 400,
    OutOfBoundsError: 400,
    SeparationExceededError: 400,
    RegenerationRejectedError: 400,
    NotFoundError: 404,
    MissingModelError: 404,
    RegenerationInFlightError: 409,
}


def parse_task(raw: str) -> Task:
    try:
        speed, incline = (float(part) for part in raw.split(","))
    except ValueError:
        raise ValidationFailedError(
            f"task must be 'speed,incline', got {raw!r}"
        ) from None
    return Task(speed, incline)


def create_app(workbench: Workbench) -> FastAPI:
    app = FastAPI(title="gaittune", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.workbench = workbench

    @app.exception_handler(GaitTuneError)
    async def _domain_error(request: Request, exc: GaitTuneError):
        status = next(
            (code for cls, code in _STATUS.items() if isinstance(exc, cls)), 400
        )
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/profiles")
    def list_profiles():
        return workbench.list_profiles()

    @app.post("/profiles")
    def save_profile(payload: dict = Body(...)):
        profile = TuningProfile.from_dict(payload)
        return {"id": workbench.save_profile(profile)}

    @app.get("/profiles/{profile_id}")
    def load_profile(profile_id: str):
        return workbench.load_profile(profile_id).to_dict()

    @app.get("/bundle/current")
    def current_bundle():
        bundle = workbench.current
        return {
            "digest": bundle.digest(),
            "revision": bundle.revision,
            "profile": bundle.profile.to_dict(),
            "vaf_per_joint": bundle.vaf_per_joint,
            "last_regenerated": list(bundle.last_regenerated),
        }

    @app.post("/bundle/regenerate")
    def regenerate_bundle(payload: dict = Body(...)):
        profile = TuningProfile.from_dict(payload)
        summary = workbench.regenerate(profile)
        return {
            "regenerated": list(summary.regenerated),
            "wall_time_s": summary.wall_time_s,
            "vaf_per_joint": summary.vaf_per_joint,
            "digest": summary.digest,
            "revision": summary.revision,
        }

    @app.get("/preview/torques")
    def preview_torques(task: str, joint: str):
        return workbench.preview_torques(parse_task(task), joint)

    @app.post("/bundle/export")
    def export_current(payload: dict = Body(...)):
        path = payload.get("path")
        if not path:
            raise ValidationFailedError("export requires a 'path'")
        digest = workbench.export_current(path)
        return {"digest": digest, "path": path}

    @app.get("/session/log")
    def session_log():
        return workbench.session_log()

    @app.get("/presets/{param}/{level}")
    def preset(param: str, level: str):
        if level.upper() not in ("HIGH", "LOW"):
            raise NotFoundError(f"unknown preset level {level!r}")
        try:
            profile = workbench.preset(param, level)
        except OutOfBoundsError as exc:
            raise NotFoundError(str(exc)) from None
        return profile.to_dict()

    return app
