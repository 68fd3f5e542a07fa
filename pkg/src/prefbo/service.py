"""JSON-over-HTTP service hosting live human-in-the-loop optimization sessions.

A session owns native-unit bounds with per-dimension resolutions, an initial
Latin-hypercube design judged consecutively, and an interactive loop that
refits the surrogate on every recommendation request. Every mutation is
appended to a per-session JSON-lines event log before it is acknowledged, so
restarting the service reproduces the exact pre-crash state.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from .acquisition import AcquisitionConfig, indifference_probability_map, maximize_acquisition
from .benchmarks import latin_hypercube
from .metrics import recommend
from .preference import LABELS, PreferenceDataset, outcome_probabilities, LikelihoodParams
from .surrogate import SurrogateModel, TrainingConfig, fit, model_from_document, model_to_document

Array = np.ndarray

SESSION_LENGTHSCALE_PRIOR = (1.0, 0.05)


class BoundSpec(BaseModel):
    low: float
    high: float
    resolution: float = Field(gt=0)

    @field_validator("high")
    @classmethod
    def _check_range(cls, v, info):
        if "low" in info.data and v <= info.data["low"]:
            raise ValueError("high must exceed low")
        return v


class SessionSpec(BaseModel):
    name: str = "session"
    dim: int = Field(ge=1)
    bounds: list[BoundSpec]
    n_init: int = Field(default=15, ge=2)
    total_iterations: int = 30
    recommendation_steps: list[int] = [24, 29]
    lengthscale_prior_enabled: bool = True
    seed: int = 0
    fast: bool = False

    @field_validator("bounds")
    @classmethod
    def _check_bounds(cls, v, info):
        if "dim" in info.data and len(v) != info.data["dim"]:
            raise ValueError("bounds length must equal dim")
        return v

    @field_validator("recommendation_steps")
    @classmethod
    def _check_steps(cls, v, info):
        total = info.data.get("total_iterations", 30)
        if any(s >= total for s in v):
            raise ValueError("recommendation_steps must be < total_iterations")
        return v

    @field_validator("total_iterations")
    @classmethod
    def _check_total(cls, v, info):
        if "n_init" in info.data and v <= info.data["n_init"]:
            raise ValueError("total_iterations must exceed n_init")
        return v


class LabelBody(BaseModel):
    label: int
    note: Optional[str] = None

    @field_validator("label")
    @classmethod
    def _check_label(cls, v):
        if v not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")
        return v


def snap_native(spec: SessionSpec, native: Array) -> Array:
    """Nearest grid point per dimension, ties toward the lower value."""
    out = np.empty(spec.dim)
    for d, b in enumerate(spec.bounds):
        n_steps = int(math.floor((b.high - b.low) / b.resolution + 1e-9))
        k = math.ceil((float(native[d]) - b.low) / b.resolution - 0.5)
        k = min(max(k, 0), n_steps)
        out[d] = b.low + k * b.resolution
    return out


def to_native(spec: SessionSpec, unit: Array) -> Array:
    lows = np.array([b.low for b in spec.bounds])
    highs = np.array([b.high for b in spec.bounds])
    return lows + np.asarray(unit, dtype=float) * (highs - lows)


def to_unit(spec: SessionSpec, native: Array) -> Array:
    lows = np.array([b.low for b in spec.bounds])
    highs = np.array([b.high for b in spec.bounds])
    return (np.asarray(native, dtype=float) - lows) / (highs - lows)


class ProtocolError(Exception):
    """Illegal call for the current session phase (HTTP 409)."""


@dataclass
class Job:
    id: str
    status: str = "running"  # running | done | failed
    result: Optional[dict] = None
    error: Optional[str] = None


@dataclass
class Session:
    id: str
    spec: SessionSpec
    history_native: list[list[float]] = field(default_factory=list)
    history_unit: list[list[float]] = field(default_factory=list)
    history_kind: list[str] = field(default_factory=list)
    timestamps: list[float] = field(default_factory=list)
    labels: list[dict] = field(default_factory=list)
    gamma_trajectory: list[float] = field(default_factory=list)
    checkpoint: Optional[dict] = None
    pending: Optional[dict] = None
    busy: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def phase(self) -> str:
        if len(self.labels) < self.spec.n_init - 1:
            return "init"
        if (
            len(self.history_native) >= self.spec.total_iterations
            and len(self.labels) >= self.spec.total_iterations - 1
        ):
            return "finished"
        return "interactive"

    def model(self) -> Optional[SurrogateModel]:
        return model_from_document(self.checkpoint) if self.checkpoint else None

    def dataset(self) -> PreferenceDataset:
        """Consecutive comparisons over the produced history."""
        ds = PreferenceDataset(dim=self.spec.dim)
        idx = [ds.add_config(np.asarray(u)) for u in self.history_unit]
        for i, rec in enumerate(self.labels):
            ds.add_comparison(idx[i], idx[i + 1], rec["label"])
        return ds

    def summary(self) -> dict:
        return {
            "id": self.id,
            "name": self.spec.name,
            "dim": self.spec.dim,
            "phase": self.phase,
            "busy": self.busy,
            "n_init": self.spec.n_init,
            "total_iterations": self.spec.total_iterations,
            "recommendation_steps": self.spec.recommendation_steps,
            "bounds": [b.model_dump() for b in self.spec.bounds],
            "history": self.history_rows(),
            "pending": self.pending,
            "gamma_hat": self.gamma_trajectory[-1] if self.gamma_trajectory else None,
            "labels_received": len(self.labels),
        }

    def history_rows(self) -> list[dict]:
        rows = []
        for i, native in enumerate(self.history_native):
            rows.append(
                {
                    "iteration": i,
                    "config_native": native,
                    "config_unit": self.history_unit[i],
                    "kind": self.history_kind[i],
                    "timestamp": self.timestamps[i],
                    "label": self.labels[i - 1]["label"] if 1 <= i <= len(self.labels) else None,
                    "note": self.labels[i - 1].get("note") if 1 <= i <= len(self.labels) else None,
                }
            )
        return rows


class SessionManager:
    """Owns session state, the event logs, and background fit jobs."""

    def __init__(self, data_dir: str, fast: bool = False):
        self.data_dir = data_dir
        self.fast = fast
        os.makedirs(data_dir, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self.jobs: dict[str, Job] = {}
        self._registry_lock = threading.Lock()
        self._replay_all()

    # --- persistence ---

    def _log_path(self, sid: str) -> str:
        return os.path.join(self.data_dir, f"{sid}.jsonl")

    def _append_event(self, sid: str, event: dict) -> None:
        with open(self._log_path(sid), "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _replay_all(self) -> None:
        for fname in sorted(os.listdir(self.data_dir)):
            if not fname.endswith(".jsonl"):
                continue
            sid = fname[: -len(".jsonl")]
            session: Optional[Session] = None
            with open(os.path.join(self.data_dir, fname)) as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    session = self._apply_event(sid, session, json.loads(line))
            if session is not None:
                self.sessions[sid] = session

    def _apply_event(self, sid: str, session: Optional[Session], event: dict) -> Session:
        kind = event["event"]
        if kind == "created":
            spec = SessionSpec(**event["spec"])
            session = Session(id=sid, spec=spec)
            for native, unit in zip(event["design_native"], event["design_unit"]):
                session.history_native.append(native)
                session.history_unit.append(unit)
                session.history_kind.append("initial_design")
                session.timestamps.append(event["ts"])
            if spec.n_init >= 2:
                session.pending = {"prev_index": 0, "curr_index": 1, "kind": "initial_design"}
            return session
        assert session is not None, f"event before creation in {sid}"
        if kind == "label":
            session.labels.append({"label": event["label"], "note": event.get("note")})
            session.pending = None
            n_labeled = len(session.labels)
            if session.phase == "init":
                session.pending = {
                    "prev_index": n_labeled,
                    "curr_index": n_labeled + 1,
                    "kind": "initial_design",
                }
        elif kind == "recommended":
            session.history_native.append(event["config_native"])
            session.history_unit.append(event["config_unit"])
            session.history_kind.append(event["kind"])
            session.timestamps.append(event["ts"])
            session.gamma_trajectory.append(event["diagnostics"]["gamma_hat"])
            session.checkpoint = event["checkpoint"]
            session.pending = {
                "prev_index": len(session.history_native) - 2,
                "curr_index": len(session.history_native) - 1,
                "kind": event["kind"],
                "config_native": event["config_native"],
                "diagnostics": event["diagnostics"],
            }
        else:
            raise ValueError(f"unknown event {kind}")
        return session

    # --- operations ---

    def create_session(self, spec: SessionSpec) -> Session:
        sid = uuid.uuid4().hex[:12]
        design_unit = latin_hypercube(spec.n_init, spec.dim, seed=spec.seed)
        native = [snap_native(spec, to_native(spec, u)) for u in design_unit]
        # unit coordinates of the snapped configs, so model space matches reality
        unit = [to_unit(spec, x) for x in native]
        event = {
            "event": "created",
            "spec": spec.model_dump(),
            "design_native": [x.tolist() for x in native],
            "design_unit": [u.tolist() for u in unit],
            "ts": time.time(),
        }
        session = self._apply_event(sid, None, event)
        with self._registry_lock:
            self.sessions[sid] = session
        self._append_event(sid, event)
        return session

    def get(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise KeyError(sid)
        return session

    def submit_label(self, sid: str, body: LabelBody) -> dict:
        session = self.get(sid)
        with session.lock:
            if session.busy:
                raise ProtocolError("a fit job is in progress")
            if session.phase == "finished":
                raise ProtocolError("session is finished")
            if session.pending is None:
                raise ProtocolError("no pending comparison")
            event = {
                "event": "label",
                "label": body.label,
                "note": body.note,
                "ts": time.time(),
            }
            self._append_event(sid, event)
            self._apply_event(sid, session, event)
            return {"phase": session.phase, "labels_received": len(session.labels)}

    def start_next_job(self, sid: str) -> Job:
        session = self.get(sid)
        with session.lock:
            if session.busy:
                raise ProtocolError("a fit job is already in progress")
            if session.phase != "interactive":
                raise ProtocolError(f"next_configuration requires interactive phase, not {session.phase}")
            if session.pending is not None:
                raise ProtocolError("pending comparison awaits a label")
            session.busy = True
        job = Job(id=uuid.uuid4().hex[:12])
        self.jobs[job.id] = job
        thread = threading.Thread(target=self._run_next_job, args=(sid, job), daemon=True)
        thread.start()
        return job

    def _run_next_job(self, sid: str, job: Job) -> None:
        session = self.get(sid)
        try:
            event = self._compute_next(session)
            with session.lock:
                self._append_event(sid, event)
                self._apply_event(sid, session, event)
                session.busy = False
            job.result = {
                "config": event["config_native"],
                "kind": event["kind"],
                "diagnostics": event["diagnostics"],
            }
            job.status = "done"
        except Exception as exc:  # noqa: BLE001 - job boundary; session stays untouched
            with session.lock:
                session.busy = False
            job.error = f"{type(exc).__name__}: {exc}"
            job.status = "failed"

    def _compute_next(self, session: Session) -> dict:
        spec = session.spec
        t = len(session.history_native)
        dataset = session.dataset()
        train_cfg = TrainingConfig(
            iterations=1000 if (self.fast or spec.fast) else 2000,
            seed=int(np.random.SeedSequence([spec.seed, 11, t]).generate_state(1)[0]),
        )
        model = fit(
            dataset,
            train_cfg,
            lengthscale_prior=SESSION_LENGTHSCALE_PRIOR if spec.lengthscale_prior_enabled else None,
        )
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 12, t]))
        if t in spec.recommendation_steps:
            unit = recommend(model)
            kind = "model_maximizer"
        else:
            result = maximize_acquisition(model, np.asarray(session.history_unit[-1]), AcquisitionConfig(), rng)
            unit = result.config
            kind = "acquisition"
        native = snap_native(spec, to_native(spec, unit))
        unit_snapped = to_unit(spec, native)
        mean, cov = model.posterior_joint(unit_snapped[None, :])
        diagnostics = {
            "iteration": t,
            "gamma_hat": model.gamma,
            "posterior_mean": float(mean[0]),
            "posterior_sd": float(math.sqrt(max(cov[0, 0], 0.0))),
            "best_loss": model.best_loss,
            "best_loss_iteration": model.best_iteration,
            "reference_native": session.history_native[-1],
        }
        return {
            "event": "recommended",
            "config_native": native.tolist(),
            "config_unit": unit_snapped.tolist(),
            "kind": kind,
            "diagnostics": diagnostics,
            "checkpoint": model_to_document(model),
            "ts": time.time(),
        }

    def slice_data(self, sid: str, axis: Optional[int], value: Optional[float], resolution: int = 50) -> dict:
        session = self.get(sid)
        with session.lock:
            model = session.model()
            spec = session.spec
            if model is None:
                raise ProtocolError("no trained model yet; request a recommendation first")
            if spec.dim < 2:
                raise ProtocolError("slices need dim >= 2")
            if spec.dim == 2:
                free = [0, 1]
                fixed: dict[int, float] = {}
            else:
                if axis is None or value is None:
                    raise ValueError("axis and value are required for dim >= 3")
                if not (0 <= axis < spec.dim):
                    raise ValueError(f"axis must be in [0, {spec.dim})")
                free = [d for d in range(spec.dim) if d != axis][:2]
                fixed = {axis: float(value)}
            maximizer_unit = recommend(model)
            maximizer_native = snap_native(spec, to_native(spec, maximizer_unit))
            maximizer_unit = to_unit(spec, maximizer_native)
            for d in range(spec.dim):
                if d not in free and d not in fixed:
                    fixed[d] = float(maximizer_native[d])
            axes_grids = [
                np.linspace(spec.bounds[f].low, spec.bounds[f].high, resolution) for f in free
            ]
            mesh = np.meshgrid(*axes_grids, indexing="ij")
            pts_native = np.empty((resolution * resolution, spec.dim))
            for d in range(spec.dim):
                if d in fixed:
                    pts_native[:, d] = fixed[d]
            for k, f in enumerate(free):
                pts_native[:, f] = mesh[k].ravel()
            pts_unit = np.stack([to_unit(spec, p) for p in pts_native])
            mean = model.posterior_mean(pts_unit)
            rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 13, len(session.labels)]))
            p_zero = indifference_probability_map(model, maximizer_unit, pts_unit, 500, rng)
            gamma = model.gamma
            _, p_same, _ = outcome_probabilities(
                0.0, LikelihoodParams(sigma=model.sigma, gamma=gamma)
            )
            return {
                "free_axes": free,
                "fixed": {str(k): v for k, v in fixed.items()},
                "axis_values": [g.tolist() for g in axes_grids],
                "mean": mean.reshape(resolution, resolution).tolist(),
                "p_zero": p_zero.reshape(resolution, resolution).tolist(),
                "maximizer_native": maximizer_native.tolist(),
                "maximizer_unit": maximizer_unit.tolist(),
                "gamma_hat": gamma,
                "p_zero_at_max": float(p_same),
            }

    def report(self, sid: str, include_checkpoint: bool = False) -> dict:
        session = self.get(sid)
        with session.lock:
            model = session.model()
            best_native = None
            if model is not None:
                best_native = snap_native(session.spec, to_native(session.spec, recommend(model))).tolist()
            out = {
                "id": session.id,
                "name": session.spec.name,
                "phase": session.phase,
                "spec": session.spec.model_dump(),
                "history": session.history_rows(),
                "labels": session.labels,
                "gamma_trajectory": session.gamma_trajectory,
                "best_recommendation_native": best_native,
                "n_indifferent": sum(1 for l in session.labels if l["label"] == 0),
            }
            if include_checkpoint and session.checkpoint is not None:
                out["checkpoint"] = session.checkpoint
            return out


def create_app(data_dir: str = "sessions", fast: bool = False, static_dir: Optional[str] = None) -> FastAPI:
    manager = SessionManager(data_dir, fast=fast)
    app = FastAPI(title="prefbo session service")
    app.state.manager = manager

    @app.exception_handler(ProtocolError)
    async def _protocol_error(request: Request, exc: ProtocolError):
        return JSONResponse(status_code=409, content={"code": 409, "message": str(exc)})

    @app.exception_handler(KeyError)
    async def _not_found(request: Request, exc: KeyError):
        return JSONResponse(status_code=404, content={"code": 404, "message": f"unknown session {exc}"})

    @app.exception_handler(ValueError)
    async def _invalid(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"code": 422, "message": str(exc)})

    @app.post("/sessions", status_code=201)
    def create_session(spec: SessionSpec):
        session = manager.create_session(spec)
        return {
            "id": session.id,
            "initial_design": [
                {"config_native": n, "config_unit": u}
                for n, u in zip(session.history_native, session.history_unit)
            ],
            "phase": session.phase,
        }

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = manager.get(sid)
        with session.lock:
            return session.summary()

    @app.post("/sessions/{sid}/label")
    def submit_label(sid: str, body: LabelBody):
        return manager.submit_label(sid, body)

    @app.post("/sessions/{sid}/next", status_code=202)
    def next_configuration(sid: str):
        job = manager.start_next_job(sid)
        return {"job_id": job.id, "status": job.status}

    @app.get("/sessions/{sid}/jobs/{jid}")
    def job_status(sid: str, jid: str):
        manager.get(sid)
        job = manager.jobs.get(jid)
        if job is None:
            raise KeyError(jid)
        out = {"job_id": job.id, "status": job.status}
        if job.status == "done":
            out["result"] = job.result
        elif job.status == "failed":
            out["error"] = job.error
        return out

    @app.get("/sessions/{sid}/slice")
    def get_slice(
        sid: str,
        axis: Optional[int] = Query(default=None),
        value: Optional[float] = Query(default=None),
        resolution: int = Query(default=50, ge=2, le=200),
    ):
        return manager.slice_data(sid, axis, value, resolution)

    @app.get("/sessions/{sid}/report")
    def get_report(sid: str, checkpoint: int = Query(default=0)):
        return manager.report(sid, include_checkpoint=bool(checkpoint))

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def main() -> None:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="prefbo-service")
    parser.add_argument("--data-dir", default="sessions")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--fast", action="store_true", help="halve training iterations")
    parser.add_argument("--static-dir", default=None, help="serve the browser console from this directory")
    args = parser.parse_args()
    uvicorn.run(create_app(args.data_dir, fast=args.fast, static_dir=args.static_dir), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
