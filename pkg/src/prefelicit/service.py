"""JSON-over-HTTP elicitation service with append-only persistence.

Every state change is an event in an NDJSON write-ahead log:

    {"t": <ms>, "sid": <id>, "event": "create"|"response"|"trial", "payload": ...}

A response is fsynced to the log *before* the belief update runs, so a
crash between persist and reply never loses an accepted response. Because
each session carries a persisted seed and all sampling is driven by one
owned rng in a fixed order, folding create+response events deterministically
reproduces the exact live state; "trial" events record what the live
service designed, which lets an offline verifier cross-check a log.

Proposals are exposed to clients in the original [0,1]^D domain (the
transformed domain is an inference artifact); both are included in trial
documents.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass

import numpy as np
from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse

from .acquisition import MiConfig
from .errors import DomainError, InvalidState, PrefElicitError
from .inference import MhConfig
from .model import Response
from .probit import normal_cdf
from .session import (
    AWAITING,
    SessionConfig,
    SessionState,
    StoppingRule,
    estimate,
    init_session,
    rsu,
    submit_response,
)


def _now_ms() -> int:
    return int(time.time() * 1000)


def session_config_from_doc(doc) -> SessionConfig:
    """Validate and build a session config from a JSON document."""
    if not isinstance(doc, dict):
        raise DomainError("config must be a JSON object")
    dims = doc.get("dims", 2)
    if not isinstance(dims, int) or isinstance(dims, bool) or dims < 1:
        raise DomainError("dims must be a positive integer")
    mh_doc = doc.get("mh", {})
    mi_doc = doc.get("mi", {})
    stop_doc = doc.get("stop", {})
    for name, sub in (("mh", mh_doc), ("mi", mi_doc), ("stop", stop_doc)):
        if not isinstance(sub, dict):
            raise DomainError(f"{name} must be a JSON object")
    prior_mean = doc.get("prior_mean")
    return SessionConfig(
        dims=dims,
        prior_mean=tuple(prior_mean) if prior_mean is not None else None,
        prior_var=float(doc.get("prior_var", 1.0)),
        mh=MhConfig(**mh_doc),
        mi=MiConfig(**mi_doc),
        stop=StoppingRule(**stop_doc),
        jitter=float(doc.get("jitter", SessionConfig().jitter)),
    )


def session_config_doc(config: SessionConfig) -> dict:
    """Normalized JSON snapshot of a config (round-trips through the log)."""
    return {
        "dims": config.dims,
        "prior_mean": list(config.prior_mean) if config.prior_mean is not None else None,
        "prior_var": config.prior_var,
        "mh": {
            "m_samples": config.mh.m_samples,
            "burn_in": config.mh.burn_in,
            "thin": config.mh.thin,
            "step_scale": config.mh.step_scale,
        },
        "mi": {
            "m_outer": config.mi.m_outer,
            "m_inner": config.mi.m_inner,
            "n_candidates": config.mi.n_candidates,
            "weighting_mode": config.mi.weighting_mode,
        },
        "stop": {"delta": config.stop.delta, "max_steps": config.stop.max_steps},
        "jitter": config.jitter,
    }


@dataclass
class SessionEnvelope:
    """Live session: immutable config snapshot plus evolving state and rng."""

    id: str
    config: SessionConfig
    config_doc: dict
    seed: int
    state: SessionState
    rng: np.random.Generator
    created_ms: int
    updated_ms: int


def _trial_doc(state: SessionState):
    t = state.current_trial
    if t is None:
        return None
    return {
        "step": state.pending_index,
        "original": {
            "ref": [float(v) for v in normal_cdf(t.x_ref)],
            "alt": [float(v) for v in normal_cdf(t.x_alt)],
        },
        "transformed": {
            "ref": [float(v) for v in t.x_ref],
            "alt": [float(v) for v in t.x_alt],
        },
    }


def state_doc(env: SessionEnvelope, include_timestamps: bool = True) -> dict:
    st = env.state
    d = st.belief.dims
    trace = list(st.designed_mi_trace)
    doc = {
        "id": env.id,
        "status": st.status,
        "step": st.step,
        "dims": env.config.dims,
        "theta_estimate": [float(v) for v in estimate(st).theta] if st.step >= 1 else None,
        "lambda_estimate": [float(v) for v in estimate(st).lam] if st.step >= 1 else None,
        "alpha_mean": [float(v) for v in st.belief.mu[:d]],
        "alpha_cov": [[float(v) for v in row] for row in st.belief.sigma[:d, :d]],
        "rsu": rsu(st) if trace else None,
        "mi_trace": [float(v) for v in trace],
        "trial": _trial_doc(st),
        "config": env.config_doc,
        "seed": env.seed,
    }
    if include_timestamps:
        doc["created_ms"] = env.created_ms
        doc["updated_ms"] = env.updated_ms
    return doc


def canonical_state_json(env: SessionEnvelope, include_timestamps: bool = True) -> str:
    """Deterministic serialization used for replay equality checks."""
    return json.dumps(state_doc(env, include_timestamps=include_timestamps), sort_keys=True)


def _trial_event_payload(state: SessionState) -> dict:
    return {
        "step": state.pending_index,
        "x_ref": [float(v) for v in state.current_trial.x_ref],
        "x_alt": [float(v) for v in state.current_trial.x_alt],
        "mi_bits": float(state.current_mi),
    }


class ConflictError(PrefElicitError):
    """Request is valid but clashes with the session's current state."""


class SessionStore:
    """In-memory session registry backed by the write-ahead log.

    Requests for one session are serialized by a per-session lock; the log
    handle has its own lock, so different sessions append concurrently
    without interleaving half-written lines.
    """

    def __init__(self, log_path, clock=_now_ms):
        self.log_path = str(log_path)
        self._clock = clock
        self._sessions: dict[str, SessionEnvelope] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._wal_lock = threading.Lock()
        recovered = recover_on_startup(self.log_path)
        for sid, env in recovered.items():
            self._sessions[sid] = env
            self._locks[sid] = threading.Lock()
        self._wal = open(self.log_path, "a", encoding="utf-8")

    def close(self) -> None:
        with self._wal_lock:
            if not self._wal.closed:
                self._wal.flush()
                os.fsync(self._wal.fileno())
                self._wal.close()

    def _append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._wal_lock:
            self._wal.write(line + "\n")
            self._wal.flush()
            os.fsync(self._wal.fileno())

    def _lock_for(self, sid: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks[sid]

    def ids(self):
        with self._registry_lock:
            return list(self._sessions)

    def get(self, sid: str) -> SessionEnvelope:
        with self._registry_lock:
            env = self._sessions.get(sid)
        if env is None:
            raise KeyError(sid)
        return env

    def create(self, doc: dict) -> SessionEnvelope:
        config = session_config_from_doc(doc)
        seed = doc.get("seed")
        if seed is None:
            seed = int.from_bytes(os.urandom(8), "big")
        elif not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise DomainError("seed must be a nonnegative integer")
        sid = uuid.uuid4().hex
        now = self._clock()
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        state = init_session(config.prior_belief(), rng)
        env = SessionEnvelope(
            id=sid,
            config=config,
            config_doc=session_config_doc(config),
            seed=seed,
            state=state,
            rng=rng,
            created_ms=now,
            updated_ms=now,
        )
        self._append(
            {
                "t": now,
                "sid": sid,
                "event": "create",
                "payload": {"config": env.config_doc, "seed": seed},
            }
        )
        self._append({"t": now, "sid": sid, "event": "trial", "payload": _trial_event_payload(state)})
        with self._registry_lock:
            self._sessions[sid] = env
            self._locks[sid] = threading.Lock()
        return env

    def submit(self, sid: str, step_echo: int, r: int) -> SessionEnvelope:
        env = self.get(sid)
        with self._lock_for(sid):
            state = env.state
            if state.status != AWAITING or state.current_trial is None:
                raise ConflictError("session is terminal")
            if step_echo != state.pending_index:
                raise ConflictError(
                    f"stale step index {step_echo}, expected {state.pending_index}"
                )
            now = self._clock()
            # Persist the accepted response before computing anything.
            self._append(
                {"t": now, "sid": sid, "event": "response", "payload": {"step": step_echo, "r": r}}
            )
            cfg = env.config
            new_state = submit_response(
                state, Response(r), cfg.mh, cfg.mi, cfg.stop, env.rng, jitter=cfg.jitter
            )
            if new_state.current_trial is not None:
                self._append(
                    {"t": now, "sid": sid, "event": "trial", "payload": _trial_event_payload(new_state)}
                )
            env.state = new_state
            env.updated_ms = now
        return env


def _parse_log_lines(log_path):
    """Yield parsed records; quarantine unparseable lines next to the log."""
    if not os.path.exists(log_path):
        return []
    records = []
    bad = []
    with open(log_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                bad.append(line)
    if bad:
        with open(str(log_path) + ".quarantine", "a", encoding="utf-8") as qf:
            qf.writelines(line if line.endswith("\n") else line + "\n" for line in bad)
    return records


def recover_on_startup(log_path) -> dict:
    """Rebuild every session by folding create+response events.

    Sampling is reproduced from the persisted per-session seeds, so each
    session lands in exactly the state implied by its accepted responses.
    "trial" events are informational here (see :func:`verify_log`).
    """
    sessions: dict[str, SessionEnvelope] = {}
    for rec in _parse_log_lines(log_path):
        sid, event, t = rec["sid"], rec["event"], rec["t"]
        payload = rec.get("payload", {})
        if event == "create":
            config = session_config_from_doc(payload["config"])
            seed = payload["seed"]
            rng = np.random.default_rng(np.random.SeedSequence(seed))
            state = init_session(config.prior_belief(), rng)
            sessions[sid] = SessionEnvelope(
                id=sid,
                config=config,
                config_doc=session_config_doc(config),
                seed=seed,
                state=state,
                rng=rng,
                created_ms=t,
                updated_ms=t,
            )
        elif event == "response":
            env = sessions.get(sid)
            if env is None or env.state.status != AWAITING:
                continue
            cfg = env.config
            env.state = submit_response(
                env.state,
                Response(payload["r"]),
                cfg.mh,
                cfg.mi,
                cfg.stop,
                env.rng,
                jitter=cfg.jitter,
            )
            env.updated_ms = t
    return sessions


def verify_log(log_path) -> list:
    """Cross-check logged trial events against a deterministic recompute.

    Folds create+response events exactly like recovery while walking the
    logged "trial" events; any disagreement (coordinates, MI, step index,
    response against a wrong step) is reported. Gaps in trial events are
    tolerated: a crash window may persist a response without the trial
    designed after it.
    """
    problems = []
    sessions: dict[str, SessionEnvelope] = {}
    for rec in _parse_log_lines(log_path):
        sid, event = rec["sid"], rec["event"]
        payload = rec.get("payload", {})
        if event == "create":
            config = session_config_from_doc(payload["config"])
            rng = np.random.default_rng(np.random.SeedSequence(payload["seed"]))
            state = init_session(config.prior_belief(), rng)
            sessions[sid] = SessionEnvelope(
                id=sid,
                config=config,
                config_doc=session_config_doc(config),
                seed=payload["seed"],
                state=state,
                rng=rng,
                created_ms=rec["t"],
                updated_ms=rec["t"],
            )
        elif event == "response":
            env = sessions.get(sid)
            if env is None:
                problems.append(f"{sid}: response for unknown session")
                continue
            if env.state.status != AWAITING or env.state.current_trial is None:
                problems.append(f"{sid}: response logged against terminal session")
                continue
            if payload["step"] != env.state.pending_index:
                problems.append(
                    f"{sid}: response step {payload['step']} does not match "
                    f"recomputed pending step {env.state.pending_index}"
                )
                continue
            cfg = env.config
            env.state = submit_response(
                env.state,
                Response(payload["r"]),
                cfg.mh,
                cfg.mi,
                cfg.stop,
                env.rng,
                jitter=cfg.jitter,
            )
        elif event == "trial":
            env = sessions.get(sid)
            if env is None:
                problems.append(f"{sid}: trial event for unknown session")
                continue
            state = env.state
            if state.current_trial is None or payload["step"] != state.pending_index:
                problems.append(
                    f"{sid}: logged trial step {payload.get('step')} does not match "
                    f"recomputed pending step {state.pending_index}"
                )
                continue
            recomputed = _trial_event_payload(state)
            if recomputed != payload:
                problems.append(
                    f"{sid}: logged trial at step {payload['step']} diverges from recompute"
                )
    return problems


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message})


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="prefelicit", version="0.1.0")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(store.ids())}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict = Body(...)):
        try:
            env = store.create(body)
        except (DomainError, TypeError, ValueError) as exc:
            return _error(400, "bad_request", str(exc))
        return state_doc(env)

    @app.get("/sessions")
    def list_sessions():
        out = []
        for sid in store.ids():
            env = store.get(sid)
            out.append({"id": sid, "status": env.state.status, "step": env.state.step})
        return out

    @app.get("/sessions/{sid}")
    def get_state(sid: str):
        try:
            env = store.get(sid)
        except KeyError:
            return _error(404, "not_found", f"unknown session {sid}")
        return state_doc(env)

    @app.get("/sessions/{sid}/trial")
    def get_trial(sid: str):
        try:
            env = store.get(sid)
        except KeyError:
            return _error(404, "not_found", f"unknown session {sid}")
        doc = _trial_doc(env.state)
        if doc is None:
            return _error(409, "conflict", f"session is {env.state.status}")
        return doc

    @app.post("/sessions/{sid}/response")
    def post_response(sid: str, body: dict = Body(...)):
        r = body.get("r")
        step = body.get("step")
        if r not in (0, 1) or isinstance(r, bool):
            return _error(400, "bad_request", "r must be 0 or 1")
        if not isinstance(step, int) or isinstance(step, bool):
            return _error(400, "bad_request", "step must be an integer")
        try:
            env = store.submit(sid, step, r)
        except KeyError:
            return _error(404, "not_found", f"unknown session {sid}")
        except ConflictError as exc:
            return _error(409, "conflict", str(exc))
        except InvalidState as exc:
            return _error(409, "conflict", str(exc))
        return state_doc(env)

    return app
