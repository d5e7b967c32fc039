"""HTTP session API for live preference elicitation.

Each session owns a worker thread running the guided learner loop; the
thread blocks inside a :class:`~prefnet.teacher.HumanBridge` while HTTP
handlers poll the pending question and post the human's answer. Sessions
are fully isolated (own candidate source, own preference state) and
identified by unguessable 128-bit tokens. Finished transcripts and result
summaries persist as files under a data directory (``NETQ_DATA_DIR`` by
default).
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from .learner import LearnConfig, SessionResult, run_session, transcript_ndjson
from .pcs import Pool, PoolSource, scenario_from_pool
from .scenarios import Candidate
from .teacher import HumanBridge

AWAITING = "AwaitingAnswer"
THINKING = "Thinking"
FINISHED = "Finished"

_CHOICES = {"left", "right", "equal", "too_hard", "accept", "reject", "stop"}


class _GenericDigest:
    """Fallback renderer for pools whose scenario cannot be rebuilt."""

    def describe_metrics(self, metrics) -> list[dict]:
        return [
            {"label": f"metric {i + 1}", "value": float(v), "unit": "", "higher_better": True}
            for i, v in enumerate(metrics)
        ]


def _renderer(pool: Pool, fixture_dir: str | None):
    try:
        return scenario_from_pool(pool, fixture_dir)
    except Exception:
        return _GenericDigest()


@dataclass
class _Session:
    sid: str
    bridge: HumanBridge
    thread: threading.Thread | None
    deadline: float
    n_query: int
    nonce: str | None = None
    answered_seq: int = 0
    expired: bool = False
    result: SessionResult | None = None
    error: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def state(self) -> str:
        if self.result is not None or self.error is not None:
            return FINISHED
        q = self.bridge.current_question()
        if q is not None and q["seq"] > self.answered_seq:
            return AWAITING
        if self.thread.is_alive():
            return THINKING
        return FINISHED


class SessionManager:
    """Owns the live sessions; lazily expires them past their TTL."""

    def __init__(self, ttl: float) -> None:
        self.ttl = ttl
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def add(self, live: _Session) -> None:
        with self._lock:
            self._sessions[live.sid] = live

    def get(self, sid: str) -> _Session:
        with self._lock:
            live = self._sessions.get(sid)
        if live is None:
            raise HTTPException(404, "unknown session")
        if live.expired or time.monotonic() > live.deadline:
            if not live.expired:
                live.expired = True
                live.bridge.disconnect()
            raise HTTPException(410, "session expired")
        return live


def _wait_out_of_thinking(live: _Session, limit: float) -> str:
    t0 = time.monotonic()
    while True:
        s = live.state()
        if s != THINKING or time.monotonic() - t0 > limit:
            return s
        time.sleep(0.01)


def create_app(
    pool: Pool,
    *,
    data_dir: str | None = None,
    ttl: float = 7200.0,
    n_query: int = 10,
    thresh: int = 2,
    bridge_timeout: float = 900.0,
    static_dir: str | None = None,
    fixture_dir: str | None = None,
) -> FastAPI:
    """Build the session-service app around one candidate pool.

    ``thresh`` defaults to the interactive setting (keep only two live
    committee candidates, so every question stays easy to render);
    scripted experiments use the library API directly with larger
    committees.
    """
    if fixture_dir is None:
        from .netmodel import fixture_path

        fixture_dir = os.path.dirname(fixture_path("abilene.json"))
    if data_dir is None:
        data_dir = os.environ.get("NETQ_DATA_DIR")
    renderer = _renderer(pool, fixture_dir)
    scenario_kind = pool.scenario.get("kind", "unknown") if isinstance(pool.scenario, dict) else "unknown"
    manager = SessionManager(ttl)
    app = FastAPI(title="prefnet session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.manager = manager

    def render_candidate(raw: dict, role: str) -> dict:
        return {
            "id": raw["id"],
            "metrics": list(raw["metrics"]),
            "breakdown": renderer.describe_metrics(raw["metrics"]),
            "role": role,
        }

    def render_final(c: Candidate) -> dict:
        return {
            "id": c.id,
            "metrics": list(c.metrics),
            "breakdown": renderer.describe_metrics(c.metrics),
        }

    def persist(live: _Session) -> None:
        if not data_dir or live.result is None:
            return
        try:
            root = os.path.join(data_dir, "sessions")
            os.makedirs(root, exist_ok=True)
            with open(os.path.join(root, f"{live.sid}.ndjson"), "w") as fh:
                fh.write(transcript_ndjson(live.result))
            summary = {
                "id": live.sid,
                "scenario": pool.scenario,
                "stop_reason": live.result.stop_reason,
                "queries": live.result.count,
                "recommendation": render_final(live.result.r_best),
            }
            with open(os.path.join(root, f"{live.sid}.json"), "w") as fh:
                json.dump(summary, fh, indent=2, sort_keys=True)
        except OSError:
            pass  # persistence must never take the session state down

    @app.post("/api/sessions")
    def create_session(body: dict | None = Body(None)) -> dict:
        body = body or {}
        nq = int(body.get("n_query", n_query))
        if not 1 <= nq <= 100:
            raise HTTPException(422, "n_query must be in [1, 100]")
        seed = int(body.get("seed", secrets.randbits(31)))
        sid = secrets.token_hex(16)
        bridge = HumanBridge(timeout=bridge_timeout)
        live = _Session(
            sid=sid,
            bridge=bridge,
            thread=None,
            deadline=time.monotonic() + ttl,
            n_query=nq,
            nonce=body.get("nonce"),
        )

        def work() -> None:
            try:
                source = PoolSource(pool, np.random.default_rng(seed))
                cfg = LearnConfig(n_query=nq, thresh=thresh, seed=seed)
                live.result = run_session(source, bridge, cfg)
            except Exception as exc:  # session isolation: a crash stays local
                live.error = f"{type(exc).__name__}: {exc}"
            persist(live)

        live.thread = threading.Thread(target=work, name=f"session-{sid[:8]}", daemon=True)
        manager.add(live)
        live.thread.start()
        return {"id": sid, "scenario": scenario_kind, "n_query": nq}

    def check_nonce(live: _Session, nonce: str | None) -> None:
        if live.nonce is not None and nonce != live.nonce:
            raise HTTPException(409, "session is bound to another client")

    @app.get("/api/sessions/{sid}/query")
    def get_query(sid: str, nonce: str | None = None, wait: float = 5.0) -> dict:
        live = manager.get(sid)
        check_nonce(live, nonce)
        state = _wait_out_of_thinking(live, min(max(wait, 0.0), 25.0))
        if state == FINISHED:
            out = {"state": FINISHED, "stop_reason": live.result.stop_reason if live.result else None}
            if live.error:
                out["error"] = live.error
            return out
        if state == THINKING:
            return {"state": THINKING}
        q = live.bridge.current_question()
        if q is None:  # answered from another request between checks
            return {"state": THINKING}
        roles = ["left", "right"] if q["kind"] == "compare" else ["challenger", "incumbent"]
        return {
            "state": AWAITING,
            "kind": q["kind"],
            "iteration": q["seq"],
            "expected_total": live.n_query,
            "can_stop": True,
            "candidates": [
                render_candidate(raw, role) for raw, role in zip(q["candidates"], roles)
            ],
        }

    @app.post("/api/sessions/{sid}/answer")
    def post_answer(sid: str, body: dict = Body(...)) -> dict:
        live = manager.get(sid)
        check_nonce(live, body.get("nonce"))
        choice = body.get("choice")
        if choice not in _CHOICES:
            raise HTTPException(422, f"choice must be one of {sorted(_CHOICES)}")
        with live.lock:
            q = live.bridge.current_question()
            if q is None or q["seq"] <= live.answered_seq:
                raise HTTPException(409, "no question is awaiting an answer")
            if "question" in body and int(body["question"]) != q["seq"]:
                # The client answered a question that is no longer pending —
                # a stale tab or a double click racing the next question.
                raise HTTPException(409, "that question has already been answered")
            try:
                live.bridge.post_answer(choice)
            except ValueError as exc:  # right word, wrong question kind
                raise HTTPException(409, str(exc)) from None
            except LookupError as exc:
                raise HTTPException(409, str(exc)) from None
            live.answered_seq = q["seq"]
        state = _wait_out_of_thinking(live, 10.0)
        out = {"state": state, "answered": q["seq"]}
        if state == FINISHED and live.result is not None:
            out["stop_reason"] = live.result.stop_reason
        return out

    @app.get("/api/sessions/{sid}/recommendation")
    def recommendation(sid: str, nonce: str | None = None) -> dict:
        live = manager.get(sid)
        check_nonce(live, nonce)
        if live.state() != FINISHED:
            raise HTTPException(409, "session is still running")
        if live.error is not None:
            raise HTTPException(500, live.error)
        r = live.result
        return {
            "recommendation": render_final(r.r_best),
            "allocation": list(r.r_best.params),
            "stop_reason": r.stop_reason,
            "queries": r.count,
            "transcript": f"/api/sessions/{sid}/transcript",
        }

    @app.get("/api/sessions/{sid}/transcript")
    def transcript(sid: str, nonce: str | None = None) -> PlainTextResponse:
        live = manager.get(sid)
        check_nonce(live, nonce)
        if live.state() != FINISHED:
            raise HTTPException(409, "session is still running")
        if live.error is not None:
            raise HTTPException(500, live.error)
        return PlainTextResponse(
            transcript_ndjson(live.result), media_type="application/x-ndjson"
        )

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
