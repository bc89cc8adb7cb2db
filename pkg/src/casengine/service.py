"""HTTP API for interactive sessions (human-in-the-loop or autonomous).

Sessions persist as flat files (manifest + run log + embedding caches) under a
data directory; state is reconstructed from the run log after a restart. Each
session serializes its mutations behind a per-session lock.
"""

from __future__ import annotations

import json
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .agent import AgentSession, Backends, RunConfig, _generation_seed
from .datasets import ConceptSequence
from .errors import EngineError, SessionError, ValidationError
from .sampler import InspirationProposal, human_suggestion_bundle
from .vocab import Vocabulary


@dataclass
class ServiceContext:
    vocabulary: Vocabulary
    backends: Backends
    data_dir: Path
    default_config: RunConfig | None = None


@dataclass
class Session:
    session_id: str
    mode: str  # "autonomous" | "human"
    agent: AgentSession
    suggestions: list[InspirationProposal] = field(default_factory=list)
    pending_choice: InspirationProposal | None = None
    pending_skip: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionManager:
    def __init__(self, ctx: ServiceContext) -> None:
        self.ctx = ctx
        self.sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self.ctx.data_dir.mkdir(parents=True, exist_ok=True)

    def _session_dir(self, session_id: str) -> Path:
        return self.ctx.data_dir / "sessions" / session_id

    def create(self, config: RunConfig, mode: str) -> Session:
        if mode not in ("autonomous", "human"):
            raise ValidationError(f"unknown session mode: {mode!r}")
        session_id = secrets.token_hex(16)
        sdir = self._session_dir(session_id)
        sdir.mkdir(parents=True)
        config.save(sdir / "manifest_config.json")
        (sdir / "manifest.json").write_text(
            json.dumps({"session_id": session_id, "mode": mode}, sort_keys=True)
        )
        agent = AgentSession(
            config,
            self.ctx.backends,
            self.ctx.vocabulary,
            sdir / "runlog.jsonl",
            cache_dir=sdir,
            image_dir=sdir / "images",
        )
        session = Session(session_id=session_id, mode=mode, agent=agent)
        self._refresh_suggestions(session)
        with self._registry_lock:
            self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._registry_lock:
            if session_id in self.sessions:
                return self.sessions[session_id]
        # Restart safety: rebuild from the on-disk manifest and run log.
        sdir = self._session_dir(session_id)
        if not (sdir / "manifest.json").exists():
            raise SessionError(f"unknown session: {session_id}")
        manifest = json.loads((sdir / "manifest.json").read_text())
        config = RunConfig.load(sdir / "manifest_config.json")
        agent = AgentSession.resume(
            config, self.ctx.backends, self.ctx.vocabulary, sdir / "runlog.jsonl", cache_dir=sdir
        )
        session = Session(session_id=session_id, mode=manifest["mode"], agent=agent)
        self._refresh_suggestions(session)
        with self._registry_lock:
            self.sessions[session_id] = session
        return session

    def _refresh_suggestions(self, session: Session) -> None:
        agent = session.agent
        backends = self.ctx.backends
        session.suggestions = []
        if agent.generation >= agent.config.generations:
            return
        if backends.coherence is not None and backends.context is not None:
            from .sampler import CasConfig

            cfg = agent.config.cas
            gen_cfg = CasConfig(
                n_candidates=cfg.n_candidates,
                beta=cfg.beta,
                temperature=cfg.temperature,
                max_length=cfg.max_length,
                seed=_generation_seed(agent.config.seed, agent.generation + 1),
                conditioning=cfg.conditioning,
            )
            session.suggestions = human_suggestion_bundle(
                ConceptSequence(tuple(agent.seed_ids)),
                backends.coherence,
                backends.context,
                gen_cfg,
                set(agent.pool.active_ids()),
                agent.pool.expired,
                self.ctx.vocabulary,
                llm_ctx=agent._inspiration_context() if backends.inspiration_client else None,
                llm_client=backends.inspiration_client,
            )

    def submit_choice(self, session: Session, body: dict) -> dict:
        agent = session.agent
        if "proposal_index" in body and body["proposal_index"] is not None:
            idx = int(body["proposal_index"])
            if not 0 <= idx < len(session.suggestions):
                raise ValidationError(f"no suggestion at index {idx}")
            session.pending_choice = session.suggestions[idx]
            session.pending_skip = False
            return {"accepted": True, "provenance": session.pending_choice.provenance}
        if body.get("skip"):
            session.pending_choice = None
            session.pending_skip = True
            return {"accepted": True, "provenance": "none"}
        label = body.get("concept")
        if not label:
            raise ValidationError("submit either a concept label, a proposal_index, or skip")
        if label not in self.ctx.vocabulary:
            raise ValidationError(f"concept not in vocabulary: {label!r}")
        cid = self.ctx.vocabulary.id_of(label)
        if cid in agent.pool.active:
            raise ValidationError(f"concept already in the pool: {label!r}")
        if cid in agent.pool.expired:
            raise ValidationError(f"concept is expired: {label!r}")
        session.pending_choice = InspirationProposal(new_concept=cid, provenance="human")
        session.pending_skip = False
        return {"accepted": True, "provenance": "human"}

    def step(self, session: Session) -> dict:
        if not session.lock.acquire(blocking=False):
            raise SessionError("a step is already in flight for this session")
        try:
            if session.mode == "human" and session.pending_choice is None and not session.pending_skip:
                raise ValidationError("human mode requires a submitted choice or an explicit skip")
            proposal = session.pending_choice
            if session.mode == "human" and proposal is None:
                proposal = InspirationProposal(new_concept=None, provenance="none")
            record = session.agent.step(proposal=proposal)
            session.pending_choice = None
            session.pending_skip = False
            self._refresh_suggestions(session)
            return json.loads(record.to_json())
        finally:
            session.lock.release()

    def state(self, session: Session) -> dict:
        agent = session.agent
        records = [json.loads(r.to_json()) for r in agent.records]
        scored = [r for r in records if r["status"] == "ok"]
        with_new = [r for r in records if r["new_concepts"]]
        adopted = [r for r in with_new if r["provenance"] in ("cas", "llm", "llm_free")]
        return {
            "session_id": session.session_id,
            "mode": session.mode,
            "generation": agent.generation,
            "generations_total": agent.config.generations,
            "pool": [agent.labels.label_of(c) for c in agent.pool.active_ids()],
            "original": [agent.labels.label_of(c) for c in sorted(agent.pool.original)],
            "expired": [agent.labels.label_of(c) for c in sorted(agent.pool.expired)],
            "history": records,
            "novelty_trend": [r["novelty_combined"] for r in scored],
            "suggestions": [
                {
                    "concept": agent.labels.label_of(p.new_concept)
                    if p.new_concept is not None
                    else p.new_label,
                    "provenance": p.provenance,
                }
                for p in session.suggestions
            ],
            "adoption": {
                "adopted": len(adopted),
                "choices": len(with_new),
                "rate": len(adopted) / len(with_new) if with_new else 0.0,
            },
        }


def create_app(ctx: ServiceContext, ui_dir: str | Path | None = None):
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse

    app = FastAPI(title="concept exploration service")
    manager = SessionManager(ctx)
    app.state.manager = manager

    def _http_error(exc: EngineError) -> HTTPException:
        if isinstance(exc, SessionError):
            code = 404 if "unknown session" in str(exc) else 409
        elif isinstance(exc, ValidationError):
            code = 422
        else:
            code = 500
        return HTTPException(status_code=code, detail=str(exc))

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(body: dict) -> dict:
        try:
            base = ctx.default_config
            cfg_dict = base.to_dict() if base else {"seed_labels": []}
            cfg_dict.update({k: v for k, v in body.items() if k != "mode"})
            config = RunConfig.from_dict(cfg_dict)
            session = manager.create(config, body.get("mode", "human"))
        except EngineError as exc:
            raise _http_error(exc)
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str) -> dict:
        try:
            return manager.state(manager.get(session_id))
        except EngineError as exc:
            raise _http_error(exc)

    @app.post("/sessions/{session_id}/choice")
    def submit_choice(session_id: str, body: dict) -> dict:
        try:
            return manager.submit_choice(manager.get(session_id), body)
        except EngineError as exc:
            raise _http_error(exc)

    @app.post("/sessions/{session_id}/step")
    def step(session_id: str) -> JSONResponse:
        try:
            return JSONResponse(manager.step(manager.get(session_id)))
        except EngineError as exc:
            raise _http_error(exc)

    @app.get("/vocabulary")
    def vocabulary() -> dict:
        return {"labels": ctx.vocabulary.labels()}

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
