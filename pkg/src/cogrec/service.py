"""HTTP service for interactive use.

UTF-8 JSON over HTTP; errors come back as {code, message, details}. The
server clock is authoritative for time-of-day (an override header works only
in test mode). Recommendations never block on provider availability: the
deterministic fallback path always answers.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Optional

from fastapi import FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .adaptation import (EventKind, InteractionEvent, compose_presentation,
                         generate_explanation, inject_serendipity)
from .cognition import Device, Pace, SessionContext
from .engine import ColdStartEngine, stable_seed
from .enrichment import SemanticProfile
from .errors import EmptyCatalog, UnknownItem, UnknownUser
from .graph import EdgeType, NodeType, item_node_id, user_node_id
from .profiling import Demographics, Goal

log = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, status: int, message: str, details: Any = None):
        self.status = status
        self.message = message
        self.details = details


@dataclass
class ApiSession:
    session_id: str
    user_id: str
    device: Device
    stated_goal: Optional[Goal]
    available_minutes: Optional[float]
    created_at: float
    impressions: int = 0
    last_state: Optional[dict] = None


class DemographicsBody(BaseModel):
    age_bracket: str = ""
    gender: str = ""
    occupation: str = ""


class CreateUserBody(BaseModel):
    demographics: DemographicsBody = DemographicsBody()
    goal: str


class QuestionnaireBody(BaseModel):
    answers: list[str]


class CreateSessionBody(BaseModel):
    user_id: str
    device: str = "DESKTOP"
    stated_goal: Optional[str] = None
    available_minutes: Optional[float] = None


class FeedbackBody(BaseModel):
    session_id: str
    item_id: str
    kind: str
    value: Optional[float] = None
    event_id: Optional[str] = None


def create_app(engine: ColdStartEngine) -> FastAPI:
    app = FastAPI(title="cogrec service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    sessions: dict[str, ApiSession] = {}
    sessions_lock = threading.Lock()
    config = engine.config

    def error_payload(code: int, message: str, details: Any = None) -> dict:
        return {"code": code, "message": message, "details": details}

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content=error_payload(exc.status, exc.message, exc.details))

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content=error_payload(422, "invalid request body",
                                                  exc.errors()))

    def require_api_key(api_key: Optional[str]) -> None:
        if config.api_key is not None and api_key != config.api_key:
            raise ApiError(401, "missing or invalid API key")

    def get_session(session_id: str) -> ApiSession:
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise ApiError(404, f"unknown session: {session_id}")
        return session

    def current_hour(override: Optional[str]) -> int:
        if override is not None and config.test_mode:
            return max(0, min(23, int(override)))
        return datetime.now().hour

    def build_context(session: ApiSession, override_hour: Optional[str]) -> SessionContext:
        minutes = max(0.0, (time.time() - session.created_at) / 60.0)
        return SessionContext(
            time_of_day=current_hour(override_hour),
            day_of_week=datetime.now().weekday(),
            device=session.device,
            session_minutes=minutes,
            items_viewed=session.impressions,
            interaction_pace=Pace.MODERATE,
            stated_goal=session.stated_goal,
            available_minutes=session.available_minutes,
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "items": len(engine.graph.item_ids()),
                "users": len(engine.profiles)}

    @app.post("/users", status_code=201)
    def create_user_endpoint(body: CreateUserBody,
                             idempotency_key: Optional[str] = Header(default=None),
                             x_api_key: Optional[str] = Header(default=None)):
        require_api_key(x_api_key)
        try:
            goal = Goal(body.goal.upper())
        except ValueError:
            raise ApiError(400, f"invalid goal {body.goal!r}",
                           details={"valid_goals": [g.value for g in Goal]})
        demo = Demographics(age_bracket=body.demographics.age_bracket,
                            gender=body.demographics.gender,
                            occupation=body.demographics.occupation)
        profile = engine.register_user(demo, goal, idempotency_key=idempotency_key)
        return {"user_id": profile.user_id}

    @app.post("/users/{user_id}/questionnaire")
    def questionnaire_endpoint(user_id: str, body: QuestionnaireBody,
                               x_api_key: Optional[str] = Header(default=None)):
        require_api_key(x_api_key)
        if len(body.answers) != 16 or any(
                str(a).strip().lower() not in ("v", "a", "r", "k") for a in body.answers):
            raise ApiError(422, "questionnaire needs exactly 16 answers, each V/A/R/K",
                           details={"received": len(body.answers)})
        try:
            vark = engine.submit_questionnaire(user_id, body.answers)
        except UnknownUser:
            raise ApiError(404, f"unknown user: {user_id}")
        return {"vark": vark.as_dict()}

    @app.post("/sessions", status_code=201)
    def create_session_endpoint(body: CreateSessionBody,
                                x_override_hour: Optional[str] = Header(default=None),
                                x_api_key: Optional[str] = Header(default=None)):
        require_api_key(x_api_key)
        if body.user_id not in engine.profiles:
            raise ApiError(404, f"unknown user: {body.user_id}")
        try:
            device = Device(body.device.upper())
        except ValueError:
            raise ApiError(400, f"invalid device {body.device!r}",
                           details={"valid_devices": [d.value for d in Device]})
        stated_goal = None
        if body.stated_goal is not None:
            try:
                stated_goal = Goal(body.stated_goal.upper())
            except ValueError:
                raise ApiError(400, f"invalid goal {body.stated_goal!r}",
                               details={"valid_goals": [g.value for g in Goal]})
        session = ApiSession(session_id=uuid.uuid4().hex, user_id=body.user_id,
                             device=device, stated_goal=stated_goal,
                             available_minutes=body.available_minutes,
                             created_at=time.time())
        ctx = build_context(session, x_override_hour)
        state = engine.state_for(body.user_id, ctx)
        session.last_state = {
            "capacity": state.capacity, "attention": state.attention,
            "complexity_pref": state.complexity_pref,
            "presentation": state.presentation,
        }
        with sessions_lock:
            sessions[session.session_id] = session
        return {"session_id": session.session_id, "cognitive_state": session.last_state}

    @app.get("/sessions/{session_id}/recommendations")
    def recommendations_endpoint(session_id: str, k: int = Query(default=10, ge=1),
                                 x_override_hour: Optional[str] = Header(default=None),
                                 x_api_key: Optional[str] = Header(default=None)):
        require_api_key(x_api_key)
        session = get_session(session_id)
        ctx = build_context(session, x_override_hour)
        profile = engine.profile(session.user_id)
        state = engine.state_for(session.user_id, ctx)
        try:
            ranked = engine.recommend_for(session.user_id, ctx, K=k)
        except EmptyCatalog:
            raise ApiError(503, "catalog is empty")
        seed = stable_seed("serendipity", session_id,
                           str(engine.mutation_count(session.user_id)))
        ranked = inject_serendipity(ranked, engine.graph, config.serendipity_rate,
                                    seed, user_id=session.user_id, state=state)
        plan = compose_presentation(ranked, state)

        preferred = set()
        unid = user_node_id(session.user_id)
        if engine.graph.has_node(unid):
            for edge in engine.graph.out_edges(unid, EdgeType.PREFERS):
                node = engine.graph.node(edge.target)
                if node.node_type is NodeType.ENTITY:
                    preferred.add(node.name.strip().lower())

        items = []
        for it in ranked.items:
            node = engine.graph.node(it.node_id)
            raw = node.attributes.get("profile")
            item_profile = SemanticProfile.from_dict(raw) if raw else None
            if it.justification:
                explanation = it.justification
            elif item_profile is not None:
                explanation = generate_explanation(
                    item_profile, profile, engine.provider,
                    preferred_entities=preferred,
                    temperature=config.temperature,
                    max_tokens=config.explain_max_tokens)
            else:
                explanation = f"Recommended for your {profile.goal.value.lower()} goal."
            items.append({
                "item_id": node.attributes.get("item_id", it.node_id),
                "title": node.attributes.get("title") or node.name,
                "score": it.score,
                "explanation": explanation,
                "serendipity": it.serendipity,
                "description": node.description,
            })

        # impressions are auto-logged; zero-signal events never mutate state
        for it in ranked.items:
            raw_id = engine.graph.node(it.node_id).attributes.get("item_id", it.node_id)
            engine.record_event(InteractionEvent(
                user_id=session.user_id, item_id=str(raw_id),
                kind=EventKind.IMPRESSION, timestamp=time.time(),
                session_id=session_id))
        with sessions_lock:
            session.impressions += len(ranked.items)

        return {
            "session_id": session_id,
            "items": items,
            "plan": {"emphasis": plan.emphasis.value, "detail": plan.detail.value,
                     "visible_count": plan.visible_count},
            "replaced": ranked.replaced,
        }

    @app.post("/feedback", status_code=202)
    def feedback_endpoint(body: FeedbackBody,
                          x_api_key: Optional[str] = Header(default=None)):
        require_api_key(x_api_key)
        session = get_session(body.session_id)
        try:
            kind = EventKind(body.kind.upper())
        except ValueError:
            raise ApiError(422, f"invalid feedback kind {body.kind!r}",
                           details={"valid_kinds": [k.value for k in EventKind]})
        if not engine.has_item(body.item_id):
            raise ApiError(404, f"unknown item: {body.item_id}")
        event = InteractionEvent(user_id=session.user_id, item_id=body.item_id,
                                 kind=kind, value=body.value, timestamp=time.time(),
                                 session_id=body.session_id, event_id=body.event_id)
        try:
            event.validate()
        except ValueError as exc:
            raise ApiError(422, str(exc))
        try:
            engine.record_event(event)
        except (UnknownUser, UnknownItem) as exc:
            raise ApiError(404, str(exc))
        return {"accepted": True}

    @app.get("/users/{user_id}/profile")
    def profile_endpoint(user_id: str,
                         x_api_key: Optional[str] = Header(default=None)):
        require_api_key(x_api_key)
        try:
            profile = engine.profile(user_id)
        except UnknownUser:
            raise ApiError(404, f"unknown user: {user_id}")
        top_entities = []
        unid = user_node_id(user_id)
        if engine.graph.has_node(unid):
            prefs = [(e.weight, engine.graph.node(e.target))
                     for e in engine.graph.out_edges(unid, EdgeType.PREFERS)
                     if engine.graph.node(e.target).node_type is NodeType.ENTITY]
            prefs.sort(key=lambda t: (-t[0], t[1].node_id))
            top_entities = [{"name": node.name, "weight": weight}
                            for weight, node in prefs[:10]]
        return {
            "user_id": user_id,
            "goal": profile.goal.value,
            "vark": profile.vark.as_dict(),
            "drift_history": [v.as_dict() for v in profile.drift_history[-20:]],
            "top_entities": top_entities,
        }

    return app
