"""Presentation adaptation and the online learning loop.

Explanations (provider-backed with a total template fallback), presentation
plans derived from the cognitive state, seeded serendipity injection, and
interaction-event processing that feeds the graph, the user embedding, and
the style-drift accumulator. Events persist to an append-only length-prefixed
log that replays to identical state.
"""

from __future__ import annotations

import json
import logging
import math
import struct
import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .cognition import CognitiveState, complexity_band
from .config import EngineConfig
from .enrichment import VARK_LETTERS, SemanticProfile
from .errors import FormatError, ProviderError, UnknownItem, UnknownUser
from .graph import (EdgeType, GraphDelta, KnowledgeGraph, NodeType,
                    item_node_id, user_node_id)
from .profiling import UserProfile, update_embedding
from .providers import GenerationProvider
from .recommender import RankedItem, RankedList

log = logging.getLogger(__name__)

VIEW_TIME_SATURATION_SECONDS = 600.0

_CHANNEL_WORDS = {"v": "visual", "a": "audio-driven", "r": "text-first", "k": "hands-on"}
_EMPHASIS_BY_CHANNEL = {"v": "VISUAL", "a": "AUDIO", "r": "TEXT", "k": "INTERACTIVE"}


class EventKind(str, Enum):
    IMPRESSION = "IMPRESSION"
    CLICK = "CLICK"
    VIEW_TIME = "VIEW_TIME"
    RATING = "RATING"
    SKIP = "SKIP"
    WISHLIST = "WISHLIST"
    COMPLETE = "COMPLETE"


@dataclass
class InteractionEvent:
    user_id: str
    item_id: str
    kind: EventKind
    value: Optional[float] = None      # RATING 1-5, VIEW_TIME seconds
    timestamp: float = 0.0
    session_id: Optional[str] = None
    event_id: Optional[str] = None     # client id; duplicates are ignored upstream

    def validate(self) -> None:
        if self.kind is EventKind.RATING:
            if self.value is None or not 1.0 <= float(self.value) <= 5.0:
                raise ValueError(f"RATING value must be in [1, 5], got {self.value}")
        if self.kind is EventKind.VIEW_TIME:
            if self.value is None or float(self.value) < 0.0:
                raise ValueError(f"VIEW_TIME seconds must be >= 0, got {self.value}")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id, "item_id": self.item_id,
            "kind": self.kind.value, "value": self.value,
            "timestamp": self.timestamp, "session_id": self.session_id,
            "event_id": self.event_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InteractionEvent":
        return cls(user_id=data["user_id"], item_id=data["item_id"],
                   kind=EventKind(data["kind"]), value=data.get("value"),
                   timestamp=data.get("timestamp", 0.0),
                   session_id=data.get("session_id"),
                   event_id=data.get("event_id"))


def signal_strength(event: InteractionEvent) -> float:
    """Feedback kind -> signal in [-1, 1]."""
    event.validate()
    kind = event.kind
    if kind is EventKind.CLICK:
        return 0.3
    if kind is EventKind.WISHLIST:
        return 0.6
    if kind is EventKind.COMPLETE:
        return 0.8
    if kind is EventKind.SKIP:
        return -0.4
    if kind is EventKind.RATING:
        return (float(event.value) - 3.0) / 2.0
    if kind is EventKind.VIEW_TIME:
        return min(1.0, float(event.value) / VIEW_TIME_SATURATION_SECONDS) * 0.5
    return 0.0  # IMPRESSION


# ---------------------------------------------------------------------------
# presentation


class Emphasis(str, Enum):
    VISUAL = "VISUAL"
    AUDIO = "AUDIO"
    TEXT = "TEXT"
    INTERACTIVE = "INTERACTIVE"


class DetailLevel(str, Enum):
    FULL = "FULL"
    COMPACT = "COMPACT"
    MINIMAL = "MINIMAL"


@dataclass
class PresentationPlan:
    emphasis: Emphasis
    detail: DetailLevel
    visible_count: int

    def validate(self, list_length: int) -> None:
        if not 1 <= self.visible_count <= list_length:
            raise ValueError(f"visible_count {self.visible_count} out of [1, {list_length}]")


def compose_presentation(ranked: RankedList, state: CognitiveState) -> PresentationPlan:
    """Emphasis from the dominant presentation channel (ties fall back to
    TEXT), detail level from capacity, initial visible count from attention
    (floor of 3, capped by the list)."""
    if not ranked.items:
        raise ValueError("cannot present an empty list")
    weights = state.presentation or dict.fromkeys(VARK_LETTERS, 0.25)
    top = max(weights.values())
    leaders = [l for l in VARK_LETTERS if weights.get(l, 0.0) >= top - 1e-9]
    emphasis = Emphasis(_EMPHASIS_BY_CHANNEL[leaders[0]]) if len(leaders) == 1 else Emphasis.TEXT

    if state.capacity >= 0.7:
        detail = DetailLevel.FULL
    elif state.capacity >= 0.4:
        detail = DetailLevel.COMPACT
    else:
        detail = DetailLevel.MINIMAL

    n = len(ranked.items)
    visible = max(3, math.ceil(state.attention * n))
    visible = min(n, visible)
    plan = PresentationPlan(emphasis=emphasis, detail=detail, visible_count=visible)
    plan.validate(n)
    return plan


# ---------------------------------------------------------------------------
# explanations

EXPLANATION_PROMPT = """Write a 2-3 sentence recommendation explanation.
User: {user}
User style weights: V={v:.2f} A={a:.2f} R={r:.2f} K={k:.2f}
Goal: {goal}
Item: {title}
Item entities: {entities}
Reference the user's strongest style channel, one concrete entity, and the goal.
"""


def _sentence(text: str) -> str:
    text = text.strip().rstrip(".!?")
    return text + "."


def generate_explanation(item_profile: SemanticProfile, user_profile: UserProfile,
                         provider: Optional[GenerationProvider] = None, *,
                         preferred_entities: Optional[set[str]] = None,
                         temperature: float = 0.7, max_tokens: int = 150) -> str:
    """2-3 sentences tying the item to the user.

    The template fallback is total: it names the dominant style channel (or
    the goal when styles tie), one matched entity, and the goal.
    """
    if provider is not None:
        prompt = EXPLANATION_PROMPT.format(
            user=user_profile.demographics.text() or user_profile.user_id,
            v=user_profile.vark.v, a=user_profile.vark.a,
            r=user_profile.vark.r, k=user_profile.vark.k,
            goal=user_profile.goal.value.lower(),
            title=item_profile.title or item_profile.item_id,
            entities=", ".join(item_profile.entity_names()[:6]),
        )
        try:
            text = provider.generate(prompt, temperature=temperature,
                                     max_tokens=max_tokens).strip()
            if text:
                return text
            log.warning("empty explanation from provider; call degraded to template")
        except ProviderError as exc:
            log.warning("explanation provider failed (%s); call degraded to template", exc)

    title = (item_profile.title or str(item_profile.item_id)).strip().rstrip(".")
    goal_word = user_profile.goal.value.lower()
    names = item_profile.entity_names()
    matched = None
    if preferred_entities:
        for name in names:
            if name.strip().lower() in preferred_entities:
                matched = name
                break
    if matched is None and names:
        matched = names[0]
    dominant = user_profile.vark.dominant()
    sentences = []
    if dominant is not None:
        sentences.append(_sentence(
            f"{title} fits your {_CHANNEL_WORDS[dominant]} preference"))
    else:
        sentences.append(_sentence(f"{title} was picked with your {goal_word} goal in mind"))
    if matched:
        sentences.append(_sentence(
            f"It connects to {matched.strip().rstrip('.')}, which matches your profile"))
    if dominant is not None:
        sentences.append(_sentence(f"A solid pick when your goal is {goal_word}"))
    elif not matched:
        sentences.append(_sentence("Its overall profile is balanced across styles, like yours"))
    return " ".join(sentences)


# ---------------------------------------------------------------------------
# serendipity


def _top_decile_entity_neighborhood(graph: KnowledgeGraph, user_id: str) -> set[str]:
    """Items attached to the user's strongest tenth of preferred entities."""
    unid = user_node_id(user_id)
    if not graph.has_node(unid):
        return set()
    prefs = [(e.weight, e.target) for e in graph.out_edges(unid, EdgeType.PREFERS)
             if graph.node(e.target).node_type is NodeType.ENTITY]
    if not prefs:
        return set()
    prefs.sort(key=lambda t: (-t[0], t[1]))
    top_n = max(1, math.ceil(len(prefs) / 10))
    neighborhood: set[str] = set()
    for _, enid in prefs[:top_n]:
        for edge in graph.in_edges(enid):
            if graph.node(edge.source).node_type is NodeType.ITEM:
                neighborhood.add(edge.source)
    return neighborhood


def inject_serendipity(ranked: RankedList, graph: KnowledgeGraph, rate: float,
                       seed: int, *, user_id: Optional[str] = None,
                       state: Optional[CognitiveState] = None) -> RankedList:
    """Swap the floor(rate*K) lowest ranks for seeded novel items.

    Novel = outside the user's top-decile entity neighborhood and inside the
    cognitive complexity band. Fewer eligible items than slots means fewer
    replacements (logged), never an error.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be in [0, 1]")
    items = [replace(it) for it in ranked.items]
    n_replace = math.floor(rate * len(items))
    if n_replace == 0:
        return RankedList(items=items, warnings=list(ranked.warnings))

    excluded = set(it.node_id for it in items)
    if user_id is not None:
        excluded |= _top_decile_entity_neighborhood(graph, user_id)
    band = complexity_band(state) if state is not None else (1, 5)
    eligible = []
    for nid in graph.item_ids():
        if nid in excluded:
            continue
        complexity = int(graph.node(nid).attributes.get("complexity", 3))
        if band[0] <= complexity <= band[1]:
            eligible.append(nid)

    rng = np.random.default_rng(seed)
    n_actual = min(n_replace, len(eligible))
    if n_actual < n_replace:
        log.info("serendipity: only %d novel items available for %d slots",
                 n_actual, n_replace)
    chosen = list(rng.choice(eligible, size=n_actual, replace=False)) if n_actual else []

    replaced: list[tuple[str, str]] = []
    for offset, new_id in enumerate(chosen):
        idx = len(items) - n_actual + offset
        old = items[idx]
        replaced.append((old.node_id, str(new_id)))
        items[idx] = RankedItem(node_id=str(new_id), score=old.score,
                                justification=None, serendipity=True)
    return RankedList(items=items, warnings=list(ranked.warnings), replaced=replaced)


# ---------------------------------------------------------------------------
# event processing


class EngagementTracker:
    """Per-user, per-channel engagement means feeding style drift."""

    def __init__(self) -> None:
        self._sums: dict[str, dict[str, float]] = {}
        self._counts: dict[str, dict[str, int]] = {}
        self._events: dict[str, int] = {}
        self._lock = threading.Lock()

    def record(self, user_id: str, channel: str, engagement: float) -> None:
        with self._lock:
            sums = self._sums.setdefault(user_id, dict.fromkeys(VARK_LETTERS, 0.0))
            counts = self._counts.setdefault(user_id, dict.fromkeys(VARK_LETTERS, 0))
            sums[channel] += engagement
            counts[channel] += 1
            self._events[user_id] = self._events.get(user_id, 0) + 1

    def event_count(self, user_id: str) -> int:
        with self._lock:
            return self._events.get(user_id, 0)

    def means(self, user_id: str) -> tuple[float, float, float, float]:
        with self._lock:
            sums = self._sums.get(user_id, dict.fromkeys(VARK_LETTERS, 0.0))
            counts = self._counts.get(user_id, dict.fromkeys(VARK_LETTERS, 0))
            return tuple(sums[l] / counts[l] if counts[l] else 0.0
                         for l in VARK_LETTERS)  # type: ignore[return-value]

    def reset(self, user_id: str) -> None:
        with self._lock:
            self._sums.pop(user_id, None)
            self._counts.pop(user_id, None)
            self._events.pop(user_id, None)


def item_channel(graph: KnowledgeGraph, item_nid: str) -> str:
    """Channel an item engages: argmax of its alignment (first wins on ties)."""
    alignment = graph.node(item_nid).attributes.get("vark_alignment", [0.25] * 4)
    best = max(range(4), key=lambda i: (alignment[i], -i))
    return VARK_LETTERS[best]


def process_event(event: InteractionEvent, graph: KnowledgeGraph,
                  profile: UserProfile, tracker: EngagementTracker,
                  config: Optional[EngineConfig] = None
                  ) -> tuple[GraphDelta, UserProfile]:
    """Apply one feedback event to the graph and the user profile.

    Zero-signal events (impressions, midpoint ratings) are recorded but
    mutate nothing, which keeps repeated reads deterministic.
    """
    cfg = config or EngineConfig()
    event.validate()
    unid = user_node_id(event.user_id)
    inid = item_node_id(event.item_id)
    if not graph.has_node(unid):
        raise UnknownUser(event.user_id)
    if not graph.has_node(inid):
        raise UnknownItem(event.item_id)
    signal = signal_strength(event)
    if signal == 0.0:
        return GraphDelta(), profile
    delta = graph.apply_interaction(unid, inid, signal)
    item_embedding = graph.node(inid).embedding
    updated = update_embedding(profile, item_embedding, signal, cfg.embedding_blend)
    tracker.record(event.user_id, item_channel(graph, inid), max(signal, 0.0))
    return delta, updated


# ---------------------------------------------------------------------------
# event log


class EventLog:
    """Append-only log: u32 little-endian length + UTF-8 JSON per record."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.touch(exist_ok=True)

    def append(self, record: dict) -> None:
        payload = json.dumps(record, sort_keys=True).encode("utf-8")
        with self._lock:
            with open(self.path, "ab") as fh:
                fh.write(struct.pack("<I", len(payload)))
                fh.write(payload)

    def append_event(self, event: InteractionEvent) -> None:
        record = {"type": "interaction", **event.to_dict()}
        if not record.get("timestamp"):
            record["timestamp"] = time.time()
        self.append(record)

    def replay(self) -> list[dict]:
        records = []
        with self._lock:
            data = self.path.read_bytes()
        offset = 0
        while offset < len(data):
            if offset + 4 > len(data):
                raise FormatError("event log truncated in a length prefix")
            (length,) = struct.unpack_from("<I", data, offset)
            offset += 4
            if offset + length > len(data):
                raise FormatError("event log truncated mid-record")
            try:
                records.append(json.loads(data[offset:offset + length].decode("utf-8")))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise FormatError(f"corrupt event record: {exc}") from exc
            offset += length
        return records
