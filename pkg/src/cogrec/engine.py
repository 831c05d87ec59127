"""Facade wiring the catalog, graph, profiles, and the learning loop.

Both the HTTP service and long-lived embedding of the engine go through this
class: it owns the enrichment cache, the knowledge graph, the profile store,
the engagement tracker, and the append-only event log. Replaying a log
against a fresh engine with the same catalog reproduces profile and graph
state exactly.
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .adaptation import (EngagementTracker, EventLog, InteractionEvent,
                         process_event)
from .cognition import SessionContext, estimate_state
from .config import EngineConfig
from .embedding import HashedTextEmbedder
from .enrichment import (EnrichmentCache, RawItem, VarkVector, enrich_item)
from .errors import DuplicateUser, UnknownItem, UnknownUser
from .graph import (Edge, EdgeType, KnowledgeGraph, item_node_id,
                    user_node_id, vark_node_id)
from .profiling import (Demographics, Goal, ProfileStore, UserProfile,
                        create_user, refine_vark, score_questionnaire)
from .providers import GenerationProvider
from .recommender import RankedList, recommend

log = logging.getLogger(__name__)


def stable_seed(*parts: str) -> int:
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class ColdStartEngine:
    def __init__(self, config: Optional[EngineConfig] = None,
                 provider: Optional[GenerationProvider] = None,
                 event_log: Optional[EventLog] = None):
        self.config = config or EngineConfig()
        self.provider = provider
        self.embedder = HashedTextEmbedder(self.config.embedding_dim)
        self.graph = KnowledgeGraph(dim=self.config.embedding_dim,
                                    eta=self.config.interaction_rate)
        self.profiles = ProfileStore()
        self.cache = EnrichmentCache()
        self.tracker = EngagementTracker()
        self.event_log = event_log
        self.last_recommendations: dict[str, list[str]] = {}
        self._idempotency: dict[str, str] = {}
        self._mutations: dict[str, int] = {}
        self._seen_event_ids: set[str] = set()
        self._lock = threading.Lock()

    # -- catalog ---------------------------------------------------------------

    def load_catalog(self, items: Iterable[RawItem],
                     infer_similarity: bool = False) -> int:
        count = 0
        for item in items:
            profile = enrich_item(item, self.provider,
                                  retries=self.config.enrich_retries,
                                  cache=self.cache,
                                  fallback=self.config.deterministic_fallback,
                                  temperature=self.config.temperature,
                                  max_tokens=self.config.enrich_max_tokens)
            self.graph.upsert_item(profile, self.embedder)
            count += 1
        if infer_similarity:
            self.graph.infer_implicit_edges(max_hops=2, min_shared=1)
        return count

    def has_item(self, item_id: str) -> bool:
        return self.graph.has_node(item_node_id(item_id))

    # -- users -------------------------------------------------------------------

    def register_user(self, demographics: Demographics, goal: Goal,
                      user_id: Optional[str] = None,
                      idempotency_key: Optional[str] = None,
                      record: bool = True) -> UserProfile:
        """Create a profile with the uniform style placeholder.

        The embedding seed derives from the user id, so replaying the log
        recreates it bit-for-bit.
        """
        with self._lock:
            if idempotency_key is not None and idempotency_key in self._idempotency:
                return self.profiles.get(self._idempotency[idempotency_key])
        if user_id is None:
            user_id = f"u{stable_seed(str(time.time_ns()), str(len(self.profiles))):016x}"
        if user_id in self.profiles:
            raise DuplicateUser(user_id)
        profile, _ = create_user(user_id, demographics, goal,
                                 VarkVector.uniform(),
                                 seed=stable_seed("user-embedding", user_id),
                                 graph=self.graph)
        self.profiles.put(profile)
        with self._lock:
            if idempotency_key is not None:
                self._idempotency[idempotency_key] = user_id
        if record and self.event_log is not None:
            self.event_log.append({
                "type": "user_created", "user_id": user_id,
                "demographics": {"age_bracket": demographics.age_bracket,
                                 "gender": demographics.gender,
                                 "occupation": demographics.occupation},
                "goal": goal.value, "idempotency_key": idempotency_key,
            })
        return profile

    def submit_questionnaire(self, user_id: str, answers: Sequence[str],
                             record: bool = True) -> VarkVector:
        """Score and overwrite the profile's style vector; prior drift resets."""
        profile = self.profiles.get(user_id)
        vark = score_questionnaire(answers)
        with self.profiles.user_lock(user_id):
            updated = replace(profile, vark=vark, drift_history=[vark])
            self.profiles.put(updated)
        unid = user_node_id(user_id)
        for letter, weight in zip("vark", vark.as_tuple()):
            self.graph.add_edge(Edge(unid, vark_node_id(letter), EdgeType.PREFERS,
                                     weight=weight))
        self.tracker.reset(user_id)
        if record and self.event_log is not None:
            self.event_log.append({"type": "questionnaire", "user_id": user_id,
                                   "answers": [str(a) for a in answers]})
        log.info("questionnaire scored for %s: %s", user_id, vark.as_dict())
        return vark

    def profile(self, user_id: str) -> UserProfile:
        return self.profiles.get(user_id)

    def mutation_count(self, user_id: str) -> int:
        with self._lock:
            return self._mutations.get(user_id, 0)

    # -- recommendations -----------------------------------------------------------

    def recommend_for(self, user_id: str, ctx: SessionContext, K: int = 10) -> RankedList:
        profile = self.profiles.get(user_id)
        ranked = recommend(profile, ctx, self.graph, provider=self.provider,
                           K=K, config=self.config)
        self.last_recommendations[user_id] = ranked.ids()
        return ranked

    def state_for(self, user_id: str, ctx: SessionContext):
        return estimate_state(ctx, self.profiles.get(user_id).vark,
                              self.config.cognition)

    # -- learning loop ----------------------------------------------------------------

    def record_event(self, event: InteractionEvent, record: bool = True) -> bool:
        """Apply one event; returns True when it mutated graph/profile state.

        Duplicate client event ids are ignored. Every ``drift_every``
        mutating events the accumulated engagement refines the style vector.
        """
        if event.event_id is not None:
            with self._lock:
                if event.event_id in self._seen_event_ids:
                    return False
                self._seen_event_ids.add(event.event_id)
        if not self.graph.has_node(user_node_id(event.user_id)):
            raise UnknownUser(event.user_id)
        if not self.graph.has_node(item_node_id(event.item_id)):
            raise UnknownItem(event.item_id)
        if record and self.event_log is not None:
            self.event_log.append_event(event)
        profile = self.profiles.get(event.user_id)
        with self.profiles.user_lock(event.user_id):
            delta, updated = process_event(event, self.graph, profile,
                                           self.tracker, self.config)
            mutated = not delta.empty() or updated is not profile
            if updated is not profile:
                self.profiles.put(updated)
            if mutated:
                with self._lock:
                    self._mutations[event.user_id] = \
                        self._mutations.get(event.user_id, 0) + 1
                if self.tracker.event_count(event.user_id) >= self.config.drift_every:
                    self._refine(event.user_id)
        return mutated

    def _refine(self, user_id: str) -> None:
        profile = self.profiles.get(user_id)
        engagement = self.tracker.means(user_id)
        new_vark = refine_vark(profile.vark, engagement, self.config.vark_drift)
        self.profiles.put(replace(profile, vark=new_vark,
                                  drift_history=profile.drift_history + [new_vark]))
        self.tracker.reset(user_id)
        log.info("style drift for %s -> %s", user_id, new_vark.as_dict())

    # -- persistence ---------------------------------------------------------------------

    def replay_log(self, event_log: EventLog) -> int:
        """Rebuild user and interaction state from an append-only log."""
        count = 0
        for rec in event_log.replay():
            kind = rec.get("type")
            if kind == "user_created":
                demo = Demographics(**rec["demographics"])
                self.register_user(demo, Goal(rec["goal"]), user_id=rec["user_id"],
                                   idempotency_key=rec.get("idempotency_key"),
                                   record=False)
            elif kind == "questionnaire":
                self.submit_questionnaire(rec["user_id"], rec["answers"], record=False)
            elif kind == "interaction":
                self.record_event(InteractionEvent.from_dict(rec), record=False)
            count += 1
        return count

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.graph.snapshot(directory / "graph.snapshot")
        self.profiles.save(directory / "profiles.jsonl")
        self.cache.save(directory / "profile_cache.jsonl")
