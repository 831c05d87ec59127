"""User profiles: questionnaire scoring, creation, and online refinement."""

from __future__ import annotations

import dataclasses
import json
import threading
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .enrichment import VARK_LETTERS, VarkVector
from .errors import DimensionMismatch, DuplicateUser, InvalidAnswerCount, UnknownUser
from .graph import (Edge, EdgeType, GraphDelta, KnowledgeGraph, Node, NodeType,
                    goal_node_id, user_node_id, vark_node_id)

QUESTIONNAIRE_LENGTH = 16


class Goal(str, Enum):
    PURCHASE = "PURCHASE"
    ENTERTAINMENT = "ENTERTAINMENT"
    RESEARCH = "RESEARCH"
    LEARNING = "LEARNING"


@dataclass
class Demographics:
    age_bracket: str = ""
    gender: str = ""
    occupation: str = ""

    def text(self) -> str:
        return " ".join(p for p in (self.age_bracket, self.gender, self.occupation) if p)


@dataclass
class UserProfile:
    user_id: str
    demographics: Demographics
    goal: Goal
    vark: VarkVector
    embedding: np.ndarray
    drift_history: list[VarkVector] = field(default_factory=list)

    def validate(self) -> None:
        if not isinstance(self.goal, Goal):
            raise ValueError(f"goal must be one of {[g.value for g in Goal]}")
        self.vark.validate()
        norm = float(np.linalg.norm(self.embedding))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"user embedding must be unit length, norm={norm}")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "demographics": dataclasses.asdict(self.demographics),
            "goal": self.goal.value,
            "vark": self.vark.as_dict(),
            "embedding": [float(x) for x in self.embedding],
            "drift_history": [v.as_dict() for v in self.drift_history],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UserProfile":
        return cls(
            user_id=data["user_id"],
            demographics=Demographics(**data["demographics"]),
            goal=Goal(data["goal"]),
            vark=VarkVector(**data["vark"]),
            embedding=np.array(data["embedding"], dtype=np.float32),
            drift_history=[VarkVector(**v) for v in data["drift_history"]],
        )


def score_questionnaire(answers: Sequence[str]) -> VarkVector:
    """Letter counts over the 16 answers, divided by 16."""
    if len(answers) != QUESTIONNAIRE_LENGTH:
        raise InvalidAnswerCount(f"expected {QUESTIONNAIRE_LENGTH} answers, got {len(answers)}")
    counts = {letter: 0 for letter in VARK_LETTERS}
    for ans in answers:
        letter = str(ans).strip().lower()
        if letter not in counts:
            raise InvalidAnswerCount(f"answers must be one of V/A/R/K, got {ans!r}")
        counts[letter] += 1
    return VarkVector(*(counts[l] / QUESTIONNAIRE_LENGTH for l in VARK_LETTERS))


def load_questionnaire(path: str | Path | None = None) -> list[tuple[str, list[tuple[str, str]]]]:
    """Questionnaire definition: one line per question, TAB-separated options
    tagged V/A/R/K."""
    if path is None:
        text = resources.files("cogrec").joinpath("data/vark_questionnaire.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    questions = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(f"questionnaire line needs 5 tab-separated fields: {line!r}")
        options = []
        for opt in parts[1:]:
            letter, _, optext = opt.partition(":")
            letter = letter.strip().lower()
            if letter not in VARK_LETTERS:
                raise ValueError(f"option must be tagged V/A/R/K: {opt!r}")
            options.append((letter, optext.strip()))
        questions.append((parts[0].strip(), options))
    if len(questions) != QUESTIONNAIRE_LENGTH:
        raise ValueError(f"questionnaire must define {QUESTIONNAIRE_LENGTH} questions")
    return questions


def create_user(user_id: str, demographics: Demographics, goal: Goal,
                vark: VarkVector, seed: int, graph: KnowledgeGraph
                ) -> tuple[UserProfile, GraphDelta]:
    """Create the profile and its graph footprint.

    The embedding is a seeded standard normal draw, L2-normalized; the graph
    gains the USER node, a HAS_GOAL edge, and PREFERS edges to the four
    style-preference nodes weighted by the vark components.
    """
    vark.validate()
    nid = user_node_id(user_id)
    if graph.has_node(nid):
        raise DuplicateUser(user_id)
    rng = np.random.default_rng(seed)
    emb = rng.standard_normal(graph.dim).astype(np.float32)
    norm = float(np.linalg.norm(emb))
    if norm > 0.0:
        emb = emb / norm
    profile = UserProfile(user_id=user_id, demographics=demographics, goal=goal,
                          vark=vark, embedding=emb, drift_history=[vark])
    profile.validate()

    delta = GraphDelta()
    gid = goal_node_id(goal.value)
    if not graph.has_node(gid):
        sub = graph.add_node(Node(gid, NodeType.GOAL, name=goal.value.lower(),
                                  description=f"{goal.value.lower()} goal"))
        delta.added_nodes.extend(sub.added_nodes)
    for letter in VARK_LETTERS:
        vid = vark_node_id(letter)
        if not graph.has_node(vid):
            sub = graph.add_node(Node(vid, NodeType.VARK_PREF, name=letter,
                                      description=f"{letter} style preference"))
            delta.added_nodes.extend(sub.added_nodes)
    sub = graph.add_node(Node(nid, NodeType.USER, name=user_id,
                              description=demographics.text(),
                              embedding=emb.copy()))
    delta.added_nodes.extend(sub.added_nodes)
    sub = graph.add_edge(Edge(nid, gid, EdgeType.HAS_GOAL, weight=1.0))
    delta.added_edges.extend(sub.added_edges)
    for letter, weight in zip(VARK_LETTERS, vark.as_tuple()):
        sub = graph.add_edge(Edge(nid, vark_node_id(letter), EdgeType.PREFERS,
                                  weight=weight))
        delta.added_edges.extend(sub.added_edges)
    return profile, delta


def update_embedding(profile: UserProfile, item_embedding: np.ndarray,
                     signal: float, rate: float) -> UserProfile:
    """e' = normalize((1-rate) * e + rate * signal * e_item).

    A zero blend (possible when signal opposes the profile exactly) leaves
    the embedding unchanged.
    """
    if not -1.0 <= signal <= 1.0:
        raise ValueError("signal must be in [-1, 1]")
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must be in (0, 1)")
    item_emb = np.asarray(item_embedding, dtype=np.float32)
    if item_emb.shape != profile.embedding.shape:
        raise DimensionMismatch(
            f"item embedding shape {item_emb.shape} != user {profile.embedding.shape}")
    blend = (1.0 - rate) * profile.embedding + rate * signal * item_emb
    norm = float(np.linalg.norm(blend))
    if norm == 0.0:
        return profile
    return dataclasses.replace(profile, embedding=(blend / norm).astype(np.float32))


def refine_vark(vark: VarkVector, engagement: Sequence[float], rate: float) -> VarkVector:
    """Drift the style vector toward observed per-channel engagement.

    All-zero engagement means no evidence; the vector is returned unchanged.
    """
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must be in (0, 1)")
    eng = [float(e) for e in engagement]
    if len(eng) != 4:
        raise ValueError("engagement must have four components")
    if any(e < 0.0 or e > 1.0 for e in eng):
        raise ValueError("engagement components must be in [0, 1]")
    if all(e == 0.0 for e in eng):
        return vark
    blended = [(1.0 - rate) * c + rate * e for c, e in zip(vark.as_tuple(), eng)]
    return VarkVector.from_weights(blended)


class ProfileStore:
    """In-memory profile map with per-user write serialization and a JSONL
    sidecar for persistence alongside graph snapshots."""

    def __init__(self) -> None:
        self._profiles: dict[str, UserProfile] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._mutex = threading.Lock()

    def __contains__(self, user_id: str) -> bool:
        with self._mutex:
            return user_id in self._profiles

    def __len__(self) -> int:
        with self._mutex:
            return len(self._profiles)

    def user_lock(self, user_id: str) -> threading.Lock:
        with self._mutex:
            return self._locks.setdefault(user_id, threading.Lock())

    def get(self, user_id: str) -> UserProfile:
        with self._mutex:
            profile = self._profiles.get(user_id)
        if profile is None:
            raise UnknownUser(user_id)
        return profile

    def put(self, profile: UserProfile) -> None:
        with self._mutex:
            self._profiles[profile.user_id] = profile

    def user_ids(self) -> list[str]:
        with self._mutex:
            return sorted(self._profiles)

    def save(self, path: str | Path) -> None:
        with self._mutex:
            profiles = [self._profiles[uid] for uid in sorted(self._profiles)]
        with open(path, "w", encoding="utf-8") as fh:
            for profile in profiles:
                fh.write(json.dumps(profile.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ProfileStore":
        store = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    store.put(UserProfile.from_dict(json.loads(line)))
        return store
