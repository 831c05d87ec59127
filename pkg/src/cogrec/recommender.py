"""Candidate generation and hybrid ranking.

Three retrieval strategies feed a deduplicated pool (semantic neighbors of
the user embedding, items attached to the user's preferred entities, and
style-aligned items), a cognitive complexity filter prunes it, and either a
generation provider or a deterministic feature ranker orders the survivors.

Pool entries carry all four feature columns for every member: semantic and
style scores are intrinsic so they are filled for each pooled item; entity
and collaborative scores are genuinely 0 when the graph holds no evidence.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cognition import CognitiveState, SessionContext, complexity_band, estimate_state
from .config import EngineConfig
from .embedding import tokenize
from .errors import EmptyCatalog, ParseError, ProviderError
from .graph import EdgeType, KnowledgeGraph, NodeType, user_node_id
from .profiling import UserProfile
from .providers import GenerationProvider

log = logging.getLogger(__name__)

STRATEGY_NAMES = ("semantic", "entity", "vark")


@dataclass
class CandidateEntry:
    node_id: str
    semantic: float = 0.0
    entity: float = 0.0
    vark: float = 0.0
    cf: float = 0.0


@dataclass
class CandidatePool:
    entries: list[CandidateEntry]
    provenance: set[str] = field(default_factory=set)
    flags: set[str] = field(default_factory=set)

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> list[str]:
        return [e.node_id for e in self.entries]

    def get(self, node_id: str) -> Optional[CandidateEntry]:
        for entry in self.entries:
            if entry.node_id == node_id:
                return entry
        return None

    def combined_scores(self) -> dict[str, float]:
        """Sum of the four per-strategy columns, each min-max scaled in-pool."""
        if not self.entries:
            return {}
        columns = {}
        for name in ("semantic", "entity", "vark", "cf"):
            values = [getattr(e, name) for e in self.entries]
            lo, hi = min(values), max(values)
            span = hi - lo
            columns[name] = [0.0 if span == 0.0 else (v - lo) / span for v in values]
        return {
            entry.node_id: sum(columns[name][i] for name in columns)
            for i, entry in enumerate(self.entries)
        }

    def combined_order(self) -> list[str]:
        scores = self.combined_scores()
        return sorted(scores, key=lambda nid: (-scores[nid], nid))


@dataclass
class RankedItem:
    node_id: str
    score: float
    justification: Optional[str] = None
    serendipity: bool = False


@dataclass
class RankedList:
    items: list[RankedItem]
    warnings: list[str] = field(default_factory=list)
    replaced: list[tuple[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def ids(self) -> list[str]:
        return [it.node_id for it in self.items]


def item_text(graph: KnowledgeGraph, node_id: str) -> str:
    node = graph.node(node_id)
    parts = [node.attributes.get("title") or node.name]
    profile = node.attributes.get("profile")
    if profile:
        parts.extend(e["name"] for e in profile.get("entities", []))
    return " ".join(parts)


def user_text(profile: UserProfile) -> str:
    return f"{profile.demographics.text()} {profile.goal.value.lower()}".strip()


def preferred_entity_names(graph: KnowledgeGraph, profile: UserProfile) -> list[str]:
    """Entities the user is linked to: PREFERS edges plus goal-adjacent ones."""
    names: list[str] = []
    unid = user_node_id(profile.user_id)
    if graph.has_node(unid):
        for edge in graph.out_edges(unid, EdgeType.PREFERS):
            node = graph.node(edge.target)
            if node.node_type is NodeType.ENTITY:
                names.append(node.name)
        for goal_edge in graph.out_edges(unid, EdgeType.HAS_GOAL):
            for edge in graph.out_edges(goal_edge.target, EdgeType.RELATED_TO):
                node = graph.node(edge.target)
                if node.node_type is NodeType.ENTITY:
                    names.append(node.name)
    return names


def _cf_score(graph: KnowledgeGraph, user_nid: str, candidate: str) -> float:
    """Item-based collaborative signal through SIMILAR_TO edges; 0 when the
    user has no interactions."""
    total = 0.0
    if not graph.has_node(user_nid):
        return 0.0
    for edge in graph.out_edges(user_nid, EdgeType.INTERACTED):
        sim = graph.edge_weight(edge.target, candidate, EdgeType.SIMILAR_TO)
        if sim is not None:
            total += edge.weight * sim
    return total


def generate_candidates(profile: UserProfile, state: CognitiveState,
                        graph: KnowledgeGraph,
                        sizes: tuple[int, int, int] = (300, 500, 400),
                        cap: int = 1000) -> CandidatePool:
    """Union of the three retrieval strategies, cognitively filtered, capped.

    An empty post-filter pool relaxes the band back to [1, 5] and flags the
    pool EmptyAfterFilter rather than returning nothing.
    """
    item_ids = graph.item_ids()
    if not item_ids:
        raise EmptyCatalog("graph holds no items")
    n_sem, n_ent, n_vark = sizes
    merged: dict[str, CandidateEntry] = {}
    provenance: set[str] = set()

    def entry(nid: str) -> CandidateEntry:
        if nid not in merged:
            merged[nid] = CandidateEntry(node_id=nid)
        return merged[nid]

    if n_sem > 0:
        for nid, sim in graph.knn_items(profile.embedding, k=n_sem):
            e = entry(nid)
            e.semantic = max(e.semantic, sim)
            provenance.add("semantic")

    if n_ent > 0:
        names = preferred_entity_names(graph, profile)
        if names:
            for nid, score in graph.items_for_entities(names, limit=n_ent):
                e = entry(nid)
                e.entity = max(e.entity, score)
                provenance.add("entity")

    user_vark = profile.vark.as_array()
    feat_ids, vark_matrix, complexity_arr = graph.item_features()
    vark_scores = vark_matrix @ user_vark
    id_to_pos = {nid: i for i, nid in enumerate(feat_ids)}
    if n_vark > 0:
        order = sorted(range(len(feat_ids)),
                       key=lambda i: (-float(vark_scores[i]), feat_ids[i]))
        for i in order[:n_vark]:
            entry(feat_ids[i])
            provenance.add("vark")

    # intrinsic feature columns are filled for every pooled member
    pooled = sorted(merged)
    for nid, sim in graph.cosine_scores(profile.embedding, pooled).items():
        merged[nid].semantic = max(merged[nid].semantic, sim)
    for nid in pooled:
        merged[nid].vark = float(vark_scores[id_to_pos[nid]])
    unid = user_node_id(profile.user_id)
    if graph.has_node(unid) and graph.out_edges(unid, EdgeType.INTERACTED):
        for nid in pooled:
            merged[nid].cf = _cf_score(graph, unid, nid)

    flags: set[str] = set()
    lo, hi = complexity_band(state)
    kept = [e for e in merged.values()
            if lo <= int(complexity_arr[id_to_pos[e.node_id]]) <= hi]
    if not kept:
        flags.add("EmptyAfterFilter")
        log.warning("cognitive filter band (%d, %d) emptied the pool; relaxed to [1, 5]", lo, hi)
        kept = list(merged.values())

    kept.sort(key=lambda e: e.node_id)
    pool = CandidatePool(entries=kept, provenance=provenance, flags=flags)
    if len(pool) > cap:
        combined = pool.combined_scores()
        keep_ids = set(sorted(combined, key=lambda nid: (-combined[nid], nid))[:cap])
        pool.entries = [e for e in pool.entries if e.node_id in keep_ids]
    return pool


# ---------------------------------------------------------------------------
# deterministic feature ranking


def tfidf_similarity(query: str, documents: list[str]) -> list[float]:
    """Cosine over smoothed tf-idf vectors; corpus = documents + query."""
    doc_tokens = [tokenize(d) for d in documents]
    query_tokens = tokenize(query)
    n_docs = len(documents) + 1
    df: Counter = Counter()
    for tokens in doc_tokens:
        df.update(set(tokens))
    df.update(set(query_tokens))

    def vector(tokens: list[str]) -> dict[str, float]:
        tf = Counter(tokens)
        vec = {t: count * (math.log((1 + n_docs) / (1 + df[t])) + 1.0)
               for t, count in tf.items()}
        norm = math.sqrt(sum(v * v for v in vec.values()))
        if norm > 0.0:
            vec = {t: v / norm for t, v in vec.items()}
        return vec

    qvec = vector(query_tokens)
    sims = []
    for tokens in doc_tokens:
        dvec = vector(tokens)
        sims.append(sum(qvec.get(t, 0.0) * v for t, v in dvec.items()))
    return sims


def _minmax(values: list[float]) -> list[float]:
    lo, hi = min(values), max(values)
    span = hi - lo
    return [0.0 if span == 0.0 else (v - lo) / span for v in values]


def rank_fallback(pool: CandidatePool, profile: UserProfile, state: CognitiveState,
                  K: int, *, graph: KnowledgeGraph,
                  weights: tuple[float, float, float, float] = (0.3, 0.3, 0.3, 0.1)
                  ) -> RankedList:
    """Deterministic learned-feature ranking.

    score = w1*tfidf(user text, item text) + w2*graph score + w3*style dot
    + w4*collaborative score. Graph and collaborative columns are min-max
    scaled within the pool; tfidf and style dots are already in [0, 1].
    """
    if not pool.entries:
        raise EmptyCatalog("cannot rank an empty pool")
    w1, w2, w3, w4 = weights
    texts = [item_text(graph, e.node_id) for e in pool.entries]
    tfidf = tfidf_similarity(user_text(profile), texts)
    graph_scores = _minmax([e.entity for e in pool.entries])
    cf_scores = _minmax([e.cf for e in pool.entries])
    scored = []
    for i, e in enumerate(pool.entries):
        score = (w1 * tfidf[i] + w2 * graph_scores[i] + w3 * e.vark + w4 * cf_scores[i])
        scored.append((score, e.node_id))
    scored.sort(key=lambda t: (-t[0], t[1]))
    top = scored[:min(K, len(scored))]
    return RankedList(items=[RankedItem(node_id=nid, score=score) for score, nid in top])


# ---------------------------------------------------------------------------
# provider ranking

RANKING_CRITERIA = (
    "relevance to the user's goal",
    "alignment with the user's V/A/R/K style",
    "complexity appropriate to the user's current capacity",
    "diversity across the list",
    "serendipity potential",
)

_RANK_LINE_RE = re.compile(r"^\s*\d+[.)]\s*(\S+)\s*(?:[-–:|]\s*(.*))?$")


def build_ranking_prompt(pool: CandidatePool, profile: UserProfile,
                         state: CognitiveState, graph: KnowledgeGraph,
                         K: int, budget: int, order: list[str]) -> str:
    lines = [
        "Rank the candidate items for this user.",
        f"User: {user_text(profile)}",
        f"Style weights: V={profile.vark.v:.2f} A={profile.vark.a:.2f} "
        f"R={profile.vark.r:.2f} K={profile.vark.k:.2f}",
        f"Cognitive state: capacity={state.capacity:.2f} attention={state.attention:.2f} "
        f"complexity_pref={state.complexity_pref:.2f}",
        "",
        "Candidates:",
    ]
    for nid in order[:budget]:
        node = graph.node(nid)
        raw_id = node.attributes.get("item_id", nid)
        vark = node.attributes.get("vark_alignment", [0.25] * 4)
        profile_dict = node.attributes.get("profile") or {}
        entities = ", ".join(e["name"] for e in profile_dict.get("entities", [])[:6])
        lines.append(f"{raw_id} | {node.attributes.get('title') or node.name} | "
                     f"complexity={node.attributes.get('complexity', 3)} | "
                     f"vark=V{vark[0]:.2f}/A{vark[1]:.2f}/R{vark[2]:.2f}/K{vark[3]:.2f} | "
                     f"entities: {entities}")
    lines.append("")
    lines.append("Criteria: " + "; ".join(RANKING_CRITERIA) + ".")
    lines.append(f"Respond with the top {K} as a numbered list, one per line:")
    lines.append("rank. item_id - justification")
    return "\n".join(lines)


def rank_with_provider(pool: CandidatePool, profile: UserProfile,
                       state: CognitiveState, provider: GenerationProvider, K: int,
                       *, graph: KnowledgeGraph, budget: int = 50,
                       weights: tuple[float, float, float, float] = (0.3, 0.3, 0.3, 0.1),
                       temperature: float = 0.7, max_tokens: int = 500) -> RankedList:
    """Provider-ordered ranking completed by the deterministic fallback.

    Items the provider omits are appended in fallback order; ids outside the
    pool are ignored and recorded as warnings. Raises ParseError when the
    response contains no usable ids at all.
    """
    if not pool.entries:
        raise EmptyCatalog("cannot rank an empty pool")
    if K < 1:
        raise ValueError("K must be >= 1")
    fallback = rank_fallback(pool, profile, state, K=len(pool), graph=graph,
                             weights=weights)
    fallback_order = fallback.ids()

    id_lookup: dict[str, str] = {}
    for e in pool.entries:
        id_lookup[e.node_id] = e.node_id
        raw = graph.node(e.node_id).attributes.get("item_id")
        if raw is not None:
            id_lookup.setdefault(str(raw), e.node_id)

    prompt = build_ranking_prompt(pool, profile, state, graph, K=K, budget=budget,
                                  order=fallback_order)
    text = provider.generate(prompt, temperature=temperature, max_tokens=max_tokens)

    warnings: list[str] = []
    picked: list[str] = []
    justifications: dict[str, str] = {}
    seen: set[str] = set()
    for line in text.splitlines():
        m = _RANK_LINE_RE.match(line)
        if not m:
            continue
        raw_id = m.group(1).strip().rstrip(".,;")
        nid = id_lookup.get(raw_id)
        if nid is None:
            warnings.append(f"ranked id not in pool: {raw_id!r}")
            log.warning("provider ranked an id outside the pool: %r", raw_id)
            continue
        if nid in seen:
            continue
        seen.add(nid)
        picked.append(nid)
        if m.group(2):
            justifications[nid] = m.group(2).strip()
    if not picked:
        raise ParseError("provider response contained no pool item ids")

    ordered = picked + [nid for nid in fallback_order if nid not in seen]
    length = min(K, len(pool))
    ordered = ordered[:length]
    items = [RankedItem(node_id=nid, score=float(length - i) / length,
                        justification=justifications.get(nid))
             for i, nid in enumerate(ordered)]
    return RankedList(items=items, warnings=warnings)


def recommend(profile: UserProfile, ctx: SessionContext, graph: KnowledgeGraph,
              provider: Optional[GenerationProvider] = None, K: int = 10,
              *, config: Optional[EngineConfig] = None) -> RankedList:
    """Full retrieval-plus-ranking pass for one session.

    With no provider (or a failing one) the deterministic fallback ranking is
    used, so the call never blocks on provider availability.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    cfg = config or EngineConfig()
    state = estimate_state(ctx, profile.vark, cfg.cognition)
    pool = generate_candidates(profile, state, graph, sizes=cfg.pool_sizes,
                               cap=cfg.pool_cap)
    if provider is not None:
        try:
            return rank_with_provider(pool, profile, state, provider, K,
                                      graph=graph, budget=cfg.prompt_candidate_budget,
                                      weights=cfg.fallback_weights,
                                      temperature=cfg.temperature)
        except (ProviderError, ParseError) as exc:
            log.warning("provider ranking failed (%s); using fallback ranking", exc)
    return rank_fallback(pool, profile, state, K, graph=graph,
                         weights=cfg.fallback_weights)
