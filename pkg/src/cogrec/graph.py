"""Embedded multi-relational graph store.

Five node types, eight edge types, per-node embeddings, an exact-cosine
vector scan over item nodes, and a token index over names/descriptions. No
external database processes: 3,706 catalog items make exact scans affordable
and exactly testable. Snapshots are a versioned binary format with
length-prefixed records and little-endian float32 embeddings.

Concurrency contract: many readers or one writer; mutations are applied
atomically under the write lock and the item-vector matrix is refreshed
incrementally there too.
"""

from __future__ import annotations

import json
import struct
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from .embedding import tokenize
from .enrichment import SemanticProfile, normalize_name
from .errors import DimensionMismatch, FormatError, UnknownNode

_SNAPSHOT_MAGIC = b"KGSNAP01"


class NodeType(str, Enum):
    ITEM = "ITEM"
    ENTITY = "ENTITY"
    USER = "USER"
    VARK_PREF = "VARK_PREF"
    GOAL = "GOAL"


class EdgeType(str, Enum):
    HAS_GENRE = "HAS_GENRE"
    MENTIONS = "MENTIONS"
    RELATED_TO = "RELATED_TO"
    PREREQUISITE_OF = "PREREQUISITE_OF"
    SIMILAR_TO = "SIMILAR_TO"
    INTERACTED = "INTERACTED"
    PREFERS = "PREFERS"
    HAS_GOAL = "HAS_GOAL"


# item -> entity edge types carried by semantic profiles
_CONTENT_EDGE_TYPES = (EdgeType.HAS_GENRE, EdgeType.MENTIONS,
                       EdgeType.RELATED_TO, EdgeType.PREREQUISITE_OF)

EdgeKey = tuple[str, str, EdgeType]


@dataclass
class Node:
    node_id: str
    node_type: NodeType
    name: str
    description: str = ""
    embedding: Optional[np.ndarray] = None
    attributes: dict = field(default_factory=dict)


@dataclass
class Edge:
    source: str
    target: str
    edge_type: EdgeType
    description: str = ""
    weight: float = 1.0

    def key(self) -> EdgeKey:
        return (self.source, self.target, self.edge_type)


@dataclass
class GraphDelta:
    """Audit record of one atomic mutation."""

    added_nodes: list[str] = field(default_factory=list)
    added_edges: list[EdgeKey] = field(default_factory=list)
    updated_weights: dict[EdgeKey, tuple[float, float]] = field(default_factory=dict)

    def empty(self) -> bool:
        return not (self.added_nodes or self.added_edges or self.updated_weights)


class _RWLock:
    """Many readers / single writer."""

    def __init__(self) -> None:
        self._readers = 0
        self._mutex = threading.Lock()
        self._writer = threading.Lock()

    @contextmanager
    def read(self):
        with self._mutex:
            self._readers += 1
            if self._readers == 1:
                self._writer.acquire()
        try:
            yield
        finally:
            with self._mutex:
                self._readers -= 1
                if self._readers == 0:
                    self._writer.release()

    @contextmanager
    def write(self):
        with self._writer:
            yield


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def item_node_id(item_id: str) -> str:
    return f"item:{item_id}"


def entity_node_id(name: str) -> str:
    return f"entity:{normalize_name(name)}"


def user_node_id(user_id: str) -> str:
    return f"user:{user_id}"


def goal_node_id(goal: str) -> str:
    return f"goal:{str(goal).lower()}"


def vark_node_id(letter: str) -> str:
    return f"vark:{letter.lower()}"


class KnowledgeGraph:
    def __init__(self, dim: int, eta: float = 0.1):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.eta = eta
        self._nodes: dict[str, Node] = {}
        self._edges: dict[EdgeKey, Edge] = {}
        self._out: dict[str, set[EdgeKey]] = {}
        self._in: dict[str, set[EdgeKey]] = {}
        self._entity_ids: set[str] = set()
        self._item_ids: list[str] = []        # ascending node_id
        self._item_matrix: Optional[np.ndarray] = None  # unit rows, item order
        self._item_pos: dict[str, int] = {}
        self._item_features: Optional[tuple] = None
        self._token_index: dict[str, set[str]] = {}
        self._lock = _RWLock()

    # -- unlocked internals ------------------------------------------------

    def _check_dim(self, vec: np.ndarray) -> np.ndarray:
        arr = np.asarray(vec, dtype=np.float32)
        if arr.shape != (self.dim,):
            raise DimensionMismatch(f"expected dim {self.dim}, got shape {arr.shape}")
        return arr

    def _add_node(self, node: Node, delta: GraphDelta) -> None:
        existing = self._nodes.get(node.node_id)
        if existing is None:
            delta.added_nodes.append(node.node_id)
        self._nodes[node.node_id] = node
        self._out.setdefault(node.node_id, set())
        self._in.setdefault(node.node_id, set())
        if node.node_type is NodeType.ENTITY:
            self._entity_ids.add(node.node_id)
        if node.node_type is NodeType.ITEM and existing is None:
            # keep insertion ordered by node_id for deterministic scans
            import bisect
            bisect.insort(self._item_ids, node.node_id)
        for token in tokenize(f"{node.name} {node.description}"):
            self._token_index.setdefault(token, set()).add(node.node_id)
        if node.node_type is NodeType.ITEM:
            self._item_matrix = None
            self._item_features = None

    def _set_edge(self, edge: Edge, delta: GraphDelta) -> None:
        if edge.source not in self._nodes or edge.target not in self._nodes:
            raise UnknownNode(f"edge endpoints must exist: {edge.key()}")
        edge.weight = _clamp01(edge.weight)
        key = edge.key()
        existing = self._edges.get(key)
        if existing is None:
            self._edges[key] = edge
            self._out[edge.source].add(key)
            self._in[edge.target].add(key)
            delta.added_edges.append(key)
        elif existing.weight != edge.weight or existing.description != edge.description:
            old = existing.weight
            existing.weight = edge.weight
            existing.description = edge.description
            if old != edge.weight:
                delta.updated_weights[key] = (old, edge.weight)

    def _drop_edge(self, key: EdgeKey) -> None:
        edge = self._edges.pop(key, None)
        if edge is not None:
            self._out[edge.source].discard(key)
            self._in[edge.target].discard(key)

    def _adjust_edge(self, source: str, target: str, edge_type: EdgeType,
                     step: float, create_base: float, delta: GraphDelta) -> None:
        key = (source, target, edge_type)
        existing = self._edges.get(key)
        if existing is None:
            self._set_edge(Edge(source, target, edge_type,
                                weight=_clamp01(create_base + step)), delta)
        else:
            old = existing.weight
            new = _clamp01(old + step)
            if new != old:
                existing.weight = new
                delta.updated_weights[key] = (old, new)

    def _item_entity_neighbors(self, item_nid: str) -> set[str]:
        out = set()
        for key in self._out.get(item_nid, ()):
            edge = self._edges[key]
            if edge.edge_type in _CONTENT_EDGE_TYPES and edge.target in self._entity_ids:
                out.add(edge.target)
        return out

    def _matrix(self) -> np.ndarray:
        # float64 rows so the exact-scan contract is bit-stable against a
        # per-row dot-product oracle
        if self._item_matrix is None:
            rows = np.zeros((len(self._item_ids), self.dim), dtype=np.float64)
            for i, nid in enumerate(self._item_ids):
                emb = self._nodes[nid].embedding
                if emb is None:
                    continue
                row = np.asarray(emb, dtype=np.float64)
                norm = float(np.linalg.norm(row))
                if norm > 0.0:
                    rows[i] = row / norm
            self._item_matrix = rows
            self._item_pos = {nid: i for i, nid in enumerate(self._item_ids)}
        return self._item_matrix

    # -- accessors ----------------------------------------------------------

    def node(self, node_id: str) -> Node:
        with self._lock.read():
            node = self._nodes.get(node_id)
            if node is None:
                raise UnknownNode(node_id)
            return node

    def has_node(self, node_id: str) -> bool:
        with self._lock.read():
            return node_id in self._nodes

    def edge(self, source: str, target: str, edge_type: EdgeType) -> Edge:
        with self._lock.read():
            edge = self._edges.get((source, target, edge_type))
            if edge is None:
                raise UnknownNode(f"no edge {(source, target, edge_type)}")
            return edge

    def edge_weight(self, source: str, target: str, edge_type: EdgeType) -> Optional[float]:
        with self._lock.read():
            edge = self._edges.get((source, target, edge_type))
            return None if edge is None else edge.weight

    def out_edges(self, node_id: str, edge_type: Optional[EdgeType] = None) -> list[Edge]:
        with self._lock.read():
            keys = self._out.get(node_id, set())
            edges = [self._edges[k] for k in sorted(keys)]
            if edge_type is not None:
                edges = [e for e in edges if e.edge_type is edge_type]
            return edges

    def in_edges(self, node_id: str, edge_type: Optional[EdgeType] = None) -> list[Edge]:
        with self._lock.read():
            keys = self._in.get(node_id, set())
            edges = [self._edges[k] for k in sorted(keys)]
            if edge_type is not None:
                edges = [e for e in edges if e.edge_type is edge_type]
            return edges

    def node_count(self, node_type: Optional[NodeType] = None) -> int:
        with self._lock.read():
            if node_type is None:
                return len(self._nodes)
            return sum(1 for n in self._nodes.values() if n.node_type is node_type)

    def edge_count(self, edge_type: Optional[EdgeType] = None) -> int:
        with self._lock.read():
            if edge_type is None:
                return len(self._edges)
            return sum(1 for e in self._edges.values() if e.edge_type is edge_type)

    def item_ids(self) -> list[str]:
        with self._lock.read():
            return list(self._item_ids)

    def item_profile(self, item_nid: str) -> Optional[SemanticProfile]:
        node = self.node(item_nid)
        raw = node.attributes.get("profile")
        return SemanticProfile.from_dict(raw) if raw else None

    def all_edges(self) -> list[Edge]:
        with self._lock.read():
            return [self._edges[k] for k in sorted(self._edges)]

    def text_search(self, query: str, limit: int = 10) -> list[str]:
        """Token index over names/descriptions; ranked by matched-token count."""
        tokens = tokenize(query)
        with self._lock.read():
            hits: dict[str, int] = {}
            for token in tokens:
                for nid in self._token_index.get(token, ()):
                    hits[nid] = hits.get(nid, 0) + 1
            ranked = sorted(hits.items(), key=lambda kv: (-kv[1], kv[0]))
            return [nid for nid, _ in ranked[:limit]]

    # -- construction --------------------------------------------------------

    def add_node(self, node: Node) -> GraphDelta:
        delta = GraphDelta()
        with self._lock.write():
            if node.embedding is not None:
                node.embedding = self._check_dim(node.embedding)
            else:
                node.embedding = np.zeros(self.dim, dtype=np.float32)
            self._add_node(node, delta)
        return delta

    def add_edge(self, edge: Edge) -> GraphDelta:
        delta = GraphDelta()
        with self._lock.write():
            self._set_edge(edge, delta)
        return delta

    def upsert_item(self, profile: SemanticProfile,
                    embed: Callable[[str], np.ndarray]) -> str:
        """Create/refresh the ITEM node, its entity nodes and content edges.

        Entity nodes are linked (never duplicated) by normalized name. The
        item embedding is embed(title + entity names). Re-upserting the same
        profile leaves the graph unchanged.
        """
        profile.validate()
        nid = item_node_id(profile.item_id)
        item_text = " ".join([profile.title] + profile.entity_names()).strip()
        item_emb = self._check_dim(embed(item_text))
        delta = GraphDelta()
        with self._lock.write():
            self._add_node(Node(
                node_id=nid,
                node_type=NodeType.ITEM,
                name=profile.title or str(profile.item_id),
                description=f"complexity {profile.complexity}",
                embedding=item_emb,
                attributes={
                    "item_id": str(profile.item_id),
                    "title": profile.title,
                    "complexity": profile.complexity,
                    "vark_alignment": list(profile.vark_alignment.as_tuple()),
                    "profile": profile.to_dict(),
                },
            ), delta)
            self._item_matrix = None

            name_to_nid: dict[str, str] = {}
            for ent in profile.entities:
                enid = entity_node_id(ent.name)
                name_to_nid[normalize_name(ent.name)] = enid
                if enid not in self._nodes:
                    emb = ent.embedding
                    if emb is None:
                        emb = embed(f"{ent.name} {ent.kind} {ent.description}".strip())
                    self._add_node(Node(
                        node_id=enid, node_type=NodeType.ENTITY, name=ent.name,
                        description=ent.description,
                        embedding=self._check_dim(emb),
                        attributes={"kind": ent.kind},
                    ), delta)

            # refresh content edges from the profile: drop stale ones first
            for key in list(self._out.get(nid, ())):
                if self._edges[key].edge_type in _CONTENT_EDGE_TYPES:
                    self._drop_edge(key)

            self_names = {normalize_name(str(profile.item_id)),
                          normalize_name(profile.title), "item"}
            linked: set[str] = set()
            for rel in profile.relations:
                sub_norm = normalize_name(rel.subject)
                obj_norm = normalize_name(rel.object)
                try:
                    etype = EdgeType(rel.predicate.strip().upper().replace(" ", "_"))
                except ValueError:
                    etype = EdgeType.RELATED_TO
                if etype not in _CONTENT_EDGE_TYPES:
                    etype = EdgeType.RELATED_TO
                if sub_norm in self_names and obj_norm in name_to_nid:
                    target = name_to_nid[obj_norm]
                    self._set_edge(Edge(nid, target, etype, description=rel.predicate,
                                        weight=rel.confidence), delta)
                    linked.add(target)
                elif sub_norm in name_to_nid and obj_norm in name_to_nid:
                    self._set_edge(Edge(name_to_nid[sub_norm], name_to_nid[obj_norm],
                                        etype, description=rel.predicate,
                                        weight=rel.confidence), delta)
            # profile entities the relations never mentioned still get linked
            for ent in profile.entities:
                target = name_to_nid[normalize_name(ent.name)]
                if target not in linked and (nid, target, EdgeType.MENTIONS) not in self._edges:
                    self._set_edge(Edge(nid, target, EdgeType.MENTIONS, weight=1.0), delta)
        return nid

    def infer_implicit_edges(self, max_hops: int = 2, min_shared: int = 1) -> GraphDelta:
        """Add SIMILAR_TO edges between items sharing entity neighbors.

        Weight is the Jaccard overlap of the two entity-neighbor sets;
        symmetric, never self-edges. Idempotent: a second run adds nothing.
        """
        if max_hops < 2:
            raise ValueError("max_hops must be >= 2")
        delta = GraphDelta()
        with self._lock.write():
            neighbor_sets = {nid: self._item_entity_neighbors(nid)
                             for nid in self._item_ids}
            by_entity: dict[str, list[str]] = {}
            for nid, ents in neighbor_sets.items():
                for ent in ents:
                    by_entity.setdefault(ent, []).append(nid)
            candidate_pairs: set[tuple[str, str]] = set()
            for members in by_entity.values():
                members.sort()
                for i in range(len(members)):
                    for j in range(i + 1, len(members)):
                        candidate_pairs.add((members[i], members[j]))
            for a, b in sorted(candidate_pairs):
                sa, sb = neighbor_sets[a], neighbor_sets[b]
                shared = len(sa & sb)
                if shared < min_shared:
                    continue
                union = len(sa | sb)
                weight = shared / union if union else 0.0
                for src, dst in ((a, b), (b, a)):
                    key = (src, dst, EdgeType.SIMILAR_TO)
                    existing = self._edges.get(key)
                    if existing is not None and existing.weight == weight:
                        continue
                    self._set_edge(Edge(src, dst, EdgeType.SIMILAR_TO,
                                        description="shared entities",
                                        weight=weight), delta)
        return delta

    # -- retrieval ------------------------------------------------------------

    def knn_items(self, query: np.ndarray, k: int,
                  node_filter: Optional[Callable[[Node], bool]] = None
                  ) -> list[tuple[str, float]]:
        """Exact cosine top-k over item nodes; ties break by ascending node_id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(self._check_dim(query), dtype=np.float64)
        with self._lock.read():
            if not self._item_ids:
                return []
            matrix = self._matrix()
            qnorm = float(np.linalg.norm(q))
            sims = matrix @ (q / qnorm) if qnorm > 0.0 else np.zeros(len(self._item_ids))
            order = list(range(len(self._item_ids)))
            if node_filter is not None:
                order = [i for i in order if node_filter(self._nodes[self._item_ids[i]])]
            order.sort(key=lambda i: (-float(sims[i]), self._item_ids[i]))
            top = order[:k]
            return [(self._item_ids[i], float(sims[i])) for i in top]

    def item_features(self) -> tuple[list[str], np.ndarray, np.ndarray]:
        """(ascending item node ids, Nx4 vark-alignment rows, N complexities)."""
        with self._lock.read():
            if self._item_features is None:
                vark = np.full((len(self._item_ids), 4), 0.25, dtype=np.float64)
                complexity = np.full(len(self._item_ids), 3, dtype=np.int64)
                for i, nid in enumerate(self._item_ids):
                    attrs = self._nodes[nid].attributes
                    if "vark_alignment" in attrs:
                        vark[i] = attrs["vark_alignment"]
                    complexity[i] = int(attrs.get("complexity", 3))
                self._item_features = (list(self._item_ids), vark, complexity)
            return self._item_features

    def cosine_scores(self, query: np.ndarray, node_ids: Iterable[str]) -> dict[str, float]:
        """Cosine similarity of the query against specific item nodes."""
        q = np.asarray(self._check_dim(query), dtype=np.float64)
        with self._lock.read():
            matrix = self._matrix()
            qnorm = float(np.linalg.norm(q))
            if qnorm == 0.0 or not len(self._item_ids):
                return {nid: 0.0 for nid in node_ids if nid in self._item_pos}
            sims = matrix @ (q / qnorm)
            return {nid: float(sims[self._item_pos[nid]])
                    for nid in node_ids if nid in self._item_pos}

    def items_for_entities(self, entity_names: Iterable[str],
                           limit: int = 100) -> list[tuple[str, float]]:
        """Items scored by summed edge weight over the matched entities."""
        if limit < 1:
            raise ValueError("limit must be >= 1")
        with self._lock.read():
            scores: dict[str, float] = {}
            for name in entity_names:
                enid = entity_node_id(name)
                if enid not in self._nodes:
                    continue
                for key in self._in.get(enid, ()):
                    edge = self._edges[key]
                    source = self._nodes.get(edge.source)
                    if source is not None and source.node_type is NodeType.ITEM:
                        scores[edge.source] = scores.get(edge.source, 0.0) + edge.weight
            ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
            return ranked[:limit]

    # -- dynamics ---------------------------------------------------------------

    def apply_interaction(self, user_nid: str, item_nid: str, signal: float) -> GraphDelta:
        """Record an interaction signal in [-1, 1].

        Creates the INTERACTED edge at clamp(0.5 + 0.5*signal) or moves an
        existing one by eta*signal; entity nodes adjacent to the item get
        PREFERS reinforcement from the user by eta/2*signal.
        """
        if not -1.0 <= signal <= 1.0:
            raise ValueError("signal must be in [-1, 1]")
        delta = GraphDelta()
        with self._lock.write():
            user = self._nodes.get(user_nid)
            item = self._nodes.get(item_nid)
            if user is None or item is None:
                raise UnknownNode(f"{user_nid if user is None else item_nid}")
            key = (user_nid, item_nid, EdgeType.INTERACTED)
            existing = self._edges.get(key)
            if existing is None:
                self._set_edge(Edge(user_nid, item_nid, EdgeType.INTERACTED,
                                    weight=_clamp01(0.5 + 0.5 * signal)), delta)
            else:
                old = existing.weight
                new = _clamp01(old + self.eta * signal)
                if new != old:
                    existing.weight = new
                    delta.updated_weights[key] = (old, new)
            step = (self.eta / 2.0) * signal
            for enid in sorted(self._item_entity_neighbors(item_nid)):
                self._adjust_edge(user_nid, enid, EdgeType.PREFERS,
                                  step=step, create_base=0.5, delta=delta)
        return delta

    # -- persistence -------------------------------------------------------------

    def snapshot(self, path: str | Path) -> None:
        """Versioned header, then length-prefixed node and edge records.

        Node record: u32 json length, json (id/type/name/description/
        attributes), then dim little-endian float32 embedding values.
        Edge record: u32 json length, json.
        """
        with self._lock.read():
            nodes = [self._nodes[nid] for nid in sorted(self._nodes)]
            edges = [self._edges[k] for k in sorted(self._edges)]
            with open(path, "wb") as fh:
                fh.write(_SNAPSHOT_MAGIC)
                fh.write(struct.pack("<III", self.dim, len(nodes), len(edges)))
                for node in nodes:
                    header = json.dumps({
                        "node_id": node.node_id,
                        "node_type": node.node_type.value,
                        "name": node.name,
                        "description": node.description,
                        "attributes": node.attributes,
                    }, sort_keys=True).encode("utf-8")
                    fh.write(struct.pack("<I", len(header)))
                    fh.write(header)
                    emb = node.embedding if node.embedding is not None else \
                        np.zeros(self.dim, dtype=np.float32)
                    fh.write(np.asarray(emb, dtype="<f4").tobytes())
                for edge in edges:
                    rec = json.dumps({
                        "source": edge.source, "target": edge.target,
                        "edge_type": edge.edge_type.value,
                        "description": edge.description,
                        "weight": edge.weight,
                    }, sort_keys=True).encode("utf-8")
                    fh.write(struct.pack("<I", len(rec)))
                    fh.write(rec)

    @classmethod
    def restore(cls, path: str | Path, eta: float = 0.1) -> "KnowledgeGraph":
        def read_exact(fh, n: int) -> bytes:
            data = fh.read(n)
            if len(data) != n:
                raise FormatError("snapshot truncated")
            return data

        try:
            with open(path, "rb") as fh:
                magic = fh.read(len(_SNAPSHOT_MAGIC))
                if magic != _SNAPSHOT_MAGIC:
                    raise FormatError("bad snapshot header")
                dim, n_nodes, n_edges = struct.unpack("<III", read_exact(fh, 12))
                graph = cls(dim=dim, eta=eta)
                delta = GraphDelta()
                for _ in range(n_nodes):
                    (hlen,) = struct.unpack("<I", read_exact(fh, 4))
                    header = json.loads(read_exact(fh, hlen).decode("utf-8"))
                    emb = np.frombuffer(read_exact(fh, 4 * dim), dtype="<f4").copy()
                    graph._add_node(Node(
                        node_id=header["node_id"],
                        node_type=NodeType(header["node_type"]),
                        name=header["name"],
                        description=header["description"],
                        embedding=emb,
                        attributes=header["attributes"],
                    ), delta)
                for _ in range(n_edges):
                    (rlen,) = struct.unpack("<I", read_exact(fh, 4))
                    rec = json.loads(read_exact(fh, rlen).decode("utf-8"))
                    graph._set_edge(Edge(
                        source=rec["source"], target=rec["target"],
                        edge_type=EdgeType(rec["edge_type"]),
                        description=rec["description"], weight=rec["weight"],
                    ), delta)
                if fh.read(1):
                    raise FormatError("trailing bytes after snapshot records")
            return graph
        except FormatError:
            raise
        except (OSError, ValueError, KeyError, json.JSONDecodeError, struct.error) as exc:
            raise FormatError(f"corrupt snapshot: {exc}") from exc


def graph_equal(a: KnowledgeGraph, b: KnowledgeGraph) -> bool:
    """Same nodes, edges, weights; embeddings bit-exact."""
    if a.dim != b.dim:
        return False
    with a._lock.read(), b._lock.read():
        if set(a._nodes) != set(b._nodes) or set(a._edges) != set(b._edges):
            return False
        for nid, node in a._nodes.items():
            other = b._nodes[nid]
            if (node.node_type, node.name, node.description, node.attributes) != \
               (other.node_type, other.name, other.description, other.attributes):
                return False
            ea = node.embedding if node.embedding is not None else np.zeros(a.dim, dtype=np.float32)
            eb = other.embedding if other.embedding is not None else np.zeros(b.dim, dtype=np.float32)
            if np.asarray(ea, dtype="<f4").tobytes() != np.asarray(eb, dtype="<f4").tobytes():
                return False
        for key, edge in a._edges.items():
            other = b._edges[key]
            if edge.weight != other.weight or edge.description != other.description:
                return False
    return True
