"""Semantic enrichment of sparse item metadata.

Turns a raw catalog record (title, genres, year, maybe a description) into a
structured semantic profile: entities, relations, a 1-5 complexity level,
prerequisites, audience tags, and a four-channel style-alignment vector. A
pluggable generation provider does the heavy lifting when configured; a
deterministic rule-table enricher keeps everything runnable offline and is
the fallback whenever a provider response cannot be parsed.

The canonical response format is the numbered-section layout mirroring the
prompt; ``render_profile_text`` emits it and ``parse_profile_response`` is a
lenient reader of it (and of reasonably shaped free-form responses).
"""

from __future__ import annotations

import json
import logging
import math
import re
import threading
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ParseError, ProviderError
from .providers import GenerationProvider

log = logging.getLogger(__name__)

VARK_LETTERS = ("v", "a", "r", "k")


def normalize_name(name: str) -> str:
    """Lowercase-trimmed form used everywhere entities are matched by name."""
    return " ".join(name.strip().lower().split())


# ---------------------------------------------------------------------------
# domain types


@dataclass
class VarkVector:
    """Point on the 3-simplex over (visual, auditory, reading, kinesthetic)."""

    v: float
    a: float
    r: float
    k: float

    def validate(self) -> None:
        comps = self.as_tuple()
        if any(c < 0.0 or c > 1.0 for c in comps):
            raise ValueError(f"vark components out of [0,1]: {comps}")
        if abs(sum(comps) - 1.0) > 1e-9:
            raise ValueError(f"vark components must sum to 1: {comps}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.v, self.a, self.r, self.k)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return {"v": self.v, "a": self.a, "r": self.r, "k": self.k}

    def dominant(self, tol: float = 1e-9) -> Optional[str]:
        """Letter of the strongest channel, or None on a tie at the top."""
        comps = self.as_tuple()
        top = max(comps)
        leaders = [VARK_LETTERS[i] for i, c in enumerate(comps) if c >= top - tol]
        return leaders[0] if len(leaders) == 1 else None

    @classmethod
    def uniform(cls) -> "VarkVector":
        return cls(0.25, 0.25, 0.25, 0.25)

    @classmethod
    def from_weights(cls, weights) -> "VarkVector":
        w = [max(0.0, float(x)) for x in weights]
        total = sum(w)
        if total <= 0.0:
            return cls.uniform()
        return cls(*(x / total for x in w))


@dataclass
class Entity:
    name: str
    kind: str = "concept"
    description: str = ""
    embedding: Optional[np.ndarray] = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Entity):
            return NotImplemented
        if (self.name, self.kind, self.description) != (other.name, other.kind, other.description):
            return False
        if self.embedding is None or other.embedding is None:
            return self.embedding is None and other.embedding is None
        return np.array_equal(self.embedding, other.embedding)


@dataclass
class Relation:
    subject: str
    predicate: str
    object: str
    confidence: float = 1.0


@dataclass
class RawItem:
    """Sparse catalog record as ingested."""

    item_id: str
    title: str
    genres: list[str]
    year: int
    description: Optional[str] = None

    def validate(self) -> None:
        if not str(self.item_id):
            raise ValueError("item_id must be non-empty")
        if self.genres is None:
            raise ValueError("genres may be empty but not null")


@dataclass
class SemanticProfile:
    item_id: str
    entities: list[Entity]
    relations: list[Relation]
    complexity: int
    prerequisites: list[str]
    audience: list[str]
    vark_alignment: VarkVector
    title: str = ""

    def validate(self) -> None:
        if self.complexity not in (1, 2, 3, 4, 5):
            raise ValueError(f"complexity must be 1-5, got {self.complexity}")
        names = {normalize_name(e.name) for e in self.entities}
        self_names = {normalize_name(str(self.item_id)), normalize_name(self.title), "item"}
        for rel in self.relations:
            if not 0.0 <= rel.confidence <= 1.0:
                raise ValueError(f"relation confidence out of [0,1]: {rel}")
            for endpoint in (rel.subject, rel.object):
                norm = normalize_name(endpoint)
                if norm not in names and norm not in self_names:
                    raise ValueError(f"relation endpoint {endpoint!r} names no entity or the item")
        self.vark_alignment.validate()
        seen = set()
        for ent in self.entities:
            norm = normalize_name(ent.name)
            if norm in seen:
                raise ValueError(f"duplicate entity name {ent.name!r}")
            seen.add(norm)

    def entity_names(self) -> list[str]:
        return [e.name for e in self.entities]

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "title": self.title,
            "entities": [
                {"name": e.name, "kind": e.kind, "description": e.description}
                for e in self.entities
            ],
            "relations": [
                {"subject": r.subject, "predicate": r.predicate,
                 "object": r.object, "confidence": r.confidence}
                for r in self.relations
            ],
            "complexity": self.complexity,
            "prerequisites": list(self.prerequisites),
            "audience": list(self.audience),
            "vark_alignment": self.vark_alignment.as_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SemanticProfile":
        va = data["vark_alignment"]
        return cls(
            item_id=data["item_id"],
            title=data.get("title", ""),
            entities=[Entity(**e) for e in data["entities"]],
            relations=[Relation(**r) for r in data["relations"]],
            complexity=int(data["complexity"]),
            prerequisites=list(data["prerequisites"]),
            audience=list(data["audience"]),
            vark_alignment=VarkVector(va["v"], va["a"], va["r"], va["k"]),
        )


# ---------------------------------------------------------------------------
# rule tables

_RULES_LOCK = threading.Lock()
_RULES: Optional[dict] = None


def load_genre_rules() -> dict:
    """Versioned genre -> (vark row, complexity, audience) table shipped as data."""
    global _RULES
    with _RULES_LOCK:
        if _RULES is None:
            text = resources.files("cogrec").joinpath("data/genre_rules.json").read_text("utf-8")
            raw = json.loads(text)
            raw["by_norm"] = {normalize_name(g): row for g, row in raw["genres"].items()}
            _RULES = raw
        return _RULES


# ---------------------------------------------------------------------------
# prompt + canonical format

PROMPT_TEMPLATE = """Analyze this item and provide comprehensive semantic profile:
Title: {title}
Description: {description}
Metadata: {metadata}

Provide:
1. Key entities and concepts with descriptions
2. Entity relationships
3. Complexity level (1-5) with justification
4. Required background knowledge
5. Target audience characteristics
6. Learning style alignment (V/A/R/K)
"""


def build_enrichment_prompt(item: RawItem) -> str:
    item.validate()
    description = item.description.strip() if item.description else "N/A"
    metadata = ", ".join(g.strip() for g in item.genres if g.strip()) or "N/A"
    return PROMPT_TEMPLATE.format(title=item.title, description=description or "N/A",
                                  metadata=metadata)


def _clean_field(text: str) -> str:
    # canonical records are line- and pipe-delimited
    return text.replace("|", "/").replace("\n", " ").strip()


def render_profile_text(profile: SemanticProfile) -> str:
    """Emit the canonical numbered-section record for a profile.

    parse_profile_response reads this back losslessly (floats rendered with
    repr precision).
    """
    lines: list[str] = []
    if profile.title:
        lines.append(f"Title: {_clean_field(profile.title)}")
    lines.append("1. Key entities and concepts with descriptions")
    for ent in profile.entities:
        lines.append(f"- {_clean_field(ent.name)} | {_clean_field(ent.kind)} | {_clean_field(ent.description)}")
    lines.append("2. Entity relationships")
    if profile.relations:
        for rel in profile.relations:
            lines.append(f"- {_clean_field(rel.subject)} | {_clean_field(rel.predicate)} | "
                         f"{_clean_field(rel.object)} | {rel.confidence!r}")
    else:
        lines.append("- none")
    lines.append("3. Complexity level (1-5) with justification")
    lines.append(f"{profile.complexity} - estimated difficulty")
    lines.append("4. Required background knowledge")
    if profile.prerequisites:
        lines.extend(f"- {_clean_field(p)}" for p in profile.prerequisites)
    else:
        lines.append("- none")
    lines.append("5. Target audience characteristics")
    if profile.audience:
        lines.extend(f"- {_clean_field(a)}" for a in profile.audience)
    else:
        lines.append("- none")
    lines.append("6. Learning style alignment (V/A/R/K)")
    va = profile.vark_alignment
    lines.append(f"V={va.v!r} A={va.a!r} R={va.r!r} K={va.k!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# response parsing

_SECTION_RE = re.compile(r"(?m)^\s*([1-6])[.)]\s*")
_BULLET_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*(.+)$")
_VARK_WORDS = {
    "v": "v", "visual": "v",
    "a": "a", "auditory": "a", "aural": "a", "audio": "a",
    "r": "r", "reading": "r", "read": "r", "reading/writing": "r", "text": "r",
    "k": "k", "kinesthetic": "k", "kinaesthetic": "k", "interactive": "k",
}
_VARK_RE = re.compile(
    r"\b(v|a|r|k|visual|auditory|aural|audio|reading/writing|reading|read|text|"
    r"kinesthetic|kinaesthetic|interactive)\b\s*[:=\-]?\s*"
    r"([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)",
    re.IGNORECASE,
)
_FLOAT_RE = re.compile(r"^[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?$")


def _split_sections(text: str) -> dict[int, str]:
    matches = list(_SECTION_RE.finditer(text))
    sections: dict[int, str] = {}
    for i, m in enumerate(matches):
        num = int(m.group(1))
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        if num not in sections:  # first occurrence wins
            sections[num] = text[m.end():end]
    return sections


def _bullets(section: str) -> list[str]:
    out = []
    for line in section.splitlines():
        m = _BULLET_RE.match(line)
        if m:
            out.append(m.group(1).strip())
    return out


def _parse_entities(section: str) -> list[Entity]:
    entities: list[Entity] = []
    seen: set[str] = set()
    for raw in _bullets(section):
        if "|" in raw:
            parts = [p.strip() for p in raw.split("|")]
            name = parts[0]
            kind = parts[1] if len(parts) > 1 and parts[1] else "concept"
            desc = parts[2] if len(parts) > 2 else ""
        else:
            m = re.match(r"^(.*?)\s*\((.*?)\)\s*[:\-]\s*(.*)$", raw)
            if m:
                name, kind, desc = m.group(1), m.group(2), m.group(3)
            else:
                m = re.match(r"^(.*?)\s*[:\-]\s+(.*)$", raw)
                if m:
                    name, kind, desc = m.group(1), "concept", m.group(2)
                else:
                    name, kind, desc = raw, "concept", ""
        name = name.strip()
        if not name or normalize_name(name) == "none":
            continue
        norm = normalize_name(name)
        if norm in seen:
            continue
        seen.add(norm)
        entities.append(Entity(name=name, kind=kind.strip() or "concept",
                               description=desc.strip()))
    return entities


def _parse_relations(section: str, valid_endpoints: set[str]) -> list[Relation]:
    relations = []
    for raw in _bullets(section):
        confidence = 1.0
        if "|" in raw:
            parts = [p.strip() for p in raw.split("|")]
            if len(parts) >= 4 and _FLOAT_RE.match(parts[3]):
                confidence = float(parts[3])
                parts = parts[:3]
            if len(parts) != 3:
                continue
            subject, predicate, obj = parts
        else:
            m = re.match(r"^(.*?)\s*(?:->|→)\s*(.*?)(?:\s*\(([0-9.]+)\))?$", raw)
            if not m:
                continue
            subject, obj = m.group(1).strip(), m.group(2).strip()
            predicate = "RELATED_TO"
            if m.group(3):
                confidence = float(m.group(3))
        if not subject or not obj:
            continue
        if normalize_name(subject) not in valid_endpoints or \
           normalize_name(obj) not in valid_endpoints:
            log.debug("dropping relation with unknown endpoint: %r", raw)
            continue
        relations.append(Relation(subject=subject, predicate=predicate.strip(),
                                  object=obj, confidence=min(1.0, max(0.0, confidence))))
    return relations


def _parse_complexity(section: Optional[str], full_text: str) -> Optional[int]:
    for source in (section, full_text):
        if not source:
            continue
        scrubbed = re.sub(r"\(?\b1\s*-\s*5\b\)?", " ", source)
        scrubbed = re.sub(r"(?mi)^.*complexity level.*$", " ", scrubbed)
        m = re.search(r"(?m)^\s*([1-5])\b", scrubbed)
        if m:
            return int(m.group(1))
        m = re.search(r"(?i)complexity\D{0,20}?([1-5])\b", scrubbed)
        if m:
            return int(m.group(1))
        m = re.search(r"\b([1-5])\b\s*(?:/\s*5|out of 5)?", scrubbed)
        if m and source is section:
            return int(m.group(1))
    return None


def _parse_vark(section: Optional[str], full_text: str) -> VarkVector:
    weights = {}
    for source in (section, full_text):
        if not source:
            continue
        for m in _VARK_RE.finditer(source):
            letter = _VARK_WORDS[m.group(1).lower()]
            if letter not in weights:
                weights[letter] = float(m.group(2))
        if weights:
            break
    if not weights:
        return VarkVector.uniform()
    comps = [weights.get(l, 0.0) for l in VARK_LETTERS]
    total = sum(comps)
    if total <= 0.0:
        return VarkVector.uniform()
    if abs(total - 1.0) <= 1e-9:
        return VarkVector(*comps)
    return VarkVector(*(c / total for c in comps))


def _parse_title(text: str) -> str:
    m = re.search(r"(?m)^Title:\s*(.+)$", text)
    return m.group(1).strip() if m else ""


def parse_profile_response(item_id: str, text: str) -> SemanticProfile:
    """Parse a provider response into a SemanticProfile.

    Raises ParseError when no entities or no usable 1-5 complexity can be
    extracted; those signal the caller to retry or fall back to the
    deterministic enricher.
    """
    if not text or not text.strip():
        raise ParseError("empty response")
    sections = _split_sections(text)
    entities = _parse_entities(sections.get(1, ""))
    if not entities:
        raise ParseError("no entities found in response")
    complexity = _parse_complexity(sections.get(3), text)
    if complexity is None:
        raise ParseError("no complexity level in 1-5 found in response")
    title = _parse_title(text)
    valid = {normalize_name(e.name) for e in entities}
    valid.update({normalize_name(str(item_id)), "item", "the item"})
    if title:
        valid.add(normalize_name(title))
    relations = _parse_relations(sections.get(2, ""), valid)
    prerequisites = [b for b in _bullets(sections.get(4, ""))
                     if normalize_name(b) not in ("none", "n/a")]
    audience = []
    for b in _bullets(sections.get(5, "")):
        if normalize_name(b) in ("none", "n/a"):
            continue
        audience.extend(part.strip() for part in b.split(",") if part.strip())
    vark = _parse_vark(sections.get(6), text)
    profile = SemanticProfile(
        item_id=item_id,
        title=title,
        entities=entities,
        relations=relations,
        complexity=complexity,
        prerequisites=prerequisites,
        audience=audience,
        vark_alignment=vark,
    )
    profile.validate()
    return profile


# ---------------------------------------------------------------------------
# deterministic enricher

_DECADE_KIND = "decade"


def deterministic_enrich(item: RawItem) -> SemanticProfile:
    """Rule-table enrichment: one genre entity per genre plus a decade entity.

    Fully deterministic; the offline substitute for a hosted model. Zero
    genres degrade to a uniform style alignment and complexity 3.
    """
    item.validate()
    rules = load_genre_rules()
    entities: list[Entity] = []
    relations: list[Relation] = []
    seen: set[str] = set()
    vark_sum = np.zeros(4, dtype=np.float64)
    complexities: list[int] = []
    audience: list[str] = []
    for genre in item.genres:
        name = genre.strip()
        norm = normalize_name(name)
        if not norm or norm in seen:
            continue
        seen.add(norm)
        row = rules["by_norm"].get(norm)
        entities.append(Entity(name=name, kind="genre", description=f"{name} genre"))
        relations.append(Relation(subject=str(item.item_id), predicate="HAS_GENRE",
                                  object=name, confidence=1.0))
        vark_sum += np.array(row["vark"] if row else rules["default_vark"], dtype=np.float64)
        complexities.append(row["complexity"] if row else rules["default_complexity"])
        for tag in (row.get("audience", []) if row else []):
            if tag not in audience:
                audience.append(tag)
    if item.year:
        decade = f"{(item.year // 10) * 10}s"
        if normalize_name(decade) not in seen:
            entities.append(Entity(name=decade, kind=_DECADE_KIND,
                                   description=f"released in the {decade}"))
    if complexities:
        complexity = int(math.floor(sum(complexities) / len(complexities) + 0.5))
        complexity = min(5, max(1, complexity))
        vark = VarkVector.from_weights(vark_sum)
    else:
        complexity = rules["default_complexity"]
        vark = VarkVector.uniform()
    profile = SemanticProfile(
        item_id=str(item.item_id),
        title=item.title,
        entities=entities,
        relations=relations,
        complexity=complexity,
        prerequisites=[],
        audience=audience,
        vark_alignment=vark,
    )
    profile.validate()
    return profile


class RuleBasedProvider:
    """Deterministic provider: reconstructs the item from the prompt and
    answers with the rule-table profile in canonical format.

    Lets the full prompt -> generate -> parse path run offline and
    reproducibly.
    """

    identity = "rulebase-v1"

    def generate(self, prompt: str, *, temperature: float = 0.7,
                 max_tokens: int = 500) -> str:
        title = ""
        metadata = ""
        for line in prompt.splitlines():
            if line.startswith("Title:"):
                title = line[len("Title:"):].strip()
            elif line.startswith("Metadata:"):
                metadata = line[len("Metadata:"):].strip()
        genres = [] if metadata in ("", "N/A") else [g.strip() for g in metadata.split(",")]
        year = 0
        m = re.search(r"\((\d{4})\)\s*$", title)
        if m:
            year = int(m.group(1))
        item = RawItem(item_id="prompted", title=title or "untitled",
                       genres=genres, year=year)
        return render_profile_text(deterministic_enrich(item))


# ---------------------------------------------------------------------------
# orchestration + cache


class EnrichmentCache:
    """(item_id, provider identity) -> profile; safe for concurrent use."""

    def __init__(self) -> None:
        self._data: dict[tuple[str, str], SemanticProfile] = {}
        self._locks: dict[tuple[str, str], threading.Lock] = {}
        self._mutex = threading.Lock()

    def __len__(self) -> int:
        with self._mutex:
            return len(self._data)

    def get(self, key: tuple[str, str]) -> Optional[SemanticProfile]:
        with self._mutex:
            return self._data.get(key)

    def put(self, key: tuple[str, str], profile: SemanticProfile) -> None:
        with self._mutex:
            self._data[key] = profile

    def _key_lock(self, key: tuple[str, str]) -> threading.Lock:
        with self._mutex:
            return self._locks.setdefault(key, threading.Lock())

    def get_or_compute(self, key: tuple[str, str],
                       fn: Callable[[], SemanticProfile]) -> SemanticProfile:
        with self._mutex:
            if key in self._data:
                return self._data[key]
        with self._key_lock(key):
            with self._mutex:
                if key in self._data:
                    return self._data[key]
            value = fn()
            with self._mutex:
                self._data[key] = value
            return value

    def save(self, path: str | Path) -> None:
        """One canonical-format record per line, UTF-8."""
        with self._mutex:
            items = sorted(self._data.items(), key=lambda kv: kv[0])
        with open(path, "w", encoding="utf-8") as fh:
            for (item_id, provider), profile in items:
                record = {"item_id": item_id, "provider": provider,
                          "record": render_profile_text(profile)}
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EnrichmentCache":
        cache = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                profile = parse_profile_response(rec["item_id"], rec["record"])
                cache.put((rec["item_id"], rec["provider"]), profile)
        return cache


def enrich_item(item: RawItem, provider: Optional[GenerationProvider],
                retries: int = 1, *, cache: Optional[EnrichmentCache] = None,
                fallback: bool = True, temperature: float = 0.7,
                max_tokens: int = 500) -> SemanticProfile:
    """Prompt, generate, parse; retry on ParseError; fall back when allowed.

    Results are cached by (item_id, provider identity) so repeated calls do
    not re-invoke the provider. ProviderError surfaces only when the
    deterministic fallback is disabled.
    """
    if retries < 0:
        raise ValueError("retries must be >= 0")
    item.validate()
    identity = provider.identity if provider is not None else "deterministic"
    key = (str(item.item_id), identity)

    def compute() -> SemanticProfile:
        if provider is None:
            return deterministic_enrich(item)
        prompt = build_enrichment_prompt(item)
        last_error: Optional[ParseError] = None
        for _ in range(retries + 1):
            try:
                text = provider.generate(prompt, temperature=temperature,
                                         max_tokens=max_tokens)
            except ProviderError:
                if fallback:
                    log.warning("provider %s failed for item %s; using deterministic enricher",
                                identity, item.item_id)
                    return deterministic_enrich(item)
                raise
            try:
                profile = parse_profile_response(str(item.item_id), text)
            except ParseError as exc:
                last_error = exc
                continue
            if not profile.title:
                profile = replace(profile, title=item.title)
            return profile
        if fallback:
            log.warning("unparseable responses for item %s after %d attempt(s); "
                        "using deterministic enricher", item.item_id, retries + 1)
            return deterministic_enrich(item)
        assert last_error is not None
        raise last_error

    if cache is None:
        return compute()
    return cache.get_or_compute(key, compute)
