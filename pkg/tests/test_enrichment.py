import json
import random
import string
import threading

import pytest
from pytest import approx

from cogrec.enrichment import (Entity, EnrichmentCache, RawItem, Relation,
                               SemanticProfile, VarkVector,
                               build_enrichment_prompt, deterministic_enrich,
                               enrich_item, load_genre_rules, normalize_name,
                               parse_profile_response, render_profile_text)
from cogrec.errors import ParseError, ProviderError
from cogrec.providers import StaticProvider

from conftest import TOY_STORY


class FailingProvider:
    identity = "failing"

    def __init__(self):
        self.calls = 0

    def generate(self, prompt, *, temperature=0.7, max_tokens=500):
        self.calls += 1
        raise ProviderError("boom")


class CountingProvider:
    """Wraps canned text and counts invocations."""

    identity = "counting"

    def __init__(self, text):
        self.text = text
        self.calls = 0

    def generate(self, prompt, *, temperature=0.7, max_tokens=500):
        self.calls += 1
        return self.text


# --- prompt -----------------------------------------------------------------


def test_prompt_contains_the_six_numbered_requests():
    prompt = build_enrichment_prompt(TOY_STORY)
    assert "3. Complexity level (1-5) with justification" in prompt
    assert "1. Key entities and concepts with descriptions" in prompt
    assert "6. Learning style alignment (V/A/R/K)" in prompt
    assert "Title: Toy Story (1995)" in prompt


def test_prompt_renders_missing_fields_as_na():
    item = RawItem(item_id="x", title="Mystery Film", genres=[], year=0)
    prompt = build_enrichment_prompt(item)
    assert "Metadata: N/A" in prompt
    assert "Description: N/A" in prompt


def test_prompt_is_deterministic():
    a = build_enrichment_prompt(TOY_STORY)
    b = build_enrichment_prompt(RawItem(item_id="1", title="Toy Story (1995)",
                                        genres=["Animation", "Children's", "Comedy"],
                                        year=1995))
    assert a == b


# --- parsing -----------------------------------------------------------------

WELL_FORMED = """1. Key entities and concepts with descriptions
- space travel | theme | journeys beyond earth
- friendship | theme | bonds between characters
- NASA | organization | the space agency
2. Entity relationships
- space travel | RELATED_TO | NASA | 0.9
3. Complexity level (1-5) with justification
3 - some technical background helps
4. Required background knowledge
- basic physics
5. Target audience characteristics
- teens, adults
6. Learning style alignment (V/A/R/K)
V=0.5 A=0.1 R=0.2 K=0.2
"""


def test_parse_well_formed_response():
    profile = parse_profile_response("42", WELL_FORMED)
    assert len(profile.entities) == 3
    assert profile.complexity == 3
    assert sum(profile.vark_alignment.as_tuple()) == approx(1.0, abs=1e-9)
    assert profile.vark_alignment.v == approx(0.5)
    assert profile.prerequisites == ["basic physics"]
    assert profile.audience == ["teens", "adults"]
    assert profile.relations[0].confidence == approx(0.9)


def test_parse_renormalizes_vark_weights():
    text = WELL_FORMED.replace("V=0.5 A=0.1 R=0.2 K=0.2", "V=2 A=1 R=1 K=1")
    profile = parse_profile_response("42", text)
    assert profile.vark_alignment.as_tuple() == approx((0.4, 0.2, 0.2, 0.2))


def test_parse_refusal_raises():
    with pytest.raises(ParseError):
        parse_profile_response("42", "I cannot analyze this.")


def test_parse_requires_entities():
    text = "3. Complexity level (1-5) with justification\n3 - fine\n"
    with pytest.raises(ParseError):
        parse_profile_response("42", text)


def test_parse_dedupes_entities_case_insensitively():
    text = WELL_FORMED.replace("- NASA | organization | the space agency",
                               "- nasa | organization | duplicate\n- NASA | organization | x")
    profile = parse_profile_response("42", text)
    names = [normalize_name(e.name) for e in profile.entities]
    assert names.count("nasa") == 1


def test_parse_drops_relations_with_unknown_endpoints():
    text = WELL_FORMED.replace("- space travel | RELATED_TO | NASA | 0.9",
                               "- aliens | RELATED_TO | NASA | 0.9")
    profile = parse_profile_response("42", text)
    assert profile.relations == []


# --- deterministic enricher ------------------------------------------------------


def test_deterministic_toy_story():
    profile = deterministic_enrich(TOY_STORY)
    kinds = {(e.name, e.kind) for e in profile.entities}
    assert ("Animation", "genre") in kinds
    assert ("1990s", "decade") in kinds
    assert len(profile.entities) == 4
    rels = [r for r in profile.relations if r.predicate == "HAS_GENRE"]
    assert len(rels) == 3
    assert all(r.confidence == 1.0 for r in rels)
    # visual channel dominates for this genre mix
    va = profile.vark_alignment
    assert va.v == max(va.as_tuple())


def test_deterministic_no_genres_degrades_to_uniform():
    profile = deterministic_enrich(RawItem("x", "Oddity", [], 0))
    assert profile.vark_alignment.as_tuple() == (0.25, 0.25, 0.25, 0.25)
    assert profile.complexity == 3


def test_deterministic_documentary_row_matches_table():
    profile = deterministic_enrich(RawItem("d", "Hoop Dreams (1994)",
                                           ["Documentary"], 1994))
    assert profile.vark_alignment.as_tuple() == approx((0.3, 0.2, 0.4, 0.1))
    row = load_genre_rules()["genres"]["Documentary"]
    assert profile.complexity == row["complexity"]


def test_deterministic_is_pure():
    blobs = {json.dumps(deterministic_enrich(TOY_STORY).to_dict(), sort_keys=True)
             for _ in range(1000)}
    assert len(blobs) == 1


# --- round trip --------------------------------------------------------------------


def _random_profile(rng: random.Random, item_id: str) -> SemanticProfile:
    n_entities = rng.randint(1, 6)
    names = rng.sample([f"{c}{i}" for i, c in enumerate(string.ascii_lowercase)],
                       n_entities)
    entities = [Entity(name=n, kind=rng.choice(["concept", "genre", "theme"]),
                       description=f"about {n}") for n in names]
    relations = []
    if n_entities >= 2 and rng.random() < 0.8:
        a, b = rng.sample(names, 2)
        relations.append(Relation(subject=a, predicate="RELATED_TO", object=b,
                                  confidence=round(rng.random(), 6)))
    if rng.random() < 0.5:
        relations.append(Relation(subject=item_id, predicate="MENTIONS",
                                  object=rng.choice(names), confidence=1.0))
    weights = [rng.random() + 0.01 for _ in range(4)]
    profile = SemanticProfile(
        item_id=item_id,
        title=f"Fixture {item_id}",
        entities=entities,
        relations=relations,
        complexity=rng.randint(1, 5),
        prerequisites=[f"prereq {i}" for i in range(rng.randint(0, 2))],
        audience=[rng.choice(["kids", "teens", "adults"])] if rng.random() < 0.7 else [],
        vark_alignment=VarkVector.from_weights(weights),
    )
    profile.validate()
    return profile


def test_canonical_render_parse_round_trip():
    rng = random.Random(7)
    for i in range(50):
        profile = _random_profile(rng, str(i))
        back = parse_profile_response(str(i), render_profile_text(profile))
        assert back == profile, f"fixture {i} failed round trip"


# --- orchestration ----------------------------------------------------------------------


def test_enrich_falls_back_on_garbage(caplog):
    provider = CountingProvider("complete nonsense with no sections")
    profile = enrich_item(TOY_STORY, provider, retries=0, fallback=True)
    assert profile == deterministic_enrich(TOY_STORY)
    assert provider.calls == 1


def test_enrich_retries_then_falls_back():
    provider = CountingProvider("garbage")
    enrich_item(TOY_STORY, provider, retries=2)
    assert provider.calls == 3


def test_enrich_surfaces_provider_error_when_fallback_disabled():
    with pytest.raises(ProviderError):
        enrich_item(TOY_STORY, FailingProvider(), retries=0, fallback=False)
    # with fallback enabled the deterministic profile comes back instead
    profile = enrich_item(TOY_STORY, FailingProvider(), retries=0, fallback=True)
    assert profile.complexity == deterministic_enrich(TOY_STORY).complexity


def test_enrich_cache_prevents_reinvocation():
    provider = CountingProvider(render_profile_text(deterministic_enrich(TOY_STORY)))
    cache = EnrichmentCache()
    first = enrich_item(TOY_STORY, provider, cache=cache)
    second = enrich_item(TOY_STORY, provider, cache=cache)
    assert provider.calls == 1
    assert first == second


def test_cache_invocation_bound_over_many_calls():
    provider = CountingProvider("unparseable")
    cache = EnrichmentCache()
    retries = 1
    for _ in range(10):
        enrich_item(TOY_STORY, provider, retries=retries, cache=cache)
    assert provider.calls <= retries + 1


def test_cache_is_thread_safe():
    provider = CountingProvider(render_profile_text(deterministic_enrich(TOY_STORY)))
    cache = EnrichmentCache()
    items = [RawItem(str(i), f"Movie {i} (1990)", ["Comedy"], 1990) for i in range(8)]
    errors = []

    def work(item):
        try:
            for _ in range(20):
                enrich_item(item, provider, cache=cache)
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=work, args=(it,)) for it in items for _ in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len(cache) == len(items)
    # one invocation per distinct item, despite 2 threads x 20 calls each
    assert provider.calls == len(items)


def test_cache_file_round_trip(tmp_path):
    cache = EnrichmentCache()
    for item in (TOY_STORY, RawItem("2", "Jumanji (1995)", ["Adventure"], 1995)):
        enrich_item(item, None, cache=cache)
    path = tmp_path / "cache.jsonl"
    cache.save(path)
    lines = path.read_text("utf-8").strip().splitlines()
    assert len(lines) == 2
    loaded = EnrichmentCache.load(path)
    assert loaded.get(("1", "deterministic")) == cache.get(("1", "deterministic"))


# --- invariants -----------------------------------------------------------------------


def test_enriched_profiles_satisfy_invariants_for_random_items():
    rng = random.Random(123)
    rules = sorted(load_genre_rules()["genres"])
    for i in range(200):
        genres = rng.sample(rules, rng.randint(0, 4))
        if rng.random() < 0.2:
            genres.append("MadeUpGenre")
        item = RawItem(item_id=f"r{i}", title=f"Random {i} ({1920 + i % 100})",
                       genres=genres, year=1920 + i % 100,
                       description="desc" if rng.random() < 0.3 else None)
        profile = enrich_item(item, None)
        profile.validate()
        assert 1 <= profile.complexity <= 5
        assert sum(profile.vark_alignment.as_tuple()) == approx(1.0, abs=1e-9)
