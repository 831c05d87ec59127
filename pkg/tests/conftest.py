import numpy as np
import pytest

from cogrec.embedding import HashedTextEmbedder
from cogrec.enrichment import RawItem, VarkVector, deterministic_enrich
from cogrec.graph import KnowledgeGraph
from cogrec.profiling import Demographics, Goal, UserProfile

DIM = 32

TOY_STORY = RawItem(item_id="1", title="Toy Story (1995)",
                    genres=["Animation", "Children's", "Comedy"], year=1995)

# ten-movie fixture with overlapping genres
FIXTURE_ITEMS = [
    RawItem("1", "Toy Story (1995)", ["Animation", "Children's", "Comedy"], 1995),
    RawItem("2", "Jumanji (1995)", ["Adventure", "Children's", "Fantasy"], 1995),
    RawItem("3", "Grumpier Old Men (1995)", ["Comedy", "Romance"], 1995),
    RawItem("4", "Heat (1995)", ["Action", "Crime", "Thriller"], 1995),
    RawItem("5", "The Usual Suspects (1995)", ["Crime", "Thriller"], 1995),
    RawItem("6", "Braveheart (1995)", ["Action", "Drama", "War"], 1995),
    RawItem("7", "Apollo 13 (1995)", ["Drama"], 1995),
    RawItem("8", "Hoop Dreams (1994)", ["Documentary"], 1994),
    RawItem("9", "The Lion King (1994)", ["Animation", "Children's", "Musical"], 1994),
    RawItem("10", "Clerks (1994)", ["Comedy"], 1994),
]


@pytest.fixture
def embedder():
    return HashedTextEmbedder(DIM)


@pytest.fixture
def fixture_graph(embedder):
    graph = KnowledgeGraph(dim=DIM)
    for item in FIXTURE_ITEMS:
        graph.upsert_item(deterministic_enrich(item), embedder)
    return graph


def make_profile(user_id="u1", vark=None, seed=0, dim=DIM,
                 goal=Goal.ENTERTAINMENT, demographics=None) -> UserProfile:
    rng = np.random.default_rng(seed)
    emb = rng.standard_normal(dim).astype(np.float32)
    emb /= np.linalg.norm(emb)
    return UserProfile(
        user_id=user_id,
        demographics=demographics or Demographics("25-34", "male", "programmer"),
        goal=goal,
        vark=vark or VarkVector.uniform(),
        embedding=emb,
    )
