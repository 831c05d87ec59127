"""Enrich sparse movie metadata and build the knowledge graph.

Walks the first stage of the pipeline: a raw catalog record becomes a
semantic profile (entities, relations, complexity, style alignment), the
profiles become a typed graph, and the graph answers similarity and
entity-based retrieval queries.
"""

from cogrec.embedding import HashedTextEmbedder
from cogrec.enrichment import RawItem, build_enrichment_prompt, deterministic_enrich
from cogrec.graph import KnowledgeGraph

CATALOG = [
    RawItem("1", "Toy Story (1995)", ["Animation", "Children's", "Comedy"], 1995),
    RawItem("2", "Jumanji (1995)", ["Adventure", "Children's", "Fantasy"], 1995),
    RawItem("3", "Heat (1995)", ["Action", "Crime", "Thriller"], 1995),
    RawItem("4", "The Usual Suspects (1995)", ["Crime", "Thriller"], 1995),
    RawItem("5", "Hoop Dreams (1994)", ["Documentary"], 1994),
]

print("=== the enrichment prompt sent to a generation provider ===")
print(build_enrichment_prompt(CATALOG[0]))

print("=== deterministic offline enrichment ===")
profile = deterministic_enrich(CATALOG[0])
print(f"item {profile.item_id}: complexity {profile.complexity}")
for entity in profile.entities:
    print(f"  entity: {entity.name:12s} [{entity.kind}]")
print(f"  style alignment: {profile.vark_alignment.as_dict()}")

print("\n=== building the graph ===")
embedder = HashedTextEmbedder(dim=64)
graph = KnowledgeGraph(dim=64)
for item in CATALOG:
    graph.upsert_item(deterministic_enrich(item), embedder)
delta = graph.infer_implicit_edges(max_hops=2, min_shared=1)
print(f"nodes: {graph.node_count()}, edges: {graph.edge_count()}, "
      f"inferred similarity edges: {len(delta.added_edges)}")

print("\n=== nearest neighbors of Toy Story ===")
query = graph.node("item:1").embedding
for nid, sim in graph.knn_items(query, k=3):
    print(f"  {graph.node(nid).name:30s} cosine={sim:.3f}")

print("\n=== items connected to the crime entity ===")
for nid, score in graph.items_for_entities(["crime"], limit=5):
    print(f"  {graph.node(nid).name:30s} edge-weight sum={score:.2f}")

print("\n=== snapshot round trip ===")
graph.snapshot("/tmp/demo-graph.snapshot")
restored = KnowledgeGraph.restore("/tmp/demo-graph.snapshot")
print(f"restored {restored.node_count()} nodes, {restored.edge_count()} edges")
