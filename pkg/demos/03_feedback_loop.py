"""The online learning loop: feedback reshapes the graph and the profile.

A user repeatedly engages with documentaries; watch the interaction edges
strengthen, the embedding drift toward the rated items, the style vector
refine, and the next recommendation list change. Serendipity injection
keeps one slot for out-of-neighborhood discovery.
"""

from cogrec.adaptation import EventKind, InteractionEvent, inject_serendipity
from cogrec.cognition import Device, SessionContext, estimate_state
from cogrec.config import EngineConfig
from cogrec.engine import ColdStartEngine
from cogrec.enrichment import RawItem
from cogrec.graph import EdgeType, item_node_id, user_node_id
from cogrec.profiling import Demographics, Goal

CATALOG = [
    RawItem("1", "Toy Story (1995)", ["Animation", "Children's", "Comedy"], 1995),
    RawItem("2", "Hoop Dreams (1994)", ["Documentary"], 1994),
    RawItem("3", "Crumb (1994)", ["Documentary"], 1994),
    RawItem("4", "Heat (1995)", ["Action", "Crime", "Thriller"], 1995),
    RawItem("5", "Clerks (1994)", ["Comedy"], 1994),
    RawItem("6", "Braveheart (1995)", ["Action", "Drama", "War"], 1995),
    RawItem("7", "Apollo 13 (1995)", ["Drama"], 1995),
    RawItem("8", "The Lion King (1994)", ["Animation", "Children's", "Musical"], 1994),
    RawItem("9", "Jaws (1975)", ["Action", "Horror"], 1975),
    RawItem("10", "The Shining (1980)", ["Horror"], 1980),
    RawItem("11", "Memento (2000)", ["Mystery", "Thriller"], 2000),
]

engine = ColdStartEngine(config=EngineConfig(embedding_dim=64, drift_every=5))
engine.load_catalog(CATALOG, infer_similarity=True)
engine.register_user(Demographics("35-44", "female", "scientist"),
                     Goal.LEARNING, user_id="u")
engine.submit_questionnaire("u", ["V"] * 8 + ["A"] * 8)

ctx = SessionContext(time_of_day=10, device=Device.DESKTOP)
before = engine.recommend_for("u", ctx, K=5)
print("before any feedback:", [engine.graph.node(n).name for n in before.ids()])

print("\nrating both documentaries 5/5, twice each ...")
for i, item_id in enumerate(["2", "3", "2", "3", "2"]):
    engine.record_event(InteractionEvent(user_id="u", item_id=item_id,
                                         kind=EventKind.RATING, value=5,
                                         event_id=f"e{i}"))

w = engine.graph.edge_weight(user_node_id("u"), item_node_id("2"), EdgeType.INTERACTED)
print(f"INTERACTED weight toward Hoop Dreams: {w:.3f}")
prefers = engine.graph.edge_weight(user_node_id("u"), "entity:documentary",
                                   EdgeType.PREFERS)
print(f"PREFERS weight toward the documentary entity: {prefers:.3f}")
profile = engine.profile("u")
print(f"style vector after drift: {profile.vark.as_dict()}")
print(f"drift snapshots recorded: {len(profile.drift_history)}")

after = engine.recommend_for("u", ctx, K=5)
print("\nafter feedback:       ", [engine.graph.node(n).name for n in after.ids()])
print("ordering changed:", before.ids() != after.ids())

state = estimate_state(ctx, profile.vark)
wild = inject_serendipity(after, engine.graph, rate=0.2, seed=7, user_id="u",
                          state=state)
print("\nwith serendipity injection (rate 0.2):")
for item in wild.items:
    marker = " <- injected" if item.serendipity else ""
    print(f"  {engine.graph.node(item.node_id).name}{marker}")
