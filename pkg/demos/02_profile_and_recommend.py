"""Cold-start onboarding: questionnaire, cognitive state, recommendations.

Two users with identical demographics but opposite style profiles get
visibly different lists from the same catalog, each with an explanation and
a presentation plan matched to the session context.
"""

from cogrec.adaptation import compose_presentation, generate_explanation
from cogrec.cognition import Device, Pace, SessionContext, estimate_state
from cogrec.config import EngineConfig
from cogrec.engine import ColdStartEngine
from cogrec.enrichment import RawItem
from cogrec.profiling import Demographics, Goal

CATALOG = [
    RawItem("1", "Toy Story (1995)", ["Animation", "Children's", "Comedy"], 1995),
    RawItem("2", "Heat (1995)", ["Action", "Crime", "Thriller"], 1995),
    RawItem("3", "Hoop Dreams (1994)", ["Documentary"], 1994),
    RawItem("4", "The Lion King (1994)", ["Animation", "Children's", "Musical"], 1994),
    RawItem("5", "Clerks (1994)", ["Comedy"], 1994),
    RawItem("6", "Apollo 13 (1995)", ["Drama"], 1995),
    RawItem("7", "Twelve Monkeys (1995)", ["Drama", "Sci-Fi"], 1995),
]

engine = ColdStartEngine(config=EngineConfig(embedding_dim=64))
engine.load_catalog(CATALOG)

visual = engine.register_user(Demographics("25-34", "male", "programmer"),
                              Goal.ENTERTAINMENT, user_id="visual-user")
reader = engine.register_user(Demographics("25-34", "male", "programmer"),
                              Goal.ENTERTAINMENT, user_id="reading-user")

# 16-question submissions: one heavily visual, one heavily reading/writing
engine.submit_questionnaire("visual-user", ["V"] * 12 + ["K"] * 4)
engine.submit_questionnaire("reading-user", ["R"] * 12 + ["A"] * 4)

ctx = SessionContext(time_of_day=20, device=Device.MOBILE,
                     interaction_pace=Pace.FAST)

for user_id in ("visual-user", "reading-user"):
    profile = engine.profile(user_id)
    state = estimate_state(ctx, profile.vark)
    print(f"\n=== {user_id} (vark={profile.vark.as_dict()}) ===")
    print(f"cognitive state: capacity={state.capacity:.2f} "
          f"attention={state.attention:.2f} complexity_pref={state.complexity_pref:.2f}")
    ranked = engine.recommend_for(user_id, ctx, K=3)
    plan = compose_presentation(ranked, state)
    print(f"presentation: {plan.emphasis.value} / {plan.detail.value}, "
          f"{plan.visible_count} visible initially")
    for item in ranked.items:
        node = engine.graph.node(item.node_id)
        item_profile = engine.graph.item_profile(item.node_id)
        explanation = generate_explanation(item_profile, profile)
        print(f"  {node.name:30s} score={item.score:.3f}")
        print(f"    {explanation}")
