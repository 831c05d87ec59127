"""Cold-start recommender engine with cognitive-profile adaptation.

Pipeline: semantic enrichment of sparse metadata -> multi-relational
knowledge graph -> style/cognitive user profiling -> multi-strategy
retrieval and hybrid ranking -> adaptive presentation with online learning,
plus an offline MovieLens-protocol evaluation harness and an HTTP service.
"""

from .config import EngineConfig, load_config
from .engine import ColdStartEngine
from .enrichment import (RawItem, SemanticProfile, VarkVector,
                         deterministic_enrich, enrich_item)
from .graph import KnowledgeGraph
from .profiling import Demographics, Goal, UserProfile, score_questionnaire
from .recommender import recommend

__all__ = [
    "ColdStartEngine", "Demographics", "EngineConfig", "Goal", "KnowledgeGraph",
    "RawItem", "SemanticProfile", "UserProfile", "VarkVector",
    "deterministic_enrich", "enrich_item", "load_config", "recommend",
    "score_questionnaire",
]

__version__ = "0.1.0"
