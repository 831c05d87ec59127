"""Engine configuration.

Every tunable named by the engine lives here with its default, so a single
config file can override any of them. Factor tables used by the cognitive
model are plain dicts keyed by upper-case enum names.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml


@dataclass
class CognitionTables:
    """Multiplicative factor tables for the session-state estimator."""

    time_of_day: dict[str, float] = field(default_factory=lambda: {
        "night": 0.6,      # hours [0, 6)
        "morning": 1.0,    # hours [6, 12)
        "afternoon": 0.9,  # hours [12, 18)
        "evening": 0.8,    # hours [18, 24)
    })
    fatigue_slope: float = 0.01
    fatigue_floor: float = 0.3
    device_attention: dict[str, float] = field(default_factory=lambda: {
        "MOBILE": 0.5, "TABLET": 0.7, "DESKTOP": 0.9,
    })
    pace_attention: dict[str, float] = field(default_factory=lambda: {
        "FAST": 0.6, "MODERATE": 0.8, "CAREFUL": 1.0,
    })
    goal_complexity: dict[str, float] = field(default_factory=lambda: {
        "LEARNING": 1.0, "RESEARCH": 0.9, "PURCHASE": 0.7,
        "ENTERTAINMENT": 0.6, "UNSTATED": 0.8,
    })
    mobile_visual_boost: float = 1.2
    mobile_reading_damp: float = 0.8


@dataclass
class EngineConfig:
    # embeddings
    embedding_dim: int = 384

    # graph learning
    interaction_rate: float = 0.1       # eta: INTERACTED weight step per unit signal
    embedding_blend: float = 0.1        # lambda: user-embedding update rate
    vark_drift: float = 0.05            # rho: VARK refinement rate
    drift_every: int = 10               # events per user between VARK refinements

    # candidate generation / ranking
    pool_sizes: tuple[int, int, int] = (300, 500, 400)
    pool_cap: int = 1000
    fallback_weights: tuple[float, float, float, float] = (0.3, 0.3, 0.3, 0.1)
    prompt_candidate_budget: int = 50
    k_default: int = 10
    serendipity_rate: float = 0.1

    # decoding defaults for generation providers
    temperature: float = 0.7
    enrich_max_tokens: int = 500
    explain_max_tokens: int = 150

    # remote providers (all optional; None = offline deterministic path)
    provider_url: Optional[str] = None
    provider_model: str = "gpt-3.5-turbo"
    provider_token_env: str = "GENERATION_PROVIDER_TOKEN"
    reranker_url: Optional[str] = None
    enrich_retries: int = 1
    deterministic_fallback: bool = True

    # evaluation protocol
    relevance_threshold: int = 4
    cold_ratio: float = 0.2
    seeds: int = 3
    eval_ks: tuple[int, ...] = (10, 50, 200, 1000)

    # service
    port: int = 8000
    api_key: Optional[str] = None
    test_mode: bool = False
    data_dir: Optional[str] = None
    event_log_path: Optional[str] = None

    cognition: CognitionTables = field(default_factory=CognitionTables)

    def replace(self, **kwargs: Any) -> "EngineConfig":
        return dataclasses.replace(self, **kwargs)


def _apply_overrides(cfg: EngineConfig, overrides: dict[str, Any]) -> EngineConfig:
    known = {f.name for f in dataclasses.fields(EngineConfig)}
    plain: dict[str, Any] = {}
    for key, value in overrides.items():
        if key not in known:
            raise KeyError(f"unknown config key: {key}")
        if key == "cognition":
            base = CognitionTables()
            for sub, subval in value.items():
                if not hasattr(base, sub):
                    raise KeyError(f"unknown cognition table: {sub}")
                current = getattr(base, sub)
                if isinstance(current, dict):
                    current.update(subval)
                else:
                    setattr(base, sub, subval)
            plain[key] = base
        elif isinstance(getattr(cfg, key), tuple) and isinstance(value, list):
            plain[key] = tuple(value)
        else:
            plain[key] = value
    return cfg.replace(**plain)


def load_config(path: str | Path | None = None) -> EngineConfig:
    """Build an EngineConfig, optionally overridden from a JSON or YAML file."""
    cfg = EngineConfig()
    if path is None:
        return cfg
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith((".yaml", ".yml")):
        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    return _apply_overrides(cfg, data)
