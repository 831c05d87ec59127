"""Per-session cognitive-state estimation.

Pure functions over the session context and the user's style vector. The
multiplicative structure is fixed; every constant lives in the factor tables
(config.CognitionTables) and can be overridden via the engine config file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .config import CognitionTables
from .enrichment import VARK_LETTERS, VarkVector
from .profiling import Goal


class Device(str, Enum):
    MOBILE = "MOBILE"
    DESKTOP = "DESKTOP"
    TABLET = "TABLET"


class Pace(str, Enum):
    FAST = "FAST"
    MODERATE = "MODERATE"
    CAREFUL = "CAREFUL"


@dataclass
class SessionContext:
    time_of_day: int                     # hour 0-23
    day_of_week: int = 0                 # 0 = Monday
    device: Device = Device.DESKTOP
    session_minutes: float = 0.0
    items_viewed: int = 0
    interaction_pace: Pace = Pace.MODERATE
    stated_goal: Optional[Goal] = None
    available_minutes: Optional[float] = None

    def validate(self) -> None:
        if not 0 <= self.time_of_day <= 23:
            raise ValueError(f"hour must be in [0, 23], got {self.time_of_day}")
        if self.session_minutes < 0:
            raise ValueError("session_minutes must be >= 0")


@dataclass
class CognitiveState:
    capacity: float
    attention: float
    complexity_pref: float
    presentation: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        for name, value in (("capacity", self.capacity), ("attention", self.attention),
                            ("complexity_pref", self.complexity_pref)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of [0, 1]: {value}")
        for letter, weight in self.presentation.items():
            if not 0.0 <= weight <= 1.0:
                raise ValueError(f"presentation weight {letter} out of [0, 1]: {weight}")


def _time_factor(hour: int, tables: CognitionTables) -> float:
    if 0 <= hour < 6:
        return tables.time_of_day["night"]
    if 6 <= hour < 12:
        return tables.time_of_day["morning"]
    if 12 <= hour < 18:
        return tables.time_of_day["afternoon"]
    return tables.time_of_day["evening"]


def capacity(hour: int, session_minutes: float,
             tables: CognitionTables | None = None) -> float:
    """Time-of-day factor times the session-fatigue factor."""
    if not 0 <= hour <= 23:
        raise ValueError(f"hour must be in [0, 23], got {hour}")
    if session_minutes < 0:
        raise ValueError("session_minutes must be >= 0")
    tables = tables or CognitionTables()
    fatigue = max(tables.fatigue_floor, 1.0 - tables.fatigue_slope * session_minutes)
    return _time_factor(hour, tables) * fatigue


def estimate_state(ctx: SessionContext, vark: VarkVector,
                   tables: CognitionTables | None = None) -> CognitiveState:
    """Estimate [capacity, attention, complexity preference, presentation]."""
    ctx.validate()
    vark.validate()
    tables = tables or CognitionTables()
    cap = capacity(ctx.time_of_day, ctx.session_minutes, tables)
    attention = (tables.device_attention[ctx.device.value]
                 * tables.pace_attention[ctx.interaction_pace.value])
    goal_key = ctx.stated_goal.value if ctx.stated_goal is not None else "UNSTATED"
    complexity_pref = cap * tables.goal_complexity[goal_key]

    weights = list(vark.as_tuple())
    if ctx.device is Device.MOBILE:
        weights[0] *= tables.mobile_visual_boost   # V
        weights[2] *= tables.mobile_reading_damp   # R
    top = max(weights)
    if top > 0.0:
        weights = [w / top for w in weights]
    presentation = dict(zip(VARK_LETTERS, (min(1.0, w) for w in weights)))

    state = CognitiveState(capacity=cap, attention=min(1.0, attention),
                           complexity_pref=min(1.0, complexity_pref),
                           presentation=presentation)
    state.validate()
    return state


def complexity_band(state: CognitiveState) -> tuple[int, int]:
    """Map complexity preference onto an inclusive [min, max] 1-5 band."""
    high = int(math.floor(1.0 + 4.0 * state.complexity_pref + 0.5))
    high = min(5, max(1, high))
    low = max(1, high - 2)
    return low, high
