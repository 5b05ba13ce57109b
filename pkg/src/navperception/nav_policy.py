"""Navigation decisions from nearest-obstacle distance and obstacle mask."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Action",
    "NavDecision",
    "command_code",
    "decide",
    "side_bias",
    "side_means",
]

STOP_MM = 600.0
TURN_MM = 750.0
HORIZON_ROW = 210


class Action(enum.Enum):
    GoStraight = "GoStraight"
    TurnLeft = "TurnLeft"
    TurnRight = "TurnRight"
    Stop = "Stop"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class NavDecision:
    action: Action
    distance_mm: float
    side_means: tuple[float, float]


def side_means(mask: np.ndarray, horizon_row: int = HORIZON_ROW) -> tuple[float, float]:
    """Mean lowest-obstacle row over the left and right thirds of the mask.

    For each column the deepest row (<= ``horizon_row``) holding an obstacle
    pixel is taken, 0 if none. The middle third is not used.
    """
    mask = np.asarray(mask) != 0
    height, width = mask.shape
    rows = mask[:min(horizon_row, height - 1) + 1]
    any_hit = rows.any(axis=0)
    deepest = rows.shape[0] - 1 - np.argmax(rows[::-1], axis=0)
    bottom = np.where(any_hit, deepest, 0).astype(np.float64)
    third = -(-width // 3)
    left = bottom[:third]
    right = bottom[2 * third:]
    right_mean = float(right.mean()) if right.size else 0.0
    return float(left.mean()), right_mean


def side_bias(mask: np.ndarray, horizon_row: int = HORIZON_ROW) -> Action:
    """Side with fewer/farther obstacles; an exact tie goes right."""
    left, right = side_means(mask, horizon_row)
    return Action.TurnLeft if left < right else Action.TurnRight


def decide(distance_mm: float, mask: np.ndarray,
           stop_mm: float = STOP_MM, turn_mm: float = TURN_MM) -> NavDecision:
    if distance_mm < 0:
        raise ValueError("distance must be non-negative")
    means = side_means(mask)
    if distance_mm > turn_mm:
        action = Action.GoStraight
    elif distance_mm > stop_mm:
        action = Action.TurnLeft if means[0] < means[1] else Action.TurnRight
    else:
        action = Action.Stop
    return NavDecision(action, float(distance_mm), means)


_CODES = {
    "front": 1, "gostraight": 1,
    "back": 2,
    "right": 4, "turnright": 4,
    "left": 8, "turnleft": 8,
    "stop": 0, "reverse": 0,
}


def command_code(what) -> int:
    """4-bit output code for a navigation action or a recognised word.

    Unknown words map to 0 (stop), matching the recogniser's fallback.
    """
    key = str(what).lower()
    return _CODES.get(key, 0)
