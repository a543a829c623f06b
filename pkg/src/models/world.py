"""
Kinematic sorting world

Positions are 3D tuples in meters. WorldState is treated as a value:
stepping returns a new state.
"""

from dataclasses import dataclass, replace
from typing import Dict, Literal, Optional, Tuple

Vector = Tuple[float, float, float]
BOX_NAMES = ("b_box", "g_box", "r_box")


@dataclass(frozen=True)
class Box:
    position: Vector
    held: bool = False
    placed: bool = False


@dataclass(frozen=True)
class Intent:
    """What the gripper is asked to do this step"""
    kind: Literal["pick", "place"]
    box: str


@dataclass(frozen=True)
class WorldState:
    gripper: Vector
    boxes: Dict[str, Box]
    storage_slots: Dict[str, Vector]
    step_size: float = 0.05
    theta_max: float = 1.0
    mode: Literal["instant", "stepped"] = "instant"
    placed_order: Tuple[str, ...] = ()

    def held_box(self) -> Optional[str]:
        held = [name for name, box in self.boxes.items() if box.held]
        return held[0] if held else None

    def with_box(self, name: str, **changes) -> "WorldState":
        boxes = dict(self.boxes)
        boxes[name] = replace(boxes[name], **changes)
        return replace(self, boxes=boxes)


@dataclass(frozen=True)
class Perturbation:
    """Teleport a box after the given tick"""
    tick: int
    box: str
    position: Vector
