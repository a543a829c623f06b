"""
Emphasizer

Maps continuous stimuli to subtask priorities, tracks which subtasks are
active, and raises the priority-changed flag when the best candidate
differs from the subtask currently instantiated.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union
import logging

import numpy as np

from src.models.tree import NodeStatus
from src.schemas.subtask import PriorityParams, SubtaskRecord
from src.services.blackboard import (
    GOAL_REACHED_FLAG,
    PRIORITY_CHANGED_FLAG,
    Blackboard,
    BlackboardSnapshot,
    priority_key,
)

logger = logging.getLogger(__name__)


def priority(theta: float, params: PriorityParams) -> float:
    """Piecewise-linear priority: 1 up to theta_min, 0 from theta_max, linear between"""
    params.check()
    if theta <= params.theta_min:
        return 1.0
    if theta >= params.theta_max:
        return 0.0
    return (theta - params.theta_max) / (params.theta_min - params.theta_max)


def priority_curve(thetas: Union[Sequence[float], np.ndarray], params: PriorityParams) -> np.ndarray:
    """Vectorized priority over an array of stimuli"""
    params.check()
    thetas = np.asarray(thetas, dtype=float)
    ramp = (thetas - params.theta_max) / (params.theta_min - params.theta_max)
    return np.where(thetas <= params.theta_min, 1.0,
                    np.where(thetas >= params.theta_max, 0.0, ramp))


def is_active(subtask: SubtaskRecord, snapshot: BlackboardSnapshot) -> bool:
    preconditions_hold = all(snapshot.condition(c) for c in subtask.preconditions)
    goals_hold = all(snapshot.condition(c) for c in subtask.postconditions)
    return preconditions_hold and not goals_hold


def active_set(subtasks: Sequence[SubtaskRecord], snapshot: BlackboardSnapshot) -> List[SubtaskRecord]:
    """Subtasks whose preconditions all hold and whose postconditions do not all hold"""
    return [s for s in subtasks if is_active(s, snapshot)]


def select(active: Sequence[SubtaskRecord]) -> Optional[str]:
    """Highest priority wins; ties go to the lexicographically smallest name"""
    if not active:
        return None
    return min(active, key=lambda s: (-s.epsilon, s.name)).name


def goal_reached(subtasks: Sequence[SubtaskRecord], snapshot: BlackboardSnapshot) -> bool:
    """Every postcondition of every subtask holds"""
    return all(snapshot.condition(c) for s in subtasks for c in s.postconditions)


@dataclass
class PriorityDecision:
    selected: Optional[str]
    changed: bool
    priorities: Dict[str, float]


class Emphasizer:
    """Recomputes priorities from the latest stimuli on every call"""

    def __init__(self, subtasks: Sequence[SubtaskRecord]):
        self.subtasks = list(subtasks)
        for subtask in self.subtasks:
            subtask.params.check()

    def evaluate(self, blackboard: Blackboard, current: Optional[str]) -> PriorityDecision:
        snapshot = blackboard.snapshot()
        active = {s.name for s in active_set(self.subtasks, snapshot)}

        # one vectorized pass per distinct threshold pair
        groups: Dict[PriorityParams, List[SubtaskRecord]] = {}
        for subtask in self.subtasks:
            subtask.epsilon = 0.0
            if subtask.name in active and snapshot.scalar(subtask.stimulus_key) is not None:
                groups.setdefault(subtask.params, []).append(subtask)
        for params, group in groups.items():
            values = priority_curve([snapshot.scalar(s.stimulus_key) for s in group], params)
            for subtask, value in zip(group, values):
                subtask.epsilon = float(value)

        selected = select([s for s in self.subtasks if s.name in active])
        changed = selected != current
        priorities = {s.name: s.epsilon for s in self.subtasks}

        with blackboard.batch() as batch:
            for name, value in priorities.items():
                batch.write(priority_key(name), value)
            batch.write(PRIORITY_CHANGED_FLAG, changed)

        if changed:
            logger.info(f"Priority changed: best subtask {selected!r}, current {current!r}")
        return PriorityDecision(selected, changed, priorities)

    def goal_reached(self, blackboard: Blackboard) -> bool:
        reached = goal_reached(self.subtasks, blackboard.snapshot())
        blackboard.write(GOAL_REACHED_FLAG, reached)
        return reached


def handle_priority(subtasks: Sequence[SubtaskRecord], blackboard: Blackboard,
                    current: Optional[str]) -> NodeStatus:
    """One emphasizer pass; the handle-priority action never terminates"""
    Emphasizer(subtasks).evaluate(blackboard, current)
    return NodeStatus.RUNNING
