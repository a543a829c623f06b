"""
Sorting task simulation

Three boxes on a table, one storage slot each, and a gripper. Distances are
straight-line Euclidean; there is no physics. In instant mode pick and
place complete inside the action's tick and the gripper never moves; in
stepped mode the action posts an intent and the gripper travels step_size
meters per world step, which the runtime runs between ticks.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union
import logging
import threading

import numpy as np

from src.config.settings import settings
from src.models.errors import GripperOccupied, NotHeld, OutOfReach, RbtError, UnknownCase
from src.models.tree import ActionHandler, HandlerRegistry, NodeStatus
from src.models.world import BOX_NAMES, Box, Intent, Perturbation, Vector, WorldState
from src.schemas.ltm import TaskRecord
from src.schemas.scenario import ScenarioFile
from src.schemas.subtask import PriorityParams, SubtaskRecord
from src.services.blackboard import Blackboard, stimulus_key
from src.services.ltm_store import LtmStore

logger = logging.getLogger(__name__)

# synthetic fixture: gripper at the origin, boxes 0.30 / 0.55 / 0.80 m away
FIXTURE_DIRECTIONS: Dict[str, Vector] = {
    "b_box": (1.0, 0.0, 0.0),
    "g_box": (0.0, 1.0, 0.0),
    "r_box": (-1.0, 0.0, 0.0),
}
FIXTURE_DISTANCES: Dict[str, float] = {"b_box": 0.30, "g_box": 0.55, "r_box": 0.80}
FIXTURE_SLOTS: Dict[str, Vector] = {
    "b_box": (0.05, -0.2, 0.0),
    "g_box": (0.0, -0.2, 0.0),
    "r_box": (-0.05, -0.2, 0.0),
}
PLACEMENT_TOLERANCE = 1e-9


def subtask_name(box: str) -> str:
    return f"sort {box}"


def picked_flag(box: str) -> str:
    return f"{box} picked"


def placed_flag(box: str) -> str:
    return f"{box} placed"


def distance(a: Vector, b: Vector) -> float:
    return float(np.linalg.norm(np.subtract(a, b)))


def _move_towards(origin: Vector, target: Vector, step: float) -> Tuple[Vector, bool]:
    offset = np.subtract(target, origin)
    length = float(np.linalg.norm(offset))
    if length <= step:
        return tuple(float(v) for v in target), True
    moved = np.asarray(origin, dtype=float) + offset * (step / length)
    return tuple(float(v) for v in moved), False


def fixture_world(distances: Optional[Mapping[str, float]] = None, mode: str = "instant",
                  step_size: Optional[float] = None, theta_max: Optional[float] = None) -> WorldState:
    """Gripper at the origin, each box on its own axis at the given distance"""
    distances = dict(distances or FIXTURE_DISTANCES)
    boxes = {
        name: Box(position=tuple(float(v) * distances[name] for v in FIXTURE_DIRECTIONS[name]))
        for name in BOX_NAMES
    }
    return WorldState(
        gripper=(0.0, 0.0, 0.0),
        boxes=boxes,
        storage_slots=dict(FIXTURE_SLOTS),
        step_size=step_size if step_size is not None else settings.step_size,
        theta_max=theta_max if theta_max is not None else settings.theta_max,
        mode=mode,
    )


def step_world(world: WorldState, intent: Optional[Intent],
               blackboard: Optional[Blackboard] = None) -> WorldState:
    """Advance the world by one step of the given intent, writing picked/placed flags"""
    if intent is None:
        return world
    box = world.boxes[intent.box]

    if intent.kind == "pick":
        if box.held or box.placed:
            return world
        held = world.held_box()
        if held is not None:
            raise GripperOccupied(f"Cannot pick {intent.box}: holding {held}")
        gap = distance(world.gripper, box.position)
        if gap > world.theta_max:
            raise OutOfReach(f"{intent.box} is {gap:.3f} m away, limit {world.theta_max} m")

        if world.mode == "instant":
            return _grasp(world, intent.box, world.gripper, blackboard)
        gripper, arrived = _move_towards(world.gripper, box.position, world.step_size)
        if arrived:
            return _grasp(world, intent.box, gripper, blackboard)
        return replace(world, gripper=gripper)

    if not box.held:
        raise NotHeld(f"Cannot place {intent.box}: not held")
    slot = world.storage_slots[intent.box]
    if world.mode == "instant":
        return _release(world, intent.box, world.gripper, blackboard)
    gripper, arrived = _move_towards(world.gripper, slot, world.step_size)
    if arrived:
        return _release(world, intent.box, gripper, blackboard)
    return replace(world, gripper=gripper).with_box(intent.box, position=gripper)


def _grasp(world: WorldState, name: str, gripper: Vector, blackboard: Optional[Blackboard]) -> WorldState:
    world = replace(world, gripper=gripper).with_box(name, held=True, position=gripper)
    if blackboard is not None:
        blackboard.write(picked_flag(name), True)
    logger.debug(f"Picked {name}")
    return world


def _release(world: WorldState, name: str, gripper: Vector, blackboard: Optional[Blackboard]) -> WorldState:
    slot = world.storage_slots[name]
    world = replace(world, gripper=gripper, placed_order=(*world.placed_order, name))
    world = world.with_box(name, held=False, placed=True, position=slot)
    if blackboard is not None:
        blackboard.write(placed_flag(name), True)
    logger.info(f"Placed {name}")
    return world


def emit_stimuli(world: WorldState, blackboard: Blackboard) -> None:
    """Write gripper-to-box distances for every unplaced box"""
    with blackboard.batch() as batch:
        for name, box in world.boxes.items():
            if box.placed:
                continue
            batch.write(stimulus_key(subtask_name(name)), distance(world.gripper, box.position), unit="m")


def _is_done(world: WorldState, intent: Intent) -> bool:
    box = world.boxes[intent.box]
    if intent.kind == "pick":
        return box.held or box.placed
    return box.placed


class SimAction(ActionHandler):
    """pick <box> / place <box> bound to a simulation"""

    def __init__(self, simulation: "SortingSimulation", intent: Intent):
        self.simulation = simulation
        self.intent = intent
        self.name = f"{intent.kind} {intent.box}"

    def step(self, blackboard) -> NodeStatus:
        simulation = self.simulation
        if _is_done(simulation.world, self.intent):
            return NodeStatus.SUCCESS
        if simulation.world.mode == "instant":
            return simulation.apply(self.intent, blackboard)
        if simulation.take_failure(self.intent):
            return NodeStatus.FAILURE
        simulation.request(self.intent)
        return NodeStatus.RUNNING

    def halt(self) -> None:
        self.simulation.cancel(self.intent)


class SortingSimulation:
    """
    Owns the world state and acts as the world stepper for both engines

    Called between ticks with (blackboard, tick): advances the pending
    stepped intent, applies scheduled perturbations, then senses.
    """

    def __init__(self, world: WorldState, perturbations: Sequence[Perturbation] = ()):
        self.world = world
        self.perturbations = list(perturbations)
        self.pending: Optional[Intent] = None
        self._failed: Optional[Intent] = None
        # boxes set down by a halted place; their picked flags clear on the next step
        self._dropped: List[str] = []

    @property
    def placed_order(self) -> List[str]:
        return list(self.world.placed_order)

    def handlers(self) -> HandlerRegistry:
        registry = HandlerRegistry()
        for name in self.world.boxes:
            for kind in ("pick", "place"):
                registry.register(SimAction(self, Intent(kind, name)))
        return registry

    def apply(self, intent: Intent, blackboard: Blackboard) -> NodeStatus:
        try:
            self.world = step_world(self.world, intent, blackboard)
        except RbtError as e:
            logger.warning(f"{intent.kind} {intent.box} failed: {e}")
            return NodeStatus.FAILURE
        return NodeStatus.SUCCESS if _is_done(self.world, intent) else NodeStatus.RUNNING

    def request(self, intent: Intent) -> None:
        if self.pending != intent:
            logger.debug(f"Gripper now working on {intent.kind} {intent.box}")
        self.pending = intent

    def cancel(self, intent: Intent) -> None:
        """Drop the pending intent; a box being carried is set down under the gripper"""
        if self.pending != intent:
            return
        logger.info(f"Cancelled {intent.kind} {intent.box}")
        self.pending = None
        if intent.kind == "place" and self.world.boxes[intent.box].held:
            self.world = self.world.with_box(intent.box, held=False, position=self.world.gripper)
            self._dropped.append(intent.box)
            logger.info(f"Set {intent.box} down at {self.world.gripper}")

    def take_failure(self, intent: Intent) -> bool:
        if self._failed == intent:
            self._failed = None
            return True
        return False

    def __call__(self, blackboard: Blackboard, tick: int) -> None:
        if self.pending is not None:
            intent = self.pending
            try:
                self.world = step_world(self.world, intent, blackboard)
            except RbtError as e:
                logger.warning(f"{intent.kind} {intent.box} failed: {e}")
                self._failed = intent
                self.pending = None
            else:
                if _is_done(self.world, intent):
                    self.pending = None

        if self._dropped:
            with blackboard.batch() as batch:
                for name in self._dropped:
                    batch.write(picked_flag(name), False)
            self._dropped.clear()

        for perturbation in self.perturbations:
            if perturbation.tick == tick:
                self._perturb(perturbation)

        emit_stimuli(self.world, blackboard)

    def _perturb(self, perturbation: Perturbation) -> None:
        box = self.world.boxes[perturbation.box]
        if box.held or box.placed:
            logger.warning(f"Ignoring perturbation of {perturbation.box}: box is held or placed")
            return
        logger.info(f"Perturbation: {perturbation.box} moved to {perturbation.position}")
        self.world = self.world.with_box(perturbation.box, position=tuple(perturbation.position))


class SensorThread(threading.Thread):
    """Pushes stimuli from a background thread at a fixed period"""

    def __init__(self, simulation: SortingSimulation, blackboard: Blackboard, period_s: float = 0.001):
        super().__init__(daemon=True, name="sorting-sensor")
        self.simulation = simulation
        self.blackboard = blackboard
        self.period_s = period_s
        self._stop_event = threading.Event()
        self.samples = 0

    def run(self) -> None:
        while not self._stop_event.is_set():
            emit_stimuli(self.simulation.world, self.blackboard)
            self.samples += 1
            self._stop_event.wait(self.period_s)

    def stop(self) -> None:
        self._stop_event.set()
        self.join()


@dataclass
class ScenarioScript:
    initial: WorldState
    case_id: int
    subtasks: List[SubtaskRecord]
    perturbations: List[Perturbation] = field(default_factory=list)

    def fresh_subtasks(self) -> List[SubtaskRecord]:
        return [s.model_copy(deep=True) for s in self.subtasks]


def case_subtasks(case_id: int, params: Optional[PriorityParams] = None,
                  boxes: Sequence[str] = BOX_NAMES) -> List[SubtaskRecord]:
    """Case 1 chains preconditions (b, then g, then r); case 2 has none"""
    if case_id not in (1, 2):
        raise UnknownCase(f"Unknown case study {case_id}")
    params = params or PriorityParams(theta_min=settings.theta_min, theta_max=settings.theta_max)
    records = []
    for index, box in enumerate(boxes):
        preconditions = [placed_flag(b) for b in boxes[:index]] if case_id == 1 else []
        records.append(SubtaskRecord(
            name=subtask_name(box),
            task=settings.sort_task,
            binding={"box": box},
            preconditions=preconditions,
            postconditions=[placed_flag(box)],
            params=params,
        ))
    return records


def build_case(case_id: int, ltm: Optional[LtmStore] = None,
               world: Optional[WorldState] = None) -> Tuple[ScenarioScript, Dict[str, TaskRecord]]:
    """Scenario script plus the LTM tasks it needs"""
    subtasks = case_subtasks(case_id)
    ltm = ltm or LtmStore.open(settings.ltm_dir)
    tasks = {name: ltm.task(name) for name in (settings.root_task, settings.sort_task)}
    script = ScenarioScript(initial=world or fixture_world(), case_id=case_id, subtasks=subtasks)
    return script, tasks


def script_from_file(scenario: ScenarioFile) -> ScenarioScript:
    world = WorldState(
        gripper=tuple(scenario.gripper),
        boxes={name: Box(position=tuple(position)) for name, position in scenario.boxes.items()},
        storage_slots={name: tuple(position) for name, position in scenario.slots.items()},
        step_size=scenario.step_size or settings.step_size,
        theta_max=scenario.theta_max,
        mode=scenario.mode,
    )
    params = PriorityParams(theta_min=scenario.theta_min, theta_max=scenario.theta_max)
    return ScenarioScript(
        initial=world,
        case_id=scenario.case,
        subtasks=case_subtasks(scenario.case, params, tuple(sorted(scenario.boxes))),
        perturbations=[Perturbation(p.tick, p.box, tuple(p.position)) for p in scenario.perturbations],
    )


def load_scenario(path: Union[str, Path]) -> ScenarioScript:
    scenario = ScenarioFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
    return script_from_file(scenario)
