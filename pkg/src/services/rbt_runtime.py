"""
Reconfigurable behavior tree runtime

Runs the generic skeleton: goal gating, blackboard initialization, and the
parallel branch where the emphasizer runs next to the dynamically
allocated subtree. Reconfiguration (detach, instantiate, attach) happens
inside the load-subtree action, never while the attached subtree is being
traversed.
"""

from pathlib import Path
from typing import Callable, IO, List, Optional, Sequence, Union
import logging
import time

from src.config.settings import settings
from src.models.errors import EngineHalted, MalformedTree, NothingAttached, TickBudgetExhausted
from src.models.tree import PLACEHOLDER_HANDLER, FunctionAction, HandlerRegistry, NodeStatus, Tree
from src.schemas.reports import TickTrace
from src.schemas.subtask import SubtaskRecord
from src.services.behavior_tree import count_nodes, reset_subtree, tick
from src.services.blackboard import GOAL_REACHED_FLAG, PRIORITY_CHANGED_FLAG, Blackboard
from src.services.emphasizer import Emphasizer, PriorityDecision
from src.services.instantiator import (
    InstantiationContext,
    Instantiator,
    attach_dynamic,
    detach_dynamic,
)
from src.services.ltm_store import LtmStore, get_task_from_ltm

logger = logging.getLogger(__name__)

INIT_ACTION = "initialize blackboard"
HANDLE_PRIORITY_ACTION = "handle priority"
LOAD_ACTION = "load subtree"

WorldStepper = Callable[[Blackboard, int], None]


class RbtEngine:
    """
    One running reconfigurable tree

    The skeleton always holds either the empty placeholder or exactly one
    attached subtree; current names the subtask attached, or None.
    Not safe to tick from two threads; stimuli may arrive concurrently
    through the blackboard.
    """

    def __init__(self, ltm: LtmStore, root_task: str, subtasks: Sequence[SubtaskRecord],
                 handlers: Optional[HandlerRegistry] = None,
                 blackboard: Optional[Blackboard] = None,
                 tick_period_ms: Optional[float] = None):
        self.ltm = ltm
        self.subtasks = list(subtasks)
        self.bb = blackboard or Blackboard()
        self.tick_period_ms = tick_period_ms if tick_period_ms is not None else settings.tick_period_ms
        self.emphasizer = Emphasizer(self.subtasks)

        self.handlers = HandlerRegistry()
        if handlers is not None:
            self.handlers.merge(handlers)
        self.handlers.register(FunctionAction(INIT_ACTION, self._initialize_blackboard))
        self.handlers.register(FunctionAction(HANDLE_PRIORITY_ACTION, self._handle_priority))
        self.handlers.register(FunctionAction(LOAD_ACTION, self._load_subtree))
        self.handlers.register(FunctionAction(PLACEHOLDER_HANDLER, lambda bb: NodeStatus.RUNNING))

        self.instantiator = Instantiator(InstantiationContext(ltm, self.handlers, self.bb))
        self.skeleton: Tree = self.instantiator.build_tree(get_task_from_ltm(ltm, root_task))
        self.skeleton.conditions[GOAL_REACHED_FLAG] = self.emphasizer.goal_reached

        placeholders = self.skeleton.placeholders()
        if len(placeholders) != 1:
            raise MalformedTree(f"Skeleton needs exactly one '{PLACEHOLDER_HANDLER}' node, found {len(placeholders)}")
        self.placeholder = placeholders[0]
        self.branch = self.skeleton.node(self.placeholder).parent

        self.current: Optional[str] = None
        self.attached: Optional[int] = None
        self.tick_index = 0
        self.finished = False
        self._decision: Optional[PriorityDecision] = None
        self._changed_this_tick = False

    # Action bodies

    def _initialize_blackboard(self, blackboard: Blackboard) -> NodeStatus:
        blackboard.initialize(self.subtasks, [GOAL_REACHED_FLAG])
        return NodeStatus.SUCCESS

    def _handle_priority(self, blackboard: Blackboard) -> NodeStatus:
        self._decision = self.emphasizer.evaluate(blackboard, self.current)
        self._changed_this_tick = self._changed_this_tick or self._decision.changed
        return NodeStatus.RUNNING

    def _load_subtree(self, blackboard: Blackboard) -> NodeStatus:
        if self.attached is not None:
            self.preempt()
        target = self._decision.selected if self._decision else None
        if target is not None:
            subtask = next(s for s in self.subtasks if s.name == target)
            subtree = self.instantiator.instantiate_subtask(subtask)
            self.attached = attach_dynamic(self.skeleton, self.placeholder, subtree)
            self.current = target
            logger.info(f"Instantiated '{target}' ({count_nodes(self.skeleton)} nodes in tree)")
        blackboard.write(PRIORITY_CHANGED_FLAG, False)
        return NodeStatus.SUCCESS

    # Operations

    def preempt(self) -> None:
        """Halt and deallocate the attached subtree; blackboard flags are left alone"""
        if self.attached is None:
            raise NothingAttached("No subtree is attached to the placeholder")
        logger.info(f"Preempting '{self.current}'")
        restored = detach_dynamic(self.skeleton, self.attached)
        self.placeholder = restored
        self.attached = None
        self.current = None

    def tick_once(self) -> TickTrace:
        if self.finished:
            raise EngineHalted("Goal already reached")

        self.tick_index += 1
        self._changed_this_tick = False
        start = time.perf_counter_ns()

        status = tick(self.skeleton, None, self.bb)
        if status == NodeStatus.FAILURE:
            logger.warning(f"Tick {self.tick_index}: root failed, resetting the dynamic branch and retrying")
            reset_subtree(self.skeleton, self.branch)
        elif self.skeleton.node(self.branch).status == NodeStatus.SUCCESS:
            reset_subtree(self.skeleton, self.branch)

        elapsed = time.perf_counter_ns() - start
        if status == NodeStatus.SUCCESS:
            self.finished = True
            logger.info(f"Goal reached at tick {self.tick_index}")

        trace = TickTrace(
            tick=self.tick_index,
            root_status=status,
            current=self.current,
            priorities={s.name: s.epsilon for s in self.subtasks},
            flags=self.bb.conditions(),
            tick_ns=elapsed,
            node_count=count_nodes(self.skeleton),
            priority_changed=self._changed_this_tick,
        )
        logger.debug(f"Tick {trace.tick}: {status.value}, current {self.current!r}")
        return trace

    def count_nodes(self) -> int:
        return count_nodes(self.skeleton)


def build_engine(ltm: LtmStore, root_task: str, subtasks: Sequence[SubtaskRecord],
                 handlers: Optional[HandlerRegistry] = None,
                 blackboard: Optional[Blackboard] = None) -> RbtEngine:
    return RbtEngine(ltm, root_task, subtasks, handlers, blackboard)


def tick_once(engine: RbtEngine) -> TickTrace:
    return engine.tick_once()


def preempt(engine: RbtEngine) -> None:
    engine.preempt()


def run_to_goal(engine: RbtEngine, world: Optional[WorldStepper], max_ticks: int) -> List[TickTrace]:
    """
    Tick until the goal is reached

    The world stepper senses once before the first tick and once after every
    tick; its time is not part of any tick_ns.
    """
    traces: List[TickTrace] = []
    if max_ticks <= 0:
        raise TickBudgetExhausted(max_ticks, traces)

    if world is not None:
        world(engine.bb, 0)
    for _ in range(max_ticks):
        trace = engine.tick_once()
        traces.append(trace)
        if trace.root_status == NodeStatus.SUCCESS:
            return traces
        if world is not None:
            world(engine.bb, trace.tick)
    raise TickBudgetExhausted(max_ticks, traces)


def total_tick_ns(traces: Sequence[TickTrace]) -> int:
    return sum(trace.tick_ns for trace in traces)


class TraceWriter:
    """Writes one TickTrace per line"""

    def __init__(self, target: Union[str, Path, IO[str]]):
        self._owned = not hasattr(target, "write")
        self._stream: IO[str] = open(target, "w", encoding="utf-8") if self._owned else target

    def write(self, trace: TickTrace) -> None:
        self._stream.write(trace.model_dump_json() + "\n")

    def write_all(self, traces: Sequence[TickTrace]) -> None:
        for trace in traces:
            self.write(trace)

    def close(self) -> None:
        if self._owned:
            self._stream.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()
