"""
Scenario runner

Drives either engine over a sorting scenario and condenses the run into a
RunReport. Only the time spent inside ticks is accumulated; world stepping
and sensing happen between ticks.
"""

from typing import List, Literal, Optional, Sequence, Tuple
import logging
import time

from src.config.settings import settings
from src.models.errors import TickBudgetExhausted
from src.models.tree import FunctionAction, NodeStatus, Tree
from src.schemas.reports import NodeCountRange, RunReport, TickTrace
from src.schemas.subtask import SubtaskRecord
from src.services.baseline_bt import build_baseline_bt
from src.services.behavior_tree import count_nodes, tick
from src.services.blackboard import GOAL_REACHED_FLAG, Blackboard
from src.services.ltm_store import LtmStore
from src.services.rbt_runtime import INIT_ACTION, TraceWriter, WorldStepper, build_engine, run_to_goal
from src.services.sorting_sim import ScenarioScript, SortingSimulation

logger = logging.getLogger(__name__)

EngineMode = Literal["rbt", "bt"]


def run_baseline(tree: Tree, blackboard: Blackboard, world: Optional[WorldStepper],
                 max_ticks: int) -> List[TickTrace]:
    """Tick a static tree until the root succeeds, with the same sensing cadence as run_to_goal"""
    traces: List[TickTrace] = []
    if max_ticks <= 0:
        raise TickBudgetExhausted(max_ticks, traces)

    if world is not None:
        world(blackboard, 0)
    nodes = count_nodes(tree)
    for index in range(1, max_ticks + 1):
        start = time.perf_counter_ns()
        status = tick(tree, None, blackboard)
        elapsed = time.perf_counter_ns() - start
        if status == NodeStatus.FAILURE:
            logger.warning(f"Tick {index}: baseline root failed, retrying")

        trace = TickTrace(tick=index, root_status=status, flags=blackboard.conditions(),
                          tick_ns=elapsed, node_count=nodes)
        traces.append(trace)
        if status == NodeStatus.SUCCESS:
            logger.info(f"Baseline goal reached at tick {index}")
            return traces
        if world is not None:
            world(blackboard, index)
    raise TickBudgetExhausted(max_ticks, traces)


def _node_range(traces: Sequence[TickTrace], mode: EngineMode) -> NodeCountRange:
    counted = [t.node_count for t in traces if mode == "bt" or t.current is not None]
    counted = counted or [t.node_count for t in traces] or [0]
    return NodeCountRange(min=min(counted), max=max(counted))


def _init_handler(subtasks: Sequence[SubtaskRecord]) -> FunctionAction:
    def initialize(blackboard: Blackboard) -> NodeStatus:
        blackboard.initialize(subtasks, [GOAL_REACHED_FLAG])
        return NodeStatus.SUCCESS

    return FunctionAction(INIT_ACTION, initialize)


def run_scenario(script: ScenarioScript, mode: EngineMode, ltm: Optional[LtmStore] = None,
                 max_ticks: Optional[int] = None,
                 trace_writer: Optional[TraceWriter] = None) -> Tuple[RunReport, List[TickTrace]]:
    """Run one scenario to goal or budget; the budget case is reported, not raised"""
    ltm = ltm or LtmStore.open(settings.ltm_dir)
    max_ticks = settings.max_ticks if max_ticks is None else max_ticks
    simulation = SortingSimulation(script.initial, script.perturbations)
    subtasks = script.fresh_subtasks()
    blackboard = Blackboard()

    if mode == "rbt":
        engine = build_engine(ltm, settings.root_task, subtasks, simulation.handlers(), blackboard)
    else:
        handlers = simulation.handlers()
        handlers.register(_init_handler(subtasks))
        tree = build_baseline_bt(script.case_id, ltm, handlers, tuple(sorted(script.initial.boxes)))

    try:
        if mode == "rbt":
            traces = run_to_goal(engine, simulation, max_ticks)
        else:
            traces = run_baseline(tree, blackboard, simulation, max_ticks)
        goal_reached = True
    except TickBudgetExhausted as e:
        logger.warning(f"{mode} case {script.case_id}: no goal within {e.max_ticks} ticks")
        traces = e.trace
        goal_reached = False

    if trace_writer is not None:
        trace_writer.write_all(traces)

    report = RunReport(
        mode=mode,
        case_id=script.case_id,
        node_count=_node_range(traces, mode),
        goal_reached=goal_reached,
        total_tick_time=sum(t.tick_ns for t in traces) / 1e6,
        simulated_time_ms=len(traces) * settings.tick_period_ms,
        ticks=len(traces),
        sort_order=simulation.placed_order,
    )
    logger.info(report.summary())
    return report, traces
