"""
Static baseline trees for the sorting task

Hand-built in the classic style: every sort subtree is expanded up front.
Case 1 chains the three boxes in color order; case 2 needs one stump per
box ordering, each guarded by distance comparisons.
"""

from itertools import permutations
from typing import Callable, Optional, Sequence
import logging

from src.config.settings import settings
from src.models.errors import UnknownCase
from src.models.tree import HandlerRegistry, NodeKind, Tree
from src.models.world import BOX_NAMES
from src.services.blackboard import GOAL_REACHED_FLAG, INITIALIZED_FLAG, Blackboard, stimulus_key
from src.services.instantiator import InstantiationContext, Instantiator
from src.services.ltm_store import LtmStore
from src.services.rbt_runtime import INIT_ACTION
from src.services.sorting_sim import placed_flag, subtask_name

logger = logging.getLogger(__name__)


def distance_condition(first: str, second: str) -> str:
    return f"d_{first} <= d_{second}"


def _closer_or_equal(first: str, second: str) -> Callable[[Blackboard], bool]:
    first_key = stimulus_key(subtask_name(first))
    second_key = stimulus_key(subtask_name(second))

    def predicate(blackboard: Blackboard) -> bool:
        snapshot = blackboard.snapshot()
        d_first, d_second = snapshot.scalar(first_key), snapshot.scalar(second_key)
        if d_first is None or d_second is None:
            return False
        return d_first <= d_second

    return predicate


def _all_placed(boxes: Sequence[str]) -> Callable[[Blackboard], bool]:
    def predicate(blackboard: Blackboard) -> bool:
        reached = all(blackboard.read_condition(placed_flag(box)) for box in boxes)
        blackboard.write(GOAL_REACHED_FLAG, reached)
        return reached

    return predicate


def build_baseline_bt(case_id: int, ltm: Optional[LtmStore] = None,
                      handlers: Optional[HandlerRegistry] = None,
                      boxes: Sequence[str] = BOX_NAMES) -> Tree:
    """
    Build the static tree for a case study

    Without handlers the tree is structure-only (actions are not resolved),
    which is enough for counting and rendering.
    """
    if case_id not in (1, 2):
        raise UnknownCase(f"Unknown case study {case_id}")

    ltm = ltm or LtmStore.open(settings.ltm_dir)
    tree = Tree(handlers or HandlerRegistry())
    instantiator = Instantiator(InstantiationContext(ltm, tree.handlers, strict=handlers is not None))

    def sort_subtree(box: str) -> int:
        return tree.graft(instantiator.instantiate_subtree(settings.sort_task, {"box": box}))

    initialize = tree.add(NodeKind.FALLBACK, "initialize", (
        tree.condition(INITIALIZED_FLAG),
        tree.action(INIT_ACTION),
    ))

    if case_id == 1:
        body = tree.add(NodeKind.SEQUENCE, "sort in color order",
                        (initialize, *(sort_subtree(box) for box in boxes)))
    else:
        stumps = []
        for order in permutations(boxes):
            guards = []
            for first, second in zip(order, order[1:]):
                name = distance_condition(first, second)
                tree.conditions[name] = _closer_or_equal(first, second)
                guards.append(tree.condition(name))
            label = "sort " + " < ".join(order)
            stumps.append(tree.add(NodeKind.SEQUENCE, label,
                                   (*guards, *(sort_subtree(box) for box in order))))
        body = tree.add(NodeKind.SEQUENCE, "sort by distance",
                        (initialize, tree.add(NodeKind.FALLBACK, "pick an ordering", tuple(stumps))))

    tree.conditions[GOAL_REACHED_FLAG] = _all_placed(boxes)
    tree.set_root(tree.add(NodeKind.FALLBACK, "bt_root", (tree.condition(GOAL_REACHED_FLAG), body)))
    logger.info(f"Built baseline tree for case {case_id} with {len(tree)} nodes")
    return tree
