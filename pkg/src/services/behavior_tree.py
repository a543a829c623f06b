"""
Tick semantics for the six node types

The combinators take an iterable of child statuses. Fallback and Sequence
consume it lazily, so children to the right of the deciding child are never
ticked when the tree passes a generator; Parallel consumes all of it.
"""

from typing import Callable, Dict, Iterable, Optional, Set
import logging

from src.models.errors import InvalidThreshold, MalformedTree
from src.models.tree import NodeKind, NodeStatus, Tree

logger = logging.getLogger(__name__)


def tick_fallback(children_statuses: Iterable[NodeStatus]) -> NodeStatus:
    """Success at the first success, Running at the first running child, Failure if all fail"""
    for status in children_statuses:
        if status != NodeStatus.FAILURE:
            return status
    return NodeStatus.FAILURE


def tick_sequence(children_statuses: Iterable[NodeStatus]) -> NodeStatus:
    """Failure at the first failure, Running at the first running child, Success if all succeed"""
    for status in children_statuses:
        if status != NodeStatus.SUCCESS:
            return status
    return NodeStatus.SUCCESS


def tick_parallel(threshold: int, children_statuses: Iterable[NodeStatus]) -> NodeStatus:
    """
    M-of-N parallel rule

    Success when at least M children succeed, Failure when more than N - M
    fail, Running otherwise.
    """
    statuses = list(children_statuses)
    total = len(statuses)
    if not 1 <= threshold <= total:
        raise InvalidThreshold(f"Parallel threshold {threshold} outside [1, {total}]")

    successes = sum(1 for s in statuses if s == NodeStatus.SUCCESS)
    failures = sum(1 for s in statuses if s == NodeStatus.FAILURE)
    if successes >= threshold:
        return NodeStatus.SUCCESS
    if failures > total - threshold:
        return NodeStatus.FAILURE
    return NodeStatus.RUNNING


def _identity(status: NodeStatus) -> NodeStatus:
    return status


def _invert(status: NodeStatus) -> NodeStatus:
    if status == NodeStatus.SUCCESS:
        return NodeStatus.FAILURE
    if status == NodeStatus.FAILURE:
        return NodeStatus.SUCCESS
    return status


def _force_success(status: NodeStatus) -> NodeStatus:
    return NodeStatus.RUNNING if status == NodeStatus.RUNNING else NodeStatus.SUCCESS


DECORATOR_POLICIES: Dict[str, Callable[[NodeStatus], NodeStatus]] = {
    "identity": _identity,
    "inverter": _invert,
    "force_success": _force_success,
}


class _TickPass:
    """State of one traversal: the nodes visited so far"""

    def __init__(self, tree: Tree, blackboard):
        self.tree = tree
        self.blackboard = blackboard
        self.visited: Set[int] = set()

    def run(self, node_id: int) -> NodeStatus:
        if node_id in self.visited:
            raise MalformedTree(f"Node {node_id} reached twice in one tick")
        self.visited.add(node_id)

        node = self.tree.node(node_id)
        # snapshot: an action may rewire this node's children mid-tick
        children = tuple(node.children)

        if node.kind == NodeKind.ACTION:
            status = self.tree.handlers.resolve(node.name).step(self.blackboard)
            if status == NodeStatus.FRESH:
                raise ValueError(f"Action '{node.name}' returned {status.value}")
        elif node.kind == NodeKind.CONDITION:
            status = NodeStatus.SUCCESS if self._evaluate(node.name) else NodeStatus.FAILURE
        elif not children:
            raise MalformedTree(f"Control node '{node.label}' has no children")
        elif node.kind == NodeKind.FALLBACK:
            status = tick_fallback(self.run(c) for c in children)
        elif node.kind == NodeKind.SEQUENCE:
            status = tick_sequence(self.run(c) for c in children)
        elif node.kind == NodeKind.PARALLEL:
            threshold = node.threshold if node.threshold is not None else len(children)
            status = tick_parallel(threshold, [self.run(c) for c in children])
        else:
            if len(children) != 1:
                raise MalformedTree(f"Decorator '{node.label}' needs exactly one child")
            policy = DECORATOR_POLICIES.get(node.policy or "identity")
            if policy is None:
                raise ValueError(f"Unknown decorator policy '{node.policy}'")
            status = policy(self.run(children[0]))

        node.status = status
        return status

    def _evaluate(self, name: str) -> bool:
        predicate = self.tree.conditions.get(name)
        if predicate is not None:
            return bool(predicate(self.blackboard))
        return self.blackboard.read_condition(name)


def tick(tree: Tree, root: Optional[int], blackboard) -> NodeStatus:
    """Tick the tree from root, depth-first and left to right"""
    start = tree.root if root is None else root
    if start is None:
        raise MalformedTree("Tree has no root")
    tick_pass = _TickPass(tree, blackboard)
    status = tick_pass.run(start)
    _halt_skipped(tree, start, tick_pass.visited)
    logger.debug(f"Tick from node {start} returned {status.value}")
    return status


def _halt_skipped(tree: Tree, start: int, visited: Set[int]) -> None:
    """Nodes left Running by an earlier tick but not reached by this one are halted"""
    for node_id in tree.iter_subtree(start):
        node = tree.nodes[node_id]
        if node_id in visited or node.status != NodeStatus.RUNNING:
            continue
        if node.kind == NodeKind.ACTION:
            logger.debug(f"Halting skipped action '{node.name}'")
            tree.handlers.resolve(node.name).halt()
        node.status = NodeStatus.FRESH


def reset_subtree(tree: Tree, root: int) -> None:
    """Halt running actions under root, then mark every node Fresh"""
    node_ids = list(tree.iter_subtree(root))
    for node_id in node_ids:
        node = tree.nodes[node_id]
        if node.kind == NodeKind.ACTION and node.status == NodeStatus.RUNNING:
            logger.debug(f"Halting running action '{node.name}'")
            tree.handlers.resolve(node.name).halt()
    for node_id in node_ids:
        tree.nodes[node_id].status = NodeStatus.FRESH


def count_nodes(tree: Tree) -> int:
    """Number of nodes reachable from the root, attached dynamic subtrees included"""
    return len(tree)
