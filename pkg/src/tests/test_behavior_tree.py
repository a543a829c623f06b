import itertools
from unittest.mock import Mock

import pytest

from src.models.errors import InvalidThreshold, MalformedTree, UnknownNode, UnresolvedHandler
from src.models.tree import FunctionAction, HandlerRegistry, NodeKind, NodeStatus, Tree
from src.services.behavior_tree import (
    count_nodes,
    reset_subtree,
    tick,
    tick_fallback,
    tick_parallel,
    tick_sequence,
)
from src.services.blackboard import Blackboard

S, F, R = NodeStatus.SUCCESS, NodeStatus.FAILURE, NodeStatus.RUNNING
ALL_TUPLES = [t for n in (1, 2, 3) for t in itertools.product((S, F, R), repeat=n)]


def oracle_fallback(statuses):
    """Brute force: the first non-failure decides"""
    for index, status in enumerate(statuses):
        if all(s == F for s in statuses[:index]) and status in (S, R):
            return status
    return F


def oracle_sequence(statuses):
    for index, status in enumerate(statuses):
        if all(s == S for s in statuses[:index]) and status in (F, R):
            return status
    return S


def oracle_parallel(threshold, statuses):
    n = len(statuses)
    successes = statuses.count(S)
    failures = statuses.count(F)
    # success still reachable if every running child succeeded
    if successes >= threshold:
        return S
    if successes + statuses.count(R) < threshold:
        return F
    assert failures <= n - threshold
    return R


@pytest.fixture
def blackboard():
    """Fresh blackboard"""
    return Blackboard()


@pytest.fixture
def recorder():
    """Handlers that return scripted statuses and record call order"""
    calls = []

    def make(name, status):
        def step(bb):
            calls.append(name)
            return status
        return FunctionAction(name, step)

    return calls, make


def _tree_with_actions(kind, statuses, make, threshold=None):
    handlers = HandlerRegistry()
    tree = Tree(handlers)
    children = []
    for index, status in enumerate(statuses):
        name = f"a{index}"
        handlers.register(make(name, status))
        children.append(tree.action(name))
    tree.set_root(tree.add(kind, "root", tuple(children), threshold=threshold))
    return tree


class TestCombinatorTruthTables:
    """Combinators against an independent brute-force evaluator"""

    def test_tuple_count(self):
        """Arity 1 to 3 gives 39 tuples"""
        assert len(ALL_TUPLES) == 39

    def test_fallback_matches_oracle(self):
        """Zero mismatches over every tuple"""
        mismatches = [t for t in ALL_TUPLES if tick_fallback(iter(t)) != oracle_fallback(list(t))]
        assert mismatches == []

    def test_sequence_matches_oracle(self):
        """Zero mismatches over every tuple"""
        mismatches = [t for t in ALL_TUPLES if tick_sequence(iter(t)) != oracle_sequence(list(t))]
        assert mismatches == []

    def test_parallel_matches_oracle_for_every_threshold(self):
        """Every valid M for every tuple"""
        mismatches = []
        for statuses in ALL_TUPLES:
            for threshold in range(1, len(statuses) + 1):
                if tick_parallel(threshold, statuses) != oracle_parallel(threshold, list(statuses)):
                    mismatches.append((threshold, statuses))
        assert mismatches == []

    def test_parallel_two_of_three(self):
        """Mixed statuses under M=2 and M=3"""
        assert tick_parallel(2, [S, S, F]) == S
        assert tick_parallel(2, [S, F, F]) == F
        assert tick_parallel(2, [S, R, F]) == R
        assert tick_parallel(3, [S, S, F]) == F

    @pytest.mark.parametrize("threshold", [0, 4])
    def test_parallel_threshold_out_of_range(self, threshold):
        """M outside [1, N] is rejected"""
        with pytest.raises(InvalidThreshold):
            tick_parallel(threshold, [S, S, S])

    def test_fallback_and_sequence_mixed(self):
        """Mixed child statuses"""
        assert tick_fallback([F, S, R]) == S
        assert tick_fallback([F, F]) == F
        assert tick_sequence([S, R, F]) == R
        assert tick_sequence([S, S]) == S


class TestTickTraversal:
    """tick() over whole trees"""

    def test_fallback_stops_at_first_success(self, blackboard, recorder):
        """Children after the deciding one are never ticked"""
        calls, make = recorder
        tree = _tree_with_actions(NodeKind.FALLBACK, [F, S, S], make)

        assert tick(tree, None, blackboard) == S
        assert calls == ["a0", "a1"]

    def test_sequence_stops_at_running(self, blackboard, recorder):
        """Running propagates and the tail is skipped"""
        calls, make = recorder
        tree = _tree_with_actions(NodeKind.SEQUENCE, [S, R, S], make)

        assert tick(tree, None, blackboard) == R
        assert calls == ["a0", "a1"]
        assert tree.nodes[tree.root].status == R

    def test_parallel_ticks_all_children(self, blackboard, recorder):
        """Parallel never short-circuits"""
        calls, make = recorder
        tree = _tree_with_actions(NodeKind.PARALLEL, [F, S, R], make, threshold=1)

        assert tick(tree, None, blackboard) == S
        assert calls == ["a0", "a1", "a2"]

    def test_parallel_defaults_to_all_children(self, blackboard, recorder):
        """No threshold means M = N"""
        _, make = recorder
        tree = _tree_with_actions(NodeKind.PARALLEL, [S, R], make)

        assert tick(tree, None, blackboard) == R

    def test_condition_reads_blackboard(self, blackboard):
        """Unknown conditions read as False"""
        tree = Tree()
        tree.set_root(tree.condition("door open"))

        assert tick(tree, None, blackboard) == F
        blackboard.write("door open", True)
        assert tick(tree, None, blackboard) == S

    def test_condition_predicate_takes_precedence(self, blackboard):
        """A registered predicate decides instead of the flag"""
        tree = Tree(conditions={"door open": lambda bb: True})
        tree.set_root(tree.condition("door open"))

        assert tick(tree, None, blackboard) == S

    @pytest.mark.parametrize("policy,child,expected", [
        ("identity", S, S),
        ("inverter", S, F),
        ("inverter", F, S),
        ("inverter", R, R),
        ("force_success", F, S),
        ("force_success", R, R),
    ])
    def test_decorator_policies(self, blackboard, policy, child, expected):
        """Status mapping of each policy"""
        handlers = HandlerRegistry()
        handlers.register(FunctionAction("act", lambda bb: child))
        tree = Tree(handlers)
        tree.set_root(tree.add(NodeKind.DECORATOR, "deco", (tree.action("act"),), policy=policy))

        assert tick(tree, None, blackboard) == expected

    def test_unresolved_handler(self, blackboard):
        """Action without a registered handler"""
        tree = Tree()
        tree.set_root(tree.action("fly"))

        with pytest.raises(UnresolvedHandler):
            tick(tree, None, blackboard)

    def test_empty_control_node_is_malformed(self, blackboard):
        """Control nodes need children"""
        tree = Tree()
        tree.set_root(tree.add(NodeKind.SEQUENCE, "empty"))

        with pytest.raises(MalformedTree):
            tick(tree, None, blackboard)

    def test_tree_without_root(self, blackboard):
        with pytest.raises(MalformedTree):
            tick(Tree(), None, blackboard)


class TestTreeStructure:
    """Arena bookkeeping"""

    def test_shared_child_rejected(self):
        """A node can have one parent only"""
        tree = Tree()
        leaf = tree.condition("x")
        tree.add(NodeKind.SEQUENCE, "a", (leaf,))

        with pytest.raises(MalformedTree):
            tree.add(NodeKind.SEQUENCE, "b", (leaf,))

    def test_unknown_node(self):
        with pytest.raises(UnknownNode):
            Tree().node(42)

    def test_graft_copies_structure(self):
        """Grafted copy is isomorphic to the source"""
        source = Tree()
        source.set_root(source.add(NodeKind.FALLBACK, "fb", (source.condition("c"), source.action("a"))))
        target = Tree()

        new_root = target.graft(source)

        assert target.structure(new_root) == source.structure()
        assert count_nodes(source) == 3

    def test_render_and_validate(self):
        """Indented text view, one node per line"""
        tree = Tree()
        tree.set_root(tree.add(NodeKind.PARALLEL, "par", (tree.action("a"), tree.action("b"))))
        tree.validate()

        lines = tree.render().splitlines()
        assert lines[0] == "[parallel M=2] par"
        assert lines[1] == "  [action] a"
        assert len(lines) == 3

    def test_find_by_label(self):
        tree = Tree()
        leaf = tree.action("a")
        tree.set_root(tree.add(NodeKind.SEQUENCE, "seq", (leaf,)))

        assert tree.find("a") == leaf
        with pytest.raises(UnknownNode):
            tree.find("missing")


class TestResetSubtree:
    """Halting and resetting"""

    def test_running_actions_are_halted(self, blackboard):
        """Only running actions receive halt()"""
        halt_running = Mock()
        halt_done = Mock()
        handlers = HandlerRegistry()
        handlers.register(FunctionAction("done", lambda bb: S, halt_done))
        handlers.register(FunctionAction("busy", lambda bb: R, halt_running))
        tree = Tree(handlers)
        tree.set_root(tree.add(NodeKind.SEQUENCE, "seq", (tree.action("done"), tree.action("busy"))))
        tick(tree, None, blackboard)

        reset_subtree(tree, tree.root)

        halt_running.assert_called_once_with()
        halt_done.assert_not_called()
        assert all(node.status == NodeStatus.FRESH for node in tree.nodes.values())

    def test_reset_is_idempotent(self, blackboard):
        """A second reset halts nothing and leaves every node Fresh"""
        halt = Mock()
        handlers = HandlerRegistry()
        handlers.register(FunctionAction("busy", lambda bb: R, halt))
        tree = Tree(handlers)
        tree.set_root(tree.add(NodeKind.FALLBACK, "fb", (tree.condition("done"), tree.action("busy"))))
        tick(tree, None, blackboard)

        reset_subtree(tree, tree.root)
        first = {node_id: node.status for node_id, node in tree.nodes.items()}
        reset_subtree(tree, tree.root)

        halt.assert_called_once_with()
        assert {node_id: node.status for node_id, node in tree.nodes.items()} == first

    def test_skipped_running_action_is_halted(self, blackboard):
        """A guard that flips stops the action it used to reach"""
        halt = Mock()
        handlers = HandlerRegistry()
        handlers.register(FunctionAction("busy", lambda bb: R, halt))
        tree = Tree(handlers)
        busy = tree.action("busy")
        tree.set_root(tree.add(NodeKind.SEQUENCE, "guarded", (tree.condition("allowed"), busy)))
        blackboard.write("allowed", True)
        assert tick(tree, None, blackboard) == R

        blackboard.write("allowed", False)
        assert tick(tree, None, blackboard) == F

        halt.assert_called_once_with()
        assert tree.nodes[busy].status == NodeStatus.FRESH
        tick(tree, None, blackboard)
        halt.assert_called_once_with()
