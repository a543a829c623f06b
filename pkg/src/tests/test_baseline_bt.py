import itertools

import pytest

from src.config.settings import settings
from src.models.errors import TickBudgetExhausted, UnknownCase
from src.models.tree import NodeKind, NodeStatus
from src.models.world import BOX_NAMES, Box, WorldState
from src.services.baseline_bt import build_baseline_bt, distance_condition
from src.services.behavior_tree import count_nodes
from src.services.blackboard import Blackboard, stimulus_key
from src.services.ltm_store import LtmStore
from src.services.scenario_runner import run_baseline, run_scenario
from src.services.sorting_sim import ScenarioScript, build_case, case_subtasks, fixture_world

DISTANCES = (0.30, 0.55, 0.80)


@pytest.fixture
def ltm():
    """The bundled long-term memory"""
    return LtmStore.open(settings.ltm_dir)


def _script(case_id, assignment=None):
    return ScenarioScript(initial=fixture_world(assignment), case_id=case_id, subtasks=case_subtasks(case_id))


class TestBaselineStructure:
    """Node counts of the static trees"""

    def test_case_one_count(self, ltm):
        assert count_nodes(build_baseline_bt(1, ltm)) == 27

    def test_case_two_count(self, ltm):
        assert count_nodes(build_baseline_bt(2, ltm)) == 151

    def test_stumps_cover_every_ordering(self, ltm):
        """Six stumps of 24 nodes, one per ordering"""
        tree = build_baseline_bt(2, ltm)
        stumps = tree.nodes[tree.find("pick an ordering")].children

        assert len(stumps) == 6
        assert all(len(list(tree.iter_subtree(s))) == 24 for s in stumps)
        labels = [tree.nodes[s].label for s in stumps]
        assert labels == ["sort " + " < ".join(order) for order in itertools.permutations(BOX_NAMES)]

    def test_unknown_case(self, ltm):
        with pytest.raises(UnknownCase):
            build_baseline_bt(0, ltm)

    def test_distance_condition_needs_both_stimuli(self, ltm):
        tree = build_baseline_bt(2, ltm)
        predicate = tree.conditions[distance_condition("b_box", "g_box")]
        bb = Blackboard()

        bb.write(stimulus_key("sort b_box"), 0.3)
        assert predicate(bb) is False
        bb.write(stimulus_key("sort g_box"), 0.3)
        assert predicate(bb) is True
        bb.write(stimulus_key("sort g_box"), 0.2)
        assert predicate(bb) is False

    def test_rbt_uses_fewer_nodes(self, ltm):
        """Case two: at least 85% fewer nodes than the baseline"""
        script, _ = build_case(2, ltm)
        report, _ = run_scenario(script, "rbt", ltm)

        assert 1 - report.node_count.max / count_nodes(build_baseline_bt(2, ltm)) >= 0.85


class TestBaselineRuns:
    """Behavior of the static trees"""

    @pytest.mark.parametrize("distances", list(itertools.permutations(DISTANCES)))
    def test_case_two_matches_rbt_order(self, ltm, distances):
        assignment = dict(zip(BOX_NAMES, distances))
        script = _script(2, assignment)

        bt_report, _ = run_scenario(script, "bt", ltm)
        rbt_report, _ = run_scenario(script, "rbt", ltm)

        assert bt_report.goal_reached and rbt_report.goal_reached
        assert bt_report.sort_order == rbt_report.sort_order == sorted(BOX_NAMES, key=assignment.get)

    @pytest.mark.parametrize("distances", list(itertools.permutations(DISTANCES)))
    def test_case_one_sorts_in_color_order(self, ltm, distances):
        report, _ = run_scenario(_script(1, dict(zip(BOX_NAMES, distances))), "bt", ltm)

        assert report.goal_reached
        assert report.sort_order == list(BOX_NAMES)
        assert report.node_count.min == report.node_count.max == 27

    def test_run_baseline_budget(self, ltm):
        with pytest.raises(TickBudgetExhausted) as excinfo:
            run_baseline(build_baseline_bt(2, ltm), Blackboard(), None, 0)

        assert excinfo.value.trace == []

    def test_root_succeeds_only_when_all_placed(self, ltm):
        _, traces = run_scenario(_script(2), "bt", ltm)

        assert [t.root_status for t in traces[:-1]] == [NodeStatus.RUNNING] * (len(traces) - 1)
        assert traces[-1].root_status == NodeStatus.SUCCESS
        assert all(traces[-1].flags[f"{box} placed"] for box in BOX_NAMES)

    def test_goal_condition_guards_the_root(self, ltm):
        tree = build_baseline_bt(1, ltm)
        root = tree.nodes[tree.root]

        assert root.kind == NodeKind.FALLBACK
        assert tree.nodes[root.children[0]].label == "goal reached"

    def test_scenario_box_names_reach_the_baseline(self, ltm):
        """Both engines run a scenario whose boxes are not the default three"""
        world = WorldState(
            gripper=(0.0, 0.0, 0.0),
            boxes={"a_box": Box((0.6, 0.0, 0.0)), "c_box": Box((0.0, 0.3, 0.0))},
            storage_slots={"a_box": (0.05, -0.2, 0.0), "c_box": (0.0, -0.2, 0.0)},
        )
        script = ScenarioScript(initial=world, case_id=2, subtasks=case_subtasks(2, boxes=("a_box", "c_box")))

        bt_report, _ = run_scenario(script, "bt", ltm)
        rbt_report, _ = run_scenario(script, "rbt", ltm)

        assert bt_report.goal_reached and rbt_report.goal_reached
        assert bt_report.sort_order == rbt_report.sort_order == ["c_box", "a_box"]
