import numpy as np
import pytest

from src.models.errors import InvalidParams
from src.models.tree import NodeStatus
from src.schemas.subtask import PriorityParams, SubtaskRecord
from src.services.blackboard import (
    GOAL_REACHED_FLAG,
    PRIORITY_CHANGED_FLAG,
    UNOBSERVED,
    Blackboard,
    priority_key,
    stimulus_key,
)
from src.services.emphasizer import (
    Emphasizer,
    active_set,
    goal_reached,
    handle_priority,
    priority,
    priority_curve,
    select,
)

PARAMS = PriorityParams(theta_min=0.05, theta_max=1.0)


@pytest.fixture
def subtasks():
    """Three sort subtasks without preconditions"""
    return [
        SubtaskRecord(name=f"sort {box}", task="sort box", binding={"box": box},
                      postconditions=[f"{box} placed"], params=PARAMS)
        for box in ("b_box", "g_box", "r_box")
    ]


@pytest.fixture
def blackboard(subtasks):
    """Initialized blackboard with all three stimuli observed"""
    bb = Blackboard()
    bb.initialize(subtasks, [GOAL_REACHED_FLAG])
    for subtask, distance in zip(subtasks, (0.30, 0.55, 0.80)):
        bb.write(stimulus_key(subtask.name), distance)
    return bb


class TestPriorityRamp:
    """The piecewise-linear priority"""

    def test_grid_matches_closed_form(self):
        """10,000 points over [0, 2 theta_max]"""
        thetas = np.linspace(0.0, 2 * PARAMS.theta_max, 10_000)
        expected = np.clip((thetas - 1.0) / (0.05 - 1.0), 0.0, 1.0)

        scalar = np.array([priority(float(t), PARAMS) for t in thetas])

        assert np.max(np.abs(scalar - expected)) <= 1e-12
        assert np.max(np.abs(priority_curve(thetas, PARAMS) - expected)) <= 1e-12

    def test_non_increasing(self):
        values = priority_curve(np.linspace(0.0, 2.0, 10_000), PARAMS)

        assert np.all(np.diff(values) <= 0.0)

    def test_endpoints_are_exact(self):
        assert priority(0.05, PARAMS) == 1.0
        assert priority(1.0, PARAMS) == 0.0
        assert priority(0.0, PARAMS) == 1.0
        assert priority(7.0, PARAMS) == 0.0

    def test_interior_values(self):
        assert priority(0.525, PARAMS) == pytest.approx(0.5)
        assert priority(0.30, PARAMS) == pytest.approx(0.7 / 0.95)

    @pytest.mark.parametrize("theta_min,theta_max", [(1.0, 1.0), (2.0, 1.0)])
    def test_invalid_params(self, theta_min, theta_max):
        with pytest.raises(InvalidParams):
            priority(0.5, PriorityParams(theta_min=theta_min, theta_max=theta_max))

    def test_scaled_params(self):
        scaled = PARAMS.scaled(10.0)

        assert scaled.theta_min == pytest.approx(0.5)
        assert priority(5.25, scaled) == pytest.approx(0.5)


class TestActiveSet:
    """Gating by pre- and postconditions"""

    def test_preconditions_gate_activity(self, subtasks):
        gated = subtasks[1].model_copy(update={"preconditions": ["b_box placed"]})
        bb = Blackboard()
        bb.initialize([subtasks[0], gated])

        assert [s.name for s in active_set([subtasks[0], gated], bb.snapshot())] == ["sort b_box"]
        bb.write("b_box placed", True)
        assert [s.name for s in active_set([subtasks[0], gated], bb.snapshot())] == ["sort g_box"]

    def test_select_tie_breaks_by_name(self, subtasks):
        for subtask in subtasks:
            subtask.epsilon = 0.5

        assert select(subtasks) == "sort b_box"
        assert select([]) is None

    def test_goal_reached(self, subtasks, blackboard):
        assert goal_reached(subtasks, blackboard.snapshot()) is False
        for box in ("b_box", "g_box", "r_box"):
            blackboard.write(f"{box} placed", True)
        assert goal_reached(subtasks, blackboard.snapshot()) is True


class TestEmphasizer:
    """Priority updates on the blackboard"""

    def test_closest_box_selected(self, subtasks, blackboard):
        decision = Emphasizer(subtasks).evaluate(blackboard, None)

        assert decision.selected == "sort b_box"
        assert decision.changed is True
        assert blackboard.read_condition(PRIORITY_CHANGED_FLAG) is True
        assert blackboard.read(priority_key("sort g_box")) == pytest.approx(0.45 / 0.95)

    def test_flag_clear_when_selection_unchanged(self, subtasks, blackboard):
        decision = Emphasizer(subtasks).evaluate(blackboard, "sort b_box")

        assert decision.changed is False
        assert blackboard.read_condition(PRIORITY_CHANGED_FLAG) is False

    def test_placed_subtask_drops_to_zero(self, subtasks, blackboard):
        blackboard.write("b_box placed", True)

        decision = Emphasizer(subtasks).evaluate(blackboard, "sort b_box")

        assert decision.priorities["sort b_box"] == 0.0
        assert decision.selected == "sort g_box"
        assert decision.changed is True

    def test_mixed_thresholds_match_scalar_priority(self, subtasks, blackboard):
        """Subtasks with different ramps are each scored on their own thresholds"""
        subtasks[1].params = PriorityParams(theta_min=0.6, theta_max=2.0)

        decision = Emphasizer(subtasks).evaluate(blackboard, None)

        assert decision.priorities["sort b_box"] == pytest.approx(priority(0.30, PARAMS))
        assert decision.priorities["sort g_box"] == 1.0
        assert decision.priorities["sort r_box"] == pytest.approx(priority(0.80, PARAMS))
        assert decision.selected == "sort g_box"

    def test_unobserved_stimulus_means_zero(self, subtasks, blackboard):
        blackboard.write(stimulus_key("sort b_box"), UNOBSERVED)

        decision = Emphasizer(subtasks).evaluate(blackboard, None)

        assert decision.priorities["sort b_box"] == 0.0
        assert decision.selected == "sort g_box"

    def test_one_batch_per_evaluation(self, subtasks, blackboard):
        """Priorities and the flag land in the same version"""
        before = blackboard.version

        Emphasizer(subtasks).evaluate(blackboard, None)

        assert blackboard.version == before + 1

    def test_emphasizer_goal_reached_writes_flag(self, subtasks, blackboard):
        emphasizer = Emphasizer(subtasks)
        assert emphasizer.goal_reached(blackboard) is False
        assert blackboard.read(GOAL_REACHED_FLAG) is False

    def test_handle_priority_keeps_running(self, subtasks, blackboard):
        assert handle_priority(subtasks, blackboard, None) == NodeStatus.RUNNING
        assert subtasks[0].epsilon == pytest.approx(0.7 / 0.95)
