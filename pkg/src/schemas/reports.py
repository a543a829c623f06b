from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field

from src.models.tree import NodeStatus


class TickTrace(BaseModel):
    """One line of the JSON-lines trace"""
    tick: int = Field(ge=1)
    root_status: NodeStatus
    current: Optional[str] = None
    priorities: Dict[str, float] = Field(default_factory=dict)
    flags: Dict[str, bool] = Field(default_factory=dict)
    tick_ns: int = Field(ge=0)
    node_count: int = Field(ge=1)
    priority_changed: bool = False


class NodeCountRange(BaseModel):
    min: int
    max: int


class RunReport(BaseModel):
    """Summary of one scenario run"""
    mode: Literal["rbt", "bt"]
    case_id: int
    node_count: NodeCountRange
    goal_reached: bool
    # milliseconds spent inside ticks
    total_tick_time: float
    simulated_time_ms: float
    ticks: int
    sort_order: List[str]

    def summary(self) -> str:
        if self.node_count.min == self.node_count.max:
            nodes = str(self.node_count.min)
        else:
            nodes = f"{self.node_count.min} - {self.node_count.max}"
        return (f"{self.mode.upper()} case {self.case_id}: nodes {nodes}, "
                f"goal reached {self.goal_reached}, ticks {self.ticks}, "
                f"tick time {self.total_tick_time:.3f} ms, order {', '.join(self.sort_order) or '-'}")
