from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field

from src.models.errors import InvalidParams


class PriorityParams(BaseModel):
    """Thresholds of the priority ramp, in the stimulus' units"""
    model_config = ConfigDict(frozen=True)

    theta_min: float = 0.05
    theta_max: float = 1.0

    def check(self) -> "PriorityParams":
        if self.theta_min >= self.theta_max:
            raise InvalidParams(f"theta_min {self.theta_min} must be below theta_max {self.theta_max}")
        return self

    def scaled(self, factor: float) -> "PriorityParams":
        return PriorityParams(theta_min=self.theta_min * factor, theta_max=self.theta_max * factor)


class SubtaskRecord(BaseModel):
    """
    A named subtree with its gating conditions and current priority

    task and binding say which LTM task to instantiate and how to
    specialize it (e.g. "sort box" with {"box": "b_box"}).
    """
    model_config = ConfigDict(validate_assignment=True)

    name: str = Field(min_length=1)
    task: str
    binding: Dict[str, str] = Field(default_factory=dict)
    preconditions: List[str] = Field(default_factory=list)
    postconditions: List[str] = Field(default_factory=list)
    stimulus_key: str = ""
    params: PriorityParams = Field(default_factory=PriorityParams)
    epsilon: float = Field(default=0.0, ge=0.0, le=1.0)

    def model_post_init(self, __context) -> None:
        if not self.stimulus_key:
            self.stimulus_key = f"stimulus/{self.name}"
