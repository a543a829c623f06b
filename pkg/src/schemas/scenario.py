from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

Vector = Tuple[float, float, float]


class PerturbationSchema(BaseModel):
    tick: int = Field(ge=0)
    box: str
    position: Vector


class ScenarioFile(BaseModel):
    """Scenario document: initial sorting world and case study selection"""
    case: Literal[1, 2]
    gripper: Vector = (0.0, 0.0, 0.0)
    boxes: Dict[str, Vector]
    slots: Dict[str, Vector]
    theta_min: float = 0.05
    theta_max: float = 1.0
    mode: Literal["instant", "stepped"] = "instant"
    step_size: Optional[float] = Field(default=None, gt=0)
    perturbations: List[PerturbationSchema] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_names(self) -> "ScenarioFile":
        if set(self.boxes) != set(self.slots):
            raise ValueError("every box needs exactly one storage slot")
        unknown = [p.box for p in self.perturbations if p.box not in self.boxes]
        if unknown:
            raise ValueError(f"perturbations reference unknown boxes {unknown}")
        if self.theta_min >= self.theta_max:
            raise ValueError("theta_min must be below theta_max")
        return self
