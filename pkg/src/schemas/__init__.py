from .ltm import ConditionTag, SchemaNode, SchemaType, TaskRecord
from .reports import NodeCountRange, RunReport, TickTrace
from .scenario import PerturbationSchema, ScenarioFile
from .subtask import PriorityParams, SubtaskRecord

__all__ = [
    "ConditionTag",
    "SchemaNode",
    "SchemaType",
    "TaskRecord",
    "NodeCountRange",
    "RunReport",
    "TickTrace",
    "PerturbationSchema",
    "ScenarioFile",
    "PriorityParams",
    "SubtaskRecord"
]
