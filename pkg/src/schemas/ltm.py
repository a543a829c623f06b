from typing import Any, Dict, List, Literal, Optional, Tuple
from enum import Enum
import re

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

ACTION_PATTERN = re.compile(r"^A\((?P<name>.+)\)$")
SHORT_TAG_PATTERN = re.compile(r"^(?P<role>[CG])_(?P<child>[1-9])(?P<ordinal>[1-9])$")
LONG_TAG_PATTERN = re.compile(r"^(?P<role>[CG])_(?P<child>[1-9][0-9]*)_(?P<ordinal>[1-9][0-9]*)$")
ROOT_KEYWORD = "root"


class SchemaType(str, Enum):
    """Control-flow node types storable in the long-term memory"""
    FALLBACK = "fallback"
    SEQUENCE = "sequence"
    PARALLEL = "parallel"
    DECORATOR = "decorator"


def parse_child(reference: str) -> Tuple[bool, str]:
    """Split a child reference into (is_action, name)"""
    match = ACTION_PATTERN.match(reference)
    if match:
        return True, match.group("name")
    return False, reference


def parse_tag(tag: str) -> Tuple[str, int, int]:
    """
    Parse C_ij / G_ij into (role, child, ordinal)

    Two-character bodies are read as single digits (C_12); longer indices
    are written underscore-separated (C_10_2).
    """
    match = SHORT_TAG_PATTERN.match(tag) or LONG_TAG_PATTERN.match(tag)
    if not match:
        raise ValueError(f"bad condition tag '{tag}'")
    role = "pre" if match.group("role") == "C" else "post"
    return role, int(match.group("child")), int(match.group("ordinal"))


class ConditionTag(BaseModel):
    """One (tag, condition-name) pair from a schema's params"""
    model_config = ConfigDict(frozen=True)

    role: Literal["pre", "post"]
    child: int = Field(ge=1)
    ordinal: int = Field(ge=1)
    name: str = Field(min_length=1)

    @property
    def tag(self) -> str:
        letter = "C" if self.role == "pre" else "G"
        if self.child < 10 and self.ordinal < 10:
            return f"{letter}_{self.child}{self.ordinal}"
        return f"{letter}_{self.child}_{self.ordinal}"


class SchemaNode(BaseModel):
    """
    The (l, t, c, p) quadruple

    JSON field names follow the stored documents: name, type, children, params.
    params is a flat alternating tag/name list on disk and a list of
    ConditionTag in memory; [""] means no conditions.
    """
    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    type: SchemaType
    children: List[str] = Field(min_length=1)
    params: List[ConditionTag] = Field(default_factory=list)

    @field_validator("params", mode="before")
    @classmethod
    def parse_params(cls, value: Any) -> Any:
        if not isinstance(value, list):
            return value
        if all(isinstance(item, (ConditionTag, dict)) for item in value):
            return value
        flat = [item for item in value if item != ""]
        if len(flat) % 2:
            raise ValueError("params must alternate tag and condition name")
        tags = []
        for tag, name in zip(flat[0::2], flat[1::2]):
            if not isinstance(tag, str) or not isinstance(name, str):
                raise ValueError("params entries must be strings")
            role, child, ordinal = parse_tag(tag)
            tags.append({"role": role, "child": child, "ordinal": ordinal, "name": name})
        return tags

    @field_serializer("params")
    def flatten_params(self, params: List[ConditionTag]) -> List[str]:
        if not params:
            return [""]
        flat: List[str] = []
        for condition in params:
            flat.extend([condition.tag, condition.name])
        return flat

    @model_validator(mode="after")
    def check_tags(self) -> "SchemaNode":
        seen = set()
        for condition in self.params:
            if condition.child > len(self.children):
                raise ValueError(f"tag {condition.tag} points past {len(self.children)} children")
            key = (condition.role, condition.child, condition.ordinal)
            if key in seen:
                raise ValueError(f"tag {condition.tag} repeated")
            seen.add(key)
        return self

    @property
    def is_root(self) -> bool:
        return ROOT_KEYWORD in self.name

    def conditions(self, role: str, child: int) -> List[str]:
        """Condition names gating one child, in ordinal order"""
        matching = [c for c in self.params if c.role == role and c.child == child]
        return [c.name for c in sorted(matching, key=lambda c: c.ordinal)]

    def child_references(self) -> List[Tuple[bool, str]]:
        return [parse_child(ref) for ref in self.children]


class TaskRecord(BaseModel):
    """A named task: its schema list in construction order"""
    task_name: str
    schemas: List[SchemaNode]
    source: Optional[str] = None

    @property
    def root(self) -> SchemaNode:
        return next(s for s in self.schemas if s.is_root)

    def by_name(self) -> Dict[str, SchemaNode]:
        return {schema.name: schema for schema in self.schemas}

    def structurally_equal(self, other: "TaskRecord") -> bool:
        return (self.task_name == other.task_name
                and [s.model_dump() for s in self.schemas] == [s.model_dump() for s in other.schemas])
