"""
Engine exceptions

One hierarchy for every module: lookups derive from LookupError,
validation failures from ValueError.
"""

from typing import Any, List, Optional


class RbtError(Exception):
    """Base class for all engine errors"""


# Behavior tree core

class UnresolvedHandler(RbtError, LookupError):
    """Action name with no registered handler"""


class MalformedTree(RbtError, ValueError):
    """Cycle, shared child or missing root detected"""


class InvalidThreshold(RbtError, ValueError):
    """Parallel success threshold outside [1, N]"""


class UnknownNode(RbtError, LookupError):
    """Node identifier not present in the tree"""


# Blackboard

class DuplicateKey(RbtError, ValueError):
    """Key registered twice during initialization"""


class TypeMismatch(RbtError, ValueError):
    """Value does not fit the key's registered entry type"""


# Long-term memory

class SchemaSyntaxError(RbtError, ValueError):
    """Task document is not valid JSON"""

    def __init__(self, message: str, source: Optional[str] = None):
        self.source = source
        super().__init__(f"{source}: {message}" if source else message)


class SchemaError(RbtError, ValueError):
    """Task document violates the schema rules"""

    def __init__(self, message: str, source: Optional[str] = None, schema: Optional[str] = None):
        self.source = source
        self.schema = schema
        prefix = ""
        if source:
            prefix += f"{source}: "
        if schema:
            prefix += f"schema '{schema}': "
        super().__init__(prefix + message)


class UnknownTask(RbtError, LookupError):
    """Task name not found in the long-term memory"""


# Instantiation

class UnboundPlaceholder(RbtError, ValueError):
    """Binding references a placeholder that does not occur in the schemas"""


class NotReplaceable(RbtError, ValueError):
    """Attachment target is not a designated placeholder"""


class NothingAttached(RbtError, LookupError):
    """No dynamic subtree is attached at the given point"""


# Emphasizer

class InvalidParams(RbtError, ValueError):
    """Priority thresholds with theta_min >= theta_max"""


# Runtime

class EngineHalted(RbtError, RuntimeError):
    """Engine ticked after its goal was reached"""


class TickBudgetExhausted(RbtError, RuntimeError):
    """Goal not reached within the tick budget"""

    def __init__(self, max_ticks: int, trace: Optional[List[Any]] = None):
        self.max_ticks = max_ticks
        self.trace = trace or []
        super().__init__(f"Goal not reached within {max_ticks} ticks")


# Sorting simulation

class OutOfReach(RbtError, RuntimeError):
    """Box farther than the grasping limit"""


class GripperOccupied(RbtError, RuntimeError):
    """Pick requested while another box is held"""


class NotHeld(RbtError, RuntimeError):
    """Place requested for a box that is not held"""


class UnknownCase(RbtError, LookupError):
    """Case study identifier other than 1 or 2"""
