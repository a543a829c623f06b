from .tree import ActionHandler, FunctionAction, HandlerRegistry, NodeKind, NodeStatus, Tree, TreeNode
from .world import Box, Intent, Perturbation, WorldState

__all__ = [
    "ActionHandler",
    "FunctionAction",
    "HandlerRegistry",
    "NodeKind",
    "NodeStatus",
    "Tree",
    "TreeNode",
    "Box",
    "Intent",
    "Perturbation",
    "WorldState"
]
