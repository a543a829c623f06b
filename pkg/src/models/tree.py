"""
Behavior tree data model

Arena-style storage: nodes live in a dict keyed by dense integer ids
assigned at attach time, and children are ordered id lists.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterator, List, Optional, Tuple
import logging

from src.models.errors import MalformedTree, UnknownNode, UnresolvedHandler

logger = logging.getLogger(__name__)

PLACEHOLDER_HANDLER = "execute subtree"


class NodeStatus(str, Enum):
    """Execution state of a node"""
    FRESH = "fresh"
    RUNNING = "running"
    SUCCESS = "success"
    FAILURE = "failure"


class NodeKind(str, Enum):
    """The six node types"""
    FALLBACK = "fallback"
    SEQUENCE = "sequence"
    PARALLEL = "parallel"
    DECORATOR = "decorator"
    ACTION = "action"
    CONDITION = "condition"

    @property
    def is_control(self) -> bool:
        return self not in (NodeKind.ACTION, NodeKind.CONDITION)


class ActionHandler(ABC):
    """
    Body of an Action node

    step() is called at most once per node per tick; halt() is called when a
    running node is preempted, and the next step() starts a fresh attempt.
    """

    name: str = ""

    @abstractmethod
    def step(self, blackboard) -> NodeStatus:
        ...

    def halt(self) -> None:
        pass


class FunctionAction(ActionHandler):
    """Action handler built from plain callables"""

    def __init__(self, name: str,
                 step: Callable[[object], NodeStatus],
                 halt: Optional[Callable[[], None]] = None):
        self.name = name
        self._step = step
        self._halt = halt

    def step(self, blackboard) -> NodeStatus:
        return self._step(blackboard)

    def halt(self) -> None:
        if self._halt is not None:
            self._halt()


class HandlerRegistry:
    """Maps action names to handlers"""

    def __init__(self, handlers: Optional[Dict[str, ActionHandler]] = None):
        self._handlers: Dict[str, ActionHandler] = dict(handlers or {})

    def register(self, handler: ActionHandler, name: Optional[str] = None) -> ActionHandler:
        self._handlers[name or handler.name] = handler
        return handler

    def resolve(self, name: str) -> ActionHandler:
        try:
            return self._handlers[name]
        except KeyError:
            raise UnresolvedHandler(f"No handler registered for action '{name}'") from None

    def merge(self, other: "HandlerRegistry") -> "HandlerRegistry":
        self._handlers.update(other._handlers)
        return self

    def __contains__(self, name: str) -> bool:
        return name in self._handlers

    def names(self) -> List[str]:
        return sorted(self._handlers)


ConditionPredicate = Callable[[object], bool]


@dataclass
class TreeNode:
    """One node of an executable tree"""
    id: int
    label: str
    kind: NodeKind
    children: List[int] = field(default_factory=list)
    status: NodeStatus = NodeStatus.FRESH
    parent: Optional[int] = None
    # Action handler name or Condition name
    name: Optional[str] = None
    # Parallel success threshold; None means all children
    threshold: Optional[int] = None
    # Decorator policy id
    policy: Optional[str] = None

    @property
    def is_placeholder(self) -> bool:
        return self.kind == NodeKind.ACTION and self.name == PLACEHOLDER_HANDLER


class Tree:
    """
    Executable tree (working memory)

    Holds the node arena, the root, the action handlers and the condition
    predicates used while ticking.
    """

    def __init__(self, handlers: Optional[HandlerRegistry] = None,
                 conditions: Optional[Dict[str, ConditionPredicate]] = None):
        self.nodes: Dict[int, TreeNode] = {}
        self.root: Optional[int] = None
        self.handlers = handlers or HandlerRegistry()
        self.conditions: Dict[str, ConditionPredicate] = dict(conditions or {})
        # attached subtree root id -> displaced placeholder
        self.displaced: Dict[int, TreeNode] = {}
        self._next_id = 0

    # Construction

    def add(self, kind: NodeKind, label: str, children: Tuple[int, ...] = (), *,
            name: Optional[str] = None, threshold: Optional[int] = None,
            policy: Optional[str] = None) -> int:
        node_id = self._next_id
        self._next_id += 1
        node = TreeNode(id=node_id, label=label, kind=kind, name=name,
                        threshold=threshold, policy=policy)
        self.nodes[node_id] = node
        for child in children:
            self.append_child(node_id, child)
        return node_id

    def action(self, name: str, label: Optional[str] = None) -> int:
        return self.add(NodeKind.ACTION, label or name, name=name)

    def condition(self, name: str, label: Optional[str] = None) -> int:
        return self.add(NodeKind.CONDITION, label or name, name=name)

    def append_child(self, parent_id: int, child_id: int) -> None:
        parent = self.node(parent_id)
        child = self.node(child_id)
        if child.parent is not None:
            raise MalformedTree(f"Node {child_id} already has parent {child.parent}")
        parent.children.append(child_id)
        child.parent = parent_id

    def set_root(self, node_id: int) -> int:
        self.node(node_id)
        self.root = node_id
        return node_id

    def graft(self, other: "Tree") -> int:
        """Copy another tree's nodes into this arena, returning the new id of its root"""
        if other.root is None:
            raise MalformedTree("Cannot graft a tree without a root")
        mapping: Dict[int, int] = {}
        for old_id in other.iter_subtree(other.root):
            old = other.nodes[old_id]
            mapping[old_id] = self.add(old.kind, old.label, name=old.name,
                                       threshold=old.threshold, policy=old.policy)
        for old_id, new_id in mapping.items():
            for child in other.nodes[old_id].children:
                self.append_child(new_id, mapping[child])
        for name, predicate in other.conditions.items():
            self.conditions.setdefault(name, predicate)
        return mapping[other.root]

    def replace(self, old_id: int, new_id: int) -> None:
        """Put new_id where old_id sits; old_id is unlinked but kept in the arena"""
        old = self.node(old_id)
        new = self.node(new_id)
        if old.parent is None:
            if self.root != old_id:
                raise MalformedTree(f"Node {old_id} is not linked into the tree")
            self.root = new_id
        else:
            siblings = self.nodes[old.parent].children
            siblings[siblings.index(old_id)] = new_id
        new.parent = old.parent
        old.parent = None

    def remove(self, node_id: int) -> List[TreeNode]:
        """Drop an unlinked subtree from the arena"""
        removed = [self.nodes.pop(i) for i in list(self.iter_subtree(node_id))]
        return removed

    def restore(self, node: TreeNode) -> None:
        self.nodes[node.id] = node

    # Queries

    def node(self, node_id: int) -> TreeNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(f"Node {node_id} does not exist") from None

    def iter_subtree(self, node_id: int) -> Iterator[int]:
        """Depth-first, left-to-right node ids under node_id"""
        stack = [node_id]
        seen = set()
        while stack:
            current = stack.pop()
            if current in seen:
                raise MalformedTree(f"Node {current} reached twice")
            seen.add(current)
            yield current
            stack.extend(reversed(self.node(current).children))

    def find(self, label: str) -> int:
        for node_id in self.iter_subtree(self._require_root()):
            if self.nodes[node_id].label == label:
                return node_id
        raise UnknownNode(f"No node labelled '{label}'")

    def placeholders(self) -> List[int]:
        return [i for i in self.iter_subtree(self._require_root()) if self.nodes[i].is_placeholder]

    def validate(self) -> None:
        """Check the rooted-tree invariant: one root, acyclic, single parent"""
        root = self._require_root()
        if self.nodes[root].parent is not None:
            raise MalformedTree("Root node has a parent")
        for node_id in self.iter_subtree(root):
            node = self.nodes[node_id]
            for child in node.children:
                if self.node(child).parent != node_id:
                    raise MalformedTree(f"Node {child} listed under {node_id} but linked elsewhere")
            if node.kind.is_control and not node.children:
                raise MalformedTree(f"Control node '{node.label}' has no children")
            if not node.kind.is_control and node.children:
                raise MalformedTree(f"Leaf node '{node.label}' has children")

    def structure(self, node_id: Optional[int] = None) -> tuple:
        """Nested (kind, label, children) tuples, handy for isomorphism checks"""
        node = self.node(self._require_root() if node_id is None else node_id)
        return (node.kind.value, node.label, tuple(self.structure(c) for c in node.children))

    def render(self, node_id: Optional[int] = None, indent: str = "  ") -> str:
        lines: List[str] = []

        def visit(current: int, depth: int) -> None:
            node = self.nodes[current]
            extra = ""
            if node.kind == NodeKind.PARALLEL:
                extra = f" M={node.threshold or len(node.children)}"
            elif node.kind == NodeKind.DECORATOR:
                extra = f" policy={node.policy}"
            lines.append(f"{indent * depth}[{node.kind.value}{extra}] {node.label}")
            for child in node.children:
                visit(child, depth + 1)

        visit(self._require_root() if node_id is None else node_id, 0)
        return "\n".join(lines)

    def _require_root(self) -> int:
        if self.root is None:
            raise MalformedTree("Tree has no root")
        return self.root

    def __len__(self) -> int:
        return sum(1 for _ in self.iter_subtree(self._require_root()))
