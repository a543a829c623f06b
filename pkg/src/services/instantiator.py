"""
Instantiator

Turns a task's schema list into an executable tree. Postconditions become
Condition nodes under a Fallback in front of the child they gate (a
Sequence of Conditions when there are several); preconditions become
Condition nodes in a Sequence in front of the child they guard. A gate of
the same control type as its parent schema is merged into the parent.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence
import logging
import re

from src.models.errors import NothingAttached, NotReplaceable, SchemaError, UnboundPlaceholder
from src.models.tree import HandlerRegistry, NodeKind, NodeStatus, Tree
from src.schemas.ltm import ROOT_KEYWORD, ConditionTag, SchemaNode, SchemaType
from src.schemas.subtask import SubtaskRecord
from src.services.behavior_tree import reset_subtree
from src.services.ltm_store import LtmStore, get_task_from_ltm

logger = logging.getLogger(__name__)

_KINDS = {
    SchemaType.FALLBACK: NodeKind.FALLBACK,
    SchemaType.SEQUENCE: NodeKind.SEQUENCE,
    SchemaType.PARALLEL: NodeKind.PARALLEL,
    SchemaType.DECORATOR: NodeKind.DECORATOR,
}
_BAD_BINDING_CHARS = re.compile(r"[{}()]")


@dataclass
class AttachPoint:
    tree: Tree
    node_id: int


@dataclass
class InstantiationContext:
    ltm: LtmStore
    handlers: HandlerRegistry
    blackboard: Optional[object] = None
    target: Optional[AttachPoint] = None
    # False builds structure only, without resolving action handlers
    strict: bool = True


def specialize(schemas: Sequence[SchemaNode], binding: Mapping[str, str]) -> List[SchemaNode]:
    """Replace {placeholder} tokens in names, action literals and condition names"""
    if not binding:
        return list(schemas)

    text = " ".join(s.model_dump_json() for s in schemas)
    for key, value in binding.items():
        if "{" + key + "}" not in text:
            raise UnboundPlaceholder(f"Placeholder '{{{key}}}' does not occur in the schemas")
        if not value or _BAD_BINDING_CHARS.search(value):
            raise SchemaError(f"binding value {value!r} for '{key}' is not a valid identifier")

    def substitute(value: str) -> str:
        for key, replacement in binding.items():
            value = value.replace("{" + key + "}", replacement)
        return value

    return [
        SchemaNode(
            name=substitute(schema.name),
            type=schema.type,
            children=[substitute(child) for child in schema.children],
            params=[condition.model_copy(update={"name": substitute(condition.name)})
                    for condition in schema.params],
        )
        for schema in schemas
    ]


def guard_task(schemas: Sequence[SchemaNode], preconditions: Sequence[str]) -> List[SchemaNode]:
    """Put a precondition Sequence above the task's root schema"""
    if not preconditions:
        return list(schemas)

    root = next(s for s in schemas if s.is_root)
    body_name = root.name.replace(ROOT_KEYWORD, "body")
    guard = SchemaNode(
        name=root.name,
        type=SchemaType.SEQUENCE,
        children=[body_name],
        params=[ConditionTag(role="pre", child=1, ordinal=j, name=name)
                for j, name in enumerate(preconditions, start=1)],
    )
    renamed = [
        s.model_copy(update={"name": body_name}) if s is root else s
        for s in schemas
    ]
    return [guard, *renamed]


class Instantiator:
    """Builds trees from LTM schemas in construction order"""

    def __init__(self, context: InstantiationContext):
        self.context = context

    def build_tree(self, schemas: Sequence[SchemaNode], parallel_threshold: Optional[int] = None) -> Tree:
        tree = Tree(self.context.handlers)
        by_name: Dict[str, SchemaNode] = {}
        # first pass: index every schema so forward references resolve
        for schema in schemas:
            by_name[schema.name] = schema
        roots = [s for s in schemas if s.is_root]
        if len(roots) != 1:
            raise SchemaError(f"expected exactly one root schema, found {len(roots)}")
        # second pass: expand from the root
        tree.set_root(self._expand(tree, by_name, roots[0], parallel_threshold))
        return tree

    def instantiate_subtree(self, task_name: str, binding: Optional[Mapping[str, str]] = None,
                            preconditions: Iterable[str] = ()) -> Tree:
        schemas = get_task_from_ltm(self.context.ltm, task_name)
        schemas = guard_task(specialize(schemas, binding or {}), list(preconditions))
        tree = self.build_tree(schemas)
        logger.debug(f"Instantiated '{task_name}' with {len(tree)} nodes")

        target = self.context.target
        if target is not None:
            attach_dynamic(target.tree, target.node_id, tree)
            return target.tree
        return tree

    def instantiate_subtask(self, subtask: SubtaskRecord) -> Tree:
        return self.instantiate_subtree(subtask.task, subtask.binding, subtask.preconditions)

    def _expand(self, tree: Tree, by_name: Dict[str, SchemaNode], schema: SchemaNode,
                parallel_threshold: Optional[int]) -> int:
        kind = _KINDS[schema.type]
        node_id = tree.add(kind, schema.name,
                           threshold=parallel_threshold if kind == NodeKind.PARALLEL else None,
                           policy="identity" if kind == NodeKind.DECORATOR else None)

        for index, (is_action, name) in enumerate(schema.child_references(), start=1):
            if is_action:
                if self.context.strict:
                    self.context.handlers.resolve(name)
                child = tree.action(name)
            else:
                child = self._expand(tree, by_name, by_name[name], parallel_threshold)

            segment = self._gate(tree, schema, kind, index, child)
            for gated in segment:
                tree.append_child(node_id, gated)
        return node_id

    def _gate(self, tree: Tree, schema: SchemaNode, parent_kind: NodeKind,
              index: int, child: int) -> List[int]:
        preconditions = schema.conditions("pre", index)
        postconditions = schema.conditions("post", index)
        segment = [child]

        if preconditions:
            conditions = [tree.condition(name) for name in preconditions]
            if parent_kind == NodeKind.SEQUENCE and not postconditions:
                segment = [*conditions, child]
            else:
                segment = [tree.add(NodeKind.SEQUENCE, f"{schema.name}:C_{index}", (*conditions, child))]

        if postconditions:
            conditions = [tree.condition(name) for name in postconditions]
            if len(conditions) == 1:
                goal = conditions[0]
            else:
                goal = tree.add(NodeKind.SEQUENCE, f"{schema.name}:G_{index}/all", tuple(conditions))
            if parent_kind == NodeKind.FALLBACK:
                segment = [goal, *segment]
            else:
                segment = [tree.add(NodeKind.FALLBACK, f"{schema.name}:G_{index}", (goal, segment[0]))]
        return segment


def instantiate_subtree(context: InstantiationContext, task_name: str) -> Tree:
    return Instantiator(context).instantiate_subtree(task_name)


def attach_dynamic(tree: Tree, at: int, subtree: Tree) -> int:
    """Replace a placeholder with a copy of subtree; returns the new subtree root id"""
    placeholder = tree.node(at)
    if not placeholder.is_placeholder:
        raise NotReplaceable(f"Node {at} ('{placeholder.label}') is not a replaceable placeholder")

    new_root = tree.graft(subtree)
    for node_id in tree.iter_subtree(new_root):
        tree.nodes[node_id].status = NodeStatus.FRESH
    tree.replace(at, new_root)
    tree.nodes.pop(at)
    tree.displaced[new_root] = placeholder
    logger.info(f"Attached dynamic subtree '{tree.nodes[new_root].label}' at node {at}")
    return new_root


def detach_dynamic(tree: Tree, at: int) -> int:
    """Remove an attached subtree (halting running actions) and restore its placeholder"""
    placeholder = tree.displaced.get(at)
    if placeholder is None:
        raise NothingAttached(f"No dynamic subtree attached at node {at}")

    label = tree.node(at).label
    reset_subtree(tree, at)
    tree.restore(placeholder)
    placeholder.parent = None
    tree.replace(at, placeholder.id)
    tree.remove(at)
    del tree.displaced[at]
    placeholder.status = NodeStatus.FRESH
    logger.info(f"Detached dynamic subtree '{label}', placeholder {placeholder.id} restored")
    return placeholder.id
