"""
Long-term memory

Parses, validates and serializes task documents, and serves a directory of
them by task name. A file holding a JSON array is one task named after the
file stem; a file holding a JSON object is a bundle of task-name -> array.
"""

from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union
import json
import logging

from pydantic import ValidationError

from src.models.errors import SchemaError, SchemaSyntaxError, UnknownTask
from src.schemas.ltm import SchemaNode, TaskRecord

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("name", "type", "children", "params")


def _validation_message(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item.get("loc", ()))
        parts.append(f"{location}: {item.get('msg')}" if location else str(item.get("msg")))
    return "; ".join(parts)


def _check_graph(schemas: List[SchemaNode], source: Optional[str]) -> None:
    """The schema graph must be a tree rooted at the single root-named schema"""
    if not schemas:
        raise SchemaError("no schema with 'root' in its name", source=source)

    by_name: Dict[str, SchemaNode] = {}
    for schema in schemas:
        if schema.name in by_name:
            raise SchemaError("duplicate name", source=source, schema=schema.name)
        by_name[schema.name] = schema

    roots = [s.name for s in schemas if s.is_root]
    if not roots:
        raise SchemaError("no schema with 'root' in its name", source=source)
    if len(roots) > 1:
        raise SchemaError(f"multiple root schemas {roots}", source=source)

    parents: Dict[str, str] = {}
    for schema in schemas:
        for is_action, name in schema.child_references():
            if is_action:
                continue
            if name not in by_name:
                raise SchemaError(f"unresolved child '{name}'", source=source, schema=schema.name)
            if name in parents:
                raise SchemaError(f"child '{name}' has two parents ('{parents[name]}', '{schema.name}')",
                                  source=source, schema=schema.name)
            parents[name] = schema.name

    root = roots[0]
    if root in parents:
        raise SchemaError(f"cycle through root '{root}'", source=source, schema=root)

    reached = set()
    stack = [root]
    while stack:
        current = stack.pop()
        reached.add(current)
        stack.extend(name for is_action, name in by_name[current].child_references() if not is_action)
    unreached = [s.name for s in schemas if s.name not in reached]
    if unreached:
        # with single parents and a parentless root, unreachable schemas sit on a cycle
        raise SchemaError(f"cycle or detached schemas {unreached}", source=source, schema=unreached[0])


def build_task(task_name: str, items: object, source: Optional[str] = None) -> TaskRecord:
    """Validate an already-decoded schema array"""
    if not isinstance(items, list):
        raise SchemaError("task document must be a JSON array of schemas", source=source)

    schemas: List[SchemaNode] = []
    for index, item in enumerate(items):
        label = item.get("name") if isinstance(item, dict) else None
        if not isinstance(item, dict):
            raise SchemaError(f"entry {index} is not an object", source=source)
        missing = [f for f in REQUIRED_FIELDS if f not in item]
        if missing:
            raise SchemaError(f"missing field(s) {missing}", source=source, schema=label or f"#{index}")
        try:
            schemas.append(SchemaNode.model_validate(item))
        except ValidationError as e:
            raise SchemaError(_validation_message(e), source=source, schema=label or f"#{index}") from None

    _check_graph(schemas, source)
    return TaskRecord(task_name=task_name, schemas=schemas, source=source)


def parse_task(document: str, task_name: Optional[str] = None, source: Optional[str] = None) -> TaskRecord:
    """Parse one task document; the task name defaults to the root schema's name"""
    try:
        items = json.loads(document)
    except json.JSONDecodeError as e:
        raise SchemaSyntaxError(str(e), source=source) from None

    if task_name is None and isinstance(items, list):
        roots = [i.get("name") for i in items if isinstance(i, dict) and "root" in str(i.get("name", ""))]
        task_name = roots[0] if roots else ""
    return build_task(task_name or "", items, source)


def serialize_task(task: TaskRecord, indent: Optional[int] = 2) -> str:
    """Emit the stored document format"""
    return json.dumps([schema.model_dump(mode="json") for schema in task.schemas], indent=indent)


def _documents(path: Path) -> Iterator[Tuple[str, object, str]]:
    """Yield (task name, decoded schema array, source) for one file"""
    source = str(path)
    try:
        decoded = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaSyntaxError(str(e), source=source) from None

    if isinstance(decoded, dict):
        for task_name, items in decoded.items():
            yield task_name, items, source
    else:
        yield path.stem, decoded, source


class LtmStore:
    """Read-only task store, safe for concurrent reads once loaded"""

    def __init__(self, tasks: Optional[Dict[str, TaskRecord]] = None, root: Optional[Path] = None):
        self._tasks: Dict[str, TaskRecord] = dict(tasks or {})
        self.root = root

    @classmethod
    def open(cls, directory: Union[str, Path]) -> "LtmStore":
        directory = Path(directory)
        if not directory.is_dir():
            raise FileNotFoundError(f"LTM directory {directory} does not exist")

        tasks: Dict[str, TaskRecord] = {}
        for path in sorted(directory.glob("*.json")):
            for task_name, items, source in _documents(path):
                if task_name in tasks:
                    raise SchemaError(f"task '{task_name}' defined twice", source=source)
                tasks[task_name] = build_task(task_name, items, source)
        logger.info(f"Loaded {len(tasks)} tasks from {directory}")
        return cls(tasks, directory)

    def add(self, task: TaskRecord) -> None:
        self._tasks[task.task_name] = task

    def task(self, name: str) -> TaskRecord:
        try:
            return self._tasks[name]
        except KeyError:
            raise UnknownTask(f"Task '{name}' not found in LTM") from None

    def task_names(self) -> List[str]:
        return sorted(self._tasks)

    def __contains__(self, name: str) -> bool:
        return name in self._tasks

    def __len__(self) -> int:
        return len(self._tasks)


def get_task_from_ltm(store: LtmStore, task_name: str) -> List[SchemaNode]:
    """Schemas of one task in file order"""
    return list(store.task(task_name).schemas)


def validate_directory(directory: Union[str, Path]) -> List[Tuple[str, Optional[str]]]:
    """Per-file (path, error message or None)"""
    results: List[Tuple[str, Optional[str]]] = []
    for path in sorted(Path(directory).glob("*.json")):
        try:
            for task_name, items, source in _documents(path):
                build_task(task_name, items, source)
            results.append((str(path), None))
        except (SchemaError, SchemaSyntaxError) as e:
            results.append((str(path), str(e)))
    return results
