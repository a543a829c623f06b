"""
Thread-safe blackboard

Shared key-value store for condition flags, stimuli and subtree priorities.
Writes are committed in batches under one lock; every committed batch bumps
the version by one and snapshots never see a half-applied batch.
"""

from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Union
import json
import logging
import threading

from src.models.errors import DuplicateKey, TypeMismatch

logger = logging.getLogger(__name__)

UNOBSERVED = "unobserved"
INITIALIZED_FLAG = "blackboard initialized"
PRIORITY_CHANGED_FLAG = "priority changed"
GOAL_REACHED_FLAG = "goal reached"
STIMULUS_PREFIX = "stimulus/"
PRIORITY_PREFIX = "priority/"

EntryValue = Union[bool, float, str]


class EntryKind(str, Enum):
    CONDITION = "condition"
    STIMULUS = "stimulus"
    PRIORITY = "priority"


def stimulus_key(subtask: str) -> str:
    return f"{STIMULUS_PREFIX}{subtask}"


def priority_key(subtask: str) -> str:
    return f"{PRIORITY_PREFIX}{subtask}"


@dataclass(frozen=True)
class BlackboardEntry:
    key: str
    kind: EntryKind
    value: EntryValue
    unit: Optional[str] = None


@dataclass(frozen=True)
class BlackboardSnapshot:
    """Immutable point-in-time view"""
    entries: Mapping[str, EntryValue]
    version: int

    def condition(self, name: str) -> bool:
        value = self.entries.get(name)
        return value is True

    def scalar(self, key: str) -> Optional[float]:
        """Numeric value of a stimulus or priority, None when absent or unobserved"""
        value = self.entries.get(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None
        return float(value)


def _infer_kind(key: str, value: Any) -> EntryKind:
    if key.startswith(PRIORITY_PREFIX):
        return EntryKind.PRIORITY
    if key.startswith(STIMULUS_PREFIX) or value == UNOBSERVED:
        return EntryKind.STIMULUS
    if isinstance(value, bool):
        return EntryKind.CONDITION
    if isinstance(value, (int, float)):
        return EntryKind.STIMULUS
    raise TypeMismatch(f"Unsupported value {value!r} for key '{key}'")


def _check(key: str, kind: EntryKind, value: Any) -> EntryValue:
    if kind == EntryKind.CONDITION:
        if not isinstance(value, bool):
            raise TypeMismatch(f"Key '{key}' holds a condition flag, got {value!r}")
        return value
    if kind == EntryKind.STIMULUS:
        if value == UNOBSERVED:
            return UNOBSERVED
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeMismatch(f"Key '{key}' holds a scalar stimulus, got {value!r}")
        return float(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeMismatch(f"Key '{key}' holds a priority, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise TypeMismatch(f"Priority for '{key}' must lie in [0, 1], got {value}")
    return float(value)


class WriteBatch:
    """Staged writes, committed together when the batch context exits"""

    def __init__(self) -> None:
        self.pending: List[tuple] = []

    def write(self, key: str, value: EntryValue, unit: Optional[str] = None) -> None:
        self.pending.append((key, value, unit))


class Blackboard:
    """
    Shared memory between the sensing path and the execution path

    Safe for concurrent readers and writers; the lock is held only while a
    batch is validated and committed or a snapshot is copied.
    """

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._entries: Dict[str, BlackboardEntry] = {}
        self._version = 0

    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    @property
    def initialized(self) -> bool:
        return self.read_condition(INITIALIZED_FLAG)

    def initialize(self, subtasks: Iterable[Any], goal_spec: Iterable[str] = ()) -> int:
        """
        Register every subtask flag, priority and stimulus key

        Condition flags start False, priorities 0, stimuli stay as sampled or
        start unobserved. Raises DuplicateKey on re-initialization or on
        repeated subtask names.
        """
        records = list(subtasks)
        names = [record.name for record in records]
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise DuplicateKey(f"Duplicate subtask names: {duplicates}")

        with self._lock:
            if INITIALIZED_FLAG in self._entries:
                raise DuplicateKey("Blackboard already initialized")
            with self.batch() as batch:
                for flag in goal_spec:
                    batch.write(flag, False)
                for record in records:
                    for flag in [*record.preconditions, *record.postconditions]:
                        batch.write(flag, False)
                    batch.write(priority_key(record.name), 0.0)
                    key = stimulus_key(record.name)
                    if key not in self._entries:
                        batch.write(key, UNOBSERVED)
                batch.write(INITIALIZED_FLAG, True)
            logger.info(f"Blackboard initialized with {len(records)} subtasks at version {self._version}")
            return self._version

    @contextmanager
    def batch(self) -> Iterator[WriteBatch]:
        """Group writes; they become visible together or not at all"""
        staged = WriteBatch()
        yield staged
        self._commit(staged.pending)

    def write(self, key: str, value: EntryValue, unit: Optional[str] = None) -> int:
        """Write one value and return the new version"""
        return self._commit([(key, value, unit)])

    def _commit(self, pending: List[tuple]) -> int:
        with self._lock:
            if not pending:
                return self._version
            staged: Dict[str, BlackboardEntry] = {}
            for key, value, unit in pending:
                existing = staged.get(key) or self._entries.get(key)
                kind = existing.kind if existing else _infer_kind(key, value)
                checked = _check(key, kind, value)
                staged[key] = BlackboardEntry(key, kind, checked,
                                              unit if unit is not None else (existing.unit if existing else None))
            self._entries.update(staged)
            self._version += 1
            return self._version

    def read(self, key: str, default: Optional[EntryValue] = None) -> Optional[EntryValue]:
        with self._lock:
            entry = self._entries.get(key)
            return entry.value if entry is not None else default

    def read_condition(self, name: str) -> bool:
        """Flag value; unknown names read as False"""
        with self._lock:
            entry = self._entries.get(name)
            return entry is not None and entry.value is True

    def kind_of(self, key: str) -> Optional[EntryKind]:
        with self._lock:
            entry = self._entries.get(key)
            return entry.kind if entry else None

    def snapshot(self) -> BlackboardSnapshot:
        with self._lock:
            entries = {key: entry.value for key, entry in self._entries.items()}
            return BlackboardSnapshot(MappingProxyType(entries), self._version)

    def conditions(self) -> Dict[str, bool]:
        with self._lock:
            return {key: bool(entry.value) for key, entry in sorted(self._entries.items())
                    if entry.kind == EntryKind.CONDITION}

    def dump(self) -> str:
        """Debug dump of the full store as a JSON object"""
        snap = self.snapshot()
        return json.dumps(dict(snap.entries), sort_keys=True)


def init_blackboard(subtasks: Iterable[Any], goal_spec: Iterable[str] = ()) -> Blackboard:
    blackboard = Blackboard()
    blackboard.initialize(subtasks, goal_spec)
    return blackboard
