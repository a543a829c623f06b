import json
import threading

import pytest

from src.models.errors import DuplicateKey, TypeMismatch
from src.schemas.subtask import SubtaskRecord
from src.services.blackboard import (
    INITIALIZED_FLAG,
    UNOBSERVED,
    Blackboard,
    EntryKind,
    init_blackboard,
    priority_key,
    stimulus_key,
)


@pytest.fixture
def subtasks():
    """Two subtasks, the second gated on the first"""
    return [
        SubtaskRecord(name="sort a", task="sort box", postconditions=["a placed"]),
        SubtaskRecord(name="sort b", task="sort box", preconditions=["a placed"], postconditions=["b placed"]),
    ]


class TestInitialization:
    """Registering subtask keys"""

    def test_initialize_registers_flags(self, subtasks):
        """Flags start False, priorities 0, stimuli unobserved"""
        bb = init_blackboard(subtasks, ["goal reached"])

        assert bb.initialized
        assert bb.read("a placed") is False
        assert bb.read("goal reached") is False
        assert bb.read(priority_key("sort b")) == 0.0
        assert bb.read(stimulus_key("sort a")) == UNOBSERVED
        assert bb.kind_of(stimulus_key("sort a")) == EntryKind.STIMULUS

    def test_initialize_keeps_existing_stimuli(self, subtasks):
        """Stimuli sensed before initialization survive"""
        bb = Blackboard()
        bb.write(stimulus_key("sort a"), 0.4)

        bb.initialize(subtasks)

        assert bb.read(stimulus_key("sort a")) == 0.4

    def test_initialize_twice(self, subtasks):
        bb = init_blackboard(subtasks)

        with pytest.raises(DuplicateKey):
            bb.initialize(subtasks)

    def test_duplicate_subtask_names(self, subtasks):
        with pytest.raises(DuplicateKey):
            init_blackboard([subtasks[0], subtasks[0]])

    def test_initialize_commits_one_batch(self, subtasks):
        """The whole registration is one version step"""
        bb = Blackboard()
        assert bb.initialize(subtasks) == 1
        assert bb.version == 1


class TestWrites:
    """Typed writes and batches"""

    def test_unknown_condition_reads_false(self):
        assert Blackboard().read_condition("nothing here") is False

    def test_condition_type_is_enforced(self):
        """A flag cannot later hold a scalar"""
        bb = Blackboard()
        bb.write("door open", True)

        with pytest.raises(TypeMismatch):
            bb.write("door open", 0.5)

    def test_priority_must_be_in_unit_interval(self):
        with pytest.raises(TypeMismatch):
            Blackboard().write(priority_key("sort a"), 1.5)

    def test_batch_is_atomic(self):
        """A bad entry rejects the whole batch"""
        bb = Blackboard()
        bb.write("door open", True)

        with pytest.raises(TypeMismatch):
            with bb.batch() as batch:
                batch.write("lights on", True)
                batch.write("door open", 3.0)

        assert bb.read("lights on") is None
        assert bb.version == 1

    def test_batch_bumps_version_once(self):
        bb = Blackboard()
        with bb.batch() as batch:
            batch.write("x", True)
            batch.write("y", False)
            batch.write(stimulus_key("s"), 0.2, unit="m")

        assert bb.version == 1
        assert bb.snapshot().scalar(stimulus_key("s")) == 0.2

    def test_snapshot_is_immutable_view(self):
        """Snapshots do not see later writes"""
        bb = Blackboard()
        bb.write("x", True)
        snapshot = bb.snapshot()
        bb.write("x", False)

        assert snapshot.condition("x") is True
        with pytest.raises(TypeError):
            snapshot.entries["x"] = False

    def test_unobserved_stimulus_has_no_scalar(self):
        bb = Blackboard()
        bb.write(stimulus_key("s"), UNOBSERVED)

        assert bb.snapshot().scalar(stimulus_key("s")) is None

    def test_conditions_and_dump(self, subtasks):
        """Only flags appear in conditions(); dump is JSON"""
        bb = init_blackboard(subtasks)

        assert bb.conditions() == {"a placed": False, "b placed": False, INITIALIZED_FLAG: True}
        assert json.loads(bb.dump())[INITIALIZED_FLAG] is True


class TestConcurrency:
    """Concurrent writers and readers"""

    def test_snapshots_never_see_half_batches(self):
        """Paired keys written in one batch always agree in a snapshot"""
        bb = Blackboard()
        bb.write(stimulus_key("left"), 0.0)
        bb.write(stimulus_key("right"), 0.0)
        errors = []
        stop = threading.Event()

        def writer():
            for i in range(2000):
                with bb.batch() as batch:
                    batch.write(stimulus_key("left"), float(i))
                    batch.write(stimulus_key("right"), float(i))
            stop.set()

        def reader():
            while not stop.is_set():
                snapshot = bb.snapshot()
                if snapshot.scalar(stimulus_key("left")) != snapshot.scalar(stimulus_key("right")):
                    errors.append(snapshot.version)

        threads = [threading.Thread(target=writer)] + [threading.Thread(target=reader) for _ in range(3)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()

        assert errors == []
        assert bb.version == 2002

    def test_versions_are_unique_across_writers(self):
        """Every committed write gets its own version"""
        bb = Blackboard()
        versions = []
        lock = threading.Lock()

        def writer(name):
            for i in range(500):
                version = bb.write(stimulus_key(name), float(i))
                with lock:
                    versions.append(version)

        threads = [threading.Thread(target=writer, args=(f"s{n}",)) for n in range(4)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()

        assert sorted(versions) == list(range(1, 2001))
