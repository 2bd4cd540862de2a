import pytest

from boxscout.errors import (
    ConfigError,
    ExhaustedError,
    MissingScoreError,
    StepAbortedError,
)
from boxscout.evaluation import Evaluator
from boxscout.ingest import DatasetIndex
from boxscout.scoring import AggregationMethod, ClassCounts, ClassDistribution, Detection
from boxscout.selection import (
    DatasetOracle,
    ExperimentState,
    UnlabeledBatch,
    batch_value,
    exploration_step,
    parse_method,
    partition_into_batches,
    propose_selection,
    run_exploration,
    select_best_batch,
)
from conftest import annotation, box


class TestPartition:
    @pytest.mark.parametrize("n,expected_batches,expected_leftover",
                             [(605, 60, 5), (638, 63, 8), (10, 1, 0)])
    def test_counts(self, n, expected_batches, expected_leftover):
        ids = [f"im{i}" for i in range(n)]
        batches, leftover = partition_into_batches(ids, 10, seed=0)
        assert len(batches) == expected_batches
        assert len(leftover) == expected_leftover
        assert all(len(b.image_ids) == 10 for b in batches)

    def test_batch_size_validation(self):
        with pytest.raises(ConfigError):
            partition_into_batches(["a"], 0, seed=0)

    def test_partition_is_disjoint_cover(self):
        ids = [f"im{i}" for i in range(37)]
        batches, leftover = partition_into_batches(ids, 5, seed=3)
        seen = [i for b in batches for i in b.image_ids] + list(leftover)
        assert sorted(seen) == sorted(ids)
        assert len(set(seen)) == len(seen)

    def test_seed_determinism_and_variation(self):
        ids = [f"im{i}" for i in range(30)]
        a1, _ = partition_into_batches(ids, 10, seed=1)
        a2, _ = partition_into_batches(ids, 10, seed=1)
        b, _ = partition_into_batches(ids, 10, seed=2)
        assert [x.image_ids for x in a1] == [x.image_ids for x in a2]
        assert [x.image_ids for x in a1] != [x.image_ids for x in b]


class TestBatchValue:
    def test_sum(self):
        batch = UnlabeledBatch(0, ("a", "b"))
        assert batch_value(batch, {"a": 0.2, "b": 0.3}) == pytest.approx(0.5)

    def test_zero(self):
        batch = UnlabeledBatch(0, ("a", "b"))
        assert batch_value(batch, {"a": 0.0, "b": 0.0}) == 0.0

    def test_single_identity(self):
        assert batch_value(UnlabeledBatch(0, ("a",)), {"a": 0.7}) == 0.7

    def test_missing_score(self):
        with pytest.raises(MissingScoreError):
            batch_value(UnlabeledBatch(0, ("a", "b")), {"a": 0.1})


def make_state(batch_ids, labeled=None, seed=0):
    batches = tuple(UnlabeledBatch(i, (f"b{i}i0", f"b{i}i1")) for i in batch_ids)
    return ExperimentState(labeled=dict(labeled or {}), batches=batches,
                           leftover=(), counts=ClassCounts({}, 2), step=0,
                           seed=seed)


class TestSelectBest:
    def test_argmax(self):
        state = make_state([0, 1, 2])
        assert select_best_batch(state, {0: 0.5, 1: 0.9, 2: 0.4}) == 1

    def test_tie_breaks_low_id(self):
        state = make_state([0, 1])
        assert select_best_batch(state, {0: 0.9, 1: 0.9}) == 0

    def test_single_batch(self):
        state = make_state([3])
        assert select_best_batch(state, {3: -5.0}) == 3

    def test_exhausted(self):
        state = make_state([])
        with pytest.raises(ExhaustedError):
            select_best_batch(state, {})


class ScriptedDetector:
    """Serves fixed class distributions per image; counts detect calls."""

    def __init__(self, dists_by_image, classes=("a", "b")):
        self.dists = dists_by_image
        self.classes = list(classes)
        self.detect_calls = 0
        self.updates = []

    def class_list(self):
        return list(self.classes)

    def detect(self, image_id):
        self.detect_calls += 1
        return [Detection(box=(0.5, 0.5, 0.2, 0.2), confidence=0.9,
                          dist=ClassDistribution(d))
                for d in self.dists.get(image_id, [])]

    def update(self, old_pool, new_batch):
        self.updates.append(sorted(new_batch))


def two_batch_state():
    # batch 0 images produce margins summing 0.3; batch 1 sums 0.8
    dists = {
        "b0i0": [(0.95, 0.05)],   # (1 - 0.9)^2 = 0.01
        "b0i1": [(0.7311, 0.2689)],  # ~(1 - 0.4622)^2 ~ 0.289
        "b1i0": [(0.8, 0.2)],     # 0.16
        "b1i1": [(0.6, 0.4)],     # 0.64
    }
    detector = ScriptedDetector(dists)
    labels = {i: annotation(i, [box("a", 0, 0, 10, 10)])
              for i in dists}
    state = make_state([0, 1])
    return state, detector, DatasetOracle(labels)


class TestExplorationStep:
    def test_selects_higher_valued_batch(self):
        state, detector, oracle = two_batch_state()
        new_state, record = exploration_step(state, detector, oracle,
                                             AggregationMethod("sum"))
        assert record.batch_id == 1
        assert record.batch_value == pytest.approx(0.8, abs=0.01)
        assert sorted(new_state.labeled) == ["b1i0", "b1i1"]
        assert len(new_state.batches) == 1
        assert new_state.step == 1
        assert detector.updates == [["b1i0", "b1i1"]]
        new_state.validate()

    def test_record_value_is_sum_of_image_scores(self):
        state, detector, oracle = two_batch_state()
        _, record = exploration_step(state, detector, oracle,
                                     AggregationMethod("sum"))
        assert record.batch_value == pytest.approx(
            sum(record.per_image_scores.values()))

    def test_exhausted(self):
        state, detector, oracle = two_batch_state()
        state = make_state([])
        with pytest.raises(ExhaustedError):
            exploration_step(state, detector, oracle, AggregationMethod("sum"))

    def test_oracle_timeout_leaves_state_unchanged(self):
        state, detector, _ = two_batch_state()

        class TimeoutOracle:
            def label_batch(self, image_ids):
                raise TimeoutError("annotator went home")

        with pytest.raises(StepAbortedError):
            exploration_step(state, detector, TimeoutOracle(),
                             AggregationMethod("sum"))
        assert state.step == 0 and len(state.batches) == 2
        assert detector.updates == []

    def test_random_never_consults_scores(self):
        state, detector, oracle = two_batch_state()
        new_state, record = exploration_step(state, detector, oracle, "random")
        assert detector.detect_calls == 0
        assert record.method == "random"
        assert record.batch_value == 0.0
        assert set(record.per_image_scores.values()) == {0.0}
        assert new_state.step == 1

    def test_random_deterministic_under_seed(self):
        picks_a, picks_b = [], []
        for picks in (picks_a, picks_b):
            state, detector, oracle = two_batch_state()
            while state.batches:
                state, record = exploration_step(state, detector, oracle,
                                                 "random")
                picks.append(record.batch_id)
        assert picks_a == picks_b


class TestConservation:
    def test_id_set_constant_through_run(self):
        state, detector, oracle = two_batch_state()
        universe = set(state.remaining_image_ids()) | set(state.labeled)
        n_batches = len(state.batches)
        for _ in range(n_batches):
            state, _ = exploration_step(state, detector, oracle,
                                        AggregationMethod("sum"))
            now = set(state.remaining_image_ids()) | set(state.labeled) \
                | set(state.leftover)
            assert now == universe
            state.validate()
        assert not state.batches
        assert len(state.labeled) == n_batches * 2


class UniformEvaluator:
    """Stand-in evaluator: mAP equals the fraction of labeled pool images."""

    def __init__(self, total):
        self.total = total
        self.calls = 0

    def evaluate(self, detector):
        self.calls += 1
        return {"a": 0.0}, 0.0


class TestRunExploration:
    def _engine(self, n_batches, batch_size=10):
        ids = [f"im{i}" for i in range(n_batches * batch_size)]
        batches, leftover = partition_into_batches(ids, batch_size, seed=1)
        state = ExperimentState(labeled={}, batches=tuple(batches),
                                leftover=tuple(leftover),
                                counts=ClassCounts({}, 2), step=0, seed=1)
        dists = {i: [(0.6, 0.4)] for i in ids}
        detector = ScriptedDetector(dists)
        labels = {i: annotation(i, [box("a", 0, 0, 10, 10)]) for i in ids}
        return state, detector, DatasetOracle(labels)

    def test_checkpoint_cadence_six_batches(self):
        state, detector, oracle = self._engine(6)
        evaluator = UniformEvaluator(60)
        _, records, curve = run_exploration(state, detector, oracle,
                                            AggregationMethod("sum"),
                                            eval_every=5, evaluator=evaluator)
        assert [c.samples_labeled for c in curve.checkpoints] == [0, 50, 60]
        assert len(records) == 6

    def test_zero_batches_initial_checkpoint_only(self):
        state, detector, oracle = self._engine(0)
        _, records, curve = run_exploration(state, detector, oracle,
                                            AggregationMethod("sum"),
                                            eval_every=5,
                                            evaluator=UniformEvaluator(0))
        assert len(records) == 0
        assert [c.samples_labeled for c in curve.checkpoints] == [0]

    def test_no_duplicate_final_checkpoint(self):
        state, detector, oracle = self._engine(10)
        _, _, curve = run_exploration(state, detector, oracle,
                                      AggregationMethod("sum"), eval_every=5,
                                      evaluator=UniformEvaluator(100))
        assert [c.samples_labeled for c in curve.checkpoints] == [0, 50, 100]

    def test_max_batches_budget(self):
        state, detector, oracle = self._engine(6)
        final, records, curve = run_exploration(
            state, detector, oracle, AggregationMethod("sum"), eval_every=2,
            evaluator=UniformEvaluator(60), max_batches=3)
        assert len(records) == 3
        assert len(final.batches) == 3
        assert [c.samples_labeled for c in curve.checkpoints] == [0, 20, 30]

    def test_eval_every_validation(self):
        state, detector, oracle = self._engine(1)
        with pytest.raises(ConfigError):
            run_exploration(state, detector, oracle, AggregationMethod("sum"),
                            eval_every=0, evaluator=UniformEvaluator(10))


class TestParseMethod:
    def test_known_methods(self):
        assert parse_method("random") == "random"
        assert parse_method("sum") == AggregationMethod("sum", False)
        assert parse_method("Max+W") == AggregationMethod("max", True)

    def test_unknown(self):
        with pytest.raises(ConfigError):
            parse_method("entropy")


def test_propose_selection_does_not_mutate():
    dists = {"b0i0": [(0.6, 0.4)], "b0i1": [(0.6, 0.4)],
             "b1i0": [(0.9, 0.1)], "b1i1": [(0.9, 0.1)]}
    detector = ScriptedDetector(dists)
    state = make_state([0, 1])
    batch, record = propose_selection(state, detector, AggregationMethod("sum"))
    assert batch.batch_id == 0
    assert state.step == 0 and len(state.batches) == 2
    again, record2 = propose_selection(state, detector, AggregationMethod("sum"))
    assert again.batch_id == batch.batch_id
    assert record2 == record
