import numpy as np
import pytest

from conftest import StubField, StubGrove, make_gaussian_dataset
from fogrf.costmodel import CostParams
from fogrf.fog import EvalConfig, gc_eval
from fogrf.forest import gc_train
from fogrf.simarch import (
    DataQueue,
    QueueEntry,
    QueueFullError,
    SimConfig,
    gamma,
    simulate,
    verify_event_log,
)

COST = CostParams()


def entry(input_id, n_labels=2):
    return QueueEntry(input_id=input_id, payload=np.zeros(2), prob=np.zeros(n_labels))


class TestGamma:
    def test_small(self):
        assert gamma(5, 3) == 10

    def test_wide(self):
        assert gamma(784, 10) == 796

    def test_pen_shape(self):
        assert gamma(16, 10) == 28

    def test_invalid(self):
        with pytest.raises(ValueError):
            gamma(0, 3)


class TestDataQueue:
    def test_fifo_order(self):
        q = DataQueue(40, 10)
        for i in range(4):
            q.push_back(entry(i))
        assert [q.pop_front().input_id for _ in range(4)] == [0, 1, 2, 3]

    def test_push_front_takes_priority(self):
        q = DataQueue(40, 10)
        q.push_back(entry(0))
        q.push_back(entry(1))
        q.push_front(entry(9))
        assert [q.pop_front().input_id for _ in range(3)] == [9, 0, 1]

    def test_full_queue_raises(self):
        q = DataQueue(20, 10)
        q.push_back(entry(0))
        q.push_back(entry(1))
        with pytest.raises(QueueFullError):
            q.push_back(entry(2))
        with pytest.raises(QueueFullError):
            q.push_front(entry(3))

    def test_pointers_wrap_modulo_capacity(self):
        q = DataQueue(30, 10)
        for i in range(7):  # cycle through more slots than capacity holds
            q.push_back(entry(i))
            assert q.pop_front().input_id == i
        assert q.fr == q.bk
        assert q.fr < q.capacity_bytes
        assert q.fr % 10 == 0

    def test_capacity_rounds_up_to_whole_entries(self):
        q = DataQueue(25, 10)
        assert q.capacity_bytes == 30
        for i in range(3):
            q.push_back(entry(i))
        assert q.free_bytes == 0

    def test_too_small_capacity_rejected(self):
        with pytest.raises(ValueError):
            DataQueue(5, 10)


class TestSimulateStub:
    def test_confident_input_single_hop(self):
        field = StubField([StubGrove([0.9, 0.05, 0.05]), StubGrove([1 / 3] * 3)],
                          n_features=5)
        cfg = SimConfig(n_groves=2, trees_per_grove=1, thresh=0.5)
        stats = simulate(np.zeros((1, 5)), field, cfg, COST, start_groves=[0])
        rec = stats.records[0]
        assert rec.hops == 1
        assert rec.label == 0
        assert np.allclose(rec.prob_norm, [0.9, 0.05, 0.05])

    def test_forwarding_accumulates_mean(self):
        field = StubField([StubGrove([0.4, 0.6]), StubGrove([0.1, 0.9])], n_features=4)
        cfg = SimConfig(n_groves=2, trees_per_grove=1, thresh=0.3)
        rec = simulate(np.zeros((1, 4)), field, cfg, COST, start_groves=[0]).records[0]
        assert rec.hops == 2
        assert np.allclose(rec.prob_norm, [0.25, 0.75])

    def test_max_hops_cap(self):
        field = StubField([StubGrove([0.5, 0.5])] * 4, n_features=4)
        cfg = SimConfig(n_groves=4, trees_per_grove=1, thresh=0.9, max_hops=2)
        rec = simulate(np.zeros((1, 4)), field, cfg, COST, start_groves=[1]).records[0]
        assert rec.hops == 2
        assert rec.start_grove == 1

    def test_capacity_below_two_entries_rejected(self):
        field = StubField([StubGrove([0.6, 0.4])], n_features=4)
        g = gamma(4, 2)
        cfg = SimConfig(n_groves=1, trees_per_grove=1, queue_capacity_bytes=2 * g - 1)
        with pytest.raises(ValueError, match="two"):
            simulate(np.zeros((1, 4)), field, cfg, COST, start_groves=[0])

    def test_energy_accounts_each_hop(self):
        field = StubField([StubGrove([0.5, 0.5]), StubGrove([0.5, 0.5])], n_features=4)
        g = gamma(4, 2)
        cfg = SimConfig(n_groves=2, trees_per_grove=1, thresh=0.9)
        rec = simulate(np.zeros((1, 4)), field, cfg, COST, start_groves=[0]).records[0]
        # 2 hops: 2 reads, 1 dispatch write + 1 write-back per hop,
        # 1 handshake, no comparisons (stub trees), 2 labels per hop
        expected = (
            2 * g * COST.e_mem_byte_read
            + 3 * g * COST.e_mem_byte_write
            + g * COST.e_handshake_byte
            + 4 * COST.e_accumulate
        )
        assert rec.energy_j == pytest.approx(expected)


@pytest.fixture(scope="module")
def setup():
    ds = make_gaussian_dataset(seed=21, n=400, n_features=8, n_labels=3)
    field = gc_train(16, 2, ds, max_depth=6, min_leaf=2, seed=4)
    return ds, field


class TestSimulateTrained:

    def test_matches_functional_eval(self, setup):
        ds, field = setup
        X = ds.features[:120]
        cfg = SimConfig(n_groves=8, trees_per_grove=2, thresh=0.6, seed=7)
        stats = simulate(X, field, cfg, COST)
        func = gc_eval(X, field, EvalConfig(thresh=0.6, seed=7),
                       start_groves=stats.start_groves)
        for rec, r in zip(stats.records, func):
            assert rec.label == r.label
            assert rec.hops == r.hops
            assert np.allclose(rec.prob_norm, r.prob_norm)

    def test_event_log_verifies(self, setup):
        ds, field = setup
        X = ds.features[:60]
        cfg = SimConfig(n_groves=8, trees_per_grove=2, thresh=0.7, seed=1)
        stats = simulate(X, field, cfg, COST, collect_events=True)
        verify_event_log(stats.events, range(len(X)), 8)

    def test_backpressure_stress_conserves_inputs(self, setup):
        ds, field = setup
        X = ds.features[:200]
        g = gamma(8, 3)
        cfg = SimConfig(n_groves=8, trees_per_grove=2, thresh=0.95, seed=3,
                        queue_capacity_bytes=2 * g)
        stats = simulate(X, field, cfg, COST, collect_events=True)
        assert sorted(r.input_id for r in stats.records) == list(range(200))
        verify_event_log(stats.events, range(200), 8)

    def test_deterministic_reruns(self, setup):
        ds, field = setup
        X = ds.features[:50]
        cfg = SimConfig(n_groves=8, trees_per_grove=2, thresh=0.5, seed=11)
        a = simulate(X, field, cfg, COST)
        b = simulate(X, field, cfg, COST)
        assert a.makespan_cycles == b.makespan_cycles
        assert a.mean_energy_j == b.mean_energy_j
        assert [r.label for r in a.records] == [r.label for r in b.records]

    def test_fixed_interval_arrival_latency(self, setup):
        ds, field = setup
        X = ds.features[:30]
        batch = SimConfig(n_groves=8, trees_per_grove=2, thresh=0.5, seed=2)
        spaced = SimConfig(n_groves=8, trees_per_grove=2, thresh=0.5, seed=2,
                           arrival="fixed_interval", arrival_interval=50)
        a = simulate(X, field, batch, COST)
        b = simulate(X, field, spaced, COST)
        # spacing arrivals removes queueing delay, so latency cannot grow
        assert b.mean_latency_cycles <= a.mean_latency_cycles
        assert b.makespan_cycles >= a.makespan_cycles

    def test_parallelism_reduces_latency(self, setup):
        ds, field = setup
        X = ds.features[:40]
        serial = SimConfig(n_groves=8, trees_per_grove=2, thresh=0.5, seed=2,
                           parallelism=1)
        wide = SimConfig(n_groves=8, trees_per_grove=2, thresh=0.5, seed=2,
                         parallelism=2)
        a = simulate(X, field, serial, COST)
        b = simulate(X, field, wide, COST)
        assert b.mean_latency_cycles <= a.mean_latency_cycles

    def test_mismatched_config_rejected(self, setup):
        ds, field = setup
        cfg = SimConfig(n_groves=4, trees_per_grove=2)
        with pytest.raises(ValueError, match="n_groves"):
            simulate(ds.features[:5], field, cfg, COST)


class TestVerifyEventLog:
    def test_detects_double_residency(self):
        events = [
            (0, 0, "ENQ_P", 1, 0),
            (1, 0, "ENQ_P", 1, 0),
        ]
        with pytest.raises(AssertionError):
            verify_event_log(events, [1], 1)

    def test_detects_missing_emission(self):
        events = [(0, 0, "ENQ_P", 1, 0), (1, 0, "PE_START", 1, 0)]
        with pytest.raises(AssertionError):
            verify_event_log(events, [1], 1)
