import pytest

from fogrf.costmodel import (
    CostParams,
    OpTrace,
    edp,
    energy_of,
    load_cost_params,
    pe_latency_cycles,
    read_kv_file,
)


class TestEnergy:
    def test_dot_product(self):
        p = CostParams(e_compare=2.0, e_mem_byte_read=3.0, e_mem_byte_write=5.0,
                       e_handshake_byte=7.0, e_accumulate=11.0)
        trace = OpTrace(comparisons=1, bytes_read=1, bytes_written=1,
                        handshake_bytes=1, accumulate_ops=1)
        assert energy_of(trace, p) == pytest.approx(28.0)

    def test_empty_trace_is_free(self):
        assert energy_of(OpTrace(), CostParams()) == 0.0

    def test_scales_linearly(self):
        p = CostParams()
        one = OpTrace(comparisons=3, bytes_read=10, accumulate_ops=2)
        ten = OpTrace(comparisons=30, bytes_read=100, accumulate_ops=20)
        assert energy_of(ten, p) == pytest.approx(10 * energy_of(one, p))

    def test_merge_adds_counters(self):
        a = OpTrace(comparisons=1, bytes_read=2, cycles=3)
        a.merge(OpTrace(comparisons=10, bytes_written=4, cycles=7))
        assert (a.comparisons, a.bytes_read, a.bytes_written, a.cycles) == (11, 2, 4, 10)


class TestLatency:
    def test_serial_single_tree(self):
        p = CostParams(t_compare=1, t_mem_access=1)
        assert pe_latency_cycles(1, 1, 4, 3, p) == 4 + 3

    def test_parallelism_divides_batches(self):
        p = CostParams(t_compare=1, t_mem_access=1)
        # 8 trees at parallelism 4 -> 2 batches of depth 5, plus 10 labels
        assert pe_latency_cycles(8, 4, 5, 10, p) == 2 * 5 + 10

    def test_ceil_on_ragged_batch(self):
        p = CostParams(t_compare=2, t_mem_access=1)
        assert pe_latency_cycles(5, 2, 3, 2, p) == 3 * 3 * 2 + 2

    def test_bad_parallelism(self):
        with pytest.raises(ValueError):
            pe_latency_cycles(4, 0, 3, 2, CostParams())


class TestEdp:
    def test_definition(self):
        p = CostParams(clock_hz=1e9)
        assert edp(2e-9, 500, p) == pytest.approx(2e-9 * 500e-9)

    def test_clock_rescales(self):
        slow = CostParams(clock_hz=1e6)
        fast = CostParams(clock_hz=1e9)
        assert edp(1e-9, 100, slow) == pytest.approx(1000 * edp(1e-9, 100, fast))


class TestValidation:
    def test_negative_energy_rejected(self):
        with pytest.raises(ValueError):
            CostParams(e_compare=-1e-12)

    def test_zero_latency_rejected(self):
        with pytest.raises(ValueError):
            CostParams(t_compare=0)

    def test_zero_clock_rejected(self):
        with pytest.raises(ValueError):
            CostParams(clock_hz=0)


class TestConfigFile:
    def test_read_kv_with_comments(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# header\n a = 1 \n\nb=2 # trailing\n")
        assert read_kv_file(path) == {"a": "1", "b": "2"}

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("just words\n")
        with pytest.raises(ValueError, match="key = value"):
            read_kv_file(path)

    def test_load_overrides_and_defaults(self, tmp_path):
        path = tmp_path / "cost.cfg"
        path.write_text("e_compare = 5e-12\nt_handshake = 4\n")
        p = load_cost_params(path)
        assert p.e_compare == 5e-12
        assert p.t_handshake == 4
        assert p.e_accumulate == CostParams().e_accumulate

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cost.cfg"
        path.write_text("e_banana = 1e-12\n")
        with pytest.raises(ValueError, match="unknown cost parameter"):
            load_cost_params(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "cost.cfg"
        path.write_text("e_compare = fast\n")
        with pytest.raises(ValueError, match="bad value"):
            load_cost_params(path)
