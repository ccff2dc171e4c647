import math

import numpy as np
import pytest

from thzvr.latency import (LatencyBudget, fov_size_bits, qoe, quality,
                           render_latency, transmit_latency, viewpoint_hit)


class TestFovSize:
    def test_4k_stereo(self):
        assert fov_size_bits(3840, 2160) == 398_131_200

    def test_unit_pixel(self):
        assert fov_size_bits(1, 1) == 48

    def test_linear_in_width(self):
        assert fov_size_bits(200, 100) == 2 * fov_size_bits(100, 100)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            fov_size_bits(0, 100)


class TestRenderLatency:
    def test_direct_ratio(self):
        assert render_latency(5e9, 1000, 5e9) == pytest.approx(1000.0)

    def test_raw_4k_takes_80_seconds(self):
        t = render_latency(fov_size_bits(3840, 2160), 1000, 5e9)
        assert t == pytest.approx(79.62624, rel=1e-6)

    def test_compressed_4k_is_milliseconds(self):
        t = render_latency(fov_size_bits(3840, 2160) / 6000.0, 1000, 5e9)
        assert t == pytest.approx(0.01327104, rel=1e-9)


class TestTransmitLatency:
    def test_division(self):
        assert transmit_latency(1e6, 10.0, 1e9) == pytest.approx(1e-4)

    def test_zero_rate_is_infinite(self):
        assert transmit_latency(1e6, 0.0, 1e9) == math.inf

    def test_model_payload_dwarfs_viewpoint_packet(self):
        model = transmit_latency(1e7, 5.0, 1e9)
        packet = transmit_latency(192, 5.0, 1e9)
        assert model == pytest.approx(2e-3)
        assert packet == pytest.approx(3.84e-8)
        assert model / packet > 1e4


class TestViewpointHit:
    def test_exact_match(self):
        assert viewpoint_hit(30.0, 30.0, 15.0) == 1

    def test_boundary_inclusive(self):
        assert viewpoint_hit(45.0, 30.0, 15.0) == 1

    def test_miss(self):
        assert viewpoint_hit(40.0, 10.0, 15.0) == 0

    def test_multi_axis_all_must_hit(self):
        assert viewpoint_hit([10.0, 20.0], [11.0, 50.0], 15.0) == 0
        assert viewpoint_hit([10.0, 20.0], [11.0, 21.0], 15.0) == 1


class TestQoe:
    def test_miss_zeroes_qoe(self):
        rec = qoe(0, 100.0, 0.001, 1.0)
        assert rec.qoe == 0.0

    def test_threshold_rate_zero_quality(self):
        rec = qoe(1, 1.0, 1.0, 1.0)
        assert rec.q_now == 0.0 and rec.qoe == 0.0

    def test_e_times_threshold_gives_one(self):
        rec = qoe(1, math.e * 2.0, math.e * 2.0, 2.0)
        assert rec.qoe == pytest.approx(1.0)

    def test_zero_rate_clamped(self):
        rec = qoe(1, 0.0, 1.0, 1.0, q_min=-20.0)
        assert rec.q_now == -20.0

    def test_variation_penalty(self):
        rec = qoe(1, math.e, 1.0, 1.0)
        assert rec.qoe == pytest.approx(1.0 - 1.0)  # q=1 minus |1-0|

    def test_monotone_in_rate_when_stable(self):
        rates = np.linspace(0.5, 20.0, 30)
        values = [qoe(1, r, r, 1.0).qoe for r in rates]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_qoe_bounded_by_quality(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            now, prev = rng.uniform(0.01, 50.0, size=2)
            rec = qoe(1, now, prev, 1.0)
            assert rec.qoe <= rec.q_now + 1e-12
            assert abs(rec.qoe) <= abs(rec.q_now) + abs(rec.q_now - rec.q_prev) + 1e-12

    def test_argmax_invariance_under_monotone_quality(self):
        # with a fixed previous rate, the rate maximizing the downlink also
        # maximizes the hit-gated QoE (non-decreasing composition)
        rng = np.random.default_rng(13)
        for _ in range(50):
            prev = rng.uniform(0.1, 10.0)
            rates = rng.uniform(0.05, 20.0, size=8)
            qoes = [qoe(1, r, prev, 1.0).qoe for r in rates]
            assert qoes[int(np.argmax(rates))] == pytest.approx(max(qoes))


class TestLatencyBudget:
    def test_total_additivity(self):
        budget = LatencyBudget(t_uplink=0.001, t_render=0.013, t_downlink=0.004)
        assert budget.t_total == pytest.approx(0.018)

    def test_quality_threshold_validation(self):
        with pytest.raises(ValueError):
            quality(1.0, 0.0)
