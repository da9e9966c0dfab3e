from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from litsphere import ContractError
from litsphere.exposure import (
    ExposureParams,
    choose_exposure,
    log_decode,
    log_encode,
    simulate_ldr,
    tonemap_8bit,
)


def make_img(vals):
    a = np.asarray(vals, dtype=np.float64)
    return np.repeat(a[:, None, None], 3, axis=2).reshape(a.shape[0], 1, 3)


class TestChooseExposure:
    def test_constant_image(self):
        img = np.full((4, 4, 3), 0.7)
        p = choose_exposure(img)
        assert p.lo == p.hi == pytest.approx(0.7)

    def test_ramp_order_statistics(self):
        vals = np.arange(1000) / 1000.0
        p = choose_exposure(make_img(vals))
        assert p.lo == pytest.approx(0.04995, abs=1e-12)
        assert p.hi == pytest.approx(0.94905, abs=1e-12)

    def test_mask_restricts(self):
        img = np.zeros((2, 2, 3))
        img[0] = 10.0
        img[1] = 0.5
        mask = np.array([[False, False], [True, True]])
        p = choose_exposure(img, mask)
        assert p.lo == p.hi == pytest.approx(0.5)

    def test_luminance_is_channel_mean(self):
        img = np.zeros((1, 2, 3))
        img[0, 0] = (0.0, 0.0, 3.0)
        img[0, 1] = (1.0, 1.0, 1.0)
        p = choose_exposure(img)
        assert p.hi == pytest.approx(1.0)

    def test_empty_mask_rejected(self):
        with pytest.raises(ContractError):
            choose_exposure(np.ones((2, 2, 3)), np.zeros((2, 2), dtype=bool))


class TestSimulateLdr:
    def test_endpoints_exact(self):
        p = ExposureParams(0.125, 0.875)
        img = np.array([[[0.125, 0.875, 0.5]]])
        out = simulate_ldr(img, p)
        assert out[0, 0, 0] == 0.125
        assert out[0, 0, 1] == 0.875

    def test_half_step_bound(self, rng):
        p = ExposureParams(0.2, 1.7)
        img = rng.uniform(0.2, 1.7, (16, 16, 3))
        out = simulate_ldr(img, p)
        assert np.max(np.abs(out - img)) <= (p.hi - p.lo) / 510 + 1e-15

    def test_clamp_above(self):
        p = ExposureParams(0.0, 1.0)
        out = simulate_ldr(np.array([[[10.0, -5.0, 0.3]]]), p)
        assert out[0, 0, 0] == 1.0
        assert out[0, 0, 1] == 0.0

    def test_idempotent(self, rng):
        p = ExposureParams(0.1, 2.3)
        img = rng.uniform(0.0, 3.0, (8, 8, 3))
        once = simulate_ldr(img, p)
        twice = simulate_ldr(once, p)
        np.testing.assert_array_equal(once, twice)

    def test_range_never_exceeds_bracket(self, rng):
        p = ExposureParams(0.3, 0.9)
        out = simulate_ldr(rng.uniform(0, 5, (8, 8, 3)), p)
        assert out.min() >= p.lo and out.max() <= p.hi

    def test_degenerate_passthrough(self):
        p = ExposureParams(0.5, 0.5)
        img = np.array([[[0.1, 0.5, 2.0]]])
        np.testing.assert_array_equal(simulate_ldr(img, p), img)

    def test_float32_idempotent(self, rng):
        p = ExposureParams(0.05, 1.55)
        img = rng.uniform(0, 2, (8, 8, 3)).astype(np.float32)
        once = simulate_ldr(img, p)
        assert once.dtype == np.float32
        np.testing.assert_array_equal(simulate_ldr(once, p), once)

    @settings(max_examples=50, deadline=None)
    @given(lo=st.floats(0, 10), width=st.floats(1e-6, 100), seed=st.integers(0, 2**31))
    def test_bound_property(self, lo, width, seed):
        p = ExposureParams(lo, lo + width)
        r = np.random.default_rng(seed)
        img = r.uniform(lo, lo + width, (4, 4, 3))
        out = simulate_ldr(img, p)
        assert np.max(np.abs(out - img)) <= width / 510 * (1 + 1e-12) + 1e-12


class TestLogCodec:
    def test_zero_maps_to_log_eps(self):
        out = log_encode(np.zeros((1, 1, 3)))
        assert out[0, 0, 0] == pytest.approx(math.log(1e-6), abs=1e-12)

    def test_unit_value(self):
        out = log_encode(np.full((1, 1, 3), math.e - 1e-6))
        assert out[0, 0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_round_trip(self, rng):
        img = rng.uniform(0, 100, (8, 8, 3))
        np.testing.assert_allclose(log_decode(log_encode(img)), img, atol=1e-6)

    def test_negative_rejected(self):
        with pytest.raises(ContractError):
            log_encode(np.full((1, 1, 3), -0.1))


class TestTonemap:
    def test_endpoints(self):
        p = ExposureParams(0.25, 0.75)
        out = tonemap_8bit(np.array([[[0.25, 0.75, 10.0]]]), p)
        assert out.dtype == np.uint8
        assert out[0, 0, 0] == 0
        assert out[0, 0, 1] == 255
        assert out[0, 0, 2] == 255

    def test_midpoint_gamma(self):
        p = ExposureParams(0.0, 1.0)
        out = tonemap_8bit(np.array([[[0.5, 0.5, 0.5]]]), p)
        assert out[0, 0, 0] == 186

    def test_monotone(self, rng):
        p = ExposureParams(0.1, 1.9)
        x = np.sort(rng.uniform(0, 2.5, 64))
        out = tonemap_8bit(make_img(x), p)[:, 0, 0]
        assert np.all(np.diff(out.astype(int)) >= 0)
