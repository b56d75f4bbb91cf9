import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from nested_ucya.geometry import (
    ArrayConfig,
    SourceSet,
    full_steering,
    horizontal_steering,
    random_sources,
    vertical_steering,
)

angles = st.tuples(st.floats(0.01, np.pi - 0.01), st.floats(0, 2 * np.pi))


class TestArrayConfig:
    def test_defaults(self):
        cfg = ArrayConfig()
        assert (cfg.M_v, cfg.M_h, cfg.r, cfg.h, cfg.M_bs) == (25, 30, 2.0, 0.5, 750)

    def test_ring_too_sparse(self):
        with pytest.raises(ValueError, match="floor"):
            ArrayConfig(M_h=11, r=1.0)

    def test_single_ring_rejected(self):
        with pytest.raises(ValueError, match="M_v must be at least 2"):
            ArrayConfig(M_v=1)

    def test_negative_radius(self):
        with pytest.raises(ValueError, match="positive"):
            ArrayConfig(r=-1.0)


class TestSteering:
    def test_vertical_broadside(self):
        assert_allclose(vertical_steering(np.pi / 2, ArrayConfig(M_v=4)), np.full(4, 0.5))

    def test_vertical_hand_values(self):
        cfg = ArrayConfig(M_v=3, M_h=30)
        assert_allclose(vertical_steering(np.pi / 3, cfg), np.array([1, -1j, -1]) / np.sqrt(3), atol=1e-15)

    def test_horizontal_at_zenith_is_uniform(self):
        cfg = ArrayConfig()
        assert_allclose(horizontal_steering(1e-12, 1.0, cfg), np.full(30, 1 / np.sqrt(30)), atol=1e-10)

    def test_rotation_permutes_elements(self):
        cfg = ArrayConfig()
        a = horizontal_steering(1.0, 0.3, cfg)
        b = horizontal_steering(1.0, 0.3 + 2 * np.pi / cfg.M_h, cfg)
        assert_allclose(b, np.roll(a, 1), atol=1e-12)

    def test_horizontal_element_formula(self):
        cfg = ArrayConfig()
        a = horizontal_steering(np.pi / 2, 0.0, cfg) * np.sqrt(30)
        assert_allclose(a[0], 1.0, atol=1e-12)  # phase 4 pi
        for m in (7, 13):
            assert_allclose(a[m], np.exp(1j * 4 * np.pi * np.cos(2 * np.pi * m / 30)), atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(angles)
    def test_unit_norm_and_separable(self, ang):
        cfg = ArrayConfig(M_v=4, M_h=13, r=1.0)
        t, p = ang
        a = full_steering(t, p, cfg)
        assert np.isclose(np.linalg.norm(a), 1.0)
        av, ah = vertical_steering(t, cfg), horizontal_steering(t, p, cfg)
        assert_allclose(a.reshape(4, 13), np.outer(av, ah), atol=1e-14)

    def test_elementwise_phase(self):
        cfg = ArrayConfig(M_v=3, M_h=13, r=1.0)
        t, p = 0.7, 2.1
        a = full_steering(t, p, cfg)
        for mv in range(3):
            for mh in range(13):
                phase = -2 * np.pi * 0.5 * mv * np.cos(t) + 2 * np.pi * np.sin(t) * np.cos(p - 2 * np.pi * mh / 13)
                assert np.isclose(a[mv * 13 + mh], np.exp(1j * phase) / np.sqrt(39))


class TestSources:
    def test_duplicate_direction(self):
        with pytest.raises(ValueError, match="share a direction"):
            SourceSet.from_degrees([60, 60], [10, 10])

    def test_elevation_range(self):
        with pytest.raises(ValueError, match="strictly inside"):
            SourceSet.from_degrees([0.0], [10])

    def test_azimuth_wrapped(self):
        assert np.isclose(SourceSet.from_degrees([60], [370]).phi[0], np.radians(10))

    def test_random_respects_separation(self):
        src = random_sources(8, np.random.default_rng(0), np.radians(10))
        from nested_ucya.geometry import angular_distance
        for i in range(8):
            for j in range(i + 1, 8):
                assert angular_distance(src.theta[i], src.phi[i], src.theta[j], src.phi[j]) >= np.radians(10)
        assert np.all((src.theta >= np.radians(30)) & (src.theta <= np.radians(150)))

    def test_random_impossible(self):
        with pytest.raises(RuntimeError, match="could not place"):
            random_sources(50, np.random.default_rng(0), np.radians(60), max_tries=2000)
