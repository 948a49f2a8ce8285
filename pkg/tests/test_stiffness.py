import numpy as np
import pytest

from compliancekit.se3 import basis_from_direction
from compliancekit.stiffness import (
    DEFAULT_SCHEDULE,
    StiffnessSchedule,
    k_low_of_force,
    stiffness_from_force,
    stiffness_matrix,
)


class TestSchedule:
    def test_below_f_min_gives_k_max(self):
        assert k_low_of_force(DEFAULT_SCHEDULE, 0.0) == DEFAULT_SCHEDULE.k_max
        assert k_low_of_force(DEFAULT_SCHEDULE, 0.5) == DEFAULT_SCHEDULE.k_max

    def test_midpoint_is_mean(self):
        s = DEFAULT_SCHEDULE
        mid = k_low_of_force(s, 0.5 * (s.f_min + s.f_max))
        np.testing.assert_allclose(mid, 0.5 * (s.k_max + s.k_min))

    def test_above_f_max_gives_k_min(self):
        assert k_low_of_force(DEFAULT_SCHEDULE, 100.0) == DEFAULT_SCHEDULE.k_min

    def test_continuity_at_breakpoints(self):
        s = DEFAULT_SCHEDULE
        eps = 1e-12
        assert abs(k_low_of_force(s, s.f_min + eps) - s.k_max) < 1e-6
        assert abs(k_low_of_force(s, s.f_max - eps) - s.k_min) < 1e-6

    def test_monotone_non_increasing(self):
        f = np.linspace(0.0, 12.0, 500)
        k = np.array([k_low_of_force(DEFAULT_SCHEDULE, fi) for fi in f])
        assert (np.diff(k) <= 0).all()

    def test_invalid_schedules_rejected(self):
        with pytest.raises(ValueError):
            StiffnessSchedule(k_max=10.0, k_min=20.0, f_max=8.0, f_min=1.0)
        with pytest.raises(ValueError):
            StiffnessSchedule(k_max=20.0, k_min=10.0, f_max=1.0, f_min=8.0)

    def test_negative_force_rejected(self):
        with pytest.raises(ValueError):
            k_low_of_force(DEFAULT_SCHEDULE, -1.0)


class TestStiffnessMatrix:
    def test_force_along_x_gives_diagonal(self):
        schedule = StiffnessSchedule(k_max=2000.0, k_min=100.0, f_max=8.0, f_min=1.0)
        profile = stiffness_from_force([10.0, 0.0, 0.0], schedule, 2000.0)
        np.testing.assert_allclose(profile.matrix, np.diag([100.0, 2000.0, 2000.0]),
                                   atol=1e-9)

    def test_zero_force_gives_uniform_high(self):
        profile = stiffness_from_force(np.zeros(3), DEFAULT_SCHEDULE, 2000.0)
        np.testing.assert_array_equal(profile.matrix, 2000.0 * np.eye(3))
        assert profile.k_low == 2000.0

    def test_eigenstructure_random(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            f = rng.normal(scale=5.0, size=3)
            f *= 10.0 / np.linalg.norm(f)  # beyond f_max
            profile = stiffness_from_force(f, DEFAULT_SCHEDULE, 2000.0)
            np.testing.assert_allclose(profile.matrix, profile.matrix.T, atol=1e-9)
            eig, vec = np.linalg.eigh(profile.matrix)
            np.testing.assert_allclose(
                eig, [DEFAULT_SCHEDULE.k_min, 2000.0, 2000.0], rtol=1e-6)
            # f spans the k_min eigenspace
            u = f / np.linalg.norm(f)
            assert abs(abs(vec[:, 0] @ u) - 1.0) < 1e-6

    def test_matrix_maps_low_dir_to_k_low(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            f = rng.normal(size=3) * rng.uniform(1.5, 20.0)
            profile = stiffness_from_force(f, DEFAULT_SCHEDULE, 2000.0)
            np.testing.assert_allclose(profile.matrix @ profile.low_dir,
                                       profile.k_low * profile.low_dir, rtol=1e-6)

    def test_completion_independence(self):
        # any orthonormal completion of the same first column gives the same K
        rng = np.random.default_rng(6)
        for _ in range(50):
            d = rng.normal(size=3)
            k = stiffness_matrix(d, 50.0, 2000.0)
            s = basis_from_direction(d)
            angle = rng.uniform(0.0, 2 * np.pi)
            c, si = np.cos(angle), np.sin(angle)
            spin = np.array([[1, 0, 0], [0, c, -si], [0, si, c]], dtype=float)
            s2 = s @ spin  # same first column, rotated completion
            k2 = s2 @ np.diag([50.0, 2000.0, 2000.0]) @ s2.T
            np.testing.assert_allclose(k, k2, atol=1e-9)

    def test_rank_one_closed_form(self):
        # K = k_high I + (k_low - k_high) d d^T, the form the hot loops use
        rng = np.random.default_rng(7)
        for _ in range(50):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            k = stiffness_matrix(d, 50.0, 2000.0)
            np.testing.assert_allclose(
                k, 2000.0 * np.eye(3) + (50.0 - 2000.0) * np.outer(d, d), atol=1e-9)

    def test_low_k_high_warns(self):
        with pytest.warns(UserWarning, match="k_high"):
            stiffness_from_force([10.0, 0.0, 0.0], DEFAULT_SCHEDULE, 100.0)
