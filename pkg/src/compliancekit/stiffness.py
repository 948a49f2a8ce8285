"""Stiffness construction from force feedback.

The low-stiffness magnitude follows a piecewise-linear schedule in the
force magnitude, and the full 3x3 matrix places that low stiffness along
the force direction with high stiffness everywhere else.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .se3 import basis_from_direction

_X = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class StiffnessSchedule:
    """Piecewise-linear map from force magnitude [N] to low stiffness [N/m].

    k_max below f_min, k_min above f_max, linear in between.
    """

    k_max: float
    k_min: float
    f_max: float
    f_min: float

    def __post_init__(self):
        if not (self.k_max >= self.k_min >= 0.0):
            raise ValueError(f"require k_max >= k_min >= 0, got {self.k_max}, {self.k_min}")
        if not (self.f_max > self.f_min >= 0.0):
            raise ValueError(f"require f_max > f_min >= 0, got {self.f_max}, {self.f_min}")


DEFAULT_SCHEDULE = StiffnessSchedule(k_max=2000.0, k_min=50.0, f_max=8.0, f_min=1.0)
DEFAULT_K_HIGH = 2000.0


@dataclass(frozen=True)
class StiffnessProfile:
    """A 3x3 stiffness matrix plus its defining decomposition."""

    matrix: np.ndarray
    low_dir: np.ndarray
    k_low: float
    k_high: float


def k_low_of_force(schedule: StiffnessSchedule, f_mag: float) -> float:
    """Low-direction stiffness for a given force magnitude [N]."""
    if f_mag < 0:
        raise ValueError(f"force magnitude must be >= 0, got {f_mag}")
    s = schedule
    if f_mag < s.f_min:
        return s.k_max
    if f_mag > s.f_max:
        return s.k_min
    return s.k_max - (s.k_max - s.k_min) * (f_mag - s.f_min) / (s.f_max - s.f_min)


def stiffness_matrix(low_dir, k_low: float, k_high: float) -> np.ndarray:
    """K = S diag(k_low, k_high, k_high) S^T with S an orthonormal basis led by low_dir."""
    s = basis_from_direction(low_dir)
    k0 = np.diag([k_low, k_high, k_high])
    return s @ k0 @ s.T


def stiffness_from_force(f, schedule: StiffnessSchedule, k_high: float) -> StiffnessProfile:
    """Stiffness profile that is soft along the measured force and stiff elsewhere.

    Below the schedule's f_min the profile is uniformly stiff (k_high in all
    directions) and low_dir is reported as +x by convention.
    """
    if k_high < schedule.k_max:
        warnings.warn(
            f"k_high = {k_high} is below schedule k_max = {schedule.k_max}; "
            "the 'low' direction can end up stiffer than the others",
            stacklevel=2,
        )
    f = np.asarray(f, dtype=float).reshape(3)
    f_mag = float(np.linalg.norm(f))
    if f_mag < schedule.f_min:
        return StiffnessProfile(k_high * np.eye(3), _X.copy(), float(k_high), float(k_high))
    k_low = k_low_of_force(schedule, f_mag)
    return StiffnessProfile(stiffness_matrix(f, k_low, k_high), f / f_mag, float(k_low), float(k_high))
