"""Demonstration-to-label pipeline.

An episode's wrench stream is smoothed with a centered moving average
(the window deliberately extends into the future so labels anticipate
contacts about to happen), the low-direction stiffness comes from the
force-magnitude schedule, and the commanded force is re-expressed as a
virtual target pose displaced from the reference by f / k_low. Each
label is 19 numbers: 9-D reference pose, 9-D virtual target, stiffness
scalar.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .episode_io import Episode, WrenchTrack
from .errors import DegenerateStiffness, EmptyOverlap
from .se3 import Pose, decode_pose9, encode_pose9
from .stiffness import (
    StiffnessProfile,
    StiffnessSchedule,
    k_low_of_force,
    stiffness_matrix,
)

POSITION_EPS = 1e-12


def moving_average_wrench(track: WrenchTrack, window: float = 1.0) -> WrenchTrack:
    """Centered moving average per wrench component.

    Output timestamps equal input timestamps; windows truncate at the track
    edges. The average is over samples, which matches the time average for
    uniformly sampled tracks.
    """
    if window <= 0:
        raise ValueError(f"window must be > 0, got {window}")
    t = track.t
    half = window / 2.0
    lo = np.searchsorted(t, t - half, side="left")
    hi = np.searchsorted(t, t + half, side="right")
    csum = np.vstack([np.zeros(6), np.cumsum(track.wrench, axis=0)])
    out = (csum[hi] - csum[lo]) / (hi - lo)[:, None]
    return WrenchTrack(t.copy(), out)


def virtual_target_from_force(reference: Pose, f_ref, k_low: float) -> Pose:
    """Pose whose spring pull at the reference pose reproduces f_ref.

    The offset is f_ref / k_low because the force direction is the
    low-stiffness eigendirection of the reconstructed stiffness matrix.
    Rotation is copied from the reference (translational compliance only).
    """
    if k_low <= 0:
        raise DegenerateStiffness(f"k_low must be > 0, got {k_low}")
    f_ref = np.asarray(f_ref, dtype=float).reshape(3)
    return Pose(reference.position + f_ref / k_low, reference.rotation)


@dataclass(frozen=True)
class ActionLabel:
    """One supervision step: reference pose, virtual target, stiffness scalar."""

    t: float
    reference: np.ndarray       # 9-D pose encoding
    virtual_target: np.ndarray  # 9-D pose encoding
    k_low: float

    def __post_init__(self):
        object.__setattr__(self, "reference", np.asarray(self.reference, dtype=float).reshape(9))
        object.__setattr__(self, "virtual_target",
                           np.asarray(self.virtual_target, dtype=float).reshape(9))

    def as_vector(self) -> np.ndarray:
        """The 19-number action: reference, virtual target, k_low."""
        return np.concatenate([self.reference, self.virtual_target, [self.k_low]])


def direction_and_force_from_action(label: ActionLabel):
    """Recover (force direction, force magnitude) from a label.

    Inverse of virtual_target_from_force; direction is None when the
    virtual target coincides with the reference (no commanded force).
    """
    delta = label.virtual_target[:3] - label.reference[:3]
    dist = float(np.linalg.norm(delta))
    if dist < POSITION_EPS:
        return None, 0.0
    return delta / dist, dist * label.k_low


def _interp_forces(track: WrenchTrack, times: np.ndarray) -> np.ndarray:
    return np.column_stack([np.interp(times, track.t, track.force[:, k]) for k in range(3)])


def label_episode(
    episode: Episode,
    schedule: StiffnessSchedule,
    k_high: float,
    label_rate: float = 10.0,
    filter_window: float = 1.0,
) -> list[ActionLabel]:
    """Per-step action labels on a uniform grid over the track overlap.

    Reference poses interpolate the pose track (linear positions, slerp
    rotations); forces come from the centered moving-average filter. Steps
    with filtered |f| below the schedule's f_min get virtual = reference
    and k_low = k_high.
    """
    t0, t1 = episode.overlap()
    if t1 < t0:
        raise EmptyOverlap(f"pose track and wrench track do not overlap ({t0} > {t1})")
    count = int(np.floor((t1 - t0) * label_rate)) + 1
    times = t0 + np.arange(count) / label_rate

    pose_t = episode.pose_track.t
    positions = np.column_stack([
        np.interp(times, pose_t, episode.pose_track.positions[:, k]) for k in range(3)
    ])
    rotations = [decode_pose9(p).rotation for p in episode.pose_track.pose9]
    slerp = Slerp(pose_t, Rotation.from_matrix(np.stack(rotations)))
    rot_grid = slerp(np.clip(times, pose_t[0], pose_t[-1])).as_matrix()

    filtered = moving_average_wrench(episode.wrench_track, filter_window)
    forces = _interp_forces(filtered, times)

    labels = []
    for i in range(count):
        ref = Pose(positions[i], rot_grid[i])
        f = forces[i]
        f_mag = float(np.linalg.norm(f))
        if f_mag >= schedule.f_min:
            k_low = k_low_of_force(schedule, f_mag)
            virt = virtual_target_from_force(ref, f, k_low)
        else:
            k_low = float(k_high)
            virt = ref
        labels.append(ActionLabel(float(times[i]), encode_pose9(ref), encode_pose9(virt), k_low))
    return labels


def stiffness_from_action(label: ActionLabel, k_high: float,
                          position_eps: float = POSITION_EPS) -> StiffnessProfile:
    """Reconstruct the full stiffness matrix from a label at inference time.

    The low-stiffness direction is the reference-to-virtual-target
    direction; a coincident pair yields the uniform k_high profile.
    """
    direction, _ = direction_and_force_from_action(label)
    delta = label.virtual_target[:3] - label.reference[:3]
    if direction is None or np.linalg.norm(delta) < position_eps:
        return StiffnessProfile(k_high * np.eye(3), np.array([1.0, 0.0, 0.0]),
                                float(k_high), float(k_high))
    return StiffnessProfile(stiffness_matrix(direction, label.k_low, k_high),
                            direction, float(label.k_low), float(k_high))
