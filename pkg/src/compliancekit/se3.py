"""Rigid-body poses, the 9-D pose encoding, and orthonormal basis construction.

A pose is a position plus a proper orthonormal rotation matrix. The 9-D
encoding packs position followed by the top two rows of the rotation
matrix; the third row is implied by the cross product.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRotation, ZeroDirection

_ORTHO_TOL = 1e-9
_PARALLEL_TOL = 1e-9
_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class Pose:
    """Rigid transform: position in meters, rotation as a 3x3 proper orthonormal matrix."""

    position: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > _ORTHO_TOL:
            raise ValueError(f"rotation not orthonormal (max |R^T R - I| = {err:.3g})")
        det = np.linalg.det(self.rotation)
        if abs(det - 1.0) > _ORTHO_TOL:
            raise ValueError(f"rotation is not proper (det = {det:.12g})")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.eye(3))


def encode_pose9(p: Pose) -> np.ndarray:
    """Pack a pose into 9 numbers: position, then rotation rows 0 and 1."""
    return np.concatenate([p.position, p.rotation[0], p.rotation[1]])


def decode_pose9(v) -> Pose:
    """Rebuild a pose from its 9-D encoding, re-orthonormalizing the rows.

    Row 0 is normalized, row 1 is Gram-Schmidt projected against it, and
    row 2 is their cross product, so noisy encodings snap back onto SO(3).

    Raises DegenerateRotation when the embedded rows are (near-)parallel.
    """
    v = np.asarray(v, dtype=float).reshape(9)
    r0, r1 = v[3:6], v[6:9]
    n0 = np.linalg.norm(r0)
    if n0 < _ZERO_TOL:
        raise DegenerateRotation("first rotation row is near zero")
    row0 = r0 / n0
    r1p = r1 - (r1 @ row0) * row0
    if np.linalg.norm(np.cross(r0, r1)) <= _PARALLEL_TOL * max(1.0, n0 * np.linalg.norm(r1)) \
            or np.linalg.norm(r1p) < _ZERO_TOL:
        raise DegenerateRotation("embedded rotation rows are parallel")
    row1 = r1p / np.linalg.norm(r1p)
    row2 = np.cross(row0, row1)
    return Pose(v[0:3], np.stack([row0, row1, row2]))


def basis_from_direction(d) -> np.ndarray:
    """Orthonormal 3x3 matrix whose first column is d / |d|.

    The remaining columns come from the Householder reflection mapping
    e1 onto d/|d|, which is deterministic and continuous except at the
    antipode of e1. Only the first column carries meaning downstream;
    any orthonormal completion yields the same stiffness matrix.
    """
    d = np.asarray(d, dtype=float).reshape(3)
    n = np.linalg.norm(d)
    if n < _ZERO_TOL:
        raise ZeroDirection(f"|d| = {n:.3g} is below {_ZERO_TOL}")
    u = d / n
    e1 = np.array([1.0, 0.0, 0.0])
    w = u - e1
    wn = np.linalg.norm(w)
    if wn < _ZERO_TOL:
        return np.eye(3)
    w = w / wn
    return np.eye(3) - 2.0 * np.outer(w, w)


def rotation_angle(ra: np.ndarray, rb: np.ndarray) -> float:
    """Geodesic angle in radians between two rotation matrices.

    Computed from ||ra - rb||_F = 2 sqrt(2) sin(angle / 2), which stays
    accurate for small angles where the trace formula loses precision.
    """
    fro = np.linalg.norm(ra - rb)
    return float(2.0 * np.arcsin(np.clip(fro / (2.0 * np.sqrt(2.0)), 0.0, 1.0)))
