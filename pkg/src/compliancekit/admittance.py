"""Discrete-time admittance controller for the spring-mass-damper law
M x'' + K (x - x_target) + K_D x' = f_ext.

The integrator is semi-implicit Euler: the velocity update treats the
damping term implicitly (unconditionally stable in the damping, and
noticeably more accurate on critically damped transients at 500 Hz-scale
steps), then the position advances with the new velocity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import ForceLimitExceeded
from .stiffness import StiffnessProfile


def _as_matrix3(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim == 0:
        return float(m) * np.eye(3)
    if m.ndim == 1:
        return np.diag(m)
    return m.reshape(3, 3)


@dataclass(frozen=True)
class AdmittanceParams:
    """Virtual mass [kg], damping [N s/m], step size [s], and force limit [N]."""

    mass: np.ndarray
    damping: np.ndarray
    dt: float
    force_limit: float

    def __post_init__(self):
        object.__setattr__(self, "mass", _as_matrix3(self.mass))
        object.__setattr__(self, "damping", _as_matrix3(self.damping))
        for name in ("mass", "damping"):
            m = getattr(self, name)
            eig = np.linalg.eigvalsh(0.5 * (m + m.T))
            if eig.min() <= 0:
                raise ValueError(f"{name} must be positive definite, eigenvalues {eig}")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.force_limit <= 0:
            raise ValueError(f"force_limit must be > 0, got {self.force_limit}")

    def stability_limit(self, k_max: float) -> float:
        """Largest stable dt for stiffness up to k_max: 2 / sqrt(k_max / m_min)."""
        m_min = np.linalg.eigvalsh(self.mass).min()
        return 2.0 / np.sqrt(k_max / m_min)

    def assert_stable(self, k_max: float) -> None:
        limit = self.stability_limit(k_max)
        if self.dt >= limit:
            raise ValueError(
                f"dt = {self.dt} exceeds the stability bound {limit:.6g} for k_max = {k_max}"
            )

    @staticmethod
    def critically_damped(mass: float, k_high: float, dt: float, force_limit: float) -> "AdmittanceParams":
        """Scalar mass with per-axis critical damping for stiffness k_high."""
        d = 2.0 * np.sqrt(k_high * mass)
        return AdmittanceParams(mass * np.eye(3), d * np.eye(3), dt, force_limit)


DEFAULT_PARAMS_FACTORY = lambda dt=2e-3: AdmittanceParams.critically_damped(  # noqa: E731
    mass=2.0, k_high=2000.0, dt=dt, force_limit=30.0
)


@dataclass(frozen=True)
class AdmittanceState:
    """Controller position [m], velocity [m/s], and time [s]."""

    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(3))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))
        if not (np.isfinite(self.x).all() and np.isfinite(self.v).all() and np.isfinite(self.t)):
            raise ValueError("admittance state must be finite")


def _stiffness_matrix_of(K) -> np.ndarray:
    if isinstance(K, StiffnessProfile):
        return K.matrix
    return _as_matrix3(K)


def admittance_step(
    state: AdmittanceState,
    params: AdmittanceParams,
    K,
    x_target,
    f_ext,
) -> AdmittanceState:
    """One controller tick. Raises ForceLimitExceeded when |f_ext| is over the limit."""
    f_ext = np.asarray(f_ext, dtype=float).reshape(3)
    f_mag = float(np.linalg.norm(f_ext))
    if f_mag > params.force_limit:
        raise ForceLimitExceeded(f_mag, params.force_limit)
    k_mat = _stiffness_matrix_of(K)
    x_target = np.asarray(x_target, dtype=float).reshape(3)
    m_inv = np.linalg.inv(params.mass)
    rhs = state.v + params.dt * (m_inv @ (f_ext - k_mat @ (state.x - x_target)))
    v_new = np.linalg.solve(np.eye(3) + params.dt * (m_inv @ params.damping), rhs)
    x_new = state.x + params.dt * v_new
    return AdmittanceState(x_new, v_new, state.t + params.dt)


def run_admittance(
    trajectory: Sequence,
    params: AdmittanceParams,
    state0: AdmittanceState | None = None,
) -> list[AdmittanceState]:
    """Fold admittance_step over (x_target, K, f_ext) triples.

    Delegates the loop to the compiled kernel when available; raises
    ForceLimitExceeded with the offending step index.
    """
    if len(trajectory) == 0:
        raise ValueError("trajectory must be non-empty")
    n = len(trajectory)
    targets = np.empty((n, 3))
    stiff = np.empty((n, 3, 3))
    forces = np.empty((n, 3))
    for i, (x_target, K, f_ext) in enumerate(trajectory):
        targets[i] = np.asarray(x_target, dtype=float).reshape(3)
        stiff[i] = _stiffness_matrix_of(K)
        forces[i] = np.asarray(f_ext, dtype=float).reshape(3)

    if state0 is None:
        state0 = AdmittanceState(np.zeros(3), np.zeros(3), 0.0)
    xs, vs, fail = _kernels.backend.run_admittance_loop(
        state0.x, state0.v, targets, stiff, forces,
        params.mass, params.damping, params.dt, params.force_limit,
    )
    if fail >= 0:
        raise ForceLimitExceeded(
            float(np.linalg.norm(forces[fail])), params.force_limit, step=fail
        )
    t0 = state0.t
    return [
        AdmittanceState(xs[i], vs[i], t0 + (i + 1) * params.dt) for i in range(n)
    ]


def spring_energy(state: AdmittanceState, params: AdmittanceParams, K, x_target) -> float:
    """E = 1/2 v^T M v + 1/2 (x - x_target)^T K (x - x_target)."""
    k_mat = _stiffness_matrix_of(K)
    e = np.asarray(x_target, dtype=float).reshape(3)
    dx = state.x - e
    return float(0.5 * state.v @ params.mass @ state.v + 0.5 * dx @ k_mat @ dx)
