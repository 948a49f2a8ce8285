"""Desk-scale quasi-static flipping simulator.

A point finger under admittance control presses on the top face of a
rectangular item and pivots it about the bottom corner braced against a
fixture. The world is the x-z plane (y is carried but inert). The item
update is quasi-static: contact force dominates, so the item either
follows the commanded arc while the finger-item friction can supply the
required drag, or slips and stalls. Excessive normal force makes the
fixture slide until the pivot walks off the fixture corner.

Three scripted controllers are compared: a stiff position tracker, a
uniformly compliant tracker, and an adaptive one that rebuilds its
stiffness every tick from (low-passed) simulated force feedback and
pushes a virtual target f_ref / k_low past the reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels._pyloops import (
    FlipTrialInputs,
    GRAVITY,
    POLICY_ADAPTIVE,
    POLICY_STIFF,
    POLICY_UNIFORM,
    STATUS_FELL_OFF,
    STATUS_FORCE_VIOLATION,
    STATUS_RUNNING,
    STATUS_STUCK,
    STATUS_SUCCESS,
)
from .admittance import AdmittanceParams, AdmittanceState, admittance_step
from .episode_io import Episode, PoseTrack, WrenchTrack
from .se3 import Pose
from .stiffness import StiffnessProfile, StiffnessSchedule, k_low_of_force, stiffness_matrix

STATUS_NAMES = {
    STATUS_RUNNING: "running",
    STATUS_SUCCESS: "success",
    STATUS_FELL_OFF: "fell_off",
    STATUS_STUCK: "stuck",
    STATUS_FORCE_VIOLATION: "force_violation",
}


@dataclass(frozen=True)
class FlipScenario:
    """Item, fixture, and disturbance parameters for one flipping setup."""

    item_width: float = 0.06        # m, along the face the finger touches
    item_height: float = 0.24       # m, pivot corner to touched face
    item_mass: float = 0.1          # kg
    fixture_pose: tuple = (0.0, 0.0)  # nominal pivot corner (x, z) [m]
    fixture_slide_threshold: float = 18.0  # N of normal force before the fixture slides
    fixture_slide_rate: float = 0.004      # m per (N s) of excess force
    fixture_edge_limit: float = 0.015      # m of pivot travel before it drops off the corner
    finger_friction: float = 0.8
    position_noise_sigma: float = 0.01     # m, per-trial constant offset (truncated at 2 sigma)
    seed: int = 0

    def __post_init__(self):
        if min(self.item_width, self.item_height, self.item_mass) <= 0:
            raise ValueError("item dimensions and mass must be positive")
        if self.fixture_slide_threshold <= 0:
            raise ValueError("fixture_slide_threshold must be positive")
        if self.position_noise_sigma < 0:
            raise ValueError("position_noise_sigma must be >= 0")


@dataclass(frozen=True)
class NominalTrajectory:
    """Per-tick command tracks shared by all policies."""

    dt: float
    reference: np.ndarray    # (n, 3) pressed reference positions
    f_ref: np.ndarray        # (n,) commanded force magnitude
    inward: np.ndarray       # (n, 3) nominal inward face normal
    theta_cmd: np.ndarray    # (n,) nominal item angle

    def __len__(self):
        return self.reference.shape[0]


@dataclass(frozen=True)
class ScriptedPolicy:
    """Scripted controller: stiff | uniform_compliant | adaptive."""

    kind: str
    k_uniform: float = 500.0
    k_stiff: float = 2000.0
    k_high: float = 2000.0
    schedule: StiffnessSchedule = field(
        default_factory=lambda: StiffnessSchedule(2000.0, 50.0, 8.0, 1.0))
    force_lp_tau: float = 0.05   # s, low-pass on force feedback (adaptive only)

    def __post_init__(self):
        if self.kind not in ("stiff", "uniform_compliant", "adaptive"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "uniform_compliant" and self.k_uniform <= 0:
            raise ValueError("uniform_compliant needs k > 0")

    @property
    def kernel_kind(self) -> int:
        return {"stiff": POLICY_STIFF,
                "uniform_compliant": POLICY_UNIFORM,
                "adaptive": POLICY_ADAPTIVE}[self.kind]


DEFAULT_FINGER = AdmittanceParams.critically_damped(
    mass=2.0, k_high=2000.0, dt=2e-3, force_limit=30.0)


def build_nominal_trajectory(
    scenario: FlipScenario,
    dt: float = 2e-3,
    contact_offset: float = 0.03,   # m from the pivot-side face corner
    press_depth: float = 0.03,      # m commanded past the face
    f_ref_max: float = 10.0,        # N held during the flip
    approach_time: float = 1.0,
    dwell_time: float = 0.3,
    flip_time: float = 4.0,
    hold_time: float = 0.5,
    theta_end: float = math.radians(80.0),
    approach_height: float = 0.04,
) -> NominalTrajectory:
    """Approach, press, and arc commands for the nominal (noise-free) geometry."""
    px, pz = scenario.fixture_pose
    h = scenario.item_height
    total = approach_time + dwell_time + flip_time + hold_time
    n = int(round(total / dt))
    t = np.arange(n) * dt

    theta = np.clip((t - approach_time - dwell_time) / flip_time, 0.0, 1.0) * theta_end
    ct, st = np.cos(theta), np.sin(theta)

    # pressed contact point in face coordinates: (contact_offset, h - press_depth)
    depth = np.where(t < approach_time,
                     -approach_height + (approach_height + press_depth) * (t / approach_time),
                     press_depth)
    ref = np.zeros((n, 3))
    ref[:, 0] = px + ct * contact_offset - st * (h - depth)
    ref[:, 2] = pz + st * contact_offset + ct * (h - depth)

    ramp = np.clip((t - approach_time) / 0.5, 0.0, 1.0)
    f_ref = f_ref_max * ramp

    inward = np.zeros((n, 3))
    inward[:, 0] = st
    inward[:, 2] = -ct
    return NominalTrajectory(dt, ref, f_ref, inward, theta)


# ---------------------------------------------------------------------------
# single-tick reference implementation
# ---------------------------------------------------------------------------

@dataclass
class SimState:
    """Mutable simulator state; the finger substate is an AdmittanceState."""

    finger: AdmittanceState
    theta: float = 0.0
    fixture_offset: float = 0.0
    contact_force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    lp_force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    status: int = STATUS_RUNNING
    t: float = 0.0
    ever_contact: bool = False
    loss_time: float = 0.0
    prog_theta: float = 0.0
    prog_t: float = 0.0
    max_force: float = 0.0

    @property
    def status_name(self) -> str:
        return STATUS_NAMES[self.status]

    def item_pose(self, scenario: FlipScenario) -> Pose:
        """Pose of the pivot corner frame, rotated by the flip angle about y."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        rot = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
        px, pz = scenario.fixture_pose
        return Pose(np.array([px - self.fixture_offset, 0.0, pz]), rot)


@dataclass(frozen=True)
class PolicyOutput:
    """One tick of policy output: reference, virtual target, stiffness, arc progress."""

    reference: np.ndarray
    virtual_target: np.ndarray
    stiffness: StiffnessProfile
    theta_cmd: float


def _face_frame(state: SimState, scenario: FlipScenario):
    ct, st = math.cos(state.theta), math.sin(state.theta)
    normal = np.array([-st, 0.0, ct])
    tangent = np.array([ct, 0.0, st])
    px, pz = scenario.fixture_pose
    corner = np.array([px - state.fixture_offset - st * scenario.item_height, 0.0,
                       pz + ct * scenario.item_height])
    return normal, tangent, corner


def contact_force_response(state: SimState, scenario: FlipScenario, commanded) -> np.ndarray:
    """Quasi-static normal force of the commanded spring against the item face.

    `commanded` is (x_target, K) with K a StiffnessProfile or 3x3 matrix.
    Solves the one-point equilibrium with the equilibrium position on the
    face; returns the force on the finger (zero without penetration or when
    the equilibrium point leaves the face).
    """
    x_target, k_obj = commanded
    k_mat = k_obj.matrix if isinstance(k_obj, StiffnessProfile) else np.asarray(k_obj, float)
    x_target = np.asarray(x_target, dtype=float).reshape(3)
    normal, tangent, corner = _face_frame(state, scenario)
    depth = normal @ (x_target - corner)
    if depth >= 0.0:
        return np.zeros(3)
    k_inv_n = np.linalg.solve(k_mat, normal)
    phi = -depth / (normal @ k_inv_n)
    touch = x_target + phi * k_inv_n
    s = tangent @ (touch - corner)
    if not (0.0 <= s <= scenario.item_width):
        return np.zeros(3)
    return phi * normal


@dataclass(frozen=True)
class SimConfig:
    """Simulator constants shared by the tick reference and the kernels."""

    finger: AdmittanceParams = DEFAULT_FINGER
    success_angle: float = math.radians(70.0)
    midflip_angle: float = math.radians(5.0)
    contact_loss_max: float = 0.5
    stall_time_max: float = 3.0
    stall_eps: float = 0.005
    theta_dot_max: float = 1.0
    gamma_slip: float = 15.0
    gamma_free: float = 15.0
    force_lp_tau: float = 0.05


DEFAULT_SIM = SimConfig()


def step_sim(state: SimState, scenario: FlipScenario, policy_output: PolicyOutput,
             config: SimConfig = DEFAULT_SIM) -> SimState:
    """One 500 Hz tick; mirrors the kernel loop tick for tick.

    Terminal states absorb: stepping a finished state returns it unchanged.
    """
    if state.status != STATUS_RUNNING:
        return state
    dt = config.finger.dt
    out = policy_output
    k = out.stiffness
    x_t = np.asarray(out.virtual_target, dtype=float).reshape(3)

    normal, tangent, corner = _face_frame(state, scenario)
    depth = float(normal @ (x_t - corner))
    phi = 0.0
    f_t = 0.0
    s = 0.0
    contact = False
    if depth < 0.0:
        k_inv_n = np.linalg.solve(k.matrix, normal)
        phi = -depth / float(normal @ k_inv_n)
        touch = x_t + phi * k_inv_n
        s = float(tangent @ (touch - corner))
        if 0.0 <= s <= scenario.item_width:
            contact = True
        else:
            phi = 0.0

    w, h = scenario.item_width, scenario.item_height
    mg = scenario.item_mass * GRAVITY
    theta = state.theta
    tau_g = mg * (0.5 * w * math.cos(theta) - 0.5 * h * math.sin(theta))
    mu = scenario.finger_friction
    if contact:
        f_t_needed = (s * phi + tau_g) / h
        if abs(f_t_needed) <= mu * phi:
            f_t = f_t_needed
            theta += min(max(out.theta_cmd - theta, 0.0), config.theta_dot_max * dt)
        else:
            f_t = math.copysign(mu * phi, f_t_needed)
            theta += config.gamma_slip * (h * f_t - s * phi - tau_g) * dt
    else:
        theta += config.gamma_free * (-tau_g) * dt
    theta = min(max(theta, 0.0), math.pi)

    force = phi * normal + f_t * tangent
    f_mag = float(np.linalg.norm(force))
    max_force = max(state.max_force, f_mag)
    alpha = dt / (config.force_lp_tau + dt)
    lp = state.lp_force + alpha * (force - state.lp_force)

    status = STATUS_RUNNING
    ever_contact = state.ever_contact or contact
    loss_time = state.loss_time
    prog_theta, prog_t = state.prog_theta, state.prog_t
    offset = state.fixture_offset
    t = state.t
    finger = state.finger

    if f_mag > config.finger.force_limit:
        status = STATUS_FORCE_VIOLATION
    elif theta > config.success_angle:
        status = STATUS_SUCCESS
    else:
        if ever_contact and not contact and theta > config.midflip_angle:
            loss_time += dt
            if loss_time > config.contact_loss_max:
                status = STATUS_FELL_OFF
        else:
            loss_time = 0.0
        if status == STATUS_RUNNING:
            if theta - prog_theta > config.stall_eps:
                prog_theta, prog_t = theta, t
            elif t - prog_t > config.stall_time_max:
                status = STATUS_STUCK
        if status == STATUS_RUNNING and phi > scenario.fixture_slide_threshold:
            offset += scenario.fixture_slide_rate * (phi - scenario.fixture_slide_threshold) * dt
            if offset > scenario.fixture_edge_limit:
                status = STATUS_FELL_OFF
        if status == STATUS_RUNNING:
            finger = admittance_step(state.finger, config.finger, k, x_t, force)

    return SimState(
        finger=finger, theta=theta, fixture_offset=offset, contact_force=force,
        lp_force=lp, status=status, t=t + dt, ever_contact=ever_contact,
        loss_time=loss_time, prog_theta=prog_theta, prog_t=prog_t, max_force=max_force,
    )


def policy_tick(policy: ScriptedPolicy, trajectory: NominalTrajectory, i: int,
                lp_force: np.ndarray, target_offset=None) -> PolicyOutput:
    """Resolve one tick of a scripted policy into (reference, virtual target, K)."""
    ref = trajectory.reference[i].copy()
    if target_offset is not None:
        ref = ref + np.asarray(target_offset, dtype=float).reshape(3)
    if policy.kind == "stiff":
        k = StiffnessProfile(policy.k_stiff * np.eye(3), np.array([1.0, 0.0, 0.0]),
                             policy.k_stiff, policy.k_stiff)
        return PolicyOutput(ref, ref, k, float(trajectory.theta_cmd[i]))
    if policy.kind == "uniform_compliant":
        k = StiffnessProfile(policy.k_uniform * np.eye(3), np.array([1.0, 0.0, 0.0]),
                             policy.k_uniform, policy.k_uniform)
        return PolicyOutput(ref, ref, k, float(trajectory.theta_cmd[i]))
    f_mag = float(np.linalg.norm(lp_force))
    if f_mag >= policy.schedule.f_min:
        direction = lp_force / f_mag
        k_low = k_low_of_force(policy.schedule, f_mag)
    else:
        direction = trajectory.inward[i]
        k_low = policy.schedule.k_max
    profile = StiffnessProfile(stiffness_matrix(direction, k_low, policy.k_high),
                               direction, k_low, policy.k_high)
    virtual = ref + (float(trajectory.f_ref[i]) / k_low) * direction
    return PolicyOutput(ref, virtual, profile, float(trajectory.theta_cmd[i]))


# ---------------------------------------------------------------------------
# trial driver (kernel-backed) and benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialResult:
    status: int
    ticks: int
    max_force: float
    dt: float
    logs: dict | None = None

    @property
    def status_name(self) -> str:
        return STATUS_NAMES[self.status]

    @property
    def success(self) -> bool:
        return self.status == STATUS_SUCCESS

    def to_episode(self, meta: dict | None = None) -> Episode:
        """Finger trajectory and measured wrench as a recorded episode."""
        if self.logs is None:
            raise ValueError("trial was run without record=True")
        n = self.ticks
        t = np.arange(n) * self.dt
        pose9 = np.zeros((n, 9))
        pose9[:, :3] = self.logs["finger_pos"]
        pose9[:, 3] = 1.0
        pose9[:, 7] = 1.0
        wrench = np.zeros((n, 6))
        wrench[:, :3] = self.logs["force_on_finger"]
        base_meta = {"task": "flip", "source": "flipsim", "pose_rate_hz": 1.0 / self.dt,
                     "wrench_rate_hz": 1.0 / self.dt, "status": STATUS_NAMES[self.status]}
        if meta:
            base_meta.update(meta)
        return Episode(PoseTrack(t, pose9), WrenchTrack(t, wrench), base_meta)


def sample_trial_noise(scenario: FlipScenario, trial_seed: int, n_ticks: int):
    """Constant offset (norm-truncated at 2 sigma) plus small per-tick jitter."""
    rng = np.random.default_rng([scenario.seed, trial_seed])
    sigma = scenario.position_noise_sigma
    noise = np.zeros(3)
    jitter = np.zeros((n_ticks, 3))
    if sigma > 0:
        raw = rng.normal(0.0, sigma, size=2)
        norm = float(np.linalg.norm(raw))
        cap = 2.0 * sigma
        if norm > cap:
            raw *= cap / norm
        noise[0], noise[2] = raw
        jitter[:, 0] = rng.normal(0.0, sigma / 50.0, size=n_ticks)
        jitter[:, 2] = rng.normal(0.0, sigma / 50.0, size=n_ticks)
    return noise, jitter


def trial_inputs(scenario: FlipScenario, policy: ScriptedPolicy, trial_seed: int,
                 trajectory: NominalTrajectory | None = None,
                 config: SimConfig = DEFAULT_SIM) -> FlipTrialInputs:
    if trajectory is None:
        trajectory = build_nominal_trajectory(scenario, dt=config.finger.dt)
    n = len(trajectory)
    noise, jitter = sample_trial_noise(scenario, trial_seed, n)
    finger = config.finger
    return FlipTrialInputs(
        ref=trajectory.reference, f_ref=trajectory.f_ref, d_in=trajectory.inward,
        theta_cmd=trajectory.theta_cmd, jitter=jitter, noise=noise,
        policy_kind=policy.kernel_kind, k_stiff=policy.k_stiff,
        k_uniform=policy.k_uniform, k_high=policy.k_high,
        sched_k_max=policy.schedule.k_max, sched_k_min=policy.schedule.k_min,
        sched_f_min=policy.schedule.f_min, sched_f_max=policy.schedule.f_max,
        lp_tau=config.force_lp_tau,
        pivot_x=scenario.fixture_pose[0], pivot_z=scenario.fixture_pose[1],
        item_w=scenario.item_width, item_h=scenario.item_height,
        item_mass=scenario.item_mass, finger_friction=scenario.finger_friction,
        fixture_slide_threshold=scenario.fixture_slide_threshold,
        fixture_slide_rate=scenario.fixture_slide_rate,
        fixture_edge_limit=scenario.fixture_edge_limit,
        finger_mass=float(finger.mass[0, 0]), finger_damping=float(finger.damping[0, 0]),
        dt=finger.dt, force_limit=finger.force_limit,
        success_angle=config.success_angle, midflip_angle=config.midflip_angle,
        contact_loss_max=config.contact_loss_max, stall_time_max=config.stall_time_max,
        stall_eps=config.stall_eps, theta_dot_max=config.theta_dot_max,
        gamma_slip=config.gamma_slip, gamma_free=config.gamma_free,
    )


def run_trial(scenario: FlipScenario, policy: ScriptedPolicy, trial_seed: int = 0,
              record: bool = False, trajectory: NominalTrajectory | None = None,
              config: SimConfig = DEFAULT_SIM, backend=None) -> TrialResult:
    """Run one seeded trial through the fast kernel (compiled when available)."""
    inputs = trial_inputs(scenario, policy, trial_seed, trajectory, config)
    kernel = backend if backend is not None else _kernels.backend
    status, ticks, max_force, logs = kernel.run_flip_trial(inputs, record)
    return TrialResult(status, ticks, max_force, config.finger.dt, logs)


@dataclass(frozen=True)
class BenchmarkTable:
    """Success rates per (policy, scenario) plus the per-trial records behind them."""

    policies: tuple
    scenarios: tuple
    success_pct: np.ndarray          # (n_policies, n_scenarios)
    records: tuple                   # per-trial dicts

    def to_text(self) -> str:
        width = max(len(p) for p in self.policies) + 2
        header = "policy".ljust(width) + "  ".join(f"{s:>16}" for s in self.scenarios)
        lines = [header]
        for i, p in enumerate(self.policies):
            cells = "  ".join(f"{self.success_pct[i, j]:>15.1f}%"
                              for j in range(len(self.scenarios)))
            lines.append(p.ljust(width) + cells)
        return "\n".join(lines)


def run_benchmark(scenarios: dict, policies: dict, trials_per_cell: int = 20,
                  config: SimConfig = DEFAULT_SIM, backend=None) -> BenchmarkTable:
    """Seeded success-rate table over named scenarios and policies.

    Trial i of every (policy, scenario) cell shares the same noise
    realization, so policies are compared pairwise on identical
    disturbances.
    """
    pol_names = tuple(policies)
    scn_names = tuple(scenarios)
    pct = np.zeros((len(pol_names), len(scn_names)))
    records = []
    for j, sname in enumerate(scn_names):
        scenario = scenarios[sname]
        trajectory = build_nominal_trajectory(scenario, dt=config.finger.dt)
        for i, pname in enumerate(pol_names):
            wins = 0
            for trial in range(trials_per_cell):
                result = run_trial(scenario, policies[pname], trial,
                                   trajectory=trajectory, config=config, backend=backend)
                wins += result.success
                records.append({
                    "scenario": sname, "policy": pname, "trial": trial,
                    "status": result.status_name, "ticks": result.ticks,
                    "max_force": result.max_force,
                })
            pct[i, j] = 100.0 * wins / trials_per_cell
    return BenchmarkTable(pol_names, scn_names, pct, tuple(records))


def default_policies() -> dict:
    return {
        "adaptive": ScriptedPolicy("adaptive"),
        "uniform_compliant": ScriptedPolicy("uniform_compliant"),
        "stiff": ScriptedPolicy("stiff"),
    }
