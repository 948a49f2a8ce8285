"""End-to-end acceptance checks.

Each test covers one gate of the toolkit contract, enforces its numeric
tolerance, and enforces its runtime budget. One line per gate is printed
(visible with ``pytest -s``); the pytest verdict itself is the pass/fail
record under ``pytest -v``.
"""
import time

import numpy as np

from compliancekit.admittance import AdmittanceParams, AdmittanceState, admittance_step, spring_energy
from compliancekit.contact import (
    is_pinching,
    randomized_escape_trials,
    sample_contact_model,
    violates_constraints,
    escape_velocity,
)
from compliancekit.episode_io import Episode, PoseTrack, WrenchTrack
from compliancekit.flipsim import (
    FlipScenario,
    ScriptedPolicy,
    build_nominal_trajectory,
    default_policies,
    run_trial,
)
from compliancekit.labeling import (
    direction_and_force_from_action,
    label_episode,
    stiffness_from_action,
)
from compliancekit.se3 import Pose, encode_pose9
from compliancekit.stiffness import (
    DEFAULT_SCHEDULE,
    StiffnessSchedule,
    k_low_of_force,
    stiffness_from_force,
)
from compliancekit.wrench_signal import SpectrogramConfig, frame_parseval_residual, spectrogram

from test_contact import brute_force_pinching


class _Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, *_):
        elapsed = time.perf_counter() - self.start
        verdict = "PASS" if exc_type is None and elapsed < self.seconds else "FAIL"
        print(f"[acceptance] {self.name}: {verdict} ({elapsed:.2f}s / {self.seconds:.0f}s budget)")
        assert elapsed < self.seconds, f"{self.name} exceeded {self.seconds}s ({elapsed:.2f}s)"


def test_stiffness_matrix_and_schedule_suite():
    with _Budget("stiffness matrix + schedule suite", 5.0):
        rng = np.random.default_rng(100)
        schedules = [
            StiffnessSchedule(
                k_max=(k_min := rng.uniform(20.0, 200.0)) + rng.uniform(100.0, 3000.0),
                k_min=k_min,
                f_max=(f_min := rng.uniform(0.2, 2.0)) + rng.uniform(2.0, 10.0),
                f_min=f_min,
            )
            for _ in range(20)
        ]
        forces = rng.normal(scale=4.0, size=(1000, 3))
        for i, f in enumerate(forces):
            schedule = schedules[i % 20]
            k_high = schedule.k_max
            profile = stiffness_from_force(f, schedule, k_high)
            k = profile.matrix
            # symmetric within 1e-9
            assert np.abs(k - k.T).max() < 1e-9
            # eigenvalues {k_low, k_high, k_high} within 1e-6 relative
            eig, vec = np.linalg.eigh(k)
            expected = np.sort([profile.k_low, k_high, k_high])
            np.testing.assert_allclose(eig, expected, rtol=1e-6)
            # f spans the k_low eigenspace whenever the profile is anisotropic
            f_mag = np.linalg.norm(f)
            if f_mag >= schedule.f_min and profile.k_low < k_high:
                u = f / f_mag
                np.testing.assert_allclose(k @ u, profile.k_low * u,
                                           rtol=1e-6, atol=1e-6 * profile.k_low)
        # schedule continuity at both breakpoints
        for schedule in schedules:
            for f_b, k_b in ((schedule.f_min, schedule.k_max),
                             (schedule.f_max, schedule.k_min)):
                assert abs(k_low_of_force(schedule, np.nextafter(f_b, -np.inf)) -
                           k_low_of_force(schedule, np.nextafter(f_b, np.inf))) < 1e-9
                assert abs(k_low_of_force(schedule, f_b) - k_b) < 1e-9


def test_admittance_suite():
    with _Budget("admittance controller suite", 10.0):
        params = AdmittanceParams.critically_damped(2.0, 2000.0, 1e-3, 1e9)
        k = 2000.0 * np.eye(3)

        # fixed point
        target = np.array([0.1, -0.1, 0.2])
        state = AdmittanceState(target, np.zeros(3))
        nxt = admittance_step(state, params, k, target, np.zeros(3))
        np.testing.assert_array_equal(nxt.x, target)

        # steady state: K offset = f_ext within 1e-6 N
        f_ext = np.array([3.0, -1.0, 2.0])
        state = AdmittanceState(np.zeros(3), np.zeros(3))
        for _ in range(20000):
            state = admittance_step(state, params, k, np.zeros(3), f_ext)
        np.testing.assert_allclose(k @ state.x, f_ext, atol=1e-6)

        # analytic critically damped step response, 1e-3 at dt = 1e-3
        dt = 1e-3
        scalar = AdmittanceParams(1.0, 20.0, dt, 1e9)
        state = AdmittanceState(np.zeros(3), np.zeros(3))
        target = np.array([1.0, 0.0, 0.0])
        worst = 0.0
        for i in range(3000):
            state = admittance_step(state, scalar, 100.0 * np.eye(3), target, np.zeros(3))
            t = (i + 1) * dt
            exact = 1.0 - (1.0 + 10.0 * t) * np.exp(-10.0 * t)
            worst = max(worst, abs(state.x[0] - exact))
        assert worst < 1e-3

        # passivity over 1e4 steps
        state = AdmittanceState(np.array([0.03, -0.02, 0.04]), np.array([0.1, 0.0, -0.2]))
        energy = spring_energy(state, params, k, np.zeros(3))
        for _ in range(10000):
            state = admittance_step(state, params, k, np.zeros(3), np.zeros(3))
            e = spring_energy(state, params, k, np.zeros(3))
            assert e <= energy + 1e-12
            energy = e


def test_escape_certificate_suite():
    with _Budget("contact escape certificate suite", 30.0):
        rng = np.random.default_rng(101)
        # 10,000 seeded non-pinching models, n <= 5, N <= 4: zero violations
        total = 0
        for _ in range(10000):
            n = int(rng.integers(1, 6))
            n_dims = int(rng.integers(max(2, min(n, 2)), 5))
            model = sample_contact_model(rng, n, n_dims)
            v0 = rng.normal(scale=2.0, size=n_dims)
            k, v = escape_velocity(model, v0)
            assert violates_constraints(model, v, tol=1e-9) == []
            # minimality of k
            if k > 0.0:
                eps = 1e-6 * (1.0 + k)
                shrunk = v0 + (k - eps) * (model.jacobian.T @ model.lam)
                assert violates_constraints(model, shrunk) != []
            total += 1
        assert total == 10000

        # batched driver agrees
        report = randomized_escape_trials(seed=7, n=5, n_dims=4, trials=1000)
        assert report.failures == 0

        # pinching test vs brute-force containment oracle on 1,000 models
        for trial in range(1000):
            model = sample_contact_model(rng, int(rng.integers(1, 6)),
                                         int(rng.integers(1, 5)),
                                         require_non_pinching=False)
            assert is_pinching(model) == brute_force_pinching(model, seed=trial)


def _static_episode(force, duration=10.0):
    t_pose = np.arange(int(duration * 500) + 1) / 500.0
    pose9 = np.tile(encode_pose9(Pose.identity()), (t_pose.size, 1))
    t_wrench = np.arange(int(duration * 1000) + 1) / 1000.0
    wrench = np.zeros((t_wrench.size, 6))
    wrench[:, :3] = force
    return Episode(PoseTrack(t_pose, pose9), WrenchTrack(t_wrench, wrench))


def test_labeling_suite():
    with _Budget("demonstration labeling suite", 5.0):
        # closed-form constant-force episode: hand-computed virtual targets
        f = np.array([0.0, 0.0, -10.0])  # beyond f_max -> k_low = k_min
        episode = _static_episode(f)
        labels = label_episode(episode, DEFAULT_SCHEDULE, 2000.0)
        expected_offset = f / DEFAULT_SCHEDULE.k_min
        for lab in labels:
            np.testing.assert_allclose(lab.virtual_target[:3] - lab.reference[:3],
                                       expected_offset, atol=1e-9)
            np.testing.assert_allclose(lab.virtual_target[3:], lab.reference[3:],
                                       atol=1e-9)

        # pipeline roundtrip: label -> stiffness_from_action -> force, within 1e-6
        f2 = np.array([1.2, -2.5, 4.0])
        labels2 = label_episode(_static_episode(f2), DEFAULT_SCHEDULE, 2000.0)
        for lab in labels2:
            profile = stiffness_from_action(lab, 2000.0)
            d, mag = direction_and_force_from_action(lab)
            np.testing.assert_allclose(d * mag, f2, atol=1e-6)
            np.testing.assert_allclose(profile.low_dir, f2 / np.linalg.norm(f2),
                                       atol=1e-6)
            delta = lab.virtual_target[:3] - lab.reference[:3]
            np.testing.assert_allclose(profile.matrix @ delta, f2, atol=1e-6)

        # bit-identical reruns
        again = label_episode(episode, DEFAULT_SCHEDULE, 2000.0)
        for a, b in zip(labels, again):
            np.testing.assert_array_equal(a.as_vector(), b.as_vector())


def test_spectrogram_suite():
    with _Budget("wrench spectrogram suite", 5.0):
        cfg = SpectrogramConfig()
        rng = np.random.default_rng(102)
        t = np.arange(14001) / 7000.0
        w = rng.normal(size=(t.size, 6))
        track = WrenchTrack(t, w)
        tensor = spectrogram(track, 1.5, cfg)

        # exact shape
        assert tensor.data.shape == (6, 30, 17)

        # Parseval per frame within 1e-6 relative
        assert frame_parseval_residual(tensor, track, 1.5).max() < 1e-6

        # pure-tone bin localization
        eff_rate = cfg.samples / cfg.window_seconds
        tone = np.zeros((t.size, 6))
        tone[:, 3] = np.sin(2 * np.pi * (4.0 * eff_rate / cfg.frame) * t)
        tone_tensor = spectrogram(WrenchTrack(t, tone), 1.5, cfg)
        assert (tone_tensor.data[3, 1:-1].argmax(axis=1) == 4).all()

        # hop-shift covariance on an analysis-rate-aligned signal
        t2 = np.arange(int(3.0 * eff_rate) + 1) / eff_rate
        w2 = np.zeros((t2.size, 6))
        w2[:, 0] = np.sin(2 * np.pi * 23.0 * t2) + 0.5 * np.sin(2 * np.pi * 71.0 * t2)
        track2 = WrenchTrack(t2, w2)
        a = spectrogram(track2, 2.0, cfg)
        b = spectrogram(track2, 2.0 + cfg.hop / eff_rate, cfg)
        np.testing.assert_allclose(a.data[:, 1:, :], b.data[:, :-1, :], atol=1e-9)


def test_simulator_benchmark_suite():
    with _Budget("flipping benchmark suite", 120.0):
        scenario = FlipScenario(position_noise_sigma=0.01, seed=0)
        trajectory = build_nominal_trajectory(scenario)
        policies = default_policies()
        trials = 100
        wins = {name: 0 for name in policies}
        max_force = {name: np.zeros(trials) for name in policies}
        violations = {name: 0 for name in policies}
        for trial in range(trials):
            for name, policy in policies.items():
                result = run_trial(scenario, policy, trial, trajectory=trajectory)
                wins[name] += result.success
                max_force[name][trial] = result.max_force
                violations[name] += result.status_name == "force_violation"

        # (a) adaptive success strictly exceeds both baselines
        assert wins["adaptive"] > wins["uniform_compliant"]
        assert wins["adaptive"] > wins["stiff"]
        # (b) uniform-compliant exceeds stiff
        assert wins["uniform_compliant"] > wins["stiff"]
        # (c) adaptive max contact force <= stiff max contact force, every paired trial
        assert (max_force["adaptive"] <= max_force["stiff"]).all()
        # (d) zero force-violation terminations for adaptive
        assert violations["adaptive"] == 0


def test_end_to_end_label_alignment_suite():
    with _Budget("simulator-to-labels alignment suite", 60.0):
        scenario = FlipScenario(position_noise_sigma=0.01, seed=0)
        angle_means = []
        for trial in range(5):
            result = run_trial(scenario, ScriptedPolicy("adaptive"), trial, record=True)
            episode = result.to_episode()
            labels = label_episode(episode, DEFAULT_SCHEDULE, 2000.0)
            t = np.arange(result.ticks) * result.dt
            phi = result.logs["phi"]
            normals = result.logs["face_normal"]
            angles = []
            for lab in labels:
                if np.interp(lab.t, t, phi) < 1.0:
                    continue  # not contact-engaged
                direction, _ = direction_and_force_from_action(lab)
                if direction is None:
                    continue
                profile = stiffness_from_action(lab, 2000.0)
                n = np.array([np.interp(lab.t, t, normals[:, k]) for k in range(3)])
                n /= np.linalg.norm(n)
                angles.append(np.degrees(np.arccos(np.clip(profile.low_dir @ n, -1, 1))))
            assert len(angles) > 20
            angle_means.append(np.mean(angles))
        # reconstructed compliance directions align with simulated contact normals
        assert np.mean(angle_means) < 10.0
