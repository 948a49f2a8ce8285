"""The compiled kernels must reproduce the pure-Python reference loops."""
import subprocess
import sys

import numpy as np
import pytest

from compliancekit._kernels import available_backends
from compliancekit.flipsim import (
    FlipScenario,
    build_nominal_trajectory,
    default_policies,
    trial_inputs,
)

BACKENDS = available_backends()

needs_compiled = pytest.mark.skipif(
    "cython" not in BACKENDS, reason="compiled extension not built")


def random_admittance_case(rng, n=400):
    targets = rng.normal(scale=0.05, size=(n, 3))
    forces = rng.normal(scale=3.0, size=(n, 3))
    ks = np.empty((n, 3, 3))
    for i in range(n):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        k_low, k_high = rng.uniform(40, 500), 2000.0
        ks[i] = k_high * np.eye(3) + (k_low - k_high) * np.outer(d, d)
    mass = np.eye(3) * rng.uniform(1.0, 4.0)
    damping = np.eye(3) * rng.uniform(50.0, 200.0)
    return targets, ks, forces, mass, damping


@needs_compiled
class TestAdmittanceLoopParity:
    def test_states_agree(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            targets, ks, forces, mass, damping = random_admittance_case(rng)
            args = (np.zeros(3), np.zeros(3), targets, ks, forces,
                    mass, damping, 1e-3, 1e9)
            xs_p, vs_p, fail_p = BACKENDS["python"].run_admittance_loop(*args)
            xs_c, vs_c, fail_c = BACKENDS["cython"].run_admittance_loop(*args)
            assert fail_p == fail_c == -1
            np.testing.assert_allclose(xs_c, xs_p, rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose(vs_c, vs_p, rtol=1e-12, atol=1e-15)

    def test_failure_index_agrees(self):
        rng = np.random.default_rng(22)
        targets, ks, forces, mass, damping = random_admittance_case(rng, n=100)
        forces[63] = [50.0, 0.0, 0.0]
        args = (np.zeros(3), np.zeros(3), targets, ks, forces, mass, damping, 1e-3, 30.0)
        _, _, fail_p = BACKENDS["python"].run_admittance_loop(*args)
        _, _, fail_c = BACKENDS["cython"].run_admittance_loop(*args)
        assert fail_p == fail_c == 63


@needs_compiled
class TestFlipTrialParity:
    def test_bit_exact_over_policies_and_noise(self):
        for sigma in (0.0, 0.01):
            scenario = FlipScenario(position_noise_sigma=sigma)
            trajectory = build_nominal_trajectory(scenario)
            for trial in range(10):
                for name, policy in default_policies().items():
                    inputs = trial_inputs(scenario, policy, trial, trajectory)
                    py = BACKENDS["python"].run_flip_trial(inputs, True)
                    cy = BACKENDS["cython"].run_flip_trial(inputs, True)
                    assert py[:3] == cy[:3], (name, trial, sigma)
                    for key in py[3]:
                        np.testing.assert_array_equal(py[3][key], cy[3][key],
                                                      err_msg=f"{name}/{trial}/{key}")


def test_env_var_forces_python_backend():
    code = ("import os; os.environ['COMPLIANCEKIT_FORCE_PY'] = '1'; "
            "import compliancekit; print(compliancekit.kernel_backend)")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "python"
