"""Hot-loop kernels: compiled extension when available, pure Python otherwise.

Both backends expose the same two entry points:

    run_admittance_loop(x0, v0, targets, stiffness, forces, mass, damping,
                        dt, force_limit) -> (xs, vs, fail_index)
    run_flip_trial(inputs: FlipTrialInputs, record: bool) -> tuple

Set COMPLIANCEKIT_FORCE_PY=1 to force the pure-Python loops (used by the
parity tests and the benchmark).
"""
import os

from . import _pyloops

backend = _pyloops
backend_name = "python"

if not os.environ.get("COMPLIANCEKIT_FORCE_PY"):
    try:
        from . import _fastloops

        backend = _fastloops
        backend_name = "cython"
    except ImportError:
        pass


def available_backends():
    out = {"python": _pyloops}
    try:
        from . import _fastloops

        out["cython"] = _fastloops
    except ImportError:
        pass
    return out
