"""Force-adaptive stiffness control toolkit."""

__version__ = "0.1.0"

from . import _kernels
from .se3 import Pose, basis_from_direction, decode_pose9, encode_pose9
from .stiffness import (
    DEFAULT_K_HIGH,
    DEFAULT_SCHEDULE,
    StiffnessProfile,
    StiffnessSchedule,
    k_low_of_force,
    stiffness_from_force,
    stiffness_matrix,
)
from .admittance import AdmittanceParams, AdmittanceState, admittance_step, run_admittance
from .contact import (
    ContactModel,
    escape_velocity,
    generalized_force,
    is_pinching,
    randomized_escape_trials,
    violates_constraints,
)

kernel_backend = _kernels.backend_name
