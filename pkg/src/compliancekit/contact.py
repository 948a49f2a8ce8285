"""Contact Jacobian models: generalized force, velocity-constraint checks,
pinching detection, and a constructive escape-velocity certificate.

A model is a stack of unit contact-normal rows J (n x N) with the contact
normal force vector lambda. Feasible generalized velocities satisfy
J v >= 0; the certificate shows a feasible v = v0 + k J^T lambda exists
whenever the row cone of J sits inside its dual cone and all contact
forces are positive.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolated, FormatError

DEFAULT_TOL = 1e-9
CONTACT_TEXT_HEADER = "#compliancekit-contact v1"


@dataclass(frozen=True)
class ContactModel:
    """Unit contact-normal rows (n x N) and contact normal forces (n,)."""

    jacobian: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        j = np.atleast_2d(np.asarray(self.jacobian, dtype=float))
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "jacobian", j)
        object.__setattr__(self, "lam", lam)
        if j.shape[0] < 1 or j.shape[1] < 1:
            raise ValueError(f"need n >= 1 contacts and N >= 1 dimensions, got {j.shape}")
        if lam.shape != (j.shape[0],):
            raise ValueError(f"lambda shape {lam.shape} does not match {j.shape[0]} contacts")
        norms = np.linalg.norm(j, axis=1)
        if np.abs(norms - 1.0).max() > DEFAULT_TOL:
            raise ValueError("each Jacobian row must have unit norm")

    @property
    def n_contacts(self) -> int:
        return self.jacobian.shape[0]

    @property
    def n_dims(self) -> int:
        return self.jacobian.shape[1]


def generalized_force(model: ContactModel) -> np.ndarray:
    """f = J^T lambda."""
    return model.jacobian.T @ model.lam


def violates_constraints(model: ContactModel, v, tol: float = DEFAULT_TOL) -> list[int]:
    """Indices of contacts whose velocity constraint (J v)_i >= -tol fails."""
    residual = model.jacobian @ np.asarray(v, dtype=float)
    return [int(i) for i in np.nonzero(residual < -tol)[0]]


def is_pinching(model: ContactModel, tol: float = DEFAULT_TOL) -> bool:
    """True when the row cone of J is NOT contained in its dual cone.

    Containment reduces to an elementwise test: cone(rows of J) lies in
    {x | J x >= 0} iff every generator row J_j satisfies J J_j^T >= 0,
    and nonnegative combinations preserve the inequality. Hence pinching
    iff some entry of J J^T is below -tol.
    """
    gram = model.jacobian @ model.jacobian.T
    return bool(gram.min() < -tol)


def escape_velocity(model: ContactModel, v0, tol: float = DEFAULT_TOL):
    """Smallest k >= 0 with v = v0 + k J^T lambda contact-feasible, and that v.

    Closed form: k = max_i max(0, -(J v0)_i / (J J^T lambda)_i). Requires a
    non-pinching model with strictly positive contact forces, which makes
    every (J J^T lambda)_i positive.
    """
    if is_pinching(model, tol):
        raise AssumptionViolated("pinching contacts: row cone escapes its dual cone")
    if model.lam.min() <= 0.0:
        raise AssumptionViolated(
            f"all contact forces must be positive, got min lambda = {model.lam.min():.6g}"
        )
    j = model.jacobian
    jv0 = j @ np.asarray(v0, dtype=float)
    push = j @ (j.T @ model.lam)
    if push.min() <= 0.0:
        # unreachable for unit rows (diagonal of J J^T is 1), kept as a guard
        raise AssumptionViolated("J J^T lambda has a non-positive component")
    k = float(np.max(np.maximum(0.0, -jv0 / push)))
    v = np.asarray(v0, dtype=float) + k * (j.T @ model.lam)
    return k, v


def format_contact_model(model: ContactModel) -> str:
    """Versioned text format: one ``contact`` line per row, lambda last."""
    lines = [CONTACT_TEXT_HEADER]
    for row, lam in zip(model.jacobian, model.lam):
        lines.append("contact " + " ".join(repr(float(v)) for v in (*row, lam)))
    return "\n".join(lines) + "\n"


def parse_contact_model(text: str, name: str = "<contact>") -> ContactModel:
    """Inverse of format_contact_model, with line-numbered diagnostics."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != CONTACT_TEXT_HEADER:
        raise FormatError(f"{name}:1: missing header line {CONTACT_TEXT_HEADER!r}")
    rows, lams = [], []
    width = None
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        kind, _, rest = line.partition(" ")
        if kind != "contact":
            raise FormatError(f"{name}:{lineno}: unknown record kind {kind!r}")
        try:
            vals = [float(v) for v in rest.split()]
        except ValueError as exc:
            raise FormatError(f"{name}:{lineno}: {exc}") from exc
        if len(vals) < 2:
            raise FormatError(f"{name}:{lineno}: need at least one Jacobian entry and lambda")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise FormatError(
                f"{name}:{lineno}: expected {width} values per contact, got {len(vals)}")
        rows.append(vals[:-1])
        lams.append(vals[-1])
    if not rows:
        raise FormatError(f"{name}: no contact records")
    try:
        return ContactModel(np.array(rows), np.array(lams))
    except ValueError as exc:
        raise FormatError(f"{name}: {exc}") from exc


@dataclass
class TrialReport:
    """Outcome counts for randomized escape-velocity trials."""

    trials: int = 0
    failures: int = 0
    pinching_rejected: int = 0
    failure_seeds: list = field(default_factory=list)


def sample_contact_model(rng: np.random.Generator, n: int, n_dims: int,
                         require_non_pinching: bool = True,
                         max_rejects: int = 10000) -> ContactModel:
    """Random unit-row contact model with positive forces.

    Rejection-samples on the pinching test when requested.
    """
    rejected = 0
    while True:
        rows = rng.normal(size=(n, n_dims))
        norms = np.linalg.norm(rows, axis=1)
        if norms.min() < 1e-6:
            continue
        rows = rows / norms[:, None]
        lam = rng.uniform(0.1, 5.0, size=n)
        model = ContactModel(rows, lam)
        if not require_non_pinching or not is_pinching(model):
            return model
        rejected += 1
        if rejected > max_rejects:
            raise RuntimeError("could not sample a non-pinching model")


def randomized_escape_trials(seed: int, n: int, n_dims: int, trials: int = 1000,
                             tol: float = DEFAULT_TOL) -> TrialReport:
    """Sample non-pinching models and verify the escape certificate on each.

    Any failure contradicts the feasibility guarantee and is counted (and
    recorded) rather than raised.
    """
    rng = np.random.default_rng(seed)
    report = TrialReport()
    for i in range(trials):
        model = sample_contact_model(rng, n, n_dims)
        v0 = rng.normal(scale=2.0, size=n_dims)
        report.trials += 1
        try:
            _, v = escape_velocity(model, v0, tol)
        except AssumptionViolated:
            report.failures += 1
            report.failure_seeds.append((seed, i))
            continue
        if violates_constraints(model, v, tol):
            report.failures += 1
            report.failure_seeds.append((seed, i))
    return report
