"""State-space systems: construction, evaluation, interconnection, simulation.

The JSON schema for a system is::

    {"A": [[...]], "B": [[...]], "C": [[...]], "D": [[...]], "name": "..."}

``D`` and ``name`` are optional; ``D`` defaults to zero.  Matrices are
row-major lists of lists and are validated for rectangularity on load.

All functions are pure and keep no caches, so frequency sweeps may call
``eval_tf`` concurrently at many points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    IllPosedInterconnectionError,
    InputError,
    PoleProximityError,
    SimulationDivergedError,
)
from .linalg import as_matrix, spectral_norm


@dataclass(frozen=True)
class StateSpace:
    """Continuous-time LTI system ``xdot = A x + B u``, ``y = C x + D u``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray = None
    name: str | None = None

    def __post_init__(self):
        A = as_matrix(self.A, "A", square=True)
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if B.shape[0] != n:
            raise InputError(f"B must have {n} rows, got {B.shape[0]}")
        if C.shape[1] != n:
            raise InputError(f"C must have {n} columns, got {C.shape[1]}")
        D = self.D
        if D is None:
            D = np.zeros((C.shape[0], B.shape[1]))
        D = as_matrix(D, "D")
        if D.shape != (C.shape[0], B.shape[1]):
            raise InputError(
                f"D must be {C.shape[0]}x{B.shape[1]}, got {D.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def n_inputs(self):
        return self.B.shape[1]

    @property
    def n_outputs(self):
        return self.C.shape[0]

    @property
    def is_square(self):
        return self.n_inputs == self.n_outputs

    def require_square(self, context="this operation"):
        if not self.is_square:
            raise InputError(
                f"{context} requires a square system "
                f"({self.n_inputs} inputs vs {self.n_outputs} outputs)")
        return self.n_inputs

    def poles(self):
        """Eigenvalues of A (poles of a minimal realization)."""
        return linalg.eig(self.A).values

    def to_dict(self):
        d = {"A": self.A.tolist(), "B": self.B.tolist(), "C": self.C.tolist()}
        if np.any(self.D != 0.0):
            d["D"] = self.D.tolist()
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise InputError("system JSON must be an object")
        missing = [k for k in ("A", "B", "C") if k not in data]
        if missing:
            raise InputError(f"system JSON is missing keys: {missing}")
        return cls(A=_load_mat(data["A"], "A"), B=_load_mat(data["B"], "B"),
                   C=_load_mat(data["C"], "C"),
                   D=_load_mat(data["D"], "D") if "D" in data else None,
                   name=data.get("name"))


def _load_mat(rows, name):
    """Validate a row-major list of lists as a rectangular matrix."""
    if np.isscalar(rows):
        return np.array([[float(rows)]])
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{name} must be a non-empty list of rows")
    if not all(isinstance(r, list) for r in rows):
        raise InputError(f"{name} must be a list of lists")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InputError(f"{name} has ragged rows (widths {sorted(widths)})")
    try:
        return np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} has non-numeric entries: {exc}") from exc


def load_system(path):
    """Load a system from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON at line {exc.lineno}: "
                             f"{exc.msg}") from exc
    return StateSpace.from_dict(data)


def save_system(sys, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sys.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def eval_tf(sys, s, pole_tol=None):
    """Evaluate ``R(s) = C (sI - A)^{-1} B + D`` at a complex point.

    Raises ``PoleProximityError`` when ``s`` is within
    ``1e-9 * (1 + ||A||)`` of an eigenvalue of ``A``.
    """
    s = complex(s)
    if pole_tol is None:
        pole_tol = 1e-9 * (1.0 + spectral_norm(sys.A))
    vals = np.linalg.eigvals(sys.A) if sys.n else np.zeros(0, dtype=complex)
    if sys.n:
        dist = np.abs(vals - s)
        k = int(np.argmin(dist))
        if dist[k] < pole_tol:
            raise PoleProximityError(
                f"evaluation point {s} is within {dist[k]:.3e} of pole "
                f"{vals[k]}", pole=complex(vals[k]))
    X = np.linalg.solve(s * np.eye(sys.n) - sys.A, sys.B.astype(complex)) \
        if sys.n else np.zeros((0, sys.n_inputs), dtype=complex)
    return sys.C @ X + sys.D


@dataclass(frozen=True)
class Minimality:
    controllable: bool
    observable: bool

    @property
    def minimal(self):
        return self.controllable and self.observable


def is_minimal(sys):
    """PBH controllability/observability of the realization."""
    return Minimality(
        controllable=linalg.pbh_test(sys.A, sys.B, "controllable"),
        observable=linalg.pbh_test(sys.A, sys.C, "observable"))


def has_zero_at_origin(sys, tol=None):
    """True when the system pencil loses rank at s = 0.

    Tests ``rank [[A, B], [C, D]] < n + p`` for a square system.
    """
    p = sys.require_square("zero-at-origin test")
    pencil = np.block([[sys.A, sys.B], [sys.C, sys.D]])
    return linalg.rank(pencil, tol) < sys.n + p


def interconnect_positive_feedback(plant, delta):
    """Positive feedback loop of two systems (plant input fed by delta output).

    The returned system keeps an exogenous input added at the plant input
    and the plant output, so the autonomous loop dynamics are the state
    matrix of the result.  With zero feedthroughs the state matrix is
    ``[[A_p, B_p C_d], [B_d C_p, A_d]]``.
    """
    if plant.n_outputs != delta.n_inputs or delta.n_outputs != plant.n_inputs:
        raise InputError(
            f"interconnection dimension mismatch: plant is "
            f"{plant.n_outputs}x{plant.n_inputs}, delta is "
            f"{delta.n_outputs}x{delta.n_inputs}")
    p = plant.n_inputs
    W = np.eye(p) - delta.D @ plant.D
    if linalg.rank(W) < p:
        raise IllPosedInterconnectionError(
            "algebraic loop: I - D_delta D_plant is singular")
    Phi = np.linalg.inv(W)
    Ap, Bp, Cp, Dp = plant.A, plant.B, plant.C, plant.D
    Ad, Bd, Cd, Dd = delta.A, delta.B, delta.C, delta.D
    # u_p = Phi (Dd Cp x_p + Cd x_d + r)
    A11 = Ap + Bp @ Phi @ Dd @ Cp
    A12 = Bp @ Phi @ Cd
    Cy1 = Cp + Dp @ Phi @ Dd @ Cp
    Cy2 = Dp @ Phi @ Cd
    A21 = Bd @ Cy1
    A22 = Ad + Bd @ Cy2
    A = np.block([[A11, A12], [A21, A22]])
    B = np.vstack([Bp @ Phi, Bd @ Dp @ Phi])
    C = np.hstack([Cy1, Cy2])
    D = Dp @ Phi
    name = None
    if plant.name or delta.name:
        name = f"[{plant.name or 'plant'} <+> {delta.name or 'delta'}]"
    return StateSpace(A=A, B=B, C=C, D=D, name=name)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray


def _input_function(sys, input_signal):
    p = sys.n_inputs
    if input_signal is None:
        u0 = np.zeros(p)
        return lambda t: u0
    if callable(input_signal):
        return lambda t: np.asarray(input_signal(t), dtype=float).reshape(p)
    if isinstance(input_signal, tuple) and len(input_signal) == 2:
        ts, us = input_signal
        ts = np.asarray(ts, dtype=float)
        us = np.asarray(us, dtype=float)
        if us.ndim == 1:
            us = us.reshape(-1, 1)
        if len(ts) != len(us) or us.shape[1] != p:
            raise InputError("sampled input must align with times and width p")

        def zoh(t):
            k = int(np.searchsorted(ts, t, side="right")) - 1
            k = min(max(k, 0), len(ts) - 1)
            return us[k]

        return zoh
    u = np.asarray(input_signal, dtype=float).reshape(-1)
    if u.shape[0] != p:
        raise InputError(f"constant input must have {p} entries")
    return lambda t: u


def simulate(sys, x0, input_signal=None, t_end=10.0, dt=0.01):
    """Fixed-step RK4 integration of the system.

    ``input_signal`` may be None (zero input), a constant vector, a
    callable ``t -> u``, or a pair ``(times, samples)`` applied with
    zero-order hold.
    """
    if dt <= 0 or t_end <= 0:
        raise InputError("t_end and dt must be positive")
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != sys.n:
        raise InputError(f"x0 must have {sys.n} entries, got {x.shape[0]}")
    ufun = _input_function(sys, input_signal)
    steps = int(np.ceil(t_end / dt - 1e-12))
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    times = np.empty(steps + 1)
    states = np.empty((steps + 1, sys.n))
    outputs = np.empty((steps + 1, sys.n_outputs))
    t = 0.0
    for k in range(steps + 1):
        times[k] = t
        states[k] = x
        outputs[k] = C @ x + D @ ufun(t)
        if not np.all(np.isfinite(x)):
            raise SimulationDivergedError(
                f"state became non-finite at t={t:.6g}", t_bad=t)
        if k == steps:
            break
        h = min(dt, t_end - t)
        u1, u2, u3 = ufun(t), ufun(t + h / 2), ufun(t + h)
        # divergence is detected at the next step; silence the overflow
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = A @ x + B @ u1
            k2 = A @ (x + h / 2 * k1) + B @ u2
            k3 = A @ (x + h / 2 * k2) + B @ u2
            k4 = A @ (x + h * k3) + B @ u3
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = min(t + h, t_end)
    return Trajectory(times=times, states=states, outputs=outputs)


@dataclass(frozen=True)
class UncertainSystem:
    """Plant with strictly-negative-imaginary uncertainty ``w = Delta y``.

    ``gamma`` bounds the uncertainty DC gain, ``lambda_max(Delta(0)) <= gamma``.
    ``delta`` optionally carries a sampled uncertainty realization.
    """

    plant: StateSpace
    gamma: float
    delta: StateSpace | None = None

    def __post_init__(self):
        self.plant.require_square("uncertain system")
        if not (self.gamma > 0):
            raise InputError("gamma must be positive")
