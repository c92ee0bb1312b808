"""Single-qubit matrix algebra: Paulis, rotations, states and phase-insensitive equality.

Matrices are plain ``numpy`` 2x2 complex arrays and states are length-2 complex
vectors. Nothing here mutates its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TOL_UNIT = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class InvalidAxisError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    """Rotation axis as a unit vector on the Bloch sphere."""

    nx: float
    ny: float
    nz: float

    def __post_init__(self):
        norm = math.sqrt(self.nx**2 + self.ny**2 + self.nz**2)
        if not all(map(math.isfinite, (self.nx, self.ny, self.nz))) or abs(norm - 1) > TOL_UNIT:
            raise InvalidAxisError(f"axis ({self.nx}, {self.ny}, {self.nz}) is not a unit vector")

    @classmethod
    def equatorial(cls, xi: float) -> "Axis":
        return cls(math.cos(xi), math.sin(xi), 0.0)

    @classmethod
    def normalized(cls, v) -> "Axis":
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        if n == 0 or not np.isfinite(n):
            raise InvalidAxisError(f"cannot normalize {v!r}")
        v = v / n
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz])

    def pauli(self) -> np.ndarray:
        return self.nx * X + self.ny * Y + self.nz * Z


AXIS_X = Axis(1.0, 0.0, 0.0)
AXIS_Y = Axis(0.0, 1.0, 0.0)
AXIS_Z = Axis(0.0, 0.0, 1.0)


def as_axis(axis) -> Axis:
    """Accept an Axis, one of 'x'/'y'/'z', or a 3-vector."""
    if isinstance(axis, Axis):
        return axis
    if isinstance(axis, str):
        try:
            return {"x": AXIS_X, "y": AXIS_Y, "z": AXIS_Z}[axis.lower()]
        except KeyError:
            raise InvalidAxisError(f"unknown axis name {axis!r}") from None
    v = np.asarray(axis, dtype=float)
    if v.shape != (3,):
        raise InvalidAxisError(f"axis must be a 3-vector, got shape {v.shape}")
    return Axis(float(v[0]), float(v[1]), float(v[2]))


def rotation(axis, theta: float) -> np.ndarray:
    """exp(-i theta/2 n.sigma), computed in closed form."""
    if not math.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    a = as_axis(axis)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return c * I2 - 1j * s * a.pauli()


def rx(theta: float) -> np.ndarray:
    return rotation(AXIS_X, theta)


def ry(theta: float) -> np.ndarray:
    return rotation(AXIS_Y, theta)


def rz(theta: float) -> np.ndarray:
    return rotation(AXIS_Z, theta)


def z_phase(phi: float) -> np.ndarray:
    """exp(i phi Z), the processing gate of a QSP sequence."""
    return np.diag([np.exp(1j * phi), np.exp(-1j * phi)])


def x_phase(phi: float) -> np.ndarray:
    """exp(i phi X)."""
    return math.cos(phi) * I2 + 1j * math.sin(phi) * X


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b


def adjoint(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def apply(u: np.ndarray, state: np.ndarray) -> np.ndarray:
    return u @ state


def is_unitary(u: np.ndarray, tol: float = TOL_UNIT) -> bool:
    return bool(np.max(np.abs(u @ u.conj().T - I2)) <= tol)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True when a = e^{i phi} b within ``tol`` (max-entry norm).

    The phase is read off the largest entry of ``b`` so the comparison is
    stable even when some entries vanish.
    """
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(a[idx]) < 1e-300:
        return bool(np.max(np.abs(a - b)) <= tol)
    phase = a[idx] / b[idx]
    phase /= abs(phase)
    return bool(np.max(np.abs(a - phase * b)) <= tol)


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over phi of the operator norm of a - e^{i phi} b, for unitaries a, b."""
    ev = np.linalg.eigvals(adjoint(b) @ a)
    angles = np.angle(ev)
    gap = abs(angles[0] - angles[1]) % (2 * math.pi)
    gap = min(gap, 2 * math.pi - gap)
    return 2 * math.sin(gap / 4)


def rotation_angle(u: np.ndarray) -> float:
    """Rotation angle in [0, pi] of the SO(3) element that u projects to."""
    t = abs(np.trace(u)) / 2
    return 2 * math.acos(min(1.0, t))


# -- states -----------------------------------------------------------------

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)
KET_PLUS_I = np.array([1, 1j], dtype=complex) / math.sqrt(2)
KET_MINUS_I = np.array([1, -1j], dtype=complex) / math.sqrt(2)

NAMED_STATES = {
    "0": KET_0,
    "1": KET_1,
    "+": KET_PLUS,
    "-": KET_MINUS,
    "+i": KET_PLUS_I,
    "-i": KET_MINUS_I,
}


def state(spec) -> np.ndarray:
    """Build a normalized pure state from a name ('0', '+', ...) or amplitudes."""
    if isinstance(spec, str):
        try:
            return NAMED_STATES[spec].copy()
        except KeyError:
            raise ValueError(f"unknown state name {spec!r}") from None
    v = np.asarray(spec, dtype=complex)
    if v.shape != (2,) or not np.all(np.isfinite(v)):
        raise ValueError("a state is a finite 2-vector")
    n = np.linalg.norm(v)
    if abs(n - 1) > TOL_UNIT:
        raise ValueError(f"state has norm {n}, expected 1")
    return v


def state_name(v: np.ndarray) -> str | None:
    for name, ket in NAMED_STATES.items():
        if abs(abs(np.vdot(ket, v)) - 1) < 1e-12:
            return name
    return None


def transition_probability(prep: np.ndarray, u: np.ndarray, meas: np.ndarray) -> float:
    """|<meas|u|prep>|^2, clipped into [0, 1]."""
    p = abs(np.vdot(meas, u @ prep)) ** 2
    return float(min(1.0, max(0.0, p)))
