"""Two-party reference-frame agreement driven by QSP phases.

Alice and Bob share no reference frame: Bob's frame is Alice's rotated by an
unknown angle theta about z, taken from a known finite set. They pass one
qubit back and forth, each applying x-rotations in their own frame. Seen
from Alice, Bob's rotation e^{i chi X} is R^dagger e^{i chi X} R with
R = e^{i theta/2 Z}, so the exchange is a QSP sequence whose signal is the
frame rotation itself. In the Hadamard-conjugated picture, even-numbered
transmissions carry Z W Z instead of W. Absorbing those Z gates costs a
quarter turn on most phases, and reversing the phase order matches the
standard product. The resulting map is ``fold_phases``.

Frame identification then reuses the angle-set bisection planner. A planner
shift s is realized by Alice alone. She applies e^{-i s/2 Z} before each send
and e^{i s/2 Z} after each receipt. One transmitted qubit is one round, and
one round is one signal use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .oracle_sim import NonDeterministicOutcomeError, ProtocolViolationError, det_tolerance
from .protocols import AnglePlanner
from .qsp import QspSequence
from .su2_core import H, adjoint, x_phase, z_phase

TAU = 2 * math.pi


class UnsupportedParityError(ValueError):
    pass


def remap_phases(phi) -> list:
    """Keep the first phase; shift every later one by pi."""
    phi = [float(p) for p in phi]
    if not phi:
        raise ValueError("phase list must be nonempty")
    return phi[:1] + [p + math.pi for p in phi[1:]]


def quarter_turns(m: int) -> list:
    """Local x-rotation angle each party adds to its own phase, per position.

    Every position from 1 on gets -pi/2, except the last one when m is odd.
    """
    return [0.0 if j == 0 or (j == m and m % 2) else -math.pi / 2 for j in range(m + 1)]


def fold_phases(phi) -> list:
    """Standard QSP phases to the phases Alice and Bob apply, in time order."""
    phi = [float(p) for p in phi]
    m = len(phi) - 1
    chi = [a + t for a, t in zip(reversed(phi), quarter_turns(m))]
    return remap_phases(chi)


def frame_rotation(theta: float) -> np.ndarray:
    """R = e^{i theta/2 Z}: Alice-frame vectors to Bob-frame vectors."""
    return z_phase(theta / 2)


def collaborative_product(chi, theta: float, turns=None) -> np.ndarray:
    """e^{i chi_m X} ... R^dagger e^{i chi_1 X} R e^{i chi_0 X}, in Alice's frame.

    Position j is applied by Alice for even j and Bob for odd j. ``turns``
    adds a separate local x-rotation right after each phase, for comparing
    explicit quarter-turn gates with folded ones.
    """
    r = frame_rotation(theta)
    u = np.eye(2, dtype=complex)
    for j, c in enumerate(chi):
        op = x_phase(c)
        if turns is not None:
            op = x_phase(turns[j]) @ op
        if j % 2:
            op = adjoint(r) @ op @ r
        u = op @ u
    return u


def collaborative_unitary(chi, theta: float) -> np.ndarray:
    """The alternating product for an exchange that ends with Alice (even m)."""
    m = len(chi) - 1
    if m % 2:
        raise UnsupportedParityError(f"m = {m} is odd: the last phase is Bob's, use measured_unitary")
    return collaborative_product(chi, theta)


def measured_unitary(chi, theta: float) -> np.ndarray:
    """The product as seen by whoever measures: Bob's frame when m is odd."""
    u = collaborative_product(chi, theta)
    return frame_rotation(theta) @ u if (len(chi) - 1) % 2 else u


def standard_picture(u: np.ndarray) -> np.ndarray:
    """H u H: x-rotations become the z-phases of a standard QSP product."""
    return H @ u @ H


# -- the interactive protocol -----------------------------------------------------------


@dataclass(frozen=True)
class Party:
    name: str
    frame_offset: float = 0.0

    def to_local(self, psi: np.ndarray) -> np.ndarray:
        return frame_rotation(self.frame_offset) @ psi

    def from_local(self, psi: np.ndarray) -> np.ndarray:
        return adjoint(frame_rotation(self.frame_offset)) @ psi

    def act(self, chi: float, psi: np.ndarray) -> np.ndarray:
        """Apply e^{i chi X} in this party's frame to an Alice-frame state."""
        return self.from_local(x_phase(chi) @ self.to_local(psi))


@dataclass(frozen=True)
class RoundLog:
    phase: int
    direction: str  # "A->B" or "B->A"
    rotation: float  # x-phase applied by the receiver, in its own frame
    correction: float  # Alice's z-phase around the transmission (shift realization)
    state: tuple  # receiver-frame state after its rotation

    def to_json(self) -> dict:
        return {
            "phase": self.phase,
            "direction": self.direction,
            "rotation": self.rotation,
            "correction": self.correction,
            "state": [[float(z.real), float(z.imag)] for z in self.state],
        }


def run_dual_phase(seq: QspSequence, bob: Party, shift: float = 0.0, phase_index: int = 0):
    """Play one QSP phase as a qubit exchange; returns (bit, probability, logs).

    After the measurement the measuring party announces the end of the phase
    classically, so both know where the next phase starts.
    """
    alice = Party("Alice")
    chi = fold_phases(seq.phases)
    m = len(chi) - 1
    logs = []
    psi = alice.act(chi[0], H @ seq.prep)
    for j in range(1, m + 1):
        if j % 2:
            corr = -shift / 2
            psi = z_phase(corr) @ psi
            psi = bob.act(chi[j], psi)
            logs.append(RoundLog(phase_index, "A->B", chi[j], corr, tuple(bob.to_local(psi))))
        else:
            corr = shift / 2
            psi = alice.act(chi[j], z_phase(corr) @ psi)
            logs.append(RoundLog(phase_index, "B->A", chi[j], corr, tuple(psi)))
    measurer = bob if m % 2 else alice
    p = float(min(1.0, abs(np.vdot(H @ seq.meas, measurer.to_local(psi))) ** 2))
    eps = det_tolerance()
    if eps < p < 1 - eps:
        raise NonDeterministicOutcomeError(p)
    return int(p >= 0.5), p, logs


@dataclass
class FrameReport:
    theta: float
    index: int
    rounds: int
    bits: list
    logs: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "index": self.index,
            "rounds": self.rounds,
            "bits": list(self.bits),
            "logs": [r.to_json() for r in self.logs],
        }


def _index_of(theta_set, hidden_theta) -> int:
    hits = [i for i, t in enumerate(theta_set) if abs(math.remainder(t - hidden_theta, TAU)) < 1e-12]
    if len(hits) != 1:
        raise ValueError(f"hidden angle {hidden_theta} is not in the angle set")
    return hits[0]


def agree_on_frame(theta_set, hidden_theta: float, planner: AnglePlanner | None = None) -> FrameReport:
    """Identify Bob's frame offset by bisection over the candidate angles.

    ``planner`` defaults to the angle-set planner with odd parity tried first.
    """
    angles = [float(t) for t in theta_set]
    for i in range(len(angles)):
        for j in range(i):
            if abs(math.remainder(angles[i] - angles[j], TAU)) < 1e-12:
                raise ValueError("angles must be distinct modulo 2 pi")
    _index_of(angles, hidden_theta)
    planner = planner or AnglePlanner(angles, parities=(1, 0))
    bob = Party("Bob", float(hidden_theta))
    subset = frozenset(range(len(angles)))
    bits, logs, rounds = [], [], 0
    while len(subset) > 1:
        node = planner.node(subset)
        bit, _, phase_logs = run_dual_phase(node.sequence, bob, node.shift, len(bits))
        bits.append(bit)
        logs.extend(phase_logs)
        rounds += len(phase_logs)
        subset = node.child(bit)
        if not subset:
            raise ProtocolViolationError("measurement ruled out every candidate angle")
    idx = next(iter(subset))
    return FrameReport(angles[idx], idx, rounds, bits, logs)
