"""Unitary perturbation experiments for noisy oracles and noisy processing gates.

Perturbations are random-axis rotations composed with the ideal unitary.
The rotation angle is capped so that the phase-insensitive operator-norm
distance to the ideal unitary never exceeds epsilon; since that distance
bounds the induced trace distance on every input state, checking output
distances against ``n_j * epsilon`` is a sound test of the peeling bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groups import GroupId, build
from .oracle_sim import (
    CompoundQuery,
    HiddenChannelOracle,
    NonDeterministicOutcomeError,
    ProtocolViolationError,
    Session,
    evolve,
)
from .protocols import decider, play
from .qsp import QspSequence
from .su2_core import phase_distance, rotation

KINDS = ("channel", "gate")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    epsilon: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"noise kind must be one of {KINDS}, got {self.kind!r}")
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def max_angle(epsilon: float) -> float:
    """Largest rotation angle whose phase distance from the identity is <= epsilon."""
    return 4 * math.asin(min(epsilon, 2.0) / 2)


def perturb(u: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """u preceded by a random-axis rotation of angle in (0, max_angle(epsilon)].

    The rng is advanced identically for every epsilon, so sweeps over epsilon
    with one seed share their random numbers.
    """
    axis = rng.standard_normal(3)
    while np.linalg.norm(axis) < 1e-12:
        axis = rng.standard_normal(3)
    r = 1.0 - rng.random()
    if epsilon == 0:
        return np.array(u, dtype=complex)
    return rotation(axis / np.linalg.norm(axis), max_angle(epsilon) * r) @ u


def certified_distance(u: np.ndarray, v: np.ndarray) -> float:
    return phase_distance(u, v)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Trace distance between two normalized pure qubit states.

    Equals sqrt(1 - |<a|b>|^2); the determinant form avoids the cancellation
    that formula suffers for nearly equal states.
    """
    return float(abs(a[0] * b[1] - a[1] * b[0]))


def trace_distance_dm(a: np.ndarray, b: np.ndarray) -> float:
    """Same quantity through half the trace norm of the density-matrix difference."""
    rho = np.outer(a, a.conj()) - np.outer(b, b.conj())
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho))))


@dataclass(frozen=True)
class PeelingCheck:
    epsilon: float
    n_j: int
    distance: float
    bound: float
    holds: bool

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "n_j": self.n_j, "distance": self.distance, "bound": self.bound, "holds": self.holds}


def check_peeling_bound(
    seq: QspSequence,
    cq: CompoundQuery,
    spec: NoiseSpec,
    prep: np.ndarray | None = None,
    channel: np.ndarray | None = None,
) -> PeelingCheck:
    """Compare ideal and channel-perturbed evolutions of one QSP phase.

    Every oracle application draws a fresh perturbation. ``channel`` is the
    ideal oracle unitary (identity by default).
    """
    if spec.kind != "channel":
        raise ValueError("check_peeling_bound perturbs the queried channel; use kind='channel'")
    if prep is not None:
        seq = QspSequence(seq.phases, prep, seq.meas)
    image = np.eye(2, dtype=complex) if channel is None else np.asarray(channel, dtype=complex)
    rng = spec.rng()
    ideal = HiddenChannelOracle(image)
    noisy = HiddenChannelOracle(image, lambda u: perturb(u, spec.epsilon, rng))
    a = evolve(ideal, cq, seq)
    b = evolve(noisy, cq, seq)
    n_j = noisy.query_count
    d = trace_distance(a, b)
    bound = n_j * spec.epsilon
    return PeelingCheck(spec.epsilon, n_j, d, bound, d <= bound + 1e-12)


def gate_noise_experiment(group, epsilon: float, trials: int, seed: int = 0) -> float:
    """Fraction of sweeps (one game per label) with a wrong or aborted decision.

    Games run in sampled mode with every processing gate perturbed. Trial t
    of every epsilon uses the same seed pair, so failure rates across an
    epsilon grid are driven by common random numbers.
    """
    gid = GroupId.parse(group) if isinstance(group, str) else group
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rep = build(gid)
    decide = decider(gid)
    failures = 0
    for t in range(trials):
        gate_rng = np.random.default_rng([seed, t, 0])
        sample_rng = np.random.default_rng([seed, t, 1])
        noisy_gate = lambda u: perturb(u, epsilon, gate_rng)  # noqa: E731
        failed = False
        for label in rep.elements:
            try:
                tr = play(rep, label, decide, mode="sampled", rng=sample_rng, gate_noise=noisy_gate)
            except (ProtocolViolationError, NonDeterministicOutcomeError):
                failed = True
                continue
            failed |= tr.recovered != label
        failures += failed
    return failures / trials


class _RecordingSession(Session):
    def __init__(self, oracle):
        super().__init__(oracle)
        self.calls = []

    def phase(self, cq, seq):
        self.calls.append((cq, seq))
        return super().phase(cq, seq)


def protocol_peeling(group, epsilon: float, seed: int = 0) -> dict:
    """Peeling check on every phase of the noiseless game for every label.

    Returns the check with the largest distance-to-bound ratio, plus the
    number of phases checked and whether all of them held.
    """
    gid = GroupId.parse(group) if isinstance(group, str) else group
    rep = build(gid)
    decide = decider(gid)
    worst, checked, ok = None, 0, True
    for k, label in enumerate(rep.elements):
        session = _RecordingSession(HiddenChannelOracle.for_element(rep, label))
        decide(session)
        for j, (cq, seq) in enumerate(session.calls):
            chk = check_peeling_bound(seq, cq, NoiseSpec("channel", epsilon, seed + 7919 * k + j), channel=rep.image[label])
            checked += 1
            ok &= chk.holds
            ratio = chk.distance / chk.bound if chk.bound > 0 else 0.0
            if worst is None or ratio > worst[0]:
                worst = (ratio, chk)
    out = worst[1].to_json()
    out.update({"phases_checked": checked, "all_hold": ok})
    return out
