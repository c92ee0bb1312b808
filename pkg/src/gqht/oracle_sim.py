"""Hidden-channel oracle, compound queries, QSP phases and transcripts.

The oracle keeps its hidden unitary in a closure; nothing on the public
surface returns the hidden label. Protocols talk to a ``Session``, which
runs QSP phases against the oracle and records what happened.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .groups import GroupRep
from .qsp import QspSequence
from .su2_core import I2, Z, adjoint, state_name, z_phase

DEFAULT_TOL_DET = 1e-7


def det_tolerance() -> float:
    """epsilon_det, overridable through GQHT_TOL_DET."""
    raw = os.environ.get("GQHT_TOL_DET")
    if raw is None:
        return DEFAULT_TOL_DET
    val = float(raw)
    if not 0 < val < 0.5:
        raise ValueError(f"GQHT_TOL_DET must lie in (0, 0.5), got {raw}")
    return val


class NonDeterministicOutcomeError(RuntimeError):
    def __init__(self, probability: float):
        super().__init__(f"outcome probability {probability:.6g} is not deterministic")
        self.probability = probability


class ProtocolViolationError(RuntimeError):
    pass


class _OracleSlot:
    def __repr__(self):
        return "ORACLE"


ORACLE = _OracleSlot()


@dataclass(frozen=True)
class CompoundQuery:
    """A product of oracle calls and fixed gates, written left to right as a matrix product.

    ``recipe = (ORACLE, R)`` is the operator E @ R: R acts first.
    """

    recipe: tuple
    description: str = "E"

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ValueError("a compound query needs at least one oracle call")

    @property
    def multiplicity(self) -> int:
        return sum(1 for item in self.recipe if item is ORACLE)

    @classmethod
    def bare(cls) -> "CompoundQuery":
        return cls((ORACLE,), "E")

    def then(self, gate: np.ndarray, name: str = "G") -> "CompoundQuery":
        """self @ gate: the gate acts before the query."""
        return CompoundQuery(self.recipe + (gate,), f"{self.description}·{name}")

    def after(self, gate: np.ndarray, name: str = "G") -> "CompoundQuery":
        """gate @ self."""
        return CompoundQuery((gate,) + self.recipe, f"{name}·{self.description}")

    def power(self, m: int) -> "CompoundQuery":
        if m < 1:
            raise ValueError("power must be >= 1")
        if m == 1:
            return self
        return CompoundQuery(self.recipe * m, f"({self.description})^{m}")

    def conjugate(self, v: np.ndarray, name: str = "V") -> "CompoundQuery":
        """v @ self @ v^dagger."""
        return CompoundQuery((v,) + self.recipe + (adjoint(v),), f"{name}·{self.description}·{name}†")

    def matrix(self, oracle_image: np.ndarray) -> np.ndarray:
        """Materialize with a known image; for analysis only, bills nothing."""
        u = I2.copy()
        for item in self.recipe:
            u = u @ (oracle_image if item is ORACLE else item)
        return u


@dataclass(frozen=True)
class MeasurementOutcome:
    bit: int
    probability: float
    deterministic: bool


class HiddenChannelOracle:
    """Applies a hidden unitary and counts every application.

    ``channel_noise`` (optional) maps the ideal image to the matrix used for
    one application; it is called afresh per application.
    """

    def __init__(self, image: np.ndarray, channel_noise=None):
        hidden = np.array(image, dtype=complex)
        hidden.setflags(write=False)

        def _act(state):
            u = hidden if channel_noise is None else channel_noise(hidden)
            return u @ state

        self._act = _act
        self._count = 0

    @classmethod
    def for_element(cls, rep: GroupRep, label: str, channel_noise=None) -> "HiddenChannelOracle":
        if label not in rep.image:
            raise KeyError(f"{label!r} is not an element of {rep.id}")
        return cls(rep.image[label], channel_noise)

    @property
    def query_count(self) -> int:
        return self._count

    def apply(self, state: np.ndarray) -> np.ndarray:
        self._count += 1
        return self._act(state)

    def apply_compound(self, cq: CompoundQuery, state: np.ndarray) -> np.ndarray:
        for item in reversed(cq.recipe):
            state = self.apply(state) if item is ORACLE else item @ state
        return state


def evolve(oracle: HiddenChannelOracle, cq: CompoundQuery, seq: QspSequence, gate_noise=None) -> np.ndarray:
    """State after the QSP sequence, with ``Z C Z`` as the signal; no measurement."""
    gate = (lambda u: u) if gate_noise is None else gate_noise
    state = seq.prep.copy()
    for phi in reversed(seq.phases[1:]):
        state = gate(z_phase(phi)) @ state
        state = Z @ oracle.apply_compound(cq, Z @ state)
    return gate(z_phase(seq.phases[0])) @ state


def run_qsp_phase(
    oracle: HiddenChannelOracle,
    cq: CompoundQuery,
    seq: QspSequence,
    mode: str = "deterministic",
    rng: np.random.Generator | None = None,
    gate_noise=None,
) -> MeasurementOutcome:
    """Prepare, apply e^{i phi_0 Z} prod (Z C Z e^{i phi_j Z}), measure.

    The bit is 1 when the qubit is found in ``seq.meas``.
    """
    state = evolve(oracle, cq, seq, gate_noise)
    p = float(min(1.0, max(0.0, abs(np.vdot(seq.meas, state)) ** 2)))
    eps = det_tolerance()
    deterministic = p <= eps or p >= 1 - eps
    if mode == "deterministic":
        if not deterministic:
            raise NonDeterministicOutcomeError(p)
        bit = int(p >= 0.5)
    elif mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        bit = int(rng.random() < p)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return MeasurementOutcome(bit, p, deterministic)


# -- transcripts -----------------------------------------------------------------


def _state_json(v):
    name = state_name(v)
    return name if name is not None else [[float(z.real), float(z.imag)] for z in v]


@dataclass
class PhaseRecord:
    query: str
    multiplicity: int
    phases: list
    prep: object
    meas: object
    bit: int
    probability: float
    queries: int
    stage: str = ""

    def to_json(self) -> dict:
        return {
            "query": self.query,
            "multiplicity": self.multiplicity,
            "phases": [float(p) for p in self.phases],
            "prep": self.prep,
            "meas": self.meas,
            "bit": self.bit,
            "probability": self.probability,
            "queries": self.queries,
            "stage": self.stage,
        }

    @classmethod
    def from_json(cls, d: dict) -> "PhaseRecord":
        return cls(**d)


@dataclass
class Transcript:
    group: str
    hidden: str | None = None
    phases_used: list = field(default_factory=list)
    bits: list = field(default_factory=list)
    total_queries: int = 0
    recovered: str | None = None

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "hidden": self.hidden,
            "phases_used": [r.to_json() for r in self.phases_used],
            "bits": list(self.bits),
            "total_queries": self.total_queries,
            "recovered": self.recovered,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d: dict) -> "Transcript":
        return cls(
            d["group"],
            d["hidden"],
            [PhaseRecord.from_json(r) for r in d["phases_used"]],
            list(d["bits"]),
            int(d["total_queries"]),
            d["recovered"],
        )

    def stage_totals(self) -> dict:
        out: dict = {}
        for r in self.phases_used:
            out[r.stage] = out.get(r.stage, 0) + r.queries
        return out


class Session:
    """One discrimination game: an oracle, a measurement mode and a transcript."""

    def __init__(self, oracle: HiddenChannelOracle, group: str = "", mode: str = "deterministic", rng=None, gate_noise=None):
        self.oracle = oracle
        self.mode = mode
        self.rng = rng
        self.gate_noise = gate_noise
        self.transcript = Transcript(group)
        self._stage = ""

    def stage(self, name: str) -> None:
        self._stage = name

    def phase(self, cq: CompoundQuery, seq: QspSequence) -> int:
        before = self.oracle.query_count
        out = run_qsp_phase(self.oracle, cq, seq, self.mode, self.rng, self.gate_noise)
        used = self.oracle.query_count - before
        self.transcript.phases_used.append(
            PhaseRecord(
                cq.description,
                cq.multiplicity,
                list(seq.phases),
                _state_json(seq.prep),
                _state_json(seq.meas),
                out.bit,
                out.probability,
                used,
                self._stage,
            )
        )
        self.transcript.bits.append(out.bit)
        self.transcript.total_queries += used
        return out.bit

    def finish(self, recovered: str) -> str:
        self.transcript.recovered = recovered
        return recovered
