"""Hypothesis testing over finite groups of single-qubit channels, built on QSP."""

from .groups import GroupId, GroupRep, build
from .oracle_sim import CompoundQuery, HiddenChannelOracle, Session, Transcript
from .protocols import baseline, decider, play, report
from .qsp import QspSequence, qsp_unitary, synthesize

__all__ = [
    "CompoundQuery",
    "GroupId",
    "GroupRep",
    "HiddenChannelOracle",
    "QspSequence",
    "Session",
    "Transcript",
    "baseline",
    "build",
    "decider",
    "play",
    "qsp_unitary",
    "report",
    "synthesize",
]
