import math

import numpy as np
import pytest

from gqht.noise import (
    NoiseSpec,
    certified_distance,
    check_peeling_bound,
    gate_noise_experiment,
    max_angle,
    perturb,
    protocol_peeling,
    trace_distance,
    trace_distance_dm,
)
from gqht.oracle_sim import CompoundQuery
from gqht.protocols import three_angle_sequence
from gqht.qsp import QspSequence
from gqht.su2_core import KET_0, KET_PLUS, rx, ry


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("channel", -1e-3)
    with pytest.raises(ValueError):
        NoiseSpec("thermal", 1e-3)
    with pytest.raises(ValueError):
        NoiseSpec("gate", float("inf"))


def test_zero_epsilon_is_exact():
    u = ry(0.9)
    assert np.array_equal(perturb(u, 0.0, np.random.default_rng(0)), u)


def test_perturbations_are_certified():
    u = rx(1.3)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        v = perturb(u, 1e-2, rng)
        assert 0 < certified_distance(v, u) <= 1e-2 + 1e-15
    d = certified_distance(perturb(u, 1e-3, np.random.default_rng(5)), u)
    assert 0 < d <= 1e-3


def test_max_angle_inverts_the_metric():
    for eps in (1e-6, 1e-3, 0.5):
        assert 2 * math.sin(max_angle(eps) / 4) == pytest.approx(eps, rel=1e-12)


def test_trace_distance_formulas_agree():
    rng = np.random.default_rng(2)
    for _ in range(500):
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        ref = math.sqrt(max(0.0, 1 - abs(np.vdot(a, b)) ** 2))
        assert abs(trace_distance(a, b) - ref) < 1e-12
        assert abs(trace_distance_dm(a, b) - ref) < 1e-12
    assert trace_distance(KET_0, KET_0) == 0


def test_peeling_zero_noise():
    chk = check_peeling_bound(three_angle_sequence(), CompoundQuery.bare(), NoiseSpec("channel", 0.0))
    assert chk.distance == 0 and chk.bound == 0 and chk.holds


def test_peeling_three_angle():
    chk = check_peeling_bound(
        three_angle_sequence(), CompoundQuery.bare(), NoiseSpec("channel", 1e-3, 4), channel=rx(2 * math.pi / 3)
    )
    assert chk.n_j == 3
    assert chk.holds and chk.distance <= 3e-3


def test_peeling_counts_compound_multiplicity():
    seq = QspSequence((0.1, 0.2, 0.3), KET_PLUS, KET_PLUS)
    chk = check_peeling_bound(seq, CompoundQuery.bare().power(3), NoiseSpec("channel", 1e-2, 1), prep=KET_0)
    assert chk.n_j == 6 and chk.holds
    with pytest.raises(ValueError):
        check_peeling_bound(seq, CompoundQuery.bare(), NoiseSpec("gate", 1e-2))


def test_protocol_peeling_holds():
    out = protocol_peeling("D:3", 1e-2)
    assert out["all_hold"] and out["phases_checked"] > 6


def test_gate_noise_trend():
    assert gate_noise_experiment("C:8", 0.0, 50, seed=1) == 0.0
    rates = [gate_noise_experiment("C:8", e, 200, seed=1) for e in (1e-8, 1e-3, 1e-1)]
    assert rates[0] == 0.0
    assert rates == sorted(rates)
    assert rates[-1] > 0


def test_gate_noise_tiny_epsilon_over_many_trials():
    assert gate_noise_experiment("C:8", 1e-8, 1000, seed=2) == 0.0
