import math
from fractions import Fraction

import numpy as np
import pytest

from gqht.groups import KLEIN, build, cycle_type
from gqht.oracle_sim import HiddenChannelOracle, ProtocolViolationError, Session
from gqht.protocols import (
    BisectionPlan,
    ProtocolConstructionError,
    baseline,
    cyclic_stage_multiplicities,
    decide_a4,
    decide_c3,
    decide_s4,
    factorize,
    gen_bisection,
    klein_label,
    odd_planner,
    pair_cost,
    play,
    report,
    run_generic,
    s4_expected_for_order,
    s4_order_sweep,
    transpositions,
)
from gqht.su2_core import I2, rx


def session_for(image, group=""):
    return Session(HiddenChannelOracle(image), group)


def test_c3_case_table():
    # worked out by hand: x = 1 answers at once; otherwise one shifted phase splits 2 pi/3 from 4 pi/3
    expected = {"0": (3, [1]), "1": (6, [0, 1]), "2": (6, [0, 0])}
    rep = build("C:3")
    for label, (q, bits) in expected.items():
        t = play(rep, label, decide_c3)
        assert (t.total_queries, t.bits, t.recovered) == (q, bits, label)


@pytest.mark.parametrize("n", [1, 2, 4, 8, 16, 32])
def test_power_of_two_is_exact(n):
    r = report(f"C:{n}")
    assert r.all_correct
    assert set(r.counts.values()) == {n - 1}


def test_factorize():
    assert factorize(360) == [(2, 3), (3, 2), (5, 1)]
    assert factorize(13) == [(13, 1)]
    assert factorize(1) == []


@pytest.mark.parametrize("n", [6, 9, 10, 12, 15, 18, 20])
def test_composite_cyclic_and_stage_accounting(n):
    r = report(f"C:{n}")
    assert r.all_correct
    for label, t in r.transcripts.items():
        assert sum(t.stage_totals().values()) == t.total_queries == r.counts[label]
        # each phase bills multiplicity * degree queries
        assert all(p.queries == p.multiplicity * (len(p.phases) - 1) for p in t.phases_used)


def test_stage_multiplicities():
    assert cyclic_stage_multiplicities(12) == [("2^2", 2, 6), ("2^2", 2, 3), ("3^1", 3, 4)]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6, 7, 8])
def test_dihedral_costs_one_more_than_cyclic(n):
    d, c = report(f"D:{n}"), report(f"C:{n}")
    assert d.all_correct
    assert d.expected_queries == c.expected_queries + 1
    for label, t in d.transcripts.items():
        assert t.stage_totals()["coset"] == 1


def test_a4_counts_per_class():
    r = report("A4")
    assert r.all_correct
    assert r.expected_queries == Fraction(29, 2)
    for g in KLEIN[1:]:
        assert r.counts[g] == 6
    assert sorted(r.counts.values()) == [6, 6, 6, 12, 12, 12, 18, 18, 18, 22, 22, 22]


def test_klein_label_patterns():
    assert klein_label((0, 1)) == "2143"  # R_x(pi)
    assert klein_label((1, 0)) == "3412"  # R_y(pi)
    assert klein_label((1, 1)) == "4321"  # R_z(pi)
    with pytest.raises(ProtocolViolationError):
        klein_label((1, 1, 1))


def test_s4_correct_under_default_and_best_orders():
    r = report("S4")
    assert r.all_correct
    assert r.expected_queries == s4_expected_for_order(transpositions())
    sweep = s4_order_sweep()
    best = min(sweep, key=sweep.get)
    rb = report("S4", lambda s: decide_s4(s, order=best))
    assert rb.all_correct
    assert rb.expected_queries == sweep[best]


def test_transpositions():
    ts = transpositions()
    assert len(ts) == 6 and all(cycle_type(t) == (2, 1, 0, 0) for t in ts)


def test_s4_rejects_insufficient_order():
    with pytest.raises(ProtocolViolationError):
        play(build("S4"), "2134", lambda s: decide_s4(s, order=transpositions()[:1]))


def test_generic_plan_reproduces_c3():
    plan = gen_bisection([0.0, 2 * math.pi / 3, 4 * math.pi / 3], parities=(1,))
    rep = build("C:3")
    for label in rep.elements:
        oracle = HiddenChannelOracle.for_element(rep, label)
        got, t = run_generic(plan, Session(oracle, "C:3"))
        ref = play(rep, label, decide_c3)
        assert got == label
        assert t.bits == ref.bits and t.total_queries == ref.total_queries


def test_generic_plan_four_angles():
    angles = [0.0, math.pi / 2, math.pi, 3 * math.pi / 2]
    plan = gen_bisection(angles, labels=["a", "b", "c", "d"])
    for label, theta in zip(plan.labels, angles):
        got, t = run_generic(plan, session_for(rx(theta)))
        assert got == label
        assert t.total_queries <= 6


def test_plan_validation_catches_non_injective_decode():
    plan = gen_bisection([0.0, math.pi])
    broken = BisectionPlan(plan.labels, plan.angles, plan.steps, {"0": "0", "1": "0"})
    with pytest.raises(ProtocolConstructionError):
        broken.validate()


def test_odd_planner_is_deterministic_on_every_prime():
    for p in (5, 7, 11):
        nodes = odd_planner(p).expand()
        for subset, node in nodes.items():
            assert node.poly.parity == 1
            assert {node.bits[i] for i in subset} == {0, 1}


def test_pair_cost():
    assert pair_cost(I2, rx(math.pi)) == 1
    assert pair_cost(I2, rx(2 * math.pi / 3)) == 2
    assert pair_cost(I2, rx(math.pi / 4)) == 4
    with pytest.raises(ValueError):
        pair_cost(I2, -I2)


def simulate_baseline(group, hidden, rng):
    """Monte Carlo elimination: a coin decides pair tests the hidden element is not part of."""
    rep = build(group)
    labels = rep.elements
    champ, total = labels[0], 0
    for x in labels[1:]:
        total += pair_cost(rep.image[champ], rep.image[x])
        if champ == hidden:
            continue
        if x == hidden or rng.random() < 0.5:
            champ = x
    return total


def test_baseline_matches_monte_carlo():
    b = baseline("C:6")
    rng = np.random.default_rng(3)
    for label in ("0", "3", "5"):
        mc = np.mean([simulate_baseline("C:6", label, rng) for _ in range(4000)])
        assert abs(mc - float(b.per_label[label])) < 0.15
    assert baseline("C:2").expected_queries == 1


def test_protocols_see_only_the_channel():
    # hand the protocol a bare unitary, with no label anywhere in reach
    a4 = build("A4")
    for label in a4.elements:
        s = session_for(-a4.image[label])  # a global sign is invisible to measurement
        assert decide_a4(s) == label
