import itertools
import math

import numpy as np
import pytest

from gqht.groups import (
    KLEIN,
    ConstructionError,
    GroupId,
    InvalidGroupError,
    InvalidOrderError,
    NotNormalError,
    _assemble,
    build,
    coset_of,
    cycle_type,
    cycles_to_perm,
    generated_subgroup,
    is_normal,
    m_power_generated_subgroup,
)
from gqht.su2_core import equal_up_to_phase, rx, ry, rz

ALL_GROUPS = [f"C:{n}" for n in range(1, 17)] + [f"D:{n}" for n in range(1, 17)] + ["A4", "S4"]


def check_rep(rep):
    els = rep.elements
    assert len(set(els)) == len(els) == rep.id.order
    # multiplication table agrees with matrix products, independently recomputed
    for a, b in itertools.product(els, repeat=2):
        assert equal_up_to_phase(rep.image[a] @ rep.image[b], rep.image[rep.mul_table[(a, b)]], 1e-9)
    # faithful: distinct labels, distinct channels
    for a, b in itertools.combinations(els, 2):
        assert not equal_up_to_phase(rep.image[a], rep.image[b], 1e-6)
    for a in els:
        assert rep.mul(a, rep.inverse[a]) == rep.identity == rep.mul(rep.inverse[a], a)
        assert rep.mul(rep.identity, a) == a


@pytest.mark.parametrize("gid", ALL_GROUPS)
def test_representation_invariants(gid):
    check_rep(build(gid))


def test_associativity_on_s4():
    rep = build("S4")
    t = rep.mul_table
    for a, b, c in itertools.product(rep.elements[::3], repeat=3):
        assert t[(t[(a, b)], c)] == t[(a, t[(b, c)])]


def test_group_id_parse_and_format():
    assert str(GroupId.parse("c:8")) == "C:8"
    assert GroupId.parse("D:7").order == 14
    assert GroupId.parse("S4").order == 24
    for bad in ("C:x", "Q:3", "A5", "C8"):
        with pytest.raises(InvalidGroupError):
            GroupId.parse(bad)
    with pytest.raises(InvalidOrderError):
        GroupId.parse("C:0")
    with pytest.raises(InvalidGroupError):
        GroupId("A4", 3)


def test_duplicate_images_rejected():
    with pytest.raises(ConstructionError):
        _assemble(GroupId("C", 2), ["a", "b"], [rx(0.5), -rx(0.5)])


@pytest.mark.parametrize("n", range(1, 17))
def test_dihedral_relations(n):
    s, t = rz(2 * math.pi / n), rx(math.pi)
    assert equal_up_to_phase(np.linalg.matrix_power(s, n), np.eye(2))
    assert equal_up_to_phase(t @ t, np.eye(2))
    assert equal_up_to_phase(t @ s @ t, np.linalg.inv(s))


def test_dihedral_labels():
    d7 = build("D:7")
    assert d7.mul("ts0", "s1", "ts0", "s1") == "s0"
    assert d7.mul("ts0", "s3") == "ts3"


def test_klein_images():
    a4 = build("A4")
    assert set(KLEIN) <= set(a4.elements)
    assert equal_up_to_phase(a4.image["2143"], rx(math.pi))
    assert equal_up_to_phase(a4.image["3412"], ry(math.pi))
    assert equal_up_to_phase(a4.image["4321"], rz(math.pi))
    assert is_normal(a4, KLEIN)


def test_cycle_types():
    assert cycle_type("1234") == (4, 0, 0, 0)
    assert cycle_type(cycles_to_perm([(1, 2), (3, 4)])) == (0, 2, 0, 0)
    assert cycle_type(cycles_to_perm([(1, 2, 3)])) == (1, 0, 1, 0)
    assert cycle_type("2341") == (0, 0, 0, 1)
    with pytest.raises(ValueError):
        cycle_type("1224")


def test_a4_has_the_expected_cycle_types():
    types = {cycle_type(g) for g in build("A4").elements}
    assert types == {(1, 0, 1, 0), (0, 2, 0, 0), (4, 0, 0, 0)}


def test_power_subgroups():
    s4, a4 = build("S4"), build("A4")
    assert m_power_generated_subgroup(s4, 2) == frozenset(a4.elements)
    assert m_power_generated_subgroup(a4, 3) == frozenset(KLEIN)
    assert m_power_generated_subgroup(s4, 1) == frozenset(s4.elements)
    with pytest.raises(ValueError):
        m_power_generated_subgroup(s4, 0)


def test_generated_subgroup_of_cyclic():
    c12 = build("C:12")
    assert generated_subgroup(c12, ["4"]) == frozenset({"0", "4", "8"})


def test_cosets():
    d7 = build("D:7")
    rot = [f"s{a}" for a in range(7)]
    assert coset_of("s0", rot, d7) == coset_of("s4", rot, d7) == "s0"
    assert coset_of("ts3", rot, d7) == coset_of("ts0", rot, d7)
    a4 = build("A4")
    ids = {coset_of(g, KLEIN, a4) for g in a4.elements}
    assert len(ids) == 3
    with pytest.raises(NotNormalError):
        coset_of("s0", ["s0", "ts0"], d7)
