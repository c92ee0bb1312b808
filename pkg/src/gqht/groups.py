"""Finite subgroups of SU(2) as labeled, projectively faithful representations.

Labels are strings:
  cyclic      "0" .. "n-1"            m  -> rotation(axis, 2 pi m / n)
  dihedral    "s{a}", "ts{a}"         s^a -> R_z(2 pi a / n), t s^a -> R_x(pi) R_z(2 pi a / n)
  A4, S4      one-line permutations   "2143" means 1->2, 2->1, 3->4, 4->3

For A4 and S4 the permutation is the action of the rotation on the four body
diagonals of the cube, through (1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1) in that
order. The Klein subgroup is then {1234, 2143, 3412, 4321}, imaged by
{I, R_x(pi), R_y(pi), R_z(pi)}.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass
from itertools import product

import numpy as np

from .su2_core import AXIS_X, I2, X, Y, Z, as_axis, rotation, rx, rz

TOL_CLOSURE = 1e-9

DIAGONALS = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3)
C3_AXIS = (1 / math.sqrt(3),) * 3


class InvalidOrderError(ValueError):
    pass


class InvalidGroupError(ValueError):
    pass


class ConstructionError(RuntimeError):
    pass


class NotNormalError(ValueError):
    pass


@dataclass(frozen=True)
class GroupId:
    family: str  # "C", "D", "A4" or "S4"
    n: int | None = None

    def __post_init__(self):
        if self.family in ("C", "D"):
            if self.n is None or self.n < 1:
                raise InvalidOrderError(f"{self.family} needs n >= 1, got {self.n}")
        elif self.family in ("A4", "S4"):
            if self.n is not None:
                raise InvalidGroupError(f"{self.family} takes no order parameter")
        else:
            raise InvalidGroupError(f"unknown family {self.family!r}")

    @classmethod
    def parse(cls, text: str) -> "GroupId":
        t = text.strip().upper()
        if t in ("A4", "S4"):
            return cls(t)
        m = re.fullmatch(r"([CD]):(\d+)", t)
        if not m:
            raise InvalidGroupError(f"cannot parse group id {text!r}; use C:n, D:n, A4 or S4")
        return cls(m.group(1), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.family}:{self.n}" if self.n is not None else self.family

    @property
    def order(self) -> int:
        return {"C": self.n, "D": 2 * (self.n or 0), "A4": 12, "S4": 24}[self.family]


@dataclass(frozen=True)
class GroupRep:
    id: GroupId
    elements: tuple
    image: dict
    mul_table: dict
    inverse: dict
    identity: str

    @property
    def order(self) -> int:
        return len(self.elements)

    def mul(self, *labels: str) -> str:
        out = self.identity
        for g in labels:
            out = self.mul_table[(out, g)]
        return out

    def power(self, g: str, m: int) -> str:
        if m < 0:
            return self.power(self.inverse[g], -m)
        out = self.identity
        for _ in range(m):
            out = self.mul_table[(out, g)]
        return out

    def index(self, g: str) -> int:
        return self.elements.index(g)


def _match(u: np.ndarray, labels, images) -> str:
    """The unique label whose image equals u up to a sign (elements of SU(2))."""
    hits = []
    for lab, v in zip(labels, images):
        # both are in SU(2), so the only possible phases are +-1
        if min(np.max(np.abs(u - v)), np.max(np.abs(u + v))) <= TOL_CLOSURE:
            hits.append(lab)
    if len(hits) != 1:
        raise ConstructionError(f"product matched {len(hits)} elements")
    return hits[0]


def _assemble(gid: GroupId, labels, images) -> GroupRep:
    labels = tuple(labels)
    images = [np.asarray(u, dtype=complex) for u in images]
    for i in range(len(images)):
        for j in range(i):
            if min(np.max(np.abs(images[i] - images[j])), np.max(np.abs(images[i] + images[j]))) <= TOL_CLOSURE:
                raise ConstructionError(f"{labels[i]} and {labels[j]} share an image")
    table = {}
    for (a, ua), (b, ub) in product(zip(labels, images), repeat=2):
        table[(a, b)] = _match(ua @ ub, labels, images)
    ident = _match(I2, labels, images)
    inverse = {a: next(b for b in labels if table[(a, b)] == ident) for a in labels}
    return GroupRep(gid, labels, dict(zip(labels, images)), table, inverse, ident)


def build_cyclic(n: int, axis=AXIS_X) -> GroupRep:
    if n < 1:
        raise InvalidOrderError(f"cyclic order must be >= 1, got {n}")
    ax = as_axis(axis)
    return _assemble(GroupId("C", n), [str(m) for m in range(n)], [rotation(ax, 2 * math.pi * m / n) for m in range(n)])


def build_dihedral(n: int) -> GroupRep:
    if n < 1:
        raise InvalidOrderError(f"dihedral half-order must be >= 1, got {n}")
    labels, images = [], []
    for a in range(n):
        labels.append(f"s{a}")
        images.append(rz(2 * math.pi * a / n))
    for a in range(n):
        labels.append(f"ts{a}")
        images.append(rx(math.pi) @ rz(2 * math.pi * a / n))
    return _assemble(GroupId("D", n), labels, images)


def so3(u: np.ndarray) -> np.ndarray:
    """Rotation matrix of the adjoint action u sigma_j u^dagger."""
    paulis = (X, Y, Z)
    return np.array([[0.5 * np.trace(paulis[i] @ u @ paulis[j] @ u.conj().T).real for j in range(3)] for i in range(3)])


def diagonal_permutation(u: np.ndarray) -> str:
    """One-line permutation of the cube's body diagonals induced by u."""
    r = so3(u)
    out = []
    for d in DIAGONALS:
        img = r @ d
        j = [k for k, e in enumerate(DIAGONALS) if abs(abs(float(img @ e)) - 1) < 1e-9]
        if len(j) != 1:
            raise ConstructionError("rotation does not preserve the cube diagonals")
        out.append(str(j[0] + 1))
    return "".join(out)


def _generate(gens) -> list:
    found = [I2.copy()]
    frontier = [I2.copy()]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = u @ g
                if all(min(np.max(np.abs(v - w)), np.max(np.abs(v + w))) > TOL_CLOSURE for w in found):
                    found.append(v)
                    nxt.append(v)
        frontier = nxt
    return found


def _permutation_group(gid: GroupId, gens) -> GroupRep:
    images = _generate(gens)
    labels = [diagonal_permutation(u) for u in images]
    order = sorted(range(len(labels)), key=lambda i: labels[i])
    return _assemble(gid, [labels[i] for i in order], [images[i] for i in order])


def c3_generator() -> np.ndarray:
    return rotation(C3_AXIS, 2 * math.pi / 3)


@functools.lru_cache(maxsize=None)
def build_a4() -> GroupRep:
    return _permutation_group(GroupId("A4"), [c3_generator(), rx(math.pi)])


@functools.lru_cache(maxsize=None)
def build_s4() -> GroupRep:
    return _permutation_group(GroupId("S4"), [c3_generator(), rz(math.pi / 2)])


def build(gid: GroupId | str) -> GroupRep:
    if isinstance(gid, str):
        gid = GroupId.parse(gid)
    if gid.family == "C":
        return build_cyclic(gid.n)
    if gid.family == "D":
        return build_dihedral(gid.n)
    return build_a4() if gid.family == "A4" else build_s4()


KLEIN = ("1234", "2143", "3412", "4321")


# -- permutation utilities -----------------------------------------------------


def _as_perm(perm) -> tuple:
    if isinstance(perm, str):
        perm = tuple(int(c) for c in perm)
    perm = tuple(perm)
    if sorted(perm) != list(range(1, len(perm) + 1)):
        raise ValueError(f"{perm!r} is not a permutation of 1..{len(perm)}")
    return perm


def cycle_type(perm) -> tuple:
    """(c_1, c_2, c_3, c_4): number of cycles of each length."""
    p = _as_perm(perm)
    n = len(p)
    seen = [False] * n
    counts = [0] * max(n, 4)
    for i in range(n):
        if seen[i]:
            continue
        length, j = 0, i
        while not seen[j]:
            seen[j] = True
            j = p[j] - 1
            length += 1
        counts[length - 1] += 1
    return tuple(counts)


def cycles_to_perm(cycles, n: int = 4) -> str:
    """Cycle notation, e.g. [(1, 2), (3, 4)], to one-line notation."""
    img = list(range(1, n + 1))
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            img[a - 1] = b
    return "".join(map(str, img))


def generated_subgroup(rep: GroupRep, generators) -> frozenset:
    found = {rep.identity}
    frontier = [rep.identity]
    gens = list(generators)
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = rep.mul_table[(a, g)]
                if b not in found:
                    found.add(b)
                    nxt.append(b)
        frontier = nxt
    return frozenset(found)


def m_power_generated_subgroup(rep: GroupRep, m: int) -> frozenset:
    """Subgroup generated by all m-th powers."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return generated_subgroup(rep, {rep.power(g, m) for g in rep.elements})


def is_normal(rep: GroupRep, subgroup) -> bool:
    sub = set(subgroup)
    return all(rep.mul(g, h, rep.inverse[g]) in sub for g in rep.elements for h in sub)


def coset_of(g: str, normal_subgroup, rep: GroupRep) -> str:
    """Coset id: the first element (in rep order) of g N."""
    sub = set(normal_subgroup)
    if rep.identity not in sub or not is_normal(rep, sub):
        raise NotNormalError("subgroup is not normal")
    members = {rep.mul_table[(g, h)] for h in sub}
    return min(members, key=rep.index)
