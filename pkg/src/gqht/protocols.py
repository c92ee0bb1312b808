"""Decision protocols for cyclic, dihedral, A4 and S4 hidden channels.

Every protocol reads measurement bits through a ``Session`` and never looks
at the hidden element. Protocols accept a ``base`` compound query: the
object being decided is whatever group element ``base`` realizes, which is
how the CRT stages, the dihedral reduction and the S4 search reuse the
smaller protocols.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .groups import (
    KLEIN,
    GroupId,
    GroupRep,
    build,
    build_a4,
    build_s4,
    c3_generator,
    cycle_type,
    diagonal_permutation,
)
from .interp import (
    InfeasibleTargetError,
    InterpolationTarget,
    ParityPolynomial,
    alternating_target,
    gen_real_poly,
)
from .oracle_sim import (
    CompoundQuery,
    HiddenChannelOracle,
    ProtocolViolationError,
    Session,
    Transcript,
)
from .qsp import QspSequence, synthesize
from .su2_core import (
    KET_0,
    KET_1,
    KET_MINUS,
    KET_MINUS_I,
    KET_PLUS,
    KET_PLUS_I,
    adjoint,
    rotation,
    rotation_angle,
    rx,
    ry,
)


class ProtocolConstructionError(RuntimeError):
    pass


# -- fixed sequences ---------------------------------------------------------------

# Phi = (0, 0): the signal itself. With |0> -> |1> the bit is 1 iff x = 0.
SIGNAL_FLIP = QspSequence((0.0, 0.0), KET_0, KET_1)
# Klein phases: bit 1 iff the signal anticommutes with X (resp. Y, Z)
KLEIN_X = QspSequence((0.0, 0.0), KET_PLUS, KET_MINUS)
KLEIN_Y = QspSequence((0.0, 0.0), KET_PLUS_I, KET_MINUS_I)
KLEIN_Z = QspSequence((0.0, 0.0), KET_0, KET_1)


@functools.lru_cache(maxsize=None)
def three_angle_sequence() -> QspSequence:
    """(4x^3 - x)/3: 1 at x = 1, 0 at x = +-1/2."""
    return synthesize(ParityPolynomial.from_power_coeffs([0.0, -1 / 3, 0.0, 4 / 3], 1))


@functools.lru_cache(maxsize=None)
def even_three_angle_sequence() -> QspSequence:
    """(4x^2 - 1)/3: the same split with one query fewer."""
    return synthesize(ParityPolynomial.from_power_coeffs([-1 / 3, 0.0, 4 / 3], 0))


def _shifted(base: CompoundQuery, angle: float) -> CompoundQuery:
    """base followed by R_x(-angle) acting first."""
    if angle % (2 * math.pi) == 0:
        return base
    return base.then(rx(-angle), f"Rx({-angle:.6g})")


# -- angle-set planner ---------------------------------------------------------------


@dataclass(frozen=True)
class PlanNode:
    subset: frozenset
    shift: float
    bits: dict
    poly: ParityPolynomial
    sequence: QspSequence

    def child(self, bit: int) -> frozenset:
        return frozenset(i for i in self.subset if self.bits[i] == bit)


@functools.lru_cache(maxsize=None)
def _fit_target(key):
    points, parity, gap = key
    return gen_real_poly(InterpolationTarget.make(list(points), parity, gap))


@functools.lru_cache(maxsize=None)
def _sequence_for(coeffs: tuple, parity: int) -> QspSequence:
    return synthesize(ParityPolynomial(coeffs, parity))


class AnglePlanner:
    """Bisection over x-axis rotation angles, built lazily per reachable subset.

    At each subset every candidate angle is tried as a pre-rotation shift and
    the maximally alternating split of the shifted angles is fitted; the
    lowest-degree fit wins, ties going to the smaller index. Parities are tried
    in order: a later parity is used only if no shift works with an earlier one.
    """

    def __init__(self, angles, parities=(1, 0)):
        self.angles = [float(a) for a in angles]
        self.parities = tuple(parities)
        self._nodes: dict = {}

    @property
    def root(self) -> frozenset:
        return frozenset(range(len(self.angles)))

    def node(self, subset: frozenset) -> PlanNode:
        subset = frozenset(subset)
        if len(subset) < 2:
            raise ValueError("a plan node needs at least two candidates")
        if subset not in self._nodes:
            self._nodes[subset] = self._choose(subset)
        return self._nodes[subset]

    def _choose(self, subset: frozenset) -> PlanNode:
        members = sorted(subset)
        sub_angles = [self.angles[i] for i in members]
        for parity in self.parities:
            best = None
            for i in members:
                shift = self.angles[i]
                made = alternating_target(sub_angles, shift, parity)
                if made is None:
                    continue
                target, bits = made
                key = (tuple((round(x, 13), v) for x, v in target.points), target.parity, target.min_gap)
                try:
                    poly = _fit_target(key)
                except InfeasibleTargetError:
                    continue
                if best is None or poly.degree < best[0].degree:
                    best = (poly, shift, dict(zip(members, bits)))
            if best is not None:
                poly, shift, bits = best
                seq = _sequence_for(tuple(poly.coeffs), poly.parity)
                return PlanNode(subset, shift, bits, poly, seq)
        raise ProtocolConstructionError(f"no feasible split for subset {members}")

    def run(self, session: Session, base: CompoundQuery) -> int:
        subset = self.root
        while len(subset) > 1:
            node = self.node(subset)
            bit = session.phase(_shifted(base, node.shift), node.sequence)
            subset = node.child(bit)
            if not subset:
                raise ProtocolViolationError("measurement ruled out every candidate")
        return next(iter(subset))

    def expand(self) -> dict:
        """Build every reachable node eagerly."""
        todo = [self.root] if len(self.angles) > 1 else []
        while todo:
            s = todo.pop()
            node = self.node(s)
            for b in (0, 1):
                c = node.child(b)
                if len(c) > 1 and c not in self._nodes:
                    todo.append(c)
        return dict(self._nodes)


@functools.lru_cache(maxsize=None)
def odd_planner(p: int) -> AnglePlanner:
    # odd parity only: this is the alternating construction, and for p = 3 it
    # is exactly the three-angle protocol
    return AnglePlanner([2 * math.pi * m / p for m in range(p)], parities=(1,))


# -- cyclic groups -------------------------------------------------------------------


def _base(base):
    return CompoundQuery.bare() if base is None else base


def decide_c_power_of_two(n: int, session: Session, base: CompoundQuery | None = None) -> str:
    """C_{2^n}: read the label bit by bit, least significant first."""
    base = _base(base)
    N = 2**n
    low = 0
    for t in range(n):
        cq = _shifted(base, 2 * math.pi * low / N).power(N >> (t + 1))
        low += session.phase(cq, SIGNAL_FLIP) << t
    return str(low)


def decide_c3(session: Session, base: CompoundQuery | None = None) -> str:
    base = _base(base)
    seq = three_angle_sequence()
    if session.phase(base, seq):
        return "0"
    return "1" if session.phase(_shifted(base, 2 * math.pi / 3), seq) else "2"


def decide_cyclic_odd(p: int, session: Session, base: CompoundQuery | None = None) -> str:
    if p < 3 or p % 2 == 0:
        raise ValueError(f"odd order >= 3 expected, got {p}")
    return str(odd_planner(p).run(session, _base(base)))


def factorize(n: int) -> list:
    out = []
    d = 2
    while d * d <= n:
        r = 0
        while n % d == 0:
            n //= d
            r += 1
        if r:
            out.append((d, r))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


def _decide_prime(p: int, session: Session, cq: CompoundQuery) -> int:
    if p == 2:
        return session.phase(cq, SIGNAL_FLIP)
    if p == 3:
        return int(decide_c3(session, cq))
    return int(decide_cyclic_odd(p, session, cq))


def decide_cyclic(n: int, session: Session, base: CompoundQuery | None = None) -> str:
    """C_n through its prime-power factors, each read digit by digit in base p."""
    if n < 1:
        raise ValueError("n must be >= 1")
    base = _base(base)
    if n == 1:
        return "0"
    factors = factorize(n)
    if len(factors) == 1 and factors[0][0] == 2:
        session.stage(f"2^{factors[0][1]}")
        return decide_c_power_of_two(factors[0][1], session, base)
    residues = []
    for p, r in factors:
        q = p**r
        session.stage(f"{p}^{r}")
        core = base.power(n // q)
        v = 0
        for t in range(r):
            cq = _shifted(core, 2 * math.pi * v / q).power(p ** (r - t - 1))
            v += _decide_prime(p, session, cq) * p**t
        residues.append((v, q))
    h = 0
    for v, q in residues:
        m = n // q
        h += v * m * pow(m, -1, q)
    return str(h % n)


def cyclic_stage_multiplicities(n: int) -> list:
    """(stage name, prime, multiplicity of each digit's compound query)."""
    out = []
    for p, r in factorize(n):
        for t in range(r):
            out.append((f"{p}^{r}", p, n // p ** (t + 1)))
    return out


# -- dihedral ---------------------------------------------------------------------------

_Y_QUARTER = ry(math.pi / 2)  # carries the z axis to the x axis


def decide_dihedral(n: int, session: Session, base: CompoundQuery | None = None) -> str:
    """One query for the coset of <s>, then the cyclic protocol on the rotation part."""
    base = _base(base)
    session.stage("coset")
    probe = base.conjugate(adjoint(_Y_QUARTER), "Ry(-pi/2)")
    reflective = session.phase(probe, KLEIN_X)
    rot = base.after(rx(-math.pi), "Rx(-pi)") if reflective else base
    session.stage("cyclic")
    a = decide_cyclic(n, session, rot.conjugate(_Y_QUARTER, "Ry(pi/2)"))
    return f"{'ts' if reflective else 's'}{a}"


# -- A4 -------------------------------------------------------------------------------

KLEIN_BY_BITS = {(0, 0, 0): "1234", (1, 1, 0): "4321", (1, 0, 1): "3412", (0, 1, 1): "2143"}
# Table naming: a = R_z(pi), b = R_y(pi), ab = R_x(pi)
KLEIN_GENERATORS = {"a": "4321", "b": "3412"}


def klein_label(bits) -> str:
    """Klein element from (x, y) or (x, y, z) flip bits; z is x xor y."""
    bits = tuple(int(b) for b in bits)
    if len(bits) == 2:
        bits = bits + (bits[0] ^ bits[1],)
    try:
        return KLEIN_BY_BITS[bits]
    except KeyError:
        raise ProtocolViolationError(f"unreachable Klein pattern {bits}") from None


def correct_coset(bits) -> np.ndarray:
    """Image of the inverse of the Klein element identified by ``bits``."""
    return adjoint(build_a4().image[klein_label(bits)])


def _to_x_axis() -> np.ndarray:
    n = np.ones(3) / math.sqrt(3)
    axis = np.cross(n, [1.0, 0.0, 0.0])
    return rotation(axis / np.linalg.norm(axis), math.acos(n[0]))


@functools.lru_cache(maxsize=None)
def _a4_constants():
    c = c3_generator()
    a4 = build_a4()
    c_label = diagonal_permutation(c)
    return c, a4, c_label


def decide_a4(session: Session, base: CompoundQuery | None = None) -> str:
    """Klein component from cubes of shifted queries, then the C3 tail.

    Stage j cubes E c^{-j}. If the hidden element is h c^j (h in Klein) the
    cube is h, otherwise it is an order-3 element cubed, the identity. Two
    basis phases read h. When every stage reads the identity the element is
    in <c>; two fixed even three-angle phases finish.
    """
    base = _base(base)
    c, a4, c_label = _a4_constants()
    for j in range(3):
        session.stage(f"klein{j}")
        shifted = base if j == 0 else base.then(np.linalg.matrix_power(adjoint(c), j), f"c^-{j}")
        cq = shifted.power(3)
        xb = session.phase(cq, KLEIN_X)
        yb = session.phase(cq, KLEIN_Y)
        if xb or yb:
            h = klein_label((xb, yb))
            return a4.mul(h, a4.power(c_label, j))
    session.stage("c3")
    v = _to_x_axis()
    seq = even_three_angle_sequence()
    first = session.phase(base.conjugate(v, "Vc"), seq)
    second = session.phase(base.then(adjoint(c), "c^-1").conjugate(v, "Vc"), seq)
    decoded = {(1, 0): 0, (0, 1): 1, (0, 0): 2}.get((first, second))
    if decoded is None:
        raise ProtocolViolationError(f"unreachable tail pattern {(first, second)}")
    return a4.power(c_label, decoded)


# -- S4 ---------------------------------------------------------------------------------


def transpositions() -> list:
    return sorted(g for g in build_s4().elements if cycle_type(g) == (2, 1, 0, 0))


def decide_s4(session: Session, base: CompoundQuery | None = None, order=None) -> str:
    """Pre-apply transpositions h and decide (g h)^2 in A4 until one g fits."""
    base = _base(base)
    s4 = build_s4()
    order = list(order) if order is not None else transpositions()
    cands = set(s4.elements)
    for h in order:
        if len(cands) == 1:
            break
        session.stage(f"h={h}")
        y = decide_a4(session, base.then(s4.image[h], h).power(2))
        cands = {g for g in cands if s4.power(s4.mul(g, h), 2) == y}
        if not cands:
            raise ProtocolViolationError("no element is consistent with the measured squares")
    if len(cands) != 1:
        raise ProtocolViolationError(f"{len(cands)} candidates left after all transpositions")
    return next(iter(cands))


@functools.lru_cache(maxsize=None)
def _s4_squares() -> dict:
    s4 = build_s4()
    return {(g, h): s4.power(s4.mul(g, h), 2) for g in s4.elements for h in transpositions()}


def s4_expected_for_order(order, a4_counts: dict | None = None) -> Fraction:
    """Expected S4 query count for a transposition order, without simulating.

    Each step costs twice the A4 count of the measured square, since every
    query to (E h)^2 uses the oracle twice.
    """
    s4 = build_s4()
    if a4_counts is None:
        a4_counts = report("A4").counts
    sq = _s4_squares()
    total = 0
    for g in s4.elements:
        cands = set(s4.elements)
        for h in order:
            if len(cands) == 1:
                break
            y = sq[(g, h)]
            total += 2 * a4_counts[y]
            cands = {c for c in cands if sq[(c, h)] == y}
        if cands != {g}:
            raise ProtocolConstructionError(f"order {order} does not isolate {g}")
    return Fraction(total, s4.order)


def s4_order_sweep() -> dict:
    """Expected count for every ordering of the six transpositions: {order: Fraction}."""
    a4_counts = report("A4").counts
    return {order: s4_expected_for_order(order, a4_counts) for order in itertools.permutations(transpositions())}


# -- generic bisection plans ---------------------------------------------------------------


@dataclass
class BisectionPlan:
    """A bisection tree over rotation angles, stored by subset."""

    labels: tuple
    angles: tuple
    steps: dict  # frozenset of indices -> PlanNode
    decode: dict = field(default_factory=dict)  # bit string -> label

    def validate(self) -> None:
        for subset, node in self.steps.items():
            vals = {node.bits[i] for i in subset}
            if vals != {0, 1}:
                raise ProtocolConstructionError(f"split of {sorted(subset)} is constant")
            c = np.asarray(node.poly.coeffs)
            if np.max(np.abs(c[(1 - node.poly.parity) % 2 :: 2]), initial=0.0) > 1e-10:
                raise ProtocolConstructionError("polynomial lacks definite parity")
        if len(set(self.decode.values())) != len(self.decode):
            raise ProtocolConstructionError("decode map is not injective")
        if set(self.decode.values()) != set(self.labels):
            raise ProtocolConstructionError("decode map misses some labels")


def gen_bisection(angles, labels=None, parities=(1, 0)) -> BisectionPlan:
    planner = AnglePlanner(angles, parities)
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(len(angles)))
    steps = planner.expand()
    decode = {}

    def walk(subset, prefix):
        if len(subset) == 1:
            decode[prefix] = labels[next(iter(subset))]
            return
        node = steps[subset]
        for b in (0, 1):
            walk(node.child(b), prefix + str(b))

    if len(angles) == 1:
        decode[""] = labels[0]
    else:
        walk(planner.root, "")
    plan = BisectionPlan(labels, tuple(float(a) for a in angles), steps, decode)
    plan.validate()
    return plan


def run_generic(plan: BisectionPlan, session: Session, base: CompoundQuery | None = None):
    base = _base(base)
    subset = frozenset(range(len(plan.labels)))
    bits = ""
    while len(subset) > 1:
        node = plan.steps[subset]
        b = session.phase(_shifted(base, node.shift), node.sequence)
        bits += str(b)
        subset = node.child(b)
        if not subset:
            raise ProtocolViolationError("measurement ruled out every candidate")
    label = plan.decode[bits]
    session.finish(label)
    return label, session.transcript


# -- sweeps -------------------------------------------------------------------------------


def decider(gid: GroupId):
    """Protocol for a group id as a function of a Session."""
    if gid.family == "C":
        return lambda s: decide_cyclic(gid.n, s)
    if gid.family == "D":
        return lambda s: decide_dihedral(gid.n, s)
    if gid.family == "A4":
        return decide_a4
    return decide_s4


def play(rep: GroupRep, label: str, decide, mode="deterministic", rng=None, gate_noise=None, channel_noise=None) -> Transcript:
    """One game with ``label`` hidden; the transcript records the hidden label for checking."""
    oracle = HiddenChannelOracle.for_element(rep, label, channel_noise)
    session = Session(oracle, str(rep.id), mode, rng, gate_noise)
    session.finish(decide(session))
    session.transcript.hidden = label
    return session.transcript


@dataclass
class ProtocolReport:
    group: str
    counts: dict
    expected_queries: Fraction
    max_queries: int
    all_correct: bool
    transcripts: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        e = self.expected_queries
        return {
            "group": self.group,
            "counts": dict(self.counts),
            "expected_queries": f"{e.numerator}/{e.denominator}",
            "max_queries": self.max_queries,
            "all_correct": self.all_correct,
        }


def report(group, decide=None) -> ProtocolReport:
    """Exhaustive sweep over hidden labels with exact expected query count."""
    gid = GroupId.parse(group) if isinstance(group, str) else group
    rep = build(gid)
    decide = decide or decider(gid)
    counts, transcripts, ok = {}, {}, True
    for label in rep.elements:
        t = play(rep, label, decide)
        counts[label] = t.total_queries
        transcripts[label] = t
        ok &= t.recovered == label
    exp = Fraction(sum(counts.values()), len(counts))
    return ProtocolReport(str(gid), counts, exp, max(counts.values()), ok, transcripts)


# -- pairwise-elimination baseline ----------------------------------------------------------


def pair_cost(u: np.ndarray, v: np.ndarray) -> int:
    """Serial queries needed to tell two unitaries apart with certainty: ceil(pi / angle)."""
    phi = rotation_angle(adjoint(u) @ v)
    if phi < 1e-12:
        raise ValueError("identical channels cannot be discriminated")
    return max(1, math.ceil(math.pi / phi - 1e-9))


@dataclass
class BaselineReport:
    group: str
    per_label: dict
    expected_queries: Fraction

    def to_json(self) -> dict:
        e = self.expected_queries
        return {
            "group": self.group,
            "per_label": {k: f"{v.numerator}/{v.denominator}" for k, v in self.per_label.items()},
            "expected_queries": f"{e.numerator}/{e.denominator}",
        }


def baseline(group) -> BaselineReport:
    """Champion-versus-challenger elimination in label order.

    A pair test between the champion and the next label is a perfect
    two-channel discrimination. When the hidden element is neither, the
    outcome is a fair coin, which is what the exact expectation assumes.
    """
    gid = GroupId.parse(group) if isinstance(group, str) else group
    rep = build(gid)
    labels = rep.elements
    cost = {}
    for a, b in itertools.combinations(labels, 2):
        cost[(a, b)] = cost[(b, a)] = pair_cost(rep.image[a], rep.image[b])
    per = {}
    half = Fraction(1, 2)
    for h in labels:
        dist = {labels[0]: Fraction(1)}
        total = Fraction(0)
        for x in labels[1:]:
            new: dict = {}
            for champ, pr in dist.items():
                total += pr * cost[(champ, x)]
                if champ == h:
                    new[champ] = new.get(champ, 0) + pr
                elif x == h:
                    new[x] = new.get(x, 0) + pr
                else:
                    new[champ] = new.get(champ, 0) + pr * half
                    new[x] = new.get(x, 0) + pr * half
            dist = new
        per[h] = total
    return BaselineReport(str(gid), per, sum(per.values(), Fraction(0)) / len(labels))
