"""Quantum signal processing: evaluation, polynomial extraction, completion and phase synthesis.

Convention: U_Phi(x) = e^{i phi_0 Z} prod_{j=1..k} W(x) e^{i phi_j Z} with
W(x) = [[x, i s], [i s, x]], s = sqrt(1 - x^2). The product has the form
[[P, i Q s], [i Q* s, P*]] with deg P = k and deg Q = k - 1. Polynomials are
stored as complex Chebyshev coefficient arrays.

A rotation R_x(theta) = exp(-i theta/2 X) enters as the signal through
Z R_x(theta) Z = R_x(-theta) = W(cos(theta / 2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from numpy.polynomial import chebyshev as C

from .interp import ParityPolynomial, chebyshev_grid
from .su2_core import KET_0, KET_PLUS, Z, state_name, z_phase

TOL_UNIT_IDENTITY = 1e-9
TOL_ROUND_TRIP = 1e-8
WORK_DPS = 40


class InconsistentSequenceError(ValueError):
    pass


class NormViolationError(ValueError):
    pass


class SynthesisError(RuntimeError):
    pass


def signal(x: float) -> np.ndarray:
    """W(x), the signal operator."""
    s = math.sqrt(max(0.0, 1.0 - x * x))
    return np.array([[x, 1j * s], [1j * s, x]])


def qsp_product(phases, w: np.ndarray) -> np.ndarray:
    """The QSP product with an arbitrary 2x2 signal matrix ``w``."""
    u = z_phase(phases[0])
    for phi in phases[1:]:
        u = u @ w @ z_phase(phi)
    return u


def qsp_unitary(phases, x: float) -> np.ndarray:
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"signal value {x} outside [-1, 1]")
    return qsp_product(phases, signal(x))


def qsp_from_oracle(phases, oracle_matrix: np.ndarray) -> np.ndarray:
    """QSP product using Z (oracle) Z as the signal."""
    return qsp_product(phases, Z @ oracle_matrix @ Z)


# -- polynomial pairs --------------------------------------------------------


@dataclass(frozen=True)
class CompletedPair:
    """(P, Q) as complex Chebyshev coefficients; len(P) = k + 1, len(Q) = k."""

    P: np.ndarray
    Q: np.ndarray
    # optional extended-precision coefficients (mpmath lists) from an exact forward pass
    exact: tuple | None = field(default=None, compare=False, repr=False)

    @property
    def degree(self) -> int:
        return len(self.P) - 1

    def p_at(self, x):
        return C.chebval(x, self.P)

    def q_at(self, x):
        return C.chebval(x, self.Q) if len(self.Q) else np.zeros_like(np.asarray(x, dtype=float))

    def unit_defect(self, n: int = 1000) -> float:
        """max | |P|^2 + (1 - x^2)|Q|^2 - 1 | over an n-point grid."""
        xs = np.linspace(-1, 1, n)
        v = np.abs(self.p_at(xs)) ** 2 + (1 - xs**2) * np.abs(self.q_at(xs)) ** 2
        return float(np.max(np.abs(v - 1)))

    def max_coeff_distance(self, other: "CompletedPair") -> float:
        if self.degree != other.degree:
            return float("inf")
        dq = np.max(np.abs(self.Q - other.Q)) if len(self.Q) else 0.0
        return float(max(np.max(np.abs(self.P - other.P)), dq))


def _work_dps(k: int) -> int:
    # peeling loses a few digits per layer on ill-conditioned sequences
    return WORK_DPS + 3 * k


def _mp_forward(phases, dps: int):
    """Chebyshev coefficients of P and Q by exact layer-by-layer multiplication."""
    with mpmath.workdps(dps):
        P = [mpmath.expj(mpmath.mpf(phases[0]))]
        Q = []
        for phi in phases[1:]:
            # U W e^{i phi Z}: P <- e^{i phi}(xP - (1 - x^2)Q), Q <- e^{-i phi}(P + xQ)
            xP = _mp_mulx(P)
            xQ = _mp_mulx(Q) if Q else []
            xxQ = _mp_mulx(xQ) if Q else []
            n = len(xP)
            a = _pad(xP, n)
            b = _pad(Q, n)
            c = _pad(xxQ, n)
            ep, em = mpmath.expj(mpmath.mpf(phi)), mpmath.expj(-mpmath.mpf(phi))
            newP = [ep * (a[i] - b[i] + c[i]) for i in range(n)]
            m = len(P)
            d = _pad(P, m)
            e = _pad(xQ, m)
            newQ = [em * (d[i] + e[i]) for i in range(m)]
            P, Q = newP, newQ
        return P, Q


def extract_polynomials(phases) -> CompletedPair:
    """P and Q of a phase list, computed exactly in extended precision.

    The result is checked against direct double-precision evaluation of the
    product at interior Chebyshev nodes.
    """
    phases = [float(p) for p in phases]
    if not phases or not all(map(math.isfinite, phases)):
        raise InconsistentSequenceError("phase list must be non-empty and finite")
    k = len(phases) - 1
    dps = _work_dps(k)
    Pm, Qm = _mp_forward(phases, dps)
    P = np.array([complex(v) for v in Pm], dtype=complex)
    Q = np.array([complex(v) for v in Qm], dtype=complex)
    nodes = chebyshev_grid(max(k + 1, 8))
    resid = 0.0
    for x in nodes:
        u = qsp_unitary(phases, x)
        resid = max(resid, abs(u[0, 0] - C.chebval(x, P)))
        if k:
            resid = max(resid, abs(u[0, 1] - 1j * math.sqrt(1 - x * x) * C.chebval(x, Q)))
    if resid > TOL_ROUND_TRIP:
        raise InconsistentSequenceError(f"polynomial fit residual {resid:.3g}")
    return CompletedPair(P, Q, exact=(dps, Pm, Qm))


# -- completion ---------------------------------------------------------------


ROOT_DPS = 60
_NEAR = 1e-6  # roots this close to the real axis / unit circle count as touching it
_CLUSTER = 1e-5  # a split double root has its halves this close


def _mp_cheb2poly(c):
    """Chebyshev -> monomial coefficients (mpmath lists, ascending)."""
    n = len(c)
    out = [mpmath.mpf(0)] * max(n, 1)
    t_prev, t_cur = [mpmath.mpf(1)], [mpmath.mpf(0), mpmath.mpf(1)]
    for k, v in enumerate(c):
        tk = t_prev if k == 0 else t_cur
        if k >= 2:
            nxt = [mpmath.mpf(0)] + [2 * u for u in t_cur]
            for i, u in enumerate(t_prev):
                nxt[i] -= u
            t_prev, t_cur = t_cur, nxt
            tk = t_cur
        for i, u in enumerate(tk):
            out[i] += v * u
    return out


def _mp_poly2cheb(m):
    """Monomial -> Chebyshev coefficients by Horner's rule in the Chebyshev basis."""
    out = [mpmath.mpc(0)]
    for v in reversed(m):
        out = _mp_mulx(out) if any(out) else [mpmath.mpc(0)]
        out[0] += v
    return out


def _mp_polymul(a, b):
    out = [mpmath.mpc(0)] * (len(a) + len(b) - 1)
    for i, u in enumerate(a):
        for j, v in enumerate(b):
            out[i + j] += u * v
    return out


def _roots(coeffs):
    """Roots of an ascending-coefficient mpmath polynomial."""
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) <= 1:
        return []
    # exact repeated roots converge only linearly; more guard digits fix that
    for extra in (2, 4, 8):
        try:
            return list(mpmath.polyroots(coeffs[::-1], maxsteps=800, extraprec=extra * ROOT_DPS))
        except mpmath.libmp.NoConvergence:
            pass
    raise SynthesisError(f"root finding did not converge for a degree-{len(coeffs) - 1} polynomial")


def _clusters(points):
    left = list(points)
    groups = []
    while left:
        seed = left.pop(0)
        group = [seed]
        for p in list(left):
            if abs(p - seed) < _CLUSTER:
                group.append(p)
                left.remove(p)
        groups.append(group)
    return groups


def _mp_u_to_t(beta):
    """sum_k beta[k] U_{k-1}(x) (k >= 1) as Chebyshev-T coefficients."""
    n = len(beta) - 1
    out = [mpmath.mpf(0)] * max(n, 1)
    for k in range(1, n + 1):
        m = k - 1
        for j in range(m % 2, m + 1, 2):
            out[j] += beta[k] * (2 if j else 1)
    return out


def _finish(P, Q, dps) -> CompletedPair:
    Pd = np.array([complex(v) for v in P], dtype=complex)
    Qd = np.array([complex(v) for v in Q], dtype=complex)
    return CompletedPair(Pd, Qd, exact=(dps, list(P), list(Q)))


def _complete_real_route(c: np.ndarray) -> CompletedPair | None:
    """P = p and complex Q with |Q|^2 = (1 - p^2) / (1 - x^2); needs |p(+-1)| = 1.

    Writing (1 - p^2) / (1 - x^2) = x^{2e} H(x^2) with e = (d - 1) mod 2, a
    definite-parity Q = x^e R(x^2) exists when H >= 0 on the whole real line;
    R takes one root from each conjugate pair of H.
    """
    d = len(c) - 1
    if d == 0 or abs(abs(C.chebval(1.0, c)) - 1) > 1e-9 or abs(abs(C.chebval(-1.0, c)) - 1) > 1e-9:
        return None
    with mpmath.workdps(ROOT_DPS):
        pm = _mp_cheb2poly([mpmath.mpf(float(v)) for v in c])
        F = [-v for v in _mp_polymul(pm, pm)]
        F[0] += 1
        # synthetic division by (1 - x^2), from the top
        F = [mpmath.mpf(mpmath.re(v)) for v in F] + [mpmath.mpf(0)] * 2
        G = [mpmath.mpf(0)] * (2 * d - 1)
        rem = list(F)
        for i in range(2 * d, 1, -1):
            q = -rem[i]
            G[i - 2] = q
            rem[i] += q
            rem[i - 2] -= q
        if max(abs(rem[0]), abs(rem[1])) > 1e-9:
            return None
        e = (d - 1) % 2
        if max((abs(v) for v in G[1::2]), default=0) > 1e-9 or (e and abs(G[0]) > 1e-9):
            return None
        Hc = G[2 * e :: 2]
        while len(Hc) > 1 and abs(Hc[-1]) < 1e-30:
            Hc.pop()
        if not Hc or Hc[-1] <= 0:
            return None
        roots = _roots(Hc)
        chosen = [r for r in roots if mpmath.im(r) > _NEAR]
        real = [mpmath.re(r) for r in roots if abs(mpmath.im(r)) <= _NEAR]
        for group in _clusters(real):
            if len(group) % 2:
                return None  # a simple real root: H changes sign
            group.sort()
            for i in range(0, len(group), 2):
                chosen.append((group[i] + group[i + 1]) / 2)
        R = [mpmath.sqrt(Hc[-1])]
        for r in chosen:
            R = _mp_polymul(R, [-r, 1])
        Qm = [mpmath.mpc(0)] * d
        for j, v in enumerate(R):
            Qm[e + 2 * j] = v
        Qc = (_mp_poly2cheb(Qm) + [mpmath.mpc(0)] * d)[:d]
        pair = _finish([mpmath.mpc(float(v)) for v in c], Qc, ROOT_DPS)
    if pair.unit_defect() > TOL_UNIT_IDENTITY:
        return None
    return pair


def _complete_imag_route(c: np.ndarray) -> CompletedPair:
    """P = p + i a, Q = i b with a^2 + (1 - x^2) b^2 = 1 - p^2 (Fejer-Riesz on the circle)."""
    d = len(c) - 1
    parity = d % 2
    Fd = C.chebsub([1.0], C.chebmul(c, c))
    if d == 0:
        if Fd[0] < -1e-12:
            raise NormViolationError("|p| > 1")
        a = math.sqrt(max(Fd[0], 0.0))
        return CompletedPair(np.array([c[0] + 1j * a]), np.zeros(0, dtype=complex))
    with mpmath.workdps(ROOT_DPS):
        cm = [mpmath.mpf(float(v)) for v in c]
        # 1 - p^2 in the Chebyshev basis: T_i T_j = (T_{i+j} + T_{|i-j|}) / 2
        F = [mpmath.mpf(0)] * (2 * d + 1)
        F[0] = mpmath.mpf(1)
        for i, u in enumerate(cm):
            for j, v in enumerate(cm):
                F[i + j] -= u * v / 2
                F[abs(i - j)] -= u * v / 2
        # F(cos u) = sum f_j cos(j u); with y = w^2, w = e^{iu}, the Laurent form
        # becomes a polynomial S(y) of degree 2d with roots in pairs (y, 1/conj(y))
        S = [mpmath.mpf(0)] * (2 * d + 1)
        for j in range(0, 2 * d + 1, 2):
            if j == 0:
                S[d] += F[0]
            else:
                S[d + j // 2] += F[j] / 2
                S[d - j // 2] += F[j] / 2
        roots = _roots(S)
        chosen = [r for r in roots if abs(r) < 1 - _NEAR]
        for group in _clusters([r for r in roots if abs(abs(r) - 1) <= _NEAR]):
            if len(group) % 2:
                raise NormViolationError("1 - p^2 changes sign on [-1, 1]")
            # a split double root: its centre keeps conjugate symmetry and errs by O(split^2)
            centre = sum(group) / len(group)
            chosen.extend([centre] * (len(group) // 2))
        if len(chosen) != d:
            raise SynthesisError(f"expected {d} inner roots, found {len(chosen)}")
        g = [mpmath.mpc(1)]
        for r in chosen:
            g = _mp_polymul(g, [-r, 1])
        # |g(w^2)|^2 matches F(cos u) up to a positive constant
        ratios = []
        for u in (0.3, 1.1, 2.3):
            w2 = mpmath.expj(2 * u)
            val = sum(v * w2**k for k, v in enumerate(g))
            ratios.append(sum(f * mpmath.cos(j * u) for j, f in enumerate(F)) / abs(val) ** 2)
        scale = max(ratios)
        if scale <= 0:
            raise NormViolationError("1 - p^2 is negative somewhere on [-1, 1]")
        g = [v * mpmath.sqrt(scale) for v in g]
        if max(abs(mpmath.im(v)) for v in g) > 1e-12 * max(1, max(abs(v) for v in g)):
            raise SynthesisError("spectral factor lost conjugate symmetry")
        # gamma_k: coefficient of w^k in w^{-d} g(w^2)
        gamma = {k: mpmath.mpf(0) for k in range(-d, d + 1)}
        for m, v in enumerate(g):
            gamma[2 * m - d] = mpmath.re(v)
        alpha = [mpmath.mpf(0)] * (d + 1)
        beta = [mpmath.mpf(0)] * (d + 1)
        alpha[0] = gamma[0]
        for k in range(1, d + 1):
            alpha[k] = gamma[k] + gamma[-k]
            beta[k] = gamma[k] - gamma[-k]
        for k in range((1 - parity) % 2, d + 1, 2):
            alpha[k] = beta[k] = mpmath.mpf(0)
        b = (_mp_u_to_t(beta) + [mpmath.mpf(0)] * d)[:d]
        P = [mpmath.mpc(u, v) for u, v in zip(cm, alpha)]
        Q = [mpmath.mpc(0, v) for v in b]
        return _finish(P, Q, ROOT_DPS)


def gen_complex_poly(p: ParityPolynomial, route: str = "auto") -> CompletedPair:
    """Complete a real parity polynomial with |p| <= 1 into a QSP pair.

    ``route='real'`` keeps P = p exactly (possible when |p(+-1)| = 1 and
    (1 - p^2)/(1 - x^2) is a nonnegative polynomial on the real line);
    ``route='imag'`` returns Re P = p and Re Q = 0. ``auto`` prefers 'real'.
    """
    c = np.trim_zeros(np.asarray(p.coeffs, dtype=float), "b")
    if len(c) == 0:
        c = np.zeros(1)
    if p.degree % 2 != p.parity and p.degree > 0:
        raise ValueError("degree and parity disagree")
    xs = np.concatenate([chebyshev_grid(max(1024, 64 * len(c))), [-1.0, 1.0]])
    if np.max(np.abs(C.chebval(xs, c))) > 1 + 1e-9:
        raise NormViolationError("input polynomial exceeds 1 in modulus on [-1, 1]")
    if route in ("auto", "real"):
        pair = _complete_real_route(c)
        if pair is not None:
            return pair
        if route == "real":
            raise SynthesisError("real-P completion unavailable for this polynomial")
    pair = _complete_imag_route(c)
    if pair.unit_defect() > TOL_UNIT_IDENTITY:
        raise SynthesisError(f"completion misses the unit identity by {pair.unit_defect():.3g}")
    return pair


# -- layer stripping ------------------------------------------------------------


def _mp_mulx(c):
    n = len(c)
    out = [mpmath.mpc(0)] * (n + 1)
    for k, v in enumerate(c):
        if k == 0:
            out[1] += v
        else:
            out[k + 1] += v / 2
            out[k - 1] += v / 2
    return out


def _mp_lead(c, deg):
    if deg < 0:
        return mpmath.mpc(0)
    return c[deg] * (mpmath.mpf(2) ** (deg - 1) if deg >= 1 else 1)


def _pad(c, n):
    return list(c) + [mpmath.mpc(0)] * (n - len(c))


def layer_strip(pair: CompletedPair) -> list:
    """Recover phases by peeling W e^{i phi_k Z} layers from the right."""
    if pair.exact is not None:
        dps, P0, Q0 = pair.exact
    else:
        dps, P0, Q0 = WORK_DPS, [complex(v) for v in pair.P], [complex(v) for v in pair.Q]
    with mpmath.workdps(dps):
        P = [mpmath.mpc(v) for v in P0]
        Q = [mpmath.mpc(v) for v in Q0]
        k = len(P) - 1
        phases = []
        while k > 0:
            lp, lq = _mp_lead(P, k), _mp_lead(Q, k - 1)
            if abs(lq) < mpmath.mpf(10) ** (-25) or abs(lp) < mpmath.mpf(10) ** (-25):
                raise SynthesisError(f"vanishing leading coefficient at layer {k}")
            phi = mpmath.arg(lp / lq) / 2
            em, ep = mpmath.expj(-phi), mpmath.expj(phi)
            xP = _mp_mulx(P)
            xQ = _mp_mulx(Q)
            xxQ = _mp_mulx(xQ)
            n = max(len(xP), len(xxQ))
            xP, xQ2, xxQ, Qp = _pad(xP, n), _pad(Q, n), _pad(xxQ, n), _pad(xQ, n)
            newP = [em * xP[i] + ep * (xQ2[i] - xxQ[i]) for i in range(n)]
            newQ = [ep * Qp[i] - em * _pad(P, n)[i] for i in range(n)]
            drop = max(abs(v) for v in newP[k:] + newQ[k - 1 :]) if n > k else 0
            if drop > mpmath.mpf(10) ** (-2):
                raise SynthesisError(f"layer {k}: residual {float(drop):.3g} after peeling")
            P, Q = newP[:k], newQ[: k - 1]
            phases.append(float(phi))
            k -= 1
        phases.append(float(mpmath.arg(P[0])))
    return phases[::-1]


def choose_states(pair: CompletedPair):
    """Preparation and measurement states that expose the real target polynomial."""
    if np.max(np.abs(pair.P.imag)) < 1e-9:
        return KET_0.copy(), KET_0.copy()
    if len(pair.Q) == 0 or np.max(np.abs(pair.Q.real)) < 1e-9:
        return KET_PLUS.copy(), KET_PLUS.copy()
    return KET_0.copy(), KET_0.copy()


def _residuals(phases, nodes, pt, qt):
    r = []
    for x, p, q in zip(nodes, pt, qt):
        u = qsp_unitary(phases, x)
        r.append(u[0, 0] - p)
        r.append(u[0, 1] - 1j * q * math.sqrt(1 - x * x))
    r = np.array(r)
    return np.concatenate([r.real, r.imag])


def _jacobian(phases, nodes):
    k = len(phases) - 1
    rows = []
    for x in nodes:
        w = signal(x)
        factors = [z_phase(phases[0])] + [w @ z_phase(p) for p in phases[1:]]
        left = [np.eye(2, dtype=complex)]
        for f in factors:
            left.append(left[-1] @ f)
        right = [np.eye(2, dtype=complex)]
        for f in reversed(factors):
            right.append(f @ right[-1])
        right = right[::-1]
        cols = []
        for j in range(k + 1):
            # d/dphi_j of e^{i phi_j Z} is iZ e^{i phi_j Z}; it sits at the end of factor j
            d = left[j + 1] @ (1j * Z) @ right[j + 1]
            cols.append([d[0, 0], d[0, 1]])
        rows.append(np.array(cols).T)
    J = np.concatenate(rows, axis=0)
    return np.concatenate([J.real, J.imag], axis=0)


def polish_phases(phases, pair: CompletedPair, iterations: int = 8) -> list:
    """Gauss-Newton refinement of phases against samples of the target pair."""
    phases = np.array(phases, dtype=float)
    k = len(phases) - 1
    nodes = chebyshev_grid(max(2 * k + 2, 8))
    pt, qt = pair.p_at(nodes), pair.q_at(nodes)
    r = _residuals(phases, nodes, pt, qt)
    for _ in range(iterations):
        if np.max(np.abs(r)) < 1e-15:
            break
        step = np.linalg.lstsq(_jacobian(phases, nodes), -r, rcond=1e-9)[0]
        trial = phases + step
        rt = _residuals(trial, nodes, pt, qt)
        if np.max(np.abs(rt)) >= np.max(np.abs(r)):
            break
        phases, r = trial, rt
    # exact cancellations leave residue far below double rounding
    return [0.0 if abs(p) < 1e-30 else float(p) for p in phases]


def gen_phases(pair: CompletedPair):
    """Phases plus (prep, meas) realizing the pair; verified by a round trip."""
    phases = polish_phases(layer_strip(pair), pair)
    back = extract_polynomials(phases)
    err = back.max_coeff_distance(pair)
    if err > TOL_ROUND_TRIP:
        raise SynthesisError(f"round-trip coefficient error {err:.3g}")
    prep, meas = choose_states(pair)
    return phases, prep, meas


# -- sequences -------------------------------------------------------------------


@dataclass(frozen=True)
class QspSequence:
    phases: tuple
    prep: np.ndarray
    meas: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.phases) - 1

    def unitary(self, x: float) -> np.ndarray:
        return qsp_unitary(self.phases, x)

    def amplitude(self, x: float) -> complex:
        return complex(np.vdot(self.meas, self.unitary(x) @ self.prep))

    def to_json(self) -> dict:
        def desc(v):
            name = state_name(v)
            return name if name is not None else [[float(z.real), float(z.imag)] for z in v]

        return {
            "phases": [float(p) for p in self.phases],
            "degree": self.degree,
            "prep": desc(self.prep),
            "meas": desc(self.meas),
        }


def synthesize(p: ParityPolynomial, route: str = "auto") -> QspSequence:
    """Real polynomial -> QSP sequence whose projected amplitude equals p."""
    pair = gen_complex_poly(p, route)
    phases, prep, meas = gen_phases(pair)
    seq = QspSequence(tuple(phases), prep, meas)
    xs = np.linspace(-1, 1, 101)
    err = max(abs(seq.amplitude(x) - p(x)) for x in xs)
    if err > TOL_ROUND_TRIP:
        raise SynthesisError(f"projected amplitude misses the target by {err:.3g}")
    return seq


# -- phase conventions -------------------------------------------------------------


def from_rotation_angles(angles) -> list:
    """Rotation angles beta of R_z(beta) = e^{-i beta/2 Z} -> exponent phases."""
    return [-b / 2 for b in angles]


def equivalent_phases(a, b, tol: float = 1e-8) -> bool:
    """Whether two phase lists give the same channel family up to symmetry.

    The symmetries are: negating every phase, reversing the list, shifting
    (phi_0 + c, ..., phi_k - c), and adding pi to any entry (a global sign).
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    if len(a) != len(b):
        return False

    def close_mod_pi(u, v):
        d = (u - v) % math.pi
        return min(d, math.pi - d) < tol

    if len(a) == 1:
        return close_mod_pi(a[0], b[0]) or close_mod_pi(-a[0], b[0])
    for cand in (a, [-v for v in a], a[::-1], [-v for v in a[::-1]]):
        c = b[0] - cand[0]
        shifted = [cand[0] + c] + cand[1:-1] + [cand[-1] - c]
        if all(close_mod_pi(u, v) for u, v in zip(shifted, b)):
            return True
    return False
