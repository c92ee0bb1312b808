"""Definite-parity polynomial interpolation of {0, +-1} targets with |p| <= 1 on [-1, 1].

Polynomials live in the Chebyshev basis restricted to one parity. For each
candidate degree the fitter solves a linear program: equality at the targets,
a vanishing derivative at interior unit-modulus targets, |p| <= 1 on a dense
Chebyshev grid, and a minimax objective on grid points away from the
unit-modulus targets. Exact critical points of the candidate are then checked
and any offenders are added back as constraints (an exchange step).

The abscissa convention throughout is x = cos(theta / 2) for a rotation by
theta. Degrees returned are the smallest found by this search; no global
minimality is claimed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import linprog

TOL_INTERP = 1e-9
MARGIN = 1e-6
MAX_EXCHANGE = 50
GRID_FACTOR = 64


class InfeasibleTargetError(ValueError):
    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


@dataclass(frozen=True)
class ParityPolynomial:
    """Real polynomial sum_k coeffs[k] T_k(x) with only one parity present."""

    coeffs: tuple
    parity: int  # 0 even, 1 odd
    norm_certificate: float = float("nan")

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        wrong = c[(1 - self.parity) % 2 :: 2]
        if np.any(wrong != 0):
            raise ValueError("coefficient of the wrong parity present")

    @property
    def degree(self) -> int:
        c = np.asarray(self.coeffs)
        nz = np.nonzero(np.abs(c) > 0)[0]
        return int(nz[-1]) if len(nz) else 0

    def __call__(self, x):
        return C.chebval(x, np.asarray(self.coeffs, dtype=float))

    @classmethod
    def from_coeffs(cls, coeffs, parity: int | None = None) -> "ParityPolynomial":
        c = np.array(coeffs, dtype=float)
        if parity is None:
            parity = (len(c) - 1) % 2
        c[(1 - parity) % 2 :: 2] = 0.0
        return cls(tuple(c), parity, sup_norm(c))

    @classmethod
    def from_power_coeffs(cls, coeffs, parity: int | None = None) -> "ParityPolynomial":
        return cls.from_coeffs(C.poly2cheb(np.asarray(coeffs, dtype=float)), parity)

    def to_json(self) -> dict:
        return {
            "basis": "chebyshev",
            "parity": "odd" if self.parity else "even",
            "degree": self.degree,
            "coeffs": list(map(float, self.coeffs)),
            "norm_certificate": float(self.norm_certificate),
        }


@dataclass(frozen=True)
class InterpolationTarget:
    points: tuple  # ((x, value), ...)
    parity: int
    min_gap: float | None = None

    def __post_init__(self):
        xs = [float(x) for x, _ in self.points]
        if len(set(xs)) != len(xs):
            raise ValueError("interpolation abscissae must be distinct")
        vals = {}
        for x, v in self.points:
            if not -1 - 1e-15 <= x <= 1 + 1e-15:
                raise ValueError(f"abscissa {x} outside [-1, 1]")
            if v not in (-1, 0, 1):
                raise ValueError(f"target value {v} not in {{-1, 0, 1}}")
            vals[float(x)] = v
        sign = -1 if self.parity else 1
        for x, v in vals.items():
            if -x in vals and vals[-x] != sign * v:
                raise ValueError(f"values at {x} and {-x} break the declared parity")
            if x == 0 and self.parity and v != 0:
                raise ValueError("an odd polynomial vanishes at 0")

    @classmethod
    def make(cls, points, parity, min_gap=None) -> "InterpolationTarget":
        if isinstance(parity, str):
            parity = {"even": 0, "odd": 1}[parity]
        pts = tuple((float(x), int(round(v))) for x, v in points)
        return cls(pts, int(parity), min_gap)


def _basis_degrees(d: int, parity: int) -> np.ndarray:
    return np.arange(parity, d + 1, 2)


def _design(xs, degrees) -> np.ndarray:
    return np.cos(np.outer(np.arccos(np.clip(xs, -1, 1)), degrees))


def _design_deriv(xs, degrees) -> np.ndarray:
    cols = []
    for k in degrees:
        e = np.zeros(k + 1)
        e[k] = 1
        cols.append(C.chebval(xs, C.chebder(e)) if k else np.zeros_like(xs))
    return np.array(cols).T.reshape(len(xs), len(degrees))


def chebyshev_grid(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.cos((2 * k + 1) * np.pi / (2 * n))


def critical_points(coeffs) -> np.ndarray:
    """Endpoints plus real roots of p' inside [-1, 1]."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    pts = [-1.0, 1.0]
    if len(c) > 2:
        r = C.chebroots(C.chebder(c))
        r = r[np.abs(r.imag) < 1e-9].real
        pts.extend(r[(r > -1) & (r < 1)])
    return np.array(pts)


def sup_norm(coeffs, grid_size: int | None = None) -> float:
    """max |p| over [-1, 1]: dense grid plus exact critical points."""
    c = np.asarray(coeffs, dtype=float)
    n = grid_size or max(1024, GRID_FACTOR * max(len(c), 1))
    xs = np.concatenate([chebyshev_grid(n), critical_points(c)])
    return float(np.max(np.abs(C.chebval(xs, c))))


@dataclass
class _Fit:
    coeffs: np.ndarray
    residual: float
    ok: bool
    norm: float = float("inf")
    notes: list = field(default_factory=list)


def _fit_degree(target: InterpolationTarget, d: int) -> _Fit:
    degrees = _basis_degrees(d, target.parity)
    m = len(degrees)
    xs = np.array([x for x, _ in target.points])
    vs = np.array([v for _, v in target.points], dtype=float)
    unit = np.abs(vs) == 1
    interior_unit = unit & (np.abs(xs) < 1)

    a_eq = [_design(xs, degrees)]
    b_eq = [vs]
    if interior_unit.any():
        a_eq.append(_design_deriv(xs[interior_unit], degrees))
        b_eq.append(np.zeros(interior_unit.sum()))
    a_eq = np.vstack(a_eq)
    b_eq = np.concatenate(b_eq)

    grid = chebyshev_grid(max(GRID_FACTOR * max(d, 1), 256))
    # parity mirrors every unit target to -x as well
    ux = np.unique(np.concatenate([xs[unit], -xs[unit]]))
    if len(xs) > 1:
        gap = np.min(np.diff(np.sort(np.unique(np.abs(xs)))), initial=1.0)
    else:
        gap = 1.0
    eta = min(0.05, 0.25 * gap) if gap > 0 else 0.05
    if len(ux):
        far = np.min(np.abs(grid[:, None] - ux[None, :]), axis=1) > eta
    else:
        far = np.ones_like(grid, dtype=bool)
    extra_x: list = []  # exchange points carrying the margin bound

    best = _Fit(np.zeros(d + 1), float("inf"), False)
    for it in range(MAX_EXCHANGE):
        gx = np.concatenate([grid, np.array(extra_x)]) if extra_x else grid
        gfar = np.concatenate([far, np.ones(len(extra_x), dtype=bool)]) if extra_x else far
        G = _design(gx, degrees)
        # variables: c (m), u (m) with |c| <= u, t
        A_ub = []
        # |p(g)| <= 1 everywhere on the grid
        A_ub.append(np.hstack([G, np.zeros((len(gx), m + 1))]))
        A_ub.append(np.hstack([-G, np.zeros((len(gx), m + 1))]))
        rhs_ub = [np.ones(len(gx)), np.ones(len(gx))]
        # |p(g)| <= t on far points
        Gf = G[gfar]
        A_ub.append(np.hstack([Gf, np.zeros((len(Gf), m)), -np.ones((len(Gf), 1))]))
        A_ub.append(np.hstack([-Gf, np.zeros((len(Gf), m)), -np.ones((len(Gf), 1))]))
        rhs_ub += [np.zeros(len(Gf)), np.zeros(len(Gf))]
        # |c| <= u
        eye = np.eye(m)
        A_ub.append(np.hstack([eye, -eye, np.zeros((m, 1))]))
        A_ub.append(np.hstack([-eye, -eye, np.zeros((m, 1))]))
        rhs_ub += [np.zeros(m), np.zeros(m)]
        A_ub = np.vstack(A_ub)
        b_ub = np.concatenate(rhs_ub)
        A_e = np.hstack([a_eq, np.zeros((len(a_eq), m + 1))])
        cost = np.concatenate([np.zeros(m), 1e-6 * np.ones(m), [1.0]])
        bounds = [(None, None)] * m + [(0, None)] * m + [(0, None)]
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_e, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status != 0:
            return best
        c = np.zeros(d + 1)
        c[degrees] = res.x[:m]
        if res.x[-1] > 1 - MARGIN:
            # even the best fit touches 1 away from the unit targets
            return best if best.residual < float("inf") else _Fit(c, 0.0, False)
        resid = float(np.max(np.abs(C.chebval(xs, c) - vs)))
        crit = critical_points(c)
        pv = np.abs(C.chebval(crit, c))
        near_unit = (
            np.min(np.abs(crit[:, None] - ux[None, :]), axis=1) < 1e-6
            if len(ux)
            else np.zeros(len(crit), dtype=bool)
        )
        over = pv > 1 + 1e-12
        bad_margin = (~near_unit) & (pv > 1 - MARGIN) & (np.abs(crit) < 1)
        norm = max(sup_norm(c), float(pv.max()))
        fit = _Fit(c, resid, False, norm)
        if resid < best.residual:
            best = fit
        if resid > TOL_INTERP:
            return best
        offenders = crit[over | bad_margin]
        if len(offenders) == 0 and norm <= 1 + 1e-12:
            fit.ok = True
            return fit
        if len(offenders) == 0:
            # grid-only overshoot without a critical point: refine grid
            grid = chebyshev_grid(2 * len(grid))
            if len(ux):
                far = np.min(np.abs(grid[:, None] - ux[None, :]), axis=1) > eta
            else:
                far = np.ones_like(grid, dtype=bool)
            continue
        fresh = [float(o) for o in offenders if not any(abs(o - e) < 1e-12 for e in extra_x)]
        if not fresh:
            return best
        extra_x.extend(fresh)
    return best


def max_degree(target: InterpolationTarget) -> int:
    return 8 * len(target.points) + 16


def gen_real_poly(target: InterpolationTarget, start_degree: int = 0) -> ParityPolynomial:
    """Smallest-degree parity polynomial (under the stepping search) meeting the target."""
    d = max(start_degree, target.parity)
    if d % 2 != target.parity:
        d += 1
    cap = max_degree(target)
    best_resid = float("inf")
    while d <= cap:
        fit = _fit_degree(target, d)
        best_resid = min(best_resid, fit.residual)
        if fit.ok:
            c = fit.coeffs.copy()
            c[(1 - target.parity) % 2 :: 2] = 0.0
            c = c[: d + 1]
            return ParityPolynomial(tuple(c), target.parity, fit.norm)
        d += 2
    raise InfeasibleTargetError(
        f"no certified interpolant up to degree {cap} (best residual {best_resid:.3g})",
        best_resid,
    )


# -- alternating targets ----------------------------------------------------


def angle_classes(angles, shift: float = 0.0):
    """Group rotation angles by the signal value they induce after a pre-rotation.

    Returns a list of (x, members) sorted by decreasing x, where
    x = cos(((theta - shift) mod 2pi) / 2).
    """
    out: dict = {}
    for i, th in enumerate(angles):
        rel = (th - shift) % (2 * math.pi)
        x = math.cos(rel / 2)
        key = round(x, 12)
        out.setdefault(key, (x, []))[1].append(i)
    return sorted(out.values(), key=lambda t: -t[0])


def alternating_target(angles, shift: float = 0.0, parity: int = 1, signs: str = "alternate"):
    """Maximally alternating {0, 1} split of a set of rotation angles.

    Classes of equal |x| are ordered by decreasing |x| (closest to the
    pre-rotation point first) and assigned 1, 0, 1, 0, ...; unit values carry
    alternating signs (or all +1 with ``signs='same'``). Returns
    (InterpolationTarget, bits) where bits[i] is the value for angles[i], or
    None when the split is infeasible for the parity.
    """
    classes = angle_classes(angles, shift)
    by_abs: dict = {}
    for x, members in classes:
        by_abs.setdefault(round(abs(x), 12), []).append((x, members))
    order = sorted(by_abs.items(), key=lambda kv: -kv[0])
    bits = [0] * len(angles)
    points = []
    sign = 1
    gs = sorted({round(abs(x), 12) for x, _ in classes})
    gap = float(np.min(np.diff(gs))) if len(gs) > 1 else 1.0
    for k, (ax, group) in enumerate(order):
        bit = 1 if k % 2 == 0 else 0
        if bit and ax == 0 and parity == 1:
            return None
        for x, members in group:
            s = sign if x >= 0 else sign * (-1 if parity else 1)
            points.append((x, s * bit))
            for i in members:
                bits[i] = bit
        if bit and signs == "alternate":
            sign = -sign
    return InterpolationTarget.make(points, parity, gap), bits


def equispaced_angles(delta: float) -> list:
    n = max(1, round(2 * math.pi / delta))
    return [2 * math.pi * m / n for m in range(n)]


def measure_degree_scaling(delta_list, parity: int = 1):
    """Achieved degree of the alternating interpolant on equispaced angles, per gap delta."""
    rows = []
    for delta in delta_list:
        made = alternating_target(equispaced_angles(delta), 0.0, parity)
        if made is None:
            # a unit value landed on x = 0; the other parity admits it
            made = alternating_target(equispaced_angles(delta), 0.0, 1 - parity)
        poly = gen_real_poly(made[0])
        rows.append((float(delta), poly.degree))
    return rows
