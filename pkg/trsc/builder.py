"""
Adversarial instance construction

Given 2d increasing multipliers on the candidate interval, build a C1 increasing psi that
crosses phi exactly at those points (secant lines joined by tangent quadratic blends), then
integrate psi^{-1} into a convex f0 whose instance has d strict local non-global minimizers.
"""

from dataclasses import dataclass
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from config import BUILDER_CONFIG
from trsc.convexlib import ConvexScalar, QuarticExample1, TrslInstance, _as_array, _out
from trsc.errors import BadSequence, InvalidInstance, NonMonotonePsi, PhiNotIncreasing
from trsc.spectral import Spectrum, decompose, phi, phi_d1

logger = logging.getLogger(__name__)

# H = diag(-5, -1), c = (1, 1) carries both canned instances
CANNED_H = np.diag([-5.0, -1.0])
CANNED_C = np.array([1.0, 1.0])

EXAMPLE2_MUS = (3.00, 3.58, 3.94, 4.13, 4.40, 4.45)
EXAMPLE2_O = (3.80, 4.30)
EXAMPLE2_LINES = (
    (1 / 4, -1 / 4),
    (11 / 5, -383 / 50),
    (53 / 5, -2189 / 50),
)
EXAMPLE2_BLEND_RADIUS = 0.1


@dataclass(frozen=True, eq=False)
class PiecewisePsi:
    """
    Piecewise polynomial psi(mu)

    pieces[k] is valid on [breakpoints[k-1], breakpoints[k]]; the first and last pieces
    extend to -inf and +inf.
    """
    breakpoints: np.ndarray
    pieces: Tuple[Polynomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", np.asarray(self.breakpoints, dtype=float))
        object.__setattr__(self, "pieces", tuple(Polynomial(p.coef if isinstance(p, Polynomial) else p)
                                                 for p in self.pieces))
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise InvalidInstance("piecewise psi needs one more piece than breakpoints")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise InvalidInstance("breakpoints must be strictly increasing")
        if any(p.degree() > 2 for p in self.pieces):
            raise InvalidInstance("psi pieces are linear or quadratic")

    @property
    def d(self) -> int:
        """Number of linear pieces"""
        return sum(1 for p in self.pieces if p.degree() <= 1)

    def _index(self, mu):
        return np.searchsorted(self.breakpoints, mu, side="left")

    def _apply(self, mu, order):
        arr, scalar = _as_array(mu)
        flat = arr.ravel()
        idx = self._index(flat)
        out = np.empty_like(flat)
        for k, piece in enumerate(self.pieces):
            mask = idx == k
            if mask.any():
                out[mask] = piece.deriv(order)(flat[mask]) if order else piece(flat[mask])
        return _out(out.reshape(arr.shape), scalar)

    def value(self, mu):
        return self._apply(mu, 0)

    def d1(self, mu):
        return self._apply(mu, 1)

    def d2(self, mu):
        return self._apply(mu, 2)

    def inverse(self, t):
        """mu with psi(mu) = t, piece by piece in closed form"""
        arr, scalar = _as_array(t)
        flat = arr.ravel()
        levels = np.array([self.pieces[k](bp) for k, bp in enumerate(self.breakpoints)])
        idx = np.searchsorted(levels, flat, side="left")
        out = np.empty_like(flat)
        for k, piece in enumerate(self.pieces):
            mask = idx == k
            if not mask.any():
                continue
            coef = np.pad(piece.coef, (0, 3 - len(piece.coef)))
            q0, q1, q2 = coef
            if q2 == 0.0:
                out[mask] = (flat[mask] - q0) / q1
            else:
                disc = np.maximum(q1 * q1 - 4.0 * q2 * (q0 - flat[mask]), 0.0)
                out[mask] = (np.sqrt(disc) - q1) / (2.0 * q2)
        return _out(out.reshape(arr.shape), scalar)

    def continuity_errors(self) -> np.ndarray:
        """Max of value and slope jumps at each internal breakpoint"""
        errs = []
        for k, bp in enumerate(self.breakpoints):
            left, right = self.pieces[k], self.pieces[k + 1]
            errs.append(max(abs(left(bp) - right(bp)), abs(left.deriv()(bp) - right.deriv()(bp))))
        return np.array(errs)

    def sample_span(self, pad: float = 1.0) -> Tuple[float, float]:
        if len(self.breakpoints) == 0:
            return (-pad, pad)
        return (float(self.breakpoints[0]) - pad, float(self.breakpoints[-1]) + pad)

    def check(self):
        """Raise NonMonotonePsi unless psi is C1 and strictly increasing"""
        errs = self.continuity_errors()
        if errs.size and errs.max() > BUILDER_CONFIG["continuity_tol"] * (1 + np.abs(self.breakpoints).max()):
            raise NonMonotonePsi(f"psi is not C1 (jump {errs.max():.3e})")
        if any(p.degree() < 1 for p in (self.pieces[0], self.pieces[-1])):
            raise NonMonotonePsi("end pieces of psi must be non-constant lines")
        if self.pieces[0].deriv()(0.0) <= 0 or self.pieces[-1].deriv()(0.0) <= 0:
            raise NonMonotonePsi("end pieces of psi must have positive slope")
        mus = np.linspace(*self.sample_span(), BUILDER_CONFIG["monotone_samples"])
        mus = np.concatenate([mus, self.breakpoints])
        slopes = self.d1(mus)
        if np.any(slopes <= 0):
            raise NonMonotonePsi(f"psi' <= 0 at mu={float(mus[np.argmax(slopes <= 0)]):.6g}")

    def to_dict(self) -> dict:
        return {
            "breakpoints": [float(b) for b in self.breakpoints],
            "pieces": [[float(c) for c in p.coef] for p in self.pieces],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewisePsi":
        return cls(np.array(data["breakpoints"], dtype=float),
                   tuple(Polynomial(np.array(c, dtype=float)) for c in data["pieces"]))


def _line(slope: float, intercept: float) -> Polynomial:
    return Polynomial([intercept, slope])


def _blend(slope_left: float, intercept_left: float, slope_right: float, left: float,
           radius: float) -> Polynomial:
    """Quadratic tangent to the left line at `left` and to the right line at left + 2 radius"""
    lin = _line(slope_left, intercept_left)
    bump = Polynomial([-left, 1.0]) ** 2 * ((slope_right - slope_left) / (4.0 * radius))
    return lin + bump


def _secant_lines(s: Spectrum, mus: np.ndarray):
    vals = phi(s, mus)
    lines = []
    for j in range(len(mus) // 2):
        m1, m2 = mus[2 * j], mus[2 * j + 1]
        slope = (vals[2 * j + 1] - vals[2 * j]) / (m2 - m1)
        lines.append((float(slope), float(vals[2 * j] - slope * m1)))
    return lines


def _check_lines(s: Spectrum, mus: np.ndarray, lines):
    vals = phi(s, mus)
    tol = BUILDER_CONFIG["line_match_tol"]
    for j, (slope, intercept) in enumerate(lines):
        for i in (2 * j, 2 * j + 1):
            miss = abs(slope * mus[i] + intercept - vals[i])
            if miss > tol * (1 + vals[i]):
                raise BadSequence(f"line {j + 1} misses phi({mus[i]:.6g}) by {miss:.3e}")


def _blend_below_phi(s: Spectrum, blend: Polynomial, left: float, right: float) -> bool:
    mus = np.linspace(left, right, BUILDER_CONFIG["blend_samples"] + 2)[1:-1]
    return bool(np.all(blend(mus) < phi(s, mus)))


def build_psi(s: Spectrum, mus: Sequence[float], o_overrides: Optional[Sequence[float]] = None,
              lines: Optional[Sequence[Tuple[float, float]]] = None,
              blend_radius: Optional[float] = None) -> PiecewisePsi:
    """
    Piecewise psi crossing phi at every mus[i]

    Lines L_j pass through (mus[2j-2], phi) and (mus[2j-1], phi) unless `lines` are given;
    consecutive lines are joined by quadratic blends of half-width `blend_radius` centred at
    their intersection.
    """
    mus = np.asarray(mus, dtype=float)
    if mus.ndim != 1 or len(mus) < 2 or len(mus) % 2:
        raise BadSequence(f"need an even number (>= 2) of multipliers, got {len(mus)}")
    if np.any(np.diff(mus) <= 0):
        raise BadSequence("multipliers must be strictly increasing")
    lo, hi = max(0.0, -s.lambda2), -s.lambda1
    if mus[0] <= lo or mus[-1] >= hi:
        raise BadSequence(f"multipliers must lie in ({lo:.6g}, {hi:.6g})")
    if s.lambda1_multiplicity > 1 or abs(s.g[0]) <= s.zero_threshold:
        raise BadSequence("phi has no pole at -lambda1 (g1 = 0 or repeated lambda1)")

    phi_start = phi(s, mus[0])
    if phi_d1(s, mus[0]) < -1e-12 * (1 + phi_start):
        raise PhiNotIncreasing(f"phi'({mus[0]:.6g}) = {phi_d1(s, mus[0]):.3e} < 0")

    d = len(mus) // 2
    if lines is None:
        lines = _secant_lines(s, mus)
    else:
        lines = [(float(a), float(b)) for a, b in lines]
        if len(lines) != d:
            raise BadSequence(f"expected {d} lines, got {len(lines)}")
        _check_lines(s, mus, lines)

    slopes = np.array([ln[0] for ln in lines])
    if np.any(slopes <= 0):
        raise BadSequence("every line must have positive slope")
    if np.any(np.diff(slopes) <= 0):
        raise BadSequence("line slopes must strictly increase")

    # exact intersections o_j of L_j and L_{j+1}
    centres = []
    for j in range(d - 1):
        (s1, t1), (s2, t2) = lines[j], lines[j + 1]
        o = (t1 - t2) / (s2 - s1)
        if not mus[2 * j + 1] < o < mus[2 * j + 2]:
            raise BadSequence(f"lines {j + 1} and {j + 2} meet at {o:.6g}, outside "
                              f"({mus[2 * j + 1]:.6g}, {mus[2 * j + 2]:.6g})")
        centres.append(o)

    o_for_radius = list(centres)
    if o_overrides is not None:
        if len(o_overrides) != d - 1:
            raise BadSequence(f"expected {d - 1} intersection overrides, got {len(o_overrides)}")
        for j, (given, exact) in enumerate(zip(o_overrides, centres)):
            if not mus[2 * j + 1] < given < mus[2 * j + 2]:
                raise BadSequence(f"o_{j + 1} = {given} outside ({mus[2 * j + 1]}, {mus[2 * j + 2]})")
            if abs(given - exact) > BUILDER_CONFIG["o_match_tol"]:
                raise BadSequence(f"o_{j + 1} = {given} is not the intersection {exact:.6g}")
        o_for_radius = [float(v) for v in o_overrides]

    if d == 1:
        psi = PiecewisePsi(np.array([]), (_line(*lines[0]),))
        psi.check()
        return psi

    explicit = blend_radius is not None
    if explicit:
        radius = float(blend_radius)
        if radius <= 0:
            raise BadSequence("blend radius must be positive")
    else:
        radius = 0.5 * min(min(abs(o - mus[2 * j + 1]), abs(o - mus[2 * j + 2]))
                           for j, o in enumerate(o_for_radius))

    for _ in range(BUILDER_CONFIG["max_blend_halvings"] + 1):
        breakpoints, pieces, ok = [], [_line(*lines[0])], True
        for j, o in enumerate(centres):
            left, right = o - radius, o + radius
            if explicit and (left < mus[2 * j + 1] - 1e-12 or right > mus[2 * j + 2] + 1e-12):
                raise BadSequence(f"blend [{left:.6g}, {right:.6g}] overlaps a crossing point")
            blend = _blend(*lines[j], lines[j + 1][0], left, radius)
            if not _blend_below_phi(s, blend, left, right):
                ok = False
                break
            breakpoints += [left, right]
            pieces += [blend, _line(*lines[j + 1])]
        if ok:
            break
        if explicit:
            raise BadSequence(f"blend of radius {radius:.6g} around o_{j + 1} crosses phi")
        radius *= 0.5
        logger.warning(f"blend around o_{j + 1} crosses phi; halving radius to {radius:.3e}")
    else:
        raise BadSequence("could not place blends below phi")

    psi = PiecewisePsi(np.array(breakpoints), tuple(pieces))
    psi.check()
    logger.debug(f"build_psi: d={d}, radius={radius:.6g}, breakpoints={np.round(breakpoints, 6)}")
    return psi


class PiecewiseFromPsi(ConvexScalar):
    """f0 with f0'(y) = (a/2) psi^{-1}(a y + b), so that a (f0')^{-1}(a mu/2) + b = psi(mu)"""
    kind = "piecewise_from_psi"

    def __init__(self, psi: PiecewisePsi, a: float = 1.0, b: float = 0.0):
        if not a > 0:
            raise InvalidInstance(f"a must be positive, got {a}")
        psi.check()
        self.psi = psi
        self.a = float(a)
        self.b = float(b)
        self.y_breaks = (psi.value(psi.breakpoints) - self.b) / self.a
        self.constants = self._integration_constants()

    def _mu(self, y):
        return self.psi.inverse(self.a * np.asarray(y, dtype=float) + self.b)

    def _antiderivative(self, k: int, y):
        """Integral of f0' on piece k without its constant"""
        a, b = self.a, self.b
        coef = np.pad(self.psi.pieces[k].coef, (0, 3 - len(self.psi.pieces[k].coef)))
        q0, q1, q2 = coef
        y = np.asarray(y, dtype=float)
        if q2 == 0.0:
            return a / (2.0 * q1) * (a * y * y / 2.0 + (b - q0) * y)
        disc = np.maximum(q1 * q1 - 4.0 * q2 * q0 + 4.0 * q2 * b + 4.0 * q2 * a * y, 0.0)
        return disc ** 1.5 / (24.0 * q2 * q2) - a * q1 * y / (4.0 * q2)

    def _integration_constants(self) -> np.ndarray:
        consts = [0.0]
        for k, yk in enumerate(self.y_breaks, start=1):
            consts.append(consts[-1] + float(self._antiderivative(k - 1, yk))
                          - float(self._antiderivative(k, yk)))
        return np.array(consts)

    def value(self, y):
        arr, scalar = _as_array(y)
        flat = arr.ravel()
        idx = np.searchsorted(self.y_breaks, flat, side="left")
        out = np.empty_like(flat)
        for k in range(len(self.psi.pieces)):
            mask = idx == k
            if mask.any():
                out[mask] = self._antiderivative(k, flat[mask]) + self.constants[k]
        return _out(out.reshape(arr.shape), scalar)

    def d1(self, y):
        arr, scalar = _as_array(y)
        return _out(0.5 * self.a * self._mu(arr), scalar)

    def d2(self, y):
        arr, scalar = _as_array(y)
        return _out(self.a ** 2 / (2.0 * self.psi.d1(self._mu(arr))), scalar)

    def d3(self, y):
        arr, scalar = _as_array(y)
        mu = self._mu(arr)
        slope = self.psi.d1(mu)
        return _out(-self.a ** 3 * self.psi.d2(mu) / (2.0 * slope ** 3), scalar)

    def inv_d1(self, t):
        arr, scalar = _as_array(t)
        return _out((self.psi.value(2.0 * arr / self.a) - self.b) / self.a, scalar)


def psi_to_f0(p: PiecewisePsi, a: float = 1.0, b: float = 0.0) -> PiecewiseFromPsi:
    """Convex f0 = (1/2) integral of psi^{-1}, raising NonMonotonePsi if psi is not increasing"""
    return PiecewiseFromPsi(p, a, b)


def canned_example(which: str) -> TrslInstance:
    """Example instances on H = diag(-5, -1), c = (1, 1), a = 1, b = 0"""
    key = which.lower().replace("_", "").replace("-", "")
    if key == "example1":
        return TrslInstance(CANNED_H, CANNED_C, 1.0, 0.0, QuarticExample1(), name="example1")
    if key == "example2d3":
        psi = build_psi(decompose(CANNED_H, CANNED_C), EXAMPLE2_MUS, o_overrides=EXAMPLE2_O,
                        lines=EXAMPLE2_LINES, blend_radius=EXAMPLE2_BLEND_RADIUS)
        return TrslInstance(CANNED_H, CANNED_C, 1.0, 0.0, psi_to_f0(psi), name="example2d3")
    raise ValueError(f"unknown example '{which}' (expected example1 or example2d3)")


def random_admissible_mus(s: Spectrum, d: int, rng, min_gap: float = 0.03,
                          max_tries: int = 1000) -> np.ndarray:
    """Draw 2d increasing multipliers where phi is increasing, at least min_gap apart"""
    lo, hi = max(0.0, -s.lambda2), -s.lambda1
    # phi is convex on (lo, hi); locate where it starts increasing
    grid = np.linspace(lo, hi, 4098)[1:-1]
    start = float(grid[np.argmax(phi_d1(s, grid) > 0)])
    span = hi - start
    left, right = start + 0.02 * span, hi - 0.04 * span
    for _ in range(max_tries):
        mus = np.sort(rng.uniform(left, right, 2 * d))
        if np.all(np.diff(mus) >= min_gap):
            return mus
    raise BadSequence(f"could not draw {2 * d} multipliers {min_gap} apart in ({left:.3g}, {right:.3g})")

