"""
Local non-global minimizers by root analysis of phi - psi on (max(0, -lambda2), -lambda1)
"""

from dataclasses import dataclass, field
from enum import Enum
import logging
from typing import List, Optional, Tuple, Union

import numpy as np

from config import LOCAL_CONFIG
from trsc.convexlib import (
    LogConcavity, LogConcavityStatus, QuadraticOracle, TrscInstance, TrslInstance,
    log_concavity_holds, oracles_of, psi_general, psi_general_sweep, psi_trsl, psi_trsl_d1,
    y_of_mu_general,
)
from trsc.errors import InvalidInstance, OutOfDomain
from trsc.global_solver import bisect, kkt_residuals
from trsc.spectral import phi, phi_d1, x_of_mu

logger = logging.getLogger(__name__)


# ===== PRECHECK =====

@dataclass(frozen=True)
class Proceed:
    interval: Tuple[float, float]


@dataclass(frozen=True)
class NoLocalNonGlobal:
    reason: str


def precheck(inst) -> Union[Proceed, NoLocalNonGlobal]:
    """Cheap dichotomies that rule out local non-global minimizers"""
    s = inst.spectrum
    if isinstance(inst, TrscInstance) and inst.k != 1:
        raise InvalidInstance(f"local enumeration needs a single constraint, got k={inst.k}")
    if s.lambda1 >= 0:
        return NoLocalNonGlobal("convex")
    if s.lambda1_multiplicity > 1:
        return NoLocalNonGlobal("multiplicity")
    if s.hard_case:
        return NoLocalNonGlobal("g1_zero")
    if isinstance(inst, TrscInstance) and isinstance(inst.f_vec, QuadraticOracle) \
            and inst.f_vec.is_constant and inst.f_vec.r >= 0:
        return NoLocalNonGlobal("empty_slack")

    lo, hi = max(0.0, -s.lambda2), -s.lambda1
    dom_lo, dom_hi = inst.psi_domain()
    lo, hi = max(lo, dom_lo), min(hi, dom_hi)
    if not lo < hi:
        return NoLocalNonGlobal("empty_interval")
    return Proceed((lo, hi))


# ===== ROOT ENUMERATION =====

class Classification(str, Enum):
    STRICT_LOCAL = "StrictLocal"
    REJECTED_NECESSARY = "RejectedNecessary"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class RootRecord:
    mu: float
    gap_d1: float
    bracket: Tuple[float, float]
    classification: Classification
    residual: float = 0.0
    tangential: bool = False


class _Secular:
    """phi - psi and its derivative for either instance kind"""

    def __init__(self, inst):
        self.inst = inst
        self.s = inst.spectrum
        self.general = isinstance(inst, TrscInstance)

    def psi(self, mu):
        if self.general:
            if np.ndim(mu):
                return psi_general_sweep(self.inst, mu)[0]
            return psi_general(self.inst, float(mu)).psi
        return psi_trsl(self.inst, mu)

    def psi_d1(self, mu):
        if self.general:
            if np.ndim(mu):
                return psi_general_sweep(self.inst, mu)[1]
            return psi_general(self.inst, float(mu)).psi_d1
        return psi_trsl_d1(self.inst, mu)

    def gap(self, mu):
        return phi(self.s, mu) - self.psi(mu)

    def gap_d1(self, mu):
        return phi_d1(self.s, mu) - self.psi_d1(mu)


def _classify(gap_d1: float, phi_slope: float) -> Classification:
    tol = LOCAL_CONFIG["classify_tol"] * (1 + abs(phi_slope))
    if gap_d1 > tol:
        return Classification.STRICT_LOCAL
    if gap_d1 < -tol:
        return Classification.REJECTED_NECESSARY
    return Classification.INDETERMINATE


def _record(sec: _Secular, mu: float, bracket, tangential: bool = False) -> RootRecord:
    slope = phi_d1(sec.s, mu)
    gap_d1 = slope - sec.psi_d1(mu)
    residual = sec.gap(mu)
    if abs(residual) > LOCAL_CONFIG["root_tol"] * (1 + phi(sec.s, mu)):
        logger.warning(f"root at mu={mu:.12g} has residual {residual:.3e}")
    cls = Classification.INDETERMINATE if tangential else _classify(gap_d1, slope)
    return RootRecord(float(mu), float(gap_d1), (float(bracket[0]), float(bracket[1])), cls,
                      float(residual), tangential)


def enumerate_roots(inst, grid_points: Optional[int] = None) -> List[RootRecord]:
    """Every root of phi = psi on the candidate interval, classified by the sign of phi' - psi'"""
    pre = precheck(inst)
    if isinstance(pre, NoLocalNonGlobal):
        logger.info(f"precheck: no local non-global minimizer ({pre.reason})")
        return []
    lo, hi = pre.interval
    grid_points = grid_points or LOCAL_CONFIG["grid_points"]
    grid = np.linspace(lo + LOCAL_CONFIG["left_margin"], hi - LOCAL_CONFIG["right_margin"], grid_points)
    xtol = LOCAL_CONFIG["bisect_rel_tol"] * (hi - lo)

    sec = _Secular(inst)
    vals = sec.gap(grid)
    slopes = sec.gap_d1(grid)
    records: List[RootRecord] = []

    for i in np.flatnonzero(vals == 0.0):
        records.append(_record(sec, grid[i], (grid[i], grid[i])))

    crossing = np.flatnonzero(vals[:-1] * vals[1:] < 0)
    for i in crossing:
        mu, a, b, _ = bisect(sec.gap, grid[i], grid[i + 1], f_lo=vals[i], xtol=xtol)
        records.append(_record(sec, mu, (a, b)))

    # critical points of phi - psi catch double roots and root pairs inside one cell
    for i in np.flatnonzero(slopes[:-1] * slopes[1:] < 0):
        if vals[i] * vals[i + 1] <= 0:
            continue
        mu_c, _, _, _ = bisect(sec.gap_d1, grid[i], grid[i + 1], f_lo=slopes[i], xtol=xtol)
        val_c = sec.gap(mu_c)
        if abs(val_c) <= LOCAL_CONFIG["tangency_tol"] * (1 + phi(sec.s, mu_c)):
            records.append(_record(sec, mu_c, (grid[i], grid[i + 1]), tangential=True))
        elif (val_c > 0) != (vals[i] > 0):
            for a, b, fa in ((grid[i], mu_c, vals[i]), (mu_c, grid[i + 1], val_c)):
                mu, lo_b, hi_b, _ = bisect(sec.gap, a, b, f_lo=fa, xtol=xtol)
                records.append(_record(sec, mu, (lo_b, hi_b)))

    records.sort(key=lambda r: r.mu)
    unique: List[RootRecord] = []
    for rec in records:
        if unique and abs(rec.mu - unique[-1].mu) <= LOCAL_CONFIG["duplicate_tol"] * (1 + abs(rec.mu)):
            continue
        unique.append(rec)

    strict = sum(r.classification == Classification.STRICT_LOCAL for r in unique)
    logger.info(f"enumerate_roots: {len(unique)} roots on ({lo:.6g}, {hi:.6g}), {strict} strict local")
    return unique


# ===== CANDIDATE POINTS =====

@dataclass(frozen=True, eq=False)
class CandidatePoint:
    mu: float
    x: np.ndarray
    y: np.ndarray
    residuals: dict = field(default_factory=dict)
    objective: float = float("nan")

    @property
    def point(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


def materialize(inst, r: Union[RootRecord, float]) -> CandidatePoint:
    """(x(mu), y(mu)) at a root together with its KKT residuals"""
    mu = float(r.mu if isinstance(r, RootRecord) else r)
    x = x_of_mu(inst.spectrum, mu)
    if isinstance(inst, TrscInstance):
        y = y_of_mu_general(inst, mu)
        objective = inst.objective(x, y)
    else:
        y = np.array([inst.f0.inv_d1(inst.a * mu / 2.0)])
        objective = inst.objective(x, float(y[0]))
        gap = abs(float(x @ x) - inst.a * y[0] - inst.b)
        if gap > LOCAL_CONFIG["constraint_tol"] * (1 + abs(inst.b)):
            logger.warning(f"materialize: constraint residual {gap:.3e} at mu={mu:.10g}")
    f0_oracle, constraints = oracles_of(inst)
    residuals = kkt_residuals(inst.H, inst.c, f0_oracle, constraints, x, y, [mu])
    return CandidatePoint(mu, x, y, residuals, objective)


# ===== UNIQUENESS =====

class Uniqueness(str, Enum):
    AT_MOST_ONE_PROVEN = "AtMostOne(Proven)"
    AT_MOST_ONE_SAMPLED = "AtMostOne(Sampled)"
    MULTIPLE_POSSIBLE = "MultiplePossible"


@dataclass(frozen=True)
class UniquenessReport:
    status: Uniqueness
    exact_classification: bool
    concavity: Optional[LogConcavity] = None
    reason: str = ""

    @property
    def at_most_one(self) -> bool:
        return self.status != Uniqueness.MULTIPLE_POSSIBLE


def uniqueness_report(inst: TrslInstance) -> UniquenessReport:
    """At most one local non-global minimizer when ln psi is concave on the candidate interval"""
    if not isinstance(inst, TrslInstance):
        raise InvalidInstance("uniqueness analysis needs a scalar linear-coupling instance")
    pre = precheck(inst)
    if isinstance(pre, NoLocalNonGlobal):
        return UniquenessReport(Uniqueness.AT_MOST_ONE_PROVEN, True, reason=pre.reason)
    try:
        conc = log_concavity_holds(inst, pre.interval)
    except OutOfDomain as exc:
        return UniquenessReport(Uniqueness.MULTIPLE_POSSIBLE, False, reason=str(exc))
    if conc.status == LogConcavityStatus.PROVEN:
        return UniquenessReport(Uniqueness.AT_MOST_ONE_PROVEN, True, conc, conc.reason)
    if conc.status == LogConcavityStatus.SAMPLED_TRUE:
        return UniquenessReport(Uniqueness.AT_MOST_ONE_SAMPLED, False, conc, conc.reason)
    return UniquenessReport(Uniqueness.MULTIPLE_POSSIBLE, False, conc,
                            f"ln psi not concave at mu={conc.mu:.6g}")
