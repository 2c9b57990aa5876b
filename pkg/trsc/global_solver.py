"""
Global solver for the linear-coupling instance and the global certificate checker

The global multiplier is the unique root of phi(mu) = psi(mu) right of -lambda1 (easy case),
or -lambda1 itself with an eigenvector ray completing x (hard case).
"""

from dataclasses import dataclass, field
from enum import Enum
import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np

from config import GLOBAL_CONFIG
from trsc.convexlib import TrslInstance, oracles_of, psi_trsl
from trsc.errors import BracketFailure, ConvexInstance, DimensionMismatch
from trsc.spectral import Spectrum, phi, x_of_mu

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GlobalSolution:
    x: np.ndarray
    y: float
    mu: float
    hard_case: bool
    objective: float
    iterations: int = 0

    @property
    def point(self) -> np.ndarray:
        return np.concatenate([self.x, np.atleast_1d(self.y)])


def bisect(fun: Callable[[float], float], lo: float, hi: float, f_lo: Optional[float] = None,
           xtol: float = 0.0, ftol: Callable[[float, float], bool] = None,
           max_iter: int = None) -> Tuple[float, float, float, int]:
    """
    Bisection on a bracketed sign change of fun

    Stops when hi - lo <= xtol, when ftol(mu, f(mu)) is true, or after max_iter halvings.
    Returns (mid, lo, hi, iterations).
    """
    max_iter = max_iter or GLOBAL_CONFIG["max_bisect"]
    f_lo = fun(lo) if f_lo is None else f_lo
    mid = 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid, lo, hi, it
        f_mid = fun(mid)
        if f_mid == 0.0 or (ftol is not None and ftol(mid, f_mid)):
            return mid, lo, hi, it
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= xtol:
            return 0.5 * (lo + hi), lo, hi, it
    return mid, lo, hi, max_iter


def _psi_left_end(inst: TrslInstance) -> float:
    return inst.psi_domain()[0]


def _easy_root(inst: TrslInstance, s: Spectrum) -> Tuple[float, int]:
    """Root of phi - psi on (-lambda1, inf), where phi decreases and psi increases"""
    left = max(-s.lambda1, _psi_left_end(inst))
    gap = lambda mu: phi(s, mu) - psi_trsl(inst, mu)
    step = max(1.0, abs(s.lambda1))

    hi = left + step
    for _ in range(GLOBAL_CONFIG["max_expand"]):
        if gap(hi) < 0:
            break
        hi = left + 2.0 * (hi - left)
    else:
        raise BracketFailure(f"phi - psi stays positive up to mu={hi:.6g}")

    lo = left + 0.5 * (hi - left)
    for _ in range(GLOBAL_CONFIG["max_expand"]):
        if gap(lo) > 0:
            break
        if gap(lo) == 0:
            return lo, 0
        lo = left + 0.5 * (lo - left)
    else:
        raise BracketFailure(f"phi - psi stays negative down to mu={lo:.17g}")
    logger.debug(f"global bracket: ({lo:.6g}, {hi:.6g})")

    tol = GLOBAL_CONFIG["root_tol"]
    mu, _, _, its = bisect(gap, lo, hi,
                           ftol=lambda m, f: abs(f) <= tol * max(1.0, psi_trsl(inst, m)))
    return mu, its


def solve_global(inst: TrslInstance) -> GlobalSolution:
    """Global minimizer of a linear-coupling instance with H indefinite"""
    s = inst.spectrum
    if s.lambda1 >= 0:
        raise ConvexInstance(f"H is positive semidefinite (lambda1={s.lambda1:.6g})")

    if s.hard_case:
        mu = -s.lambda1
        target = psi_trsl(inst, mu)
        x_hat = x_of_mu(s, mu)
        norm2 = float(x_hat @ x_hat)
        if norm2 <= target:
            v1 = s.eigvecs[:, 0].copy()
            if float(inst.c @ v1) > 0:
                v1 = -v1
            tau = math.sqrt(target - norm2)
            x = x_hat + tau * v1
            y = inst.f0.inv_d1(inst.a * mu / 2.0)
            logger.info(f"hard case: mu*={mu:.6g}, ray length tau={tau:.6g}")
            return GlobalSolution(x, float(y), mu, True, inst.objective(x, y))
        logger.debug(f"hard case falls through: ||x_hat||^2={norm2:.6g} > psi={target:.6g}")

    mu, its = _easy_root(inst, s)
    x = x_of_mu(s, mu)
    y = float(inst.f0.inv_d1(inst.a * mu / 2.0))
    logger.info(f"global root mu*={mu:.10g} after {its} bisections")
    return GlobalSolution(x, y, mu, False, inst.objective(x, y), its)


class CertificateStatus(str, Enum):
    VALID = "Valid"
    VIOLATED = "Violated"


@dataclass
class GlobalCertificate:
    status: CertificateStatus
    violations: List[str] = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    unchecked: Tuple[str, ...] = ("slater",)

    @property
    def valid(self) -> bool:
        return self.status == CertificateStatus.VALID


def kkt_residuals(H, c, f0_oracle, constraints, x, y, mus) -> dict:
    """Stationarity, feasibility and complementarity residuals of the multi-constraint problem"""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    if x.shape != c.shape or H.shape != (len(c), len(c)):
        raise DimensionMismatch(f"x has length {len(x)}, problem has n={len(c)}")
    if len(mus) != len(constraints):
        raise DimensionMismatch(f"{len(mus)} multipliers for {len(constraints)} constraints")
    if y.shape != (f0_oracle.dim,):
        raise DimensionMismatch(f"y has length {len(y)}, oracles have m={f0_oracle.dim}")

    values = np.array([f.value(y) for f in constraints])
    xx = float(x @ x)
    grad_y = f0_oracle.grad(y) + 0.5 * mus[0] * constraints[0].grad(y)
    for mu_j, f in zip(mus[1:], constraints[1:]):
        grad_y = grad_y + mu_j * f.grad(y)
    return {
        "stationarity_x": float(np.linalg.norm(H @ x + mus[0] * x + c)),
        "stationarity_y": float(np.linalg.norm(grad_y)),
        "grad_f0_norm": float(np.linalg.norm(f0_oracle.grad(y))),
        "active_gap": abs(xx + values[0]),
        "infeasibility": float(max(0.0, xx + values[0], *values[1:])),
        "complementarity": float(max([0.0] + [abs(m * v) for m, v in zip(mus[1:], values[1:])])),
        "min_multiplier": float(mus.min()),
        "x_norm2": xx,
    }


def check_global_certificate(H, c, f0_oracle, constraints, x, y, mus) -> GlobalCertificate:
    """Sufficient global optimality: KKT with the first constraint active and H + mu1 I PSD"""
    res = kkt_residuals(H, c, f0_oracle, constraints, x, y, mus)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    mu1 = float(np.atleast_1d(mus)[0])
    lambda1 = float(np.linalg.eigvalsh(0.5 * (H + H.T))[0])
    res["psd_margin"] = lambda1 + mu1

    cfg = GLOBAL_CONFIG
    scale = 1.0 + res["x_norm2"]
    violations = []
    if res["min_multiplier"] < -cfg["multiplier_tol"]:
        violations.append("dual_feasibility")
    if res["stationarity_x"] > cfg["stationarity_tol"] * (1 + float(np.linalg.norm(c))):
        violations.append("stationarity_x")
    if res["stationarity_y"] > cfg["stationarity_tol"] * (1 + res["grad_f0_norm"]):
        violations.append("stationarity_y")
    if res["infeasibility"] > cfg["complementarity_tol"] * scale:
        violations.append("feasibility")
    if res["active_gap"] > cfg["complementarity_tol"] * scale:
        violations.append("active_constraint")
    if res["complementarity"] > cfg["complementarity_tol"] * scale:
        violations.append("complementarity")
    if res["psd_margin"] < -cfg["psd_tol"] * (1 + abs(lambda1)):
        violations.append("psd")

    status = CertificateStatus.VIOLATED if violations else CertificateStatus.VALID
    logger.debug(f"global certificate: {status.value} {violations}")
    return GlobalCertificate(status, violations, res)


def check_instance_certificate(inst, x, y, mus) -> GlobalCertificate:
    f0_oracle, constraints = oracles_of(inst)
    return check_global_certificate(inst.H, inst.c, f0_oracle, constraints, x, y, mus)
