"""
Second-order certificates: tangent basis W(mu), reduced Hessian B(mu), determinant identity
"""

from dataclasses import dataclass, field
from enum import Enum
import logging

import numpy as np
from scipy import linalg

from config import CERTIFY_CONFIG
from trsc.convexlib import TrscInstance, oracles_of
from trsc.errors import DegenerateG1, DimensionMismatch, NotPositiveDefinite
from trsc.global_solver import check_global_certificate, kkt_residuals
from trsc.local import CandidatePoint
from trsc.spectral import Spectrum, phi_d1

logger = logging.getLogger(__name__)


def build_W(s: Spectrum, mu: float, grad_f_y) -> np.ndarray:
    """(n+m) x (n+m-1) basis of {(u, t): x(mu)^T u + 0.5 grad f^T t = 0}"""
    grad_f_y = np.atleast_1d(np.asarray(grad_f_y, dtype=float))
    n, m = s.n, len(grad_f_y)
    g1 = float(s.g[0])
    if abs(g1) <= s.zero_threshold:
        raise DegenerateG1(f"g1 = {g1:.3e} vanishes")
    sigma = s.lambdas[0] + mu
    scale = -g1 / sigma

    M = np.zeros((n + m, n + m - 1))
    M[0, : n - 1] = s.g[1:] / (s.lambdas[1:] + mu)
    M[0, n - 1:] = -0.5 * grad_f_y
    M[1:n, : n - 1] = scale * np.eye(n - 1)
    M[n:, n - 1:] = scale * np.eye(m)

    rotate = np.eye(n + m)
    rotate[:n, :n] = s.eigvecs
    return rotate @ M


def tangent_residual(s: Spectrum, mu: float, grad_f_y, W: np.ndarray) -> float:
    """||[x(mu)^T, 0.5 grad f^T] W||"""
    x = -s.eigvecs @ (s.g / (s.lambdas + mu))
    normal = np.concatenate([x, 0.5 * np.atleast_1d(grad_f_y)])
    return float(np.linalg.norm(normal @ W))


@dataclass(frozen=True, eq=False)
class ReducedHessian:
    mu: float
    B: np.ndarray
    B_rank_one: np.ndarray
    W: np.ndarray
    min_eig: float
    det_direct: float
    det_formula: float
    necessary_gap: float

    @property
    def det_relative_error(self) -> float:
        return abs(self.det_direct - self.det_formula) / max(abs(self.det_direct), abs(self.det_formula), 1e-300)


def build_B(s: Spectrum, mu: float, grad_f_y, hess_term) -> ReducedHessian:
    """
    B(mu) = W^T blockdiag(H + mu I, hess_term) W, its rank-one form and the determinant identity

    hess_term is grad^2 f0(y) + (mu/2) grad^2 f(y) and must be positive definite.
    """
    grad_f_y = np.atleast_1d(np.asarray(grad_f_y, dtype=float))
    hess_term = np.atleast_2d(np.asarray(hess_term, dtype=float))
    n, m = s.n, len(grad_f_y)
    if hess_term.shape != (m, m):
        raise DimensionMismatch(f"hess_term is {hess_term.shape}, expected ({m}, {m})")
    try:
        factor = linalg.cho_factor(0.5 * (hess_term + hess_term.T))
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite("inner Hessian term is not positive definite") from exc

    W = build_W(s, mu, grad_f_y)
    G = np.zeros((n + m, n + m))
    G[:n, :n] = s.matrix + mu * np.eye(n)
    G[n:, n:] = hess_term
    B = W.T @ G @ W
    B = 0.5 * (B + B.T)

    g1 = float(s.g[0])
    sigma = float(s.lambdas[0] + mu)
    shifted = s.lambdas[1:] + mu
    ratio2 = (g1 / sigma) ** 2
    B_bar = np.zeros((n + m - 1, n + m - 1))
    B_bar[: n - 1, : n - 1] = np.diag(ratio2 * shifted)
    B_bar[n - 1:, n - 1:] = ratio2 * hess_term
    u_bar = np.concatenate([s.g[1:] / shifted, -0.5 * grad_f_y])
    B_rank_one = B_bar + sigma * np.outer(u_bar, u_bar)

    quad = 0.5 * float(grad_f_y @ linalg.cho_solve(factor, grad_f_y))
    necessary_gap = float(phi_d1(s, mu)) - quad
    det_bar = np.prod(ratio2 * shifted) * ratio2 ** m * float(np.prod(np.diag(factor[0])) ** 2)
    det_formula = -(sigma ** 3) / (2.0 * g1 * g1) * det_bar * necessary_gap

    eigs = np.linalg.eigvalsh(B)
    return ReducedHessian(
        mu=float(mu),
        B=B,
        B_rank_one=B_rank_one,
        W=W,
        min_eig=float(eigs[0]),
        det_direct=float(np.linalg.det(B)),
        det_formula=float(det_formula),
        necessary_gap=necessary_gap,
    )


def reduced_hessian_at(inst, mu: float, y) -> ReducedHessian:
    """build_B with the gradient and inner Hessian of the instance's coupling constraint at y"""
    f0_oracle, constraints = oracles_of(inst)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    f = constraints[0]
    return build_B(inst.spectrum, mu, f.grad(y), f0_oracle.hess(y) + 0.5 * mu * f.hess(y))


class CertificateKind(str, Enum):
    STRICT_LOCAL_NON_GLOBAL = "StrictLocalNonGlobal"
    GLOBAL_MIN = "GlobalMin"
    NOT_LOCAL_MIN = "NotLocalMin"
    INDETERMINATE = "Indeterminate"


@dataclass
class Certificate:
    kind: CertificateKind
    evidence: dict = field(default_factory=dict)


def _kkt_ok(res: dict, c) -> list:
    tol = CERTIFY_CONFIG["kkt_tol"]
    failed = []
    if res["stationarity_x"] > tol * (1 + float(np.linalg.norm(c))):
        failed.append("stationarity_x")
    if res["stationarity_y"] > tol * (1 + res["grad_f0_norm"]):
        failed.append("stationarity_y")
    if res["active_gap"] > tol * (1 + res["x_norm2"]):
        failed.append("active_constraint")
    if res["min_multiplier"] < 0:
        failed.append("dual_feasibility")
    return failed


def certify_local(inst, candidate: CandidatePoint) -> Certificate:
    """KKT, x = 0 routing, multiplier interval, then the sign of the reduced Hessian"""
    if isinstance(inst, TrscInstance) and inst.k != 1:
        raise DimensionMismatch("local certificates cover a single coupling constraint")
    s = inst.spectrum
    f0_oracle, constraints = oracles_of(inst)
    mu = float(candidate.mu)
    x, y = np.asarray(candidate.x, dtype=float), np.atleast_1d(candidate.y)
    res = candidate.residuals or {}
    if "stationarity_x" not in res:
        res = kkt_residuals(inst.H, inst.c, f0_oracle, constraints, x, y, [mu])
    evidence = {"mu": mu, "residuals": res}

    failed = _kkt_ok(res, inst.c)
    if failed:
        evidence["kkt_failed"] = failed
        return Certificate(CertificateKind.NOT_LOCAL_MIN, evidence)

    if float(np.linalg.norm(x)) <= CERTIFY_CONFIG["x_zero_tol"] or mu >= -s.lambda1:
        check = check_global_certificate(inst.H, inst.c, f0_oracle, constraints, x, y, [mu])
        evidence["global"] = check.violations
        evidence["route"] = "x_zero" if np.linalg.norm(x) <= CERTIFY_CONFIG["x_zero_tol"] else "psd"
        kind = CertificateKind.GLOBAL_MIN if check.valid else CertificateKind.NOT_LOCAL_MIN
        return Certificate(kind, evidence)

    lo = max(0.0, -s.lambda2)
    if mu <= lo + CERTIFY_CONFIG["interval_tol"] or s.lambda1_multiplicity > 1:
        evidence["reason"] = "multiplier outside (max(0, -lambda2), -lambda1)"
        return Certificate(CertificateKind.NOT_LOCAL_MIN, evidence)
    if abs(s.g[0]) <= s.zero_threshold:
        evidence["reason"] = "c orthogonal to the lambda1 eigenvector"
        return Certificate(CertificateKind.NOT_LOCAL_MIN, evidence)

    red = reduced_hessian_at(inst, mu, y)
    evidence.update(min_eig=red.min_eig, det_direct=red.det_direct, det_formula=red.det_formula,
                    necessary_gap=red.necessary_gap)
    tol = CERTIFY_CONFIG["psd_tol"] * (1 + float(np.linalg.norm(red.B, 2)))
    if red.min_eig >= tol:
        kind = CertificateKind.STRICT_LOCAL_NON_GLOBAL
    elif red.min_eig < -tol:
        kind = CertificateKind.NOT_LOCAL_MIN
    else:
        kind = CertificateKind.INDETERMINATE
    logger.debug(f"certify_local: mu={mu:.10g}, min_eig(B)={red.min_eig:.3e} -> {kind.value}")
    return Certificate(kind, evidence)
