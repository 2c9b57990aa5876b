"""
Spectral data of H and the secular function phi(mu) = ||(H + mu I)^{-1} c||^2
"""

from dataclasses import dataclass
from functools import cached_property
import logging

import numpy as np
from scipy import linalg

from config import SPECTRAL_CONFIG
from trsc.errors import DimensionMismatch, NonSymmetric, PoleAt

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigendecomposition H = V diag(lambdas) V^T with rotated linear term g = V^T c"""
    lambdas: np.ndarray
    eigvecs: np.ndarray
    g: np.ndarray
    lambda1_multiplicity: int
    g1_block_norm: float
    zero_threshold: float

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def lambda1(self) -> float:
        return float(self.lambdas[0])

    @property
    def lambda2(self) -> float:
        """Smallest eigenvalue strictly above the lambda_1 eigenspace (inf when none)"""
        if self.lambda1_multiplicity >= self.n:
            return float("inf")
        return float(self.lambdas[self.lambda1_multiplicity])

    @cached_property
    def active(self) -> np.ndarray:
        """Mask of components whose pole is live in phi"""
        return np.abs(self.g) > self.zero_threshold

    @property
    def hard_case(self) -> bool:
        return not bool(self.active[: self.lambda1_multiplicity].any())

    @cached_property
    def matrix(self) -> np.ndarray:
        return (self.eigvecs * self.lambdas) @ self.eigvecs.T

    @cached_property
    def c(self) -> np.ndarray:
        return self.eigvecs @ self.g

    def reconstruction_error(self, H) -> float:
        return float(np.linalg.norm(self.matrix - np.asarray(H, dtype=float)))

    def orthogonality_error(self) -> float:
        return float(np.linalg.norm(self.eigvecs.T @ self.eigvecs - np.eye(self.n)))


def decompose(H, c) -> Spectrum:
    """Dense symmetric eigendecomposition with deterministic eigenvector signs"""
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float).ravel()
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 1:
        raise DimensionMismatch(f"H must be a non-empty square matrix, got shape {H.shape}")
    if c.shape[0] != H.shape[0]:
        raise DimensionMismatch(f"c has length {c.shape[0]}, H is {H.shape[0]}x{H.shape[0]}")

    asym = float(np.linalg.norm(H - H.T))
    if asym > SPECTRAL_CONFIG["symmetry_tol"] * max(1.0, float(np.linalg.norm(H))):
        raise NonSymmetric(asym)

    lambdas, V = linalg.eigh(0.5 * (H + H.T))
    # largest-magnitude entry of each column positive
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivots, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    V = V * signs

    g = V.T @ c
    gap = SPECTRAL_CONFIG["eigengap_tol"] * max(1.0, abs(lambdas[0]))
    multiplicity = int(np.count_nonzero(lambdas - lambdas[0] <= gap))
    zero_threshold = SPECTRAL_CONFIG["zero_coeff_tol"] * float(np.linalg.norm(c))

    spectrum = Spectrum(
        lambdas=lambdas,
        eigvecs=V,
        g=g,
        lambda1_multiplicity=multiplicity,
        g1_block_norm=float(np.linalg.norm(g[:multiplicity])),
        zero_threshold=zero_threshold,
    )
    logger.debug(f"decompose: n={spectrum.n}, lambda1={spectrum.lambda1:.6g}, "
                 f"multiplicity={multiplicity}, |g1 block|={spectrum.g1_block_norm:.3e}")
    return spectrum


def _shifted(s: Spectrum, mu):
    """lambda_i + mu over the live components, raising on a pole"""
    mu = np.asarray(mu, dtype=float)
    lam = s.lambdas[s.active]
    shifted = lam[:, None] + mu.ravel()[None, :]
    if shifted.size and np.any(np.abs(shifted) <= SPECTRAL_CONFIG["pole_tol"]):
        bad = mu.ravel()[np.any(np.abs(shifted) <= SPECTRAL_CONFIG["pole_tol"], axis=0)]
        raise PoleAt(float(bad[0]))
    return mu, shifted


def _secular_sum(s: Spectrum, mu, power: int, weight: float):
    mu, shifted = _shifted(s, mu)
    g2 = (s.g[s.active] ** 2)[:, None]
    total = weight * np.sum(g2 / shifted ** power, axis=0)
    return float(total[0]) if mu.ndim == 0 else total.reshape(mu.shape)


def phi(s: Spectrum, mu):
    return _secular_sum(s, mu, 2, 1.0)


def phi_d1(s: Spectrum, mu):
    return _secular_sum(s, mu, 3, -2.0)


def phi_d2(s: Spectrum, mu):
    return _secular_sum(s, mu, 4, 6.0)


def x_of_mu(s: Spectrum, mu: float) -> np.ndarray:
    """x(mu) = -(H + mu I)^{-1} c, minimum norm over the absent components"""
    _, shifted = _shifted(s, float(mu))
    coeffs = np.zeros(s.n)
    coeffs[s.active] = -s.g[s.active] / shifted[:, 0]
    return s.eigvecs @ coeffs
