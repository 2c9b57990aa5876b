"""
Convex scalar families f0, convex oracles, problem instances and the psi(mu) machinery
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
import logging
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import linalg

from config import CONVEX_CONFIG, NEWTON_CONFIG, HCX_SEED
from trsc.errors import (
    DimensionMismatch, InnerNoConverge, InvalidInstance, NoPreimage, OutOfDomain,
)
from trsc.spectral import Spectrum, decompose

logger = logging.getLogger(__name__)


def _as_array(y):
    arr = np.asarray(y, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


def _invert_increasing(fun, dfun, t, lo, hi):
    """Vectorised safeguarded Newton for fun(y) = t with fun increasing on (lo, hi)"""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    left = np.full(t.shape, lo) if np.isfinite(lo) else _expand(fun, t, -1.0)
    right = np.full(t.shape, hi) if np.isfinite(hi) else _expand(fun, t, 1.0)
    y = 0.5 * (left + right)
    tol = CONVEX_CONFIG["inverse_tol"] * np.maximum(1.0, np.abs(t))
    eps = np.finfo(float).eps

    for _ in range(CONVEX_CONFIG["inverse_max_iter"]):
        r = fun(y) - t
        done = (np.abs(r) <= tol) | (right - left <= 4 * eps * np.maximum(1.0, np.abs(y)))
        if done.all():
            break
        left = np.where(r < 0, y, left)
        right = np.where(r > 0, y, right)
        d = dfun(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = y - r / d
        ok = (d > 0) & (step > left) & (step < right)
        y = np.where(done, y, np.where(ok, step, 0.5 * (left + right)))
    else:
        logger.debug("inverse derivative: iteration cap reached, returning bracket midpoint")
    return y


def _expand(fun, t, start):
    """Grow a one-sided bracket from start outward until fun crosses t"""
    x = np.full(t.shape, start)
    for _ in range(CONVEX_CONFIG["bracket_max_expand"]):
        short = fun(x) > t if start < 0 else fun(x) < t
        if not short.any():
            return x
        x = np.where(short, 2.0 * x, x)
    raise NoPreimage(t, "(-inf, inf)")


class ConvexScalar:
    """Convex f0 on an open interval with derivatives to third order and (f0')^{-1}"""
    kind = "abstract"
    domain: Tuple[float, float] = (-math.inf, math.inf)

    def value(self, y):
        raise NotImplementedError

    def d1(self, y):
        raise NotImplementedError

    def d2(self, y):
        raise NotImplementedError

    def d3(self, y):
        raise NotImplementedError

    def derivative_range(self) -> Tuple[float, float]:
        """Open range of f0' over the domain"""
        return (-math.inf, math.inf)

    def interior_point(self) -> float:
        lo, hi = self.domain
        if np.isfinite(lo) and np.isfinite(hi):
            return 0.5 * (lo + hi)
        if np.isfinite(lo):
            return lo + 1.0
        if np.isfinite(hi):
            return hi - 1.0
        return 0.0

    def check_domain(self, y):
        arr = np.asarray(y, dtype=float)
        lo, hi = self.domain
        if np.any(arr <= lo) or np.any(arr >= hi) or np.any(np.isnan(arr)):
            raise OutOfDomain(y, self.domain)

    def check_range(self, t):
        arr = np.asarray(t, dtype=float)
        lo, hi = self.derivative_range()
        if np.any(arr <= lo) or np.any(arr >= hi) or np.any(np.isnan(arr)):
            raise NoPreimage(t, (lo, hi))

    def inv_d1(self, t):
        arr, scalar = _as_array(t)
        self.check_range(arr)
        y = _invert_increasing(self.d1, self.d2, arr, *self.domain)
        return _out(y.reshape(arr.shape), scalar)


class _PolynomialScalar(ConvexScalar):
    """f0 given by ascending polynomial coefficients"""

    def __init__(self, coeffs):
        self.poly = Polynomial(coeffs)
        self._d1 = self.poly.deriv(1)
        self._d2 = self.poly.deriv(2)
        self._d3 = self.poly.deriv(3)

    def _eval(self, p, y):
        arr, scalar = _as_array(y)
        self.check_domain(arr)
        return _out(p(arr), scalar)

    def value(self, y):
        return self._eval(self.poly, y)

    def d1(self, y):
        return self._eval(self._d1, y)

    def d2(self, y):
        return self._eval(self._d2, y)

    def d3(self, y):
        return self._eval(self._d3, y)


class Quadratic(_PolynomialScalar):
    """f0(y) = alpha y^2 + beta y"""
    kind = "quadratic"

    def __init__(self, alpha: float, beta: float = 0.0):
        if not alpha > 0:
            raise InvalidInstance(f"Quadratic needs alpha > 0, got {alpha}")
        self.alpha = float(alpha)
        self.beta = float(beta)
        super().__init__([0.0, self.beta, self.alpha])

    def inv_d1(self, t):
        arr, scalar = _as_array(t)
        return _out((arr - self.beta) / (2.0 * self.alpha), scalar)


class PowerLaw(ConvexScalar):
    """f0(y) = alpha y^d on (0, inf)"""
    kind = "power_law"
    domain = (0.0, math.inf)

    def __init__(self, alpha: float, d: float):
        if not (alpha > 0 and d > 1):
            raise InvalidInstance(f"PowerLaw needs alpha > 0 and d > 1, got alpha={alpha}, d={d}")
        self.alpha = float(alpha)
        self.d = float(d)

    @classmethod
    def from_regularization(cls, sigma: float, p: float) -> "PowerLaw":
        """(sigma/p) y^{p/2}, the lifting of the p-regularised subproblem"""
        return cls(sigma / p, p / 2.0)

    def _power(self, y, coeff, exponent):
        arr, scalar = _as_array(y)
        self.check_domain(arr)
        return _out(coeff * arr ** exponent, scalar)

    def value(self, y):
        return self._power(y, self.alpha, self.d)

    def d1(self, y):
        return self._power(y, self.alpha * self.d, self.d - 1)

    def d2(self, y):
        return self._power(y, self.alpha * self.d * (self.d - 1), self.d - 2)

    def d3(self, y):
        return self._power(y, self.alpha * self.d * (self.d - 1) * (self.d - 2), self.d - 3)

    def derivative_range(self):
        return (0.0, math.inf)

    def inv_d1(self, t):
        arr, scalar = _as_array(t)
        self.check_range(arr)
        return _out((arr / (self.alpha * self.d)) ** (1.0 / (self.d - 1)), scalar)


class CubicPoly(_PolynomialScalar):
    """f0(y) = alpha y^3 + beta y^2 + gamma y, strongly convex on (0, inf)"""
    kind = "cubic"
    domain = (0.0, math.inf)

    def __init__(self, alpha: float, beta: float, gamma: float = 0.0):
        # f0'' = 6 alpha y + 2 beta >= 2 beta on (0, inf)
        if not (alpha >= 0 and beta > 0):
            raise InvalidInstance(
                f"CubicPoly is not strongly convex on (0, inf): alpha={alpha}, beta={beta}"
            )
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.gamma = float(gamma)
        super().__init__([0.0, self.gamma, self.beta, self.alpha])

    def derivative_range(self):
        return (self.gamma, math.inf)


SQRT210 = math.sqrt(210.0)


class QuarticExample1(_PolynomialScalar):
    """The quartic f0 with two local non-global minimizers on H = diag(-5, -1), c = (1, 1)"""
    kind = "quartic_example1"

    COEFFS = (
        0.0,
        SQRT210 / 190 + 4667 / 26600,
        1366171 / 638400 - 35 * SQRT210 / 1824,
        5 * SQRT210 / 228 - 9257 / 7980,
        12377 / 51072 - 25 * SQRT210 / 3648,
    )

    def __init__(self):
        super().__init__(list(self.COEFFS))


# ===== CONVEX ORACLES (vector y) =====

class ConvexOracle:
    """Convex function of y in R^m with value, gradient and Hessian"""
    dim: int

    def value(self, y) -> float:
        raise NotImplementedError

    def grad(self, y) -> np.ndarray:
        raise NotImplementedError

    def hess(self, y) -> np.ndarray:
        raise NotImplementedError


class QuadraticOracle(ConvexOracle):
    """0.5 y^T Q y + q^T y + r with Q positive semidefinite"""

    def __init__(self, Q, q, r: float = 0.0):
        self.q = np.atleast_1d(np.asarray(q, dtype=float))
        self.dim = len(self.q)
        self.Q = np.asarray(Q, dtype=float).reshape(self.dim, self.dim)
        self.r = float(r)
        if not np.allclose(self.Q, self.Q.T):
            raise InvalidInstance("oracle Hessian must be symmetric")
        if self.dim and np.linalg.eigvalsh(self.Q)[0] < -1e-12 * max(1.0, np.abs(self.Q).max()):
            raise InvalidInstance("oracle Hessian must be positive semidefinite")

    @classmethod
    def affine(cls, q, r: float = 0.0) -> "QuadraticOracle":
        q = np.atleast_1d(np.asarray(q, dtype=float))
        return cls(np.zeros((len(q), len(q))), q, r)

    @classmethod
    def constant(cls, r: float, m: int = 1) -> "QuadraticOracle":
        return cls(np.zeros((m, m)), np.zeros(m), r)

    @property
    def is_constant(self) -> bool:
        return not (np.any(self.Q) or np.any(self.q))

    def value(self, y):
        y = np.asarray(y, dtype=float)
        return float(0.5 * y @ self.Q @ y + self.q @ y + self.r)

    def grad(self, y):
        return self.Q @ np.asarray(y, dtype=float) + self.q

    def hess(self, y):
        return self.Q.copy()


class ScalarOracle(ConvexOracle):
    """A ConvexScalar seen as a function of y in R^1"""
    dim = 1

    def __init__(self, f: ConvexScalar):
        self.f = f

    def value(self, y):
        return self.f.value(float(np.asarray(y).ravel()[0]))

    def grad(self, y):
        return np.array([self.f.d1(float(np.asarray(y).ravel()[0]))])

    def hess(self, y):
        return np.array([[self.f.d2(float(np.asarray(y).ravel()[0]))]])


def check_midpoint_convexity(oracle: ConvexOracle, rng, samples: int = None, scale: float = 1.0,
                             center=None) -> list:
    """Random midpoint test f((u+v)/2) <= (f(u)+f(v))/2; returns violating pairs"""
    samples = samples or CONVEX_CONFIG["spot_check_samples"]
    center = np.zeros(oracle.dim) if center is None else np.asarray(center, dtype=float)
    violations = []
    for _ in range(samples):
        u = center + scale * rng.standard_normal(oracle.dim)
        v = center + scale * rng.standard_normal(oracle.dim)
        try:
            fu, fv, fm = oracle.value(u), oracle.value(v), oracle.value(0.5 * (u + v))
        except OutOfDomain:
            continue
        if fm > 0.5 * (fu + fv) + CONVEX_CONFIG["spot_check_tol"] * (1 + abs(fu) + abs(fv)):
            violations.append((u, v))
    return violations


# ===== INSTANCES =====

@dataclass(frozen=True, eq=False)
class TrslInstance:
    """min 0.5 x^T H x + c^T x + f0(y)  s.t.  x^T x - a y - b <= 0  (scalar y)"""
    H: np.ndarray
    c: np.ndarray
    a: float
    b: float
    f0: ConvexScalar
    name: str = ""

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not self.a > 0:
            raise InvalidInstance(f"constraint coefficient a must be positive, got {self.a}")
        if self.spectrum.lambda1 >= 0:
            logger.warning(f"H has no negative eigenvalue (lambda1={self.spectrum.lambda1:.6g}); "
                           "the instance is convex")

    @cached_property
    def spectrum(self) -> Spectrum:
        return decompose(self.H, self.c)

    @property
    def n(self) -> int:
        return len(self.c)

    def psi_domain(self) -> Tuple[float, float]:
        """Open mu-interval on which a mu / 2 lies in the range of f0'"""
        lo, hi = self.f0.derivative_range()
        return (2.0 * lo / self.a, 2.0 * hi / self.a)

    def constraint_value(self, x, y) -> float:
        return float(x @ x - self.a * y - self.b)

    def objective(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.c @ x + self.f0.value(y))

    def as_trsc(self) -> "TrscInstance":
        """The same problem with f(y) = -a y - b and f0 lifted to R^1"""
        return TrscInstance(
            H=self.H,
            c=self.c,
            f0_vec=ScalarOracle(self.f0),
            constraints=(QuadraticOracle.affine([-self.a], -self.b),),
            y_start=np.array([self.f0.interior_point()]),
            name=self.name,
        )


@dataclass(frozen=True, eq=False)
class TrscInstance:
    """min 0.5 x^T H x + c^T x + f0(y)  s.t.  x^T x + f_1(y) <= 0,  f_j(y) <= 0 (j >= 2)"""
    H: np.ndarray
    c: np.ndarray
    f0_vec: ConvexOracle
    constraints: tuple
    y_start: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.constraints:
            raise InvalidInstance("at least one constraint is required")
        m = self.f0_vec.dim
        if any(f.dim != m for f in self.constraints):
            raise DimensionMismatch("constraint oracles must share the dimension of f0")
        start = np.zeros(m) if self.y_start is None else np.atleast_1d(np.asarray(self.y_start, float))
        if start.shape != (m,):
            raise DimensionMismatch(f"y_start must have length {m}")
        object.__setattr__(self, "y_start", start)
        if self.spectrum.lambda1 >= 0:
            logger.warning(f"H has no negative eigenvalue (lambda1={self.spectrum.lambda1:.6g}); "
                           "the instance is convex")

    @cached_property
    def spectrum(self) -> Spectrum:
        return decompose(self.H, self.c)

    @property
    def f_vec(self) -> ConvexOracle:
        return self.constraints[0]

    @property
    def k(self) -> int:
        return len(self.constraints)

    @property
    def m(self) -> int:
        return self.f0_vec.dim

    @property
    def n(self) -> int:
        return len(self.c)

    def psi_domain(self) -> Tuple[float, float]:
        return (0.0, math.inf)

    def objective(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.c @ x + self.f0_vec.value(y))

    def validate(self, rng=None, samples: int = None, scale: float = 1.0) -> list:
        """Spot-check convexity and the inner nonsingularity assumption at mu = 1"""
        rng = rng if rng is not None else np.random.default_rng(HCX_SEED)
        samples = samples or CONVEX_CONFIG["spot_check_samples"]
        issues = []
        oracles = [("f0", self.f0_vec)] + [(f"f{j + 1}", f) for j, f in enumerate(self.constraints)]
        for label, oracle in oracles:
            if check_midpoint_convexity(oracle, rng, samples, scale, center=self.y_start):
                issues.append(f"{label}: midpoint convexity violated")
        if self.k == 1 and not check_assumption2(self, rng, samples, scale):
            issues.append("inner Hessian not positive definite at mu = 1")
        for issue in issues:
            logger.warning(f"{self.name or 'instance'}: {issue}")
        return issues


def check_assumption2(inst: TrscInstance, rng, samples: int = None, scale: float = 1.0) -> bool:
    """grad^2 f0 + 0.5 grad^2 f > 0 at sampled y with f(y) < 0"""
    samples = samples or CONVEX_CONFIG["spot_check_samples"]
    for _ in range(samples):
        y = inst.y_start + scale * rng.standard_normal(inst.m)
        try:
            if inst.f_vec.value(y) >= 0:
                continue
            M = inst.f0_vec.hess(y) + 0.5 * inst.f_vec.hess(y)
        except OutOfDomain:
            continue
        if np.linalg.eigvalsh(0.5 * (M + M.T))[0] <= 0:
            return False
    return True


def oracles_of(inst) -> Tuple[ConvexOracle, tuple]:
    """(f0 oracle, constraint oracles) for either instance kind"""
    if isinstance(inst, TrscInstance):
        return inst.f0_vec, inst.constraints
    return ScalarOracle(inst.f0), (QuadraticOracle.affine([-inst.a], -inst.b),)


# ===== PSI FOR THE SCALAR LINEAR-CONSTRAINT CASE =====

def psi_trsl(inst: TrslInstance, mu):
    """psi(mu) = a (f0')^{-1}(a mu / 2) + b"""
    return inst.a * inst.f0.inv_d1(inst.a * np.asarray(mu, dtype=float) / 2.0) + inst.b


def psi_trsl_d1(inst: TrslInstance, mu):
    """psi'(mu) = a^2 / (2 f0''(y(mu)))"""
    y = inst.f0.inv_d1(inst.a * np.asarray(mu, dtype=float) / 2.0)
    return inst.a ** 2 / (2.0 * inst.f0.d2(y))


class LogConcavityStatus(str, Enum):
    PROVEN = "proven"
    SAMPLED_TRUE = "sampled_true"
    FALSIFIED = "falsified"


@dataclass(frozen=True)
class LogConcavity:
    status: LogConcavityStatus
    mu: Optional[float] = None
    reason: str = ""


def log_concavity_holds(inst: TrslInstance, interval, samples: int = None) -> LogConcavity:
    """Whether ln psi is concave on the interval (f0''' + a f0'' / (a y + b) >= 0)"""
    f0, a, b = inst.f0, inst.a, inst.b
    if isinstance(f0, Quadratic) and b >= 0:
        return LogConcavity(LogConcavityStatus.PROVEN, reason="strongly convex quadratic, b >= 0")
    if isinstance(f0, PowerLaw) and b == 0:
        return LogConcavity(LogConcavityStatus.PROVEN, reason="alpha d (d-1)^2 y^(d-3) > 0")
    if isinstance(f0, CubicPoly) and b == 0:
        return LogConcavity(LogConcavityStatus.PROVEN, reason="cubic strongly convex on (0, inf)")

    samples = samples or CONVEX_CONFIG["concavity_samples"]
    lo, hi = interval
    mus = np.linspace(lo, hi, samples + 2)[1:-1]
    try:
        y = f0.inv_d1(a * mus / 2.0)
    except NoPreimage as exc:
        raise OutOfDomain(exc.t, f0.domain) from exc
    slack = a * y + b
    with np.errstate(divide="ignore", invalid="ignore"):
        test = f0.d3(y) + a / slack * f0.d2(y)
    bad = (slack <= 0) | (test < 0)
    if bad.any():
        mu_bad = float(mus[np.argmax(bad)])
        logger.debug(f"log-concavity falsified at mu={mu_bad:.6g}")
        return LogConcavity(LogConcavityStatus.FALSIFIED, mu=mu_bad)
    return LogConcavity(LogConcavityStatus.SAMPLED_TRUE, reason=f"{samples} samples")


# ===== PSI FOR THE GENERAL SINGLE-CONSTRAINT CASE =====

class PsiPoint(NamedTuple):
    psi: float
    psi_d1: float
    y: np.ndarray


def _inner_hessian(inst: TrscInstance, y, mu):
    return inst.f0_vec.hess(y) + 0.5 * mu * inst.f_vec.hess(y)


def _inner_grad(inst: TrscInstance, y, mu):
    return inst.f0_vec.grad(y) + 0.5 * mu * inst.f_vec.grad(y)


def _inner_value(inst: TrscInstance, y, mu):
    try:
        return inst.f0_vec.value(y) + 0.5 * mu * inst.f_vec.value(y)
    except OutOfDomain:
        return math.inf


def y_of_mu_general(inst: TrscInstance, mu: float, y0=None) -> np.ndarray:
    """argmin_y f0(y) + (mu/2) f(y) by Newton with Armijo backtracking

    Stops early, keeping the current y, once the Newton decrement falls below the
    rounding of the objective and a full step no longer lowers the gradient, or
    once the accepted step no longer moves y.
    """
    eps = np.finfo(float).eps
    y = np.array(inst.y_start if y0 is None else y0, dtype=float)
    tol = NEWTON_CONFIG["grad_tol"] * max(1.0, float(np.linalg.norm(inst.f0_vec.grad(y))))

    for it in range(NEWTON_CONFIG["max_iter"]):
        grad = _inner_grad(inst, y, mu)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            logger.debug(f"inner Newton: mu={mu:.6g} converged in {it} steps")
            return y
        try:
            factor = linalg.cho_factor(_inner_hessian(inst, y, mu))
        except linalg.LinAlgError as exc:
            raise InnerNoConverge(f"inner Hessian singular at mu={mu}") from exc
        step = -linalg.cho_solve(factor, grad)

        f_now = _inner_value(inst, y, mu)
        slope = float(grad @ step)
        if -slope <= NEWTON_CONFIG["rounding_factor"] * eps * max(1.0, abs(f_now)):
            # Armijo cannot see decreases this small; take the full step while it lowers the gradient
            trial = y + step
            try:
                trial_norm = float(np.linalg.norm(_inner_grad(inst, trial, mu)))
            except OutOfDomain as exc:
                raise InnerNoConverge(f"Newton step left the domain at mu={mu}") from exc
            if trial_norm >= gnorm:
                logger.debug(f"inner Newton: mu={mu:.6g} stalled at |grad|={gnorm:.3e} after {it} steps")
                return y
            y = trial
            continue

        t = 1.0
        for _ in range(NEWTON_CONFIG["max_backtracks"]):
            trial = y + t * step
            if np.linalg.norm(trial - y) <= eps * max(1.0, float(np.linalg.norm(y))):
                logger.warning(f"inner Newton: mu={mu:.6g} step vanished at |grad|={gnorm:.3e} (tol {tol:.3e})")
                return y
            if _inner_value(inst, trial, mu) <= f_now + NEWTON_CONFIG["armijo"] * t * slope:
                y = trial
                break
            t *= NEWTON_CONFIG["shrink"]
        else:
            raise InnerNoConverge(f"line search failed at mu={mu}")

    raise InnerNoConverge(f"no convergence after {NEWTON_CONFIG['max_iter']} Newton steps at mu={mu}")


def psi_general(inst: TrscInstance, mu: float, y0=None) -> PsiPoint:
    """psi(mu) = -f(y(mu)) and psi'(mu) = 0.5 grad f^T [inner Hessian]^{-1} grad f"""
    if not mu > 0:
        raise InvalidInstance(f"psi is defined for mu > 0, got {mu}")
    y = y_of_mu_general(inst, mu, y0)
    grad_f = inst.f_vec.grad(y)
    try:
        solved = linalg.cho_solve(linalg.cho_factor(_inner_hessian(inst, y, mu)), grad_f)
    except linalg.LinAlgError as exc:
        raise InnerNoConverge(f"inner Hessian singular at mu={mu}") from exc
    return PsiPoint(-inst.f_vec.value(y), 0.5 * float(grad_f @ solved), y)


def psi_general_sweep(inst: TrscInstance, mus, y0=None):
    """psi, psi' and y over an ascending grid, warm-starting each solve"""
    mus = np.asarray(mus, dtype=float)
    psi = np.empty(len(mus))
    psi_d1 = np.empty(len(mus))
    ys = np.empty((len(mus), inst.m))
    y = inst.y_start if y0 is None else y0
    for i, mu in enumerate(mus):
        point = psi_general(inst, float(mu), y)
        psi[i], psi_d1[i], ys[i] = point.psi, point.psi_d1, point.y
        y = point.y
    return psi, psi_d1, ys
