import numpy as np
import pytest

from config import HCX_SEED
from trsc.builder import canned_example
from trsc.convexlib import Quadratic, TrslInstance


@pytest.fixture
def rng():
    return np.random.default_rng(HCX_SEED)


@pytest.fixture(scope="session")
def example1():
    return canned_example("example1")


@pytest.fixture(scope="session")
def example2():
    return canned_example("example2d3")


def random_symmetric(rng, n, lambda1_range=(-5.0, -0.5), gap_range=(0.3, 2.0)):
    """Symmetric H with simple, well separated eigenvalues and lambda1 < 0"""
    lam = np.empty(n)
    lam[0] = rng.uniform(*lambda1_range)
    for i in range(1, n):
        lam[i] = lam[i - 1] + rng.uniform(*gap_range)
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (V * lam) @ V.T, lam, V


@pytest.fixture
def make_problem(rng):
    """(H, c) with g1 bounded away from zero"""
    def factory(n):
        H, lam, V = random_symmetric(rng, n)
        g = rng.standard_normal(n)
        g[0] = np.sign(g[0] or 1.0) * rng.uniform(0.3, 2.0)
        return H, V @ g
    return factory


def sample_feasible_ball(inst: TrslInstance, center_x, center_y, radius, count, rng):
    """Best objective over feasible points drawn uniformly from a ball around (x, y)"""
    dim = inst.n + 1
    direction = rng.standard_normal((count, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    scale = radius * rng.uniform(size=(count, 1)) ** (1.0 / dim)
    pts = np.concatenate([center_x, [center_y]]) + scale * direction
    xs, ys = pts[:, :-1], pts[:, -1]
    lo, hi = inst.f0.domain
    feasible = (np.einsum("ij,ij->i", xs, xs) - inst.a * ys - inst.b <= 0) & (ys > lo) & (ys < hi)
    xs, ys = xs[feasible], ys[feasible]
    values = 0.5 * np.einsum("ij,jk,ik->i", xs, inst.H, xs) + xs @ inst.c + inst.f0.value(ys)
    return float(values.min()), int(feasible.sum())


def brute_force_quadratic(inst: TrslInstance, radius, points=201, refinements=2, keep=3):
    """
    Grid oracle for Quadratic f0 with y eliminated in closed form

    y*(x) = max(-beta / (2 alpha), (||x||^2 - b) / a); the grid is refined around its best cells.
    """
    f0 = inst.f0
    assert isinstance(f0, Quadratic) and inst.n == 2

    def reduced(xs):
        xx = np.einsum("ij,ij->i", xs, xs)
        y = np.maximum(-f0.beta / (2 * f0.alpha), (xx - inst.b) / inst.a)
        return 0.5 * np.einsum("ij,jk,ik->i", xs, inst.H, xs) + xs @ inst.c + f0.value(y)

    centres = [np.zeros(2)]
    half = radius
    best = np.inf
    for _ in range(refinements + 1):
        next_centres = []
        for centre in centres:
            axis = np.linspace(-half, half, points)
            gx, gy = np.meshgrid(centre[0] + axis, centre[1] + axis)
            xs = np.column_stack([gx.ravel(), gy.ravel()])
            vals = reduced(xs)
            order = np.argsort(vals)[:keep]
            best = min(best, float(vals[order[0]]))
            next_centres.extend(xs[order])
        centres = next_centres
        half = 4 * half / (points - 1)
    return best
