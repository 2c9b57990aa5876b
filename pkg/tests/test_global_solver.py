import numpy as np
import pytest

from conftest import brute_force_quadratic, random_symmetric, sample_feasible_ball
from trsc.convexlib import Quadratic, QuadraticOracle, TrslInstance
from trsc.errors import ConvexInstance, DimensionMismatch
from trsc.global_solver import (
    CertificateStatus, bisect, check_global_certificate, check_instance_certificate,
    kkt_residuals, solve_global,
)
from trsc.spectral import x_of_mu


def test_bisect_finds_sqrt2():
    mid, lo, hi, its = bisect(lambda t: t * t - 2.0, 0.0, 2.0, xtol=1e-12)
    assert mid == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert lo <= np.sqrt(2.0) <= hi
    assert its < 60


def test_example1_global_solution(example1):
    sol = solve_global(example1)
    assert sol.mu == pytest.approx(5.63, abs=0.01)
    np.testing.assert_allclose(sol.point, [-1.58, -0.22, 2.56], atol=0.02)
    assert not sol.hard_case
    assert sol.point.shape == (3,)
    assert sol.objective == pytest.approx(example1.objective(sol.x, sol.y))

    cert = check_instance_certificate(example1, sol.x, sol.y, [sol.mu])
    assert cert.status == CertificateStatus.VALID
    assert cert.valid
    assert "slater" in cert.unchecked


def test_global_solution_beats_random_feasible_points(example1, example2, rng):
    for inst in (example1, example2):
        sol = solve_global(inst)
        best, feasible = sample_feasible_ball(inst, sol.x, sol.y, 1.0, 10_000, rng)
        assert feasible > 1000
        assert best >= sol.objective - 1e-12


def test_hard_case_ray():
    inst = TrslInstance(np.diag([-2.0, -1.0]), [0.0, 0.5], 1.0, 0.0, Quadratic(1.0))
    sol = solve_global(inst)
    assert sol.hard_case
    assert sol.mu == pytest.approx(2.0)
    np.testing.assert_allclose(sol.x, [0.5, -0.5], atol=1e-12)
    assert sol.y == pytest.approx(0.5)
    assert check_instance_certificate(inst, sol.x, sol.y, [sol.mu]).valid


def test_hard_case_falls_through_to_interior_root():
    inst = TrslInstance(np.diag([-2.0, -1.0]), [0.0, 1.0], 1.0, 0.0, Quadratic(1.0))
    sol = solve_global(inst)
    assert not sol.hard_case
    # 1 / (mu - 1)^2 = mu / 4
    assert sol.mu * (sol.mu - 1) ** 2 == pytest.approx(4.0, rel=1e-8)
    assert sol.mu == pytest.approx(2.315, abs=1e-3)


def test_convex_instance_is_rejected():
    inst = TrslInstance(np.eye(2), [1.0, 1.0], 1.0, 0.0, Quadratic(1.0))
    with pytest.raises(ConvexInstance):
        solve_global(inst)


def test_random_hard_cases_match_grid_search(rng):
    for _ in range(50):
        lam1 = rng.uniform(-3.0, -0.5)
        lam2 = lam1 + rng.uniform(0.5, 3.0)
        inst = TrslInstance(
            np.diag([lam1, lam2]), [0.0, rng.uniform(-1.0, 1.0)],
            rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0),
            Quadratic(rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5)),
        )
        sol = solve_global(inst)
        assert check_instance_certificate(inst, sol.x, sol.y, [sol.mu]).valid
        radius = 1.2 * np.linalg.norm(sol.x) + 1.0
        assert brute_force_quadratic(inst, radius) == pytest.approx(sol.objective, abs=1e-3)


def _random_hard_case(rng, n):
    H, lam, V = random_symmetric(rng, n, gap_range=(0.5, 2.0))
    g = np.zeros(n)
    g[1:] = rng.uniform(-0.3, 0.3, n - 1) / np.sqrt(n - 1)
    # psi(-lambda1) = 0.5 - lambda1 / 4 > 0.5 >= ||x_hat||^2, so the ray is taken
    return TrslInstance(H, V @ g, 1.0, 0.5, Quadratic(1.0))


def test_random_solutions_beat_sampled_feasible_points(rng, make_problem):
    for i in range(20):
        n = int(rng.integers(2, 4))
        if i % 2:
            inst = _random_hard_case(rng, n)
        else:
            H, c = make_problem(n)
            inst = TrslInstance(H, c, rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0),
                                Quadratic(rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5)))
        sol = solve_global(inst)
        assert sol.hard_case == bool(i % 2)
        assert check_instance_certificate(inst, sol.x, sol.y, [sol.mu]).valid
        best, feasible = sample_feasible_ball(inst, sol.x, sol.y, 0.5, 10_000, rng)
        assert feasible > 1000
        assert best >= sol.objective - 1e-9


def test_random_easy_cases_are_certified(rng, make_problem):
    for _ in range(30):
        n = int(rng.integers(2, 6))
        H, c = make_problem(n)
        inst = TrslInstance(H, c, rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0),
                            Quadratic(rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5)))
        sol = solve_global(inst)
        assert sol.mu > -inst.spectrum.lambda1
        assert check_instance_certificate(inst, sol.x, sol.y, [sol.mu]).valid


def test_local_root_fails_only_psd(example1):
    mu = 3.72
    x = x_of_mu(example1.spectrum, mu)
    cert = check_instance_certificate(example1, x, float(x @ x), [mu])
    assert "psd" in cert.violations
    assert "stationarity_x" not in cert.violations
    assert "active_constraint" not in cert.violations
    assert cert.residuals["psd_margin"] == pytest.approx(mu - 5.0)


def test_violation_tags(example1):
    sol = solve_global(example1)
    bad_sign = check_instance_certificate(example1, sol.x, sol.y, [-sol.mu])
    assert "dual_feasibility" in bad_sign.violations
    moved = check_instance_certificate(example1, sol.x + 0.1, sol.y, [sol.mu])
    assert "stationarity_x" in moved.violations
    assert "active_constraint" in moved.violations
    shifted = check_instance_certificate(example1, sol.x, sol.y + 0.1, [sol.mu])
    assert "stationarity_y" in shifted.violations
    assert not moved.valid


def _multi_constraint(upper):
    H = np.diag([-1.0, 2.0])
    c = np.array([1.0, 0.0])
    f0 = QuadraticOracle([[2.0]], [0.0])
    constraints = (QuadraticOracle.affine([-1.0]), QuadraticOracle.affine([1.0], -upper))
    sol = solve_global(TrslInstance(H, c, 1.0, 0.0, Quadratic(1.0)))
    return H, c, f0, constraints, sol


def test_multi_constraint_certificate():
    H, c, f0, constraints, sol = _multi_constraint(10.0)
    cert = check_global_certificate(H, c, f0, constraints, sol.x, [sol.y], [sol.mu, 0.0])
    assert cert.valid, cert.violations
    assert cert.residuals["complementarity"] == 0.0


def test_multi_constraint_infeasible():
    H, c, f0, constraints, sol = _multi_constraint(0.1)
    assert sol.y == pytest.approx(2.315 / 4, abs=1e-3)
    cert = check_global_certificate(H, c, f0, constraints, sol.x, [sol.y], [sol.mu, 0.0])
    assert cert.violations == ["feasibility"]


def test_residual_dimension_checks():
    H, c, f0, constraints, sol = _multi_constraint(10.0)
    with pytest.raises(DimensionMismatch):
        kkt_residuals(H, c, f0, constraints, sol.x, [sol.y], [sol.mu])
    with pytest.raises(DimensionMismatch):
        kkt_residuals(H, c, f0, constraints, [1.0, 2.0, 3.0], [sol.y], [sol.mu, 0.0])
    with pytest.raises(DimensionMismatch):
        kkt_residuals(H, c, f0, constraints, sol.x, [sol.y, 1.0], [sol.mu, 0.0])
