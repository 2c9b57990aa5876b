import numpy as np
import pytest

from conftest import random_symmetric
from trsc.errors import DimensionMismatch, NonSymmetric, PoleAt
from trsc.spectral import decompose, phi, phi_d1, phi_d2, x_of_mu


def test_diagonal_matrix_keeps_identity_basis():
    s = decompose(np.diag([-1.0, -5.0]), [2.0, 3.0])
    np.testing.assert_allclose(s.lambdas, [-5.0, -1.0])
    np.testing.assert_allclose(np.abs(s.eigvecs), [[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(s.g, [3.0, 2.0])
    assert s.lambda1_multiplicity == 1
    assert not s.hard_case


def test_eigenvector_signs_are_deterministic():
    s = decompose(np.diag([-5.0, -1.0]), [1.0, 1.0])
    np.testing.assert_allclose(s.eigvecs, np.eye(2))


def test_reconstruction_and_orthogonality(rng):
    for n in (1, 3, 8):
        H, _, _ = random_symmetric(rng, n)
        s = decompose(H, rng.standard_normal(n))
        assert s.reconstruction_error(H) <= 1e-10 * max(1.0, np.linalg.norm(H))
        assert s.orthogonality_error() <= 1e-10
        np.testing.assert_allclose(s.c, s.eigvecs @ s.g)


def test_repeated_lambda1_and_hard_case():
    s = decompose(np.diag([-1.0, -1.0, 2.0]), [0.0, 0.0, 1.0])
    assert s.lambda1_multiplicity == 2
    assert s.lambda2 == pytest.approx(2.0)
    assert s.hard_case


def test_single_eigenvalue_has_no_lambda2():
    s = decompose(np.array([[-3.0]]), [1.0])
    assert s.lambda2 == np.inf


def test_input_validation():
    with pytest.raises(NonSymmetric):
        decompose(np.array([[0.0, 1.0], [0.0, 0.0]]), [1.0, 1.0])
    with pytest.raises(DimensionMismatch):
        decompose(np.eye(2), [1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatch):
        decompose(np.ones(3), [1.0, 2.0, 3.0])


def test_phi_on_example_matrix():
    s = decompose(np.diag([-5.0, -1.0]), [1.0, 1.0])
    assert phi(s, 3.0) == pytest.approx(0.5)
    assert phi_d1(s, 3.0) == pytest.approx(0.0, abs=1e-15)
    assert phi_d2(s, 3.0) == pytest.approx(6 / 16 + 6 / 16)
    vals = phi(s, np.array([2.0, 3.0, 4.0]))
    assert vals.shape == (3,)
    assert isinstance(phi(s, 2.0), float)


def test_pole_is_reported():
    s = decompose(np.diag([-5.0, -1.0]), [1.0, 1.0])
    with pytest.raises(PoleAt) as err:
        phi(s, 5.0)
    assert err.value.mu == 5.0


def test_pole_guard_leaves_grid_margin_usable():
    s = decompose(np.diag([-5.0, -1.0]), [1.0, 1.0])
    near = 1.0 + 1e-9
    assert phi(s, near) == pytest.approx(1e18, rel=1e-6)
    assert np.isfinite(phi_d2(s, near))
    with pytest.raises(PoleAt):
        phi(s, 1.0 + 1e-13)
    with pytest.raises(PoleAt):
        phi_d1(s, 5.0 - 1e-13)


def test_absent_component_has_no_pole():
    s = decompose(np.diag([-2.0, -1.0]), [0.0, 1.0])
    assert phi(s, 2.0) == pytest.approx(1.0)
    np.testing.assert_allclose(x_of_mu(s, 2.0), [0.0, -1.0])


def test_x_of_mu_solves_shifted_system(rng):
    H, lam, _ = random_symmetric(rng, 5)
    c = rng.standard_normal(5)
    s = decompose(H, c)
    mu = -lam[0] + 0.7
    x = x_of_mu(s, mu)
    np.testing.assert_allclose((H + mu * np.eye(5)) @ x, -c, atol=1e-10)
    assert x @ x == pytest.approx(phi(s, mu))


def test_secular_convexity_and_derivatives(make_problem, rng):
    for _ in range(500):
        n = int(rng.integers(2, 7))
        H, c = make_problem(n)
        s = decompose(H, c)
        lo, hi = -s.lambda2, -s.lambda1
        width = hi - lo
        mus = lo + width * np.linspace(0.1, 0.9, 50)
        assert np.all(phi_d2(s, mus) > 0)

        h = 1e-5 * width
        fd1 = (phi(s, mus + h) - phi(s, mus - h)) / (2 * h)
        fd2 = (phi_d1(s, mus + h) - phi_d1(s, mus - h)) / (2 * h)
        scale = phi(s, mus) / width
        d1, d2 = phi_d1(s, mus), phi_d2(s, mus)
        assert np.all(np.abs(fd1 - d1) <= 1e-6 * (np.abs(d1) + scale))
        assert np.all(np.abs(fd2 - d2) <= 1e-6 * (np.abs(d2) + scale / width))
