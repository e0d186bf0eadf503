import itertools

import numpy as np
import pytest
from scipy import integrate, stats

from logcon_ica.exceptions import SingularMatrix
from logcon_ica.ica import IcaModel
from logcon_ica.lcmle import LogConcaveDensity, fit_log_concave
from logcon_ica.metrics import align, amari, tv_distance

from oracles import amari_reference


def random_permutation_matrix(d, rng):
    return np.eye(d)[rng.permutation(d)]


def test_amari_of_identical_matrices():
    A = np.random.default_rng(0).standard_normal((4, 4))
    assert amari(A, A) == pytest.approx(0.0, abs=1e-12)


def test_amari_is_zero_for_scaled_permutations():
    rng = np.random.default_rng(1)
    for d in (2, 3, 5):
        A = rng.standard_normal((d, d))
        P = random_permutation_matrix(d, rng)
        D = np.diag(rng.uniform(0.5, 3.0, d) * rng.choice([-1, 1], d))
        C = np.abs(P @ D @ A @ np.linalg.inv(A))
        # the exact value when C has one entry per row and column
        assert amari(P @ D, np.eye(d)) == 0.0
        assert amari(P @ D @ A, A) < 1e-12
        assert np.count_nonzero(C > 1e-12) == d


def test_amari_hand_value():
    B = np.array([[2.0, 1.0], [0.5, 3.0]])
    A = np.ones((2, 2)) @ B
    assert amari(A, B) == pytest.approx(1.0, abs=1e-12)


def test_amari_matches_reference():
    rng = np.random.default_rng(2)
    for d in (2, 3, 4):
        A, B = rng.standard_normal((2, d, d))
        assert amari(A, B) == pytest.approx(amari_reference(A, B), abs=1e-12)
        assert amari(A, B) >= 0


def test_amari_invariances():
    rng = np.random.default_rng(3)
    A, B = rng.standard_normal((2, 3, 3))
    P = random_permutation_matrix(3, rng)
    D = np.diag([2.0, -0.3, 5.0])
    assert amari(P @ A, B) == pytest.approx(amari(A, B), abs=1e-12)
    # row scaling keeps the row term but not the column term; zero stays zero
    C = np.abs(A @ np.linalg.inv(B))
    CD = np.abs(D @ A @ np.linalg.inv(B))
    np.testing.assert_allclose(CD.sum(axis=1) / CD.max(axis=1), C.sum(axis=1) / C.max(axis=1))
    assert amari(D @ P @ B, B) < 1e-12


def test_amari_positive_off_permutations():
    rng = np.random.default_rng(4)
    for _ in range(50):
        A, B = rng.standard_normal((2, 3, 3))
        assert amari(A, B) > 0


def test_amari_singular():
    with pytest.raises(SingularMatrix):
        amari(np.eye(2), np.ones((2, 2)))


def test_tv_examples():
    u01 = LogConcaveDensity([0.0, 1.0], [0.0, 0.0])
    u12 = LogConcaveDensity([1.0, 2.0], [0.0, 0.0])
    u02 = LogConcaveDensity([0.0, 2.0], [np.log(0.5)] * 2)
    assert tv_distance(u01, u01) == pytest.approx(0.0, abs=1e-8)
    assert tv_distance(u01, u12) == pytest.approx(1.0, abs=1e-8)
    assert tv_distance(u01, u02) == pytest.approx(0.5, abs=1e-8)
    assert tv_distance(u01, stats.uniform(0, 2)) == pytest.approx(0.5, abs=1e-6)
    assert tv_distance(u01, stats.uniform(1, 1)) == pytest.approx(1.0, abs=1e-6)


def test_tv_against_quadrature():
    rng = np.random.default_rng(5)
    f = fit_log_concave(rng.normal(size=300))
    g = fit_log_concave(rng.normal(0.3, 1.2, size=300))
    pts = np.union1d(f.knots, g.knots)
    ref = 0.5 * sum(
        integrate.quad(lambda x: abs(f.pdf(x) - g.pdf(x)), a, b, epsabs=1e-12)[0]
        for a, b in zip(pts[:-1], pts[1:])
    )
    assert tv_distance(f, g) == pytest.approx(ref, abs=1e-6)
    assert tv_distance(f, g) == pytest.approx(tv_distance(g, f), abs=1e-10)
    normal = stats.norm()
    ref = 0.5 * (
        sum(integrate.quad(lambda x: abs(f.pdf(x) - normal.pdf(x)), a, b, epsabs=1e-12)[0]
            for a, b in zip(f.knots[:-1], f.knots[1:]))
        + normal.cdf(f.knots[0]) + normal.sf(f.knots[-1])
    )
    assert tv_distance(f, normal) == pytest.approx(ref, abs=1e-6)


def test_tv_with_plain_callable():
    f = LogConcaveDensity([0.0, 1.0], [0.0, 0.0])
    g = lambda x: np.where((x >= 0) & (x <= 2), 0.5, 0.0)  # noqa: E731
    assert tv_distance(f, g) == pytest.approx(0.5, abs=1e-6)


def test_align_identity():
    W = np.array([[1.0, 2.0], [-0.5, 0.7]])
    a = align(W, W)
    assert a.pi == (0, 1)
    np.testing.assert_allclose(a.row_errors, 0.0, atol=1e-14)
    np.testing.assert_allclose(a.eps, 1.0)


def test_align_swapped_and_negated():
    W = np.array([[1.0, 2.0, 0.0], [-0.5, 0.7, 1.0], [0.2, 0.1, 3.0]])
    W_hat = np.array([W[2] * 4.0, -W[0], W[1]])
    a = align(W_hat, W)
    assert a.pi == (1, 2, 0)
    np.testing.assert_allclose(a.row_errors, 0.0, atol=1e-14)
    np.testing.assert_allclose(a.eps, [-1.0, 1.0, 4.0])


def test_align_objective_ignores_row_labels():
    rng = np.random.default_rng(6)
    W = rng.standard_normal((3, 3))
    W_hat = W + 0.05 * rng.standard_normal((3, 3))
    base = align(W_hat, W).row_errors.sum()
    for perm in itertools.permutations(range(3)):
        assert align(W_hat[list(perm)], W).row_errors.sum() == pytest.approx(base, abs=1e-14)


def test_align_reports_density_errors():
    rng = np.random.default_rng(7)
    s = rng.uniform(-0.5, 0.5, size=(2000, 2))
    W = np.eye(2)
    # fitted rows are the truth swapped and scaled, densities follow the scaling
    W_hat = np.array([2.0 * W[1], -3.0 * W[0]])
    densities = (fit_log_concave(s @ W_hat[0]), fit_log_concave(s @ W_hat[1]))
    model = IcaModel(W_hat, densities, 0.0)
    a = align(model, W, [stats.uniform(-0.5, 1.0)] * 2)
    assert a.pi == (1, 0)
    assert np.all(a.tv_errors < 0.05)
    a = align(model, W)
    assert np.all(np.isnan(a.tv_errors))


def test_align_dimension_cap():
    with pytest.raises(ValueError):
        align(np.eye(9), np.eye(9))
