import math

import numpy as np
import pytest

from algebra import random_lie_algebra
from classification import canonical_algebra
from errors import FamilyViolationError, InputError
from expgroups import (
    basis_matrices,
    closed_form_exp,
    family_scalar,
    group_axiom_residuals,
    reference_expm,
    relative_error,
    spectral_exp,
    table1_coefficients,
    table1_matrix,
    verify_sample,
)
from models import BASIC_CLASSES, SpectralExp


def test_basis_matrices_form_a_representation(rng):
    C = random_lie_algebra(rng)
    M = basis_matrices(C)
    t = C.tensor()
    for i in range(3):
        for j in range(3):
            commutator = M[i] @ M[j] - M[j] @ M[i]
            expected = sum(t[i, j, k] * M[k] for k in range(3))
            assert np.allclose(commutator, expected, atol=1e-12)


@pytest.mark.parametrize("tag", BASIC_CLASSES)
def test_table1_matrix_spans_basis_matrices(tag):
    alpha, beta, a, b, c = 1.5, -0.5, 0.3, -1.2, 2.0
    M0, M1, M2 = basis_matrices(canonical_algebra(tag, alpha, beta))
    expected = a * M1 + b * M2 + c * M0
    assert np.allclose(table1_matrix(tag, alpha, beta, a, b, c), expected)


def test_family_scalars():
    alpha, beta, a, b, c = 2.0, 0.5, 0.25, -1.0, 0.75
    assert family_scalar("F1", table1_matrix("F1", alpha, beta, a, b, c)) == alpha * b - beta * a
    assert family_scalar("F11", table1_matrix("F11", alpha, beta, a, b, c)) == alpha * a + beta * b
    assert family_scalar("F5", table1_matrix("F5", alpha, 0, a, b, c)) == -alpha * c
    assert family_scalar("F4", table1_matrix("F4", alpha, 0, a, b, c)) == -(alpha * c) ** 2
    assert family_scalar("F9", table1_matrix("F9", alpha, 0, a, b, c)) == (alpha * c) ** 2
    kappa = family_scalar("F8", table1_matrix("F8", alpha, 0, a, b, c))
    assert kappa == pytest.approx(alpha**2 * (2 * a * a - 2 * b * b + c * c))


def test_coefficients_f5_trace_zero():
    A = table1_matrix("F5", 1.0, 0.0, 0.5, -0.5, 0.0)
    coeffs = table1_coefficients("F5", A)
    assert (coeffs.t, coeffs.u, coeffs.branch) == (1.0, 0.0, "trace-zero")


def test_coefficients_f8_null_direction():
    A = table1_matrix("F8", 1.0, 0.0, 1.0, 1.0, 0.0)
    coeffs = table1_coefficients("F8", A)
    assert coeffs.branch == "trsq-zero"
    assert (coeffs.t, coeffs.u) == (1.0, 0.5)
    assert relative_error(closed_form_exp(A, coeffs), reference_expm(A)) <= 1e-12


def test_coefficients_f4_quarter_turn():
    A = table1_matrix("F4", 1.0, 0.0, 0.0, 0.0, math.pi / 2)
    coeffs = table1_coefficients("F4", A)
    assert coeffs.branch == "trsq-negative"
    assert coeffs.t == pytest.approx(2 / math.pi, abs=1e-15)
    assert coeffs.u == pytest.approx(4 / math.pi**2, abs=1e-15)
    assert np.linalg.norm(closed_form_exp(A, coeffs) - reference_expm(A)) <= 1e-12


def test_f4_exponential_is_a_rotation_block():
    c = 0.7
    A = table1_matrix("F4", 1.0, 0.0, 0.0, 0.0, c)
    result = closed_form_exp(A, table1_coefficients("F4", A))
    expected = [[math.cos(c), -math.sin(c)], [math.sin(c), math.cos(c)]]
    assert np.allclose(result[1:, 1:], expected, atol=1e-15)


def test_coefficients_series_fallback_near_zero_trace():
    A = table1_matrix("F1", 1.0, 0.0, 1.0, 1e-9, 0.5)
    coeffs = table1_coefficients("F1", A)
    assert coeffs.branch == "series-fallback"
    assert relative_error(closed_form_exp(A, coeffs), reference_expm(A)) <= 1e-12


def test_printed_mode_rejects_missing_entries():
    # A^3 = A with tr A^2 / 2 = 1: in the F4 family but outside the printed F4 rows
    A = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    with pytest.raises(FamilyViolationError):
        table1_coefficients("F4", A, "printed")
    assert table1_coefficients("F4", A).branch == "trsq-positive"


def test_family_violation_is_reported():
    with pytest.raises(FamilyViolationError, match="A\\^3 = kappa A"):
        table1_coefficients("F8", np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(FamilyViolationError, match="A\\^2 = tau A"):
        table1_coefficients("F1", np.diag([1.0, 2.0, 3.0]))


def test_coefficients_reject_bad_input():
    with pytest.raises(InputError):
        table1_coefficients("F4", np.zeros((2, 2)))
    with pytest.raises(InputError):
        table1_coefficients("F2", np.zeros((3, 3)))
    with pytest.raises(InputError):
        table1_coefficients("F4", np.zeros((3, 3)), "exact")
    with pytest.raises(InputError):
        table1_coefficients("F4", np.full((3, 3), np.nan))


def test_reference_expm_diagonal():
    result = reference_expm(np.diag([1.0, 2.0, -3.0]))
    assert np.allclose(result, np.diag(np.exp([1.0, 2.0, -3.0])), rtol=1e-13, atol=0.0)


def test_reference_expm_nilpotent():
    N = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    assert np.allclose(reference_expm(N), np.eye(3) + N + N @ N / 2.0, atol=1e-14)


def test_reference_expm_matches_scipy(rng):
    linalg = pytest.importorskip("scipy.linalg")
    for _ in range(20):
        A = rng.uniform(-3.0, 3.0, size=(3, 3))
        assert relative_error(reference_expm(A), linalg.expm(A)) <= 1e-11


def test_spectral_exp_distinct_real_eigenvalues():
    result = spectral_exp(np.diag([0.0, 1.0, 2.0]))
    assert result.method == "lagrange"
    assert result.degree == 3
    assert np.allclose(result.matrix, np.diag([1.0, math.e, math.e**2]), atol=1e-12)


def test_spectral_exp_zero_matrix():
    result = spectral_exp(np.zeros((3, 3)))
    assert result.method == "lagrange"
    assert result.degree == 1
    assert np.array_equal(result.matrix, np.eye(3))


@pytest.mark.parametrize("tag", ["F1", "F5", "F11"])
def test_spectral_exp_interpolates_quadratic_family(tag):
    A = table1_matrix(tag, 1.0, 0.5, 0.4, 1.2, 0.7)
    tau = family_scalar(tag, A)
    result = spectral_exp(A)
    assert result.method == "lagrange"
    assert result.degree == 2
    expected = np.eye(3) + math.expm1(tau) / tau * A
    assert np.allclose(result.matrix, expected, rtol=0.0, atol=1e-12)


def test_spectral_exp_hermite_on_nilpotent_f8():
    A = table1_matrix("F8", 1.0, 0.0, 1.0, 1.0, 0.0)
    assert np.any(A @ A != 0.0)
    assert np.all(A @ A @ A == 0.0)
    result = spectral_exp(A)
    assert result.method == "hermite"
    assert result.degree == 3
    assert np.allclose(result.matrix, np.eye(3) + A + A @ A / 2.0, rtol=0.0, atol=1e-12)


def test_spectral_exp_hermite_on_square_zero():
    A = table1_matrix("F9", 1.5, 0.0, 0.5, -2.0, 0.0)
    result = spectral_exp(A)
    assert result.method == "hermite"
    assert result.degree == 2
    assert np.allclose(result.matrix, np.eye(3) + A, rtol=0.0, atol=1e-14)


def test_spectral_exp_falls_back_on_near_coincident_roots():
    A = np.diag([0.0, 1e-3, 2.0])
    result = spectral_exp(A)
    assert result.method == "fallback"
    assert result.degree is None
    assert np.array_equal(result.matrix, reference_expm(A))


def test_spectral_exp_complex_pair():
    A = table1_matrix("F4", 1.0, 0.0, 1.0, 0.5, 1.0)
    result = spectral_exp(A)
    assert result.method == "lagrange"
    assert relative_error(result.matrix, reference_expm(A)) <= 1e-10


@pytest.mark.parametrize("tag", BASIC_CLASSES)
def test_spectral_exp_agrees_with_closed_form(rng, tag):
    for _ in range(50):
        alpha, beta = rng.uniform(0.25, 3.0, size=2)
        a, b, c = rng.uniform(-3.0, 3.0, size=3)
        A = table1_matrix(tag, alpha, beta, a, b, c)
        result = spectral_exp(A)
        closed = closed_form_exp(A, table1_coefficients(tag, A))
        assert relative_error(closed, result.matrix) <= 1e-9


def test_overflowing_coefficients_are_input_errors():
    A = table1_matrix("F9", 1.0, 0.0, 0.0, 0.0, 800.0)
    for mode in ("corrected", "printed"):
        with pytest.raises(InputError, match="overflows"):
            table1_coefficients("F9", A, mode)
    with pytest.raises(InputError, match="overflows"):
        table1_coefficients("F1", table1_matrix("F1", 1.0, 0.0, 0.0, 800.0, 0.0))


def test_verify_sample_corrected_passes():
    sample = verify_sample("F9", 1.0, 0.0, 0.5, -0.3, 0.7)
    assert sample.coeffs.branch == "trsq-positive"
    assert sample.error <= 1e-12
    assert sample.passed
    assert sample.spectral_method == "lagrange"
    assert sample.spectral_error <= 1e-12


def test_verify_sample_reuses_given_interpolation():
    given = SpectralExp(matrix=np.eye(3), method="fallback")
    sample = verify_sample("F4", 1.0, 0.0, 0.5, -0.3, 0.7, spectral=given)
    assert sample.spectral_method == "fallback"
    assert sample.spectral_error == pytest.approx(relative_error(sample.closed, np.eye(3)))


def test_verify_sample_printed_f9_diverges():
    sample = verify_sample("F9", 1.0, 0.0, 0.5, -0.3, 0.7, mode="printed")
    assert not sample.passed


def test_verify_sample_printed_agrees_where_entries_hold():
    sample = verify_sample("F4", 1.0, 0.0, 0.5, -0.3, 0.7, mode="printed")
    assert sample.coeffs.branch == "trsq-negative"
    assert sample.passed


def test_verify_sample_records_axioms():
    sample = verify_sample("F5", 1.0, 0.0, 0.5, -0.3, 0.7, axis_steps=(0.25, -0.5))
    assert sample.max_axiom_residual is not None
    assert sample.max_axiom_residual <= 1e-12


@pytest.mark.parametrize("tag", BASIC_CLASSES)
def test_group_axioms_hold(tag):
    residuals = group_axiom_residuals(tag, 1.25, -0.75, 0.3, -0.2, 1.1, 0.4, -0.7)
    assert set(residuals) == {"inverse", "determinant", "additivity"}
    assert max(residuals.values()) <= 1e-12


def test_closed_form_exp_is_polynomial():
    A = table1_matrix("F11", 1.0, 1.0, 0.5, 0.5, 1.0)
    coeffs = table1_coefficients("F11", A)
    expected = np.eye(3) + coeffs.t * A + coeffs.u * (A @ A)
    assert np.array_equal(closed_form_exp(A, coeffs), expected)
