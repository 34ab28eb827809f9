"""Closed-form exponentials e^A = E + tA + uA^2 of the class matrix groups.

Every class matrix satisfies either A^2 = tau A (F1, F5, F11) or
A^3 = kappa A (F4, F8, F9, F10), which is what truncates the exponential
series to a quadratic polynomial in A. Coefficients come in two modes:
``printed`` follows the published table entry by entry, ``corrected`` is
derived from the two polynomial families and is what the sweep asserts on.
``reference_expm`` and ``spectral_exp`` are the independent oracles.
"""

import logging
import math
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from algebra import resolve_tol
from classification import check_tag
from config import get_settings
from errors import FamilyViolationError, InputError
from models import (
    ExpCoefficients,
    GroupSample,
    SpectralExp,
    StructureConstants,
    as_mat3,
    frobenius,
)

logger = logging.getLogger(__name__)

QUADRATIC_CLASSES: Tuple[str, ...] = ("F1", "F5", "F11")
CUBIC_CLASSES: Tuple[str, ...] = ("F4", "F8", "F9", "F10")
EYE = np.eye(3)


def _matrix(A) -> np.ndarray:
    try:
        return as_mat3(A)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def basis_matrices(C: StructureConstants) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """M_i[j, k] = -C_ij^k, row j and column k."""
    t = -C.tensor()
    return as_mat3(t[0]), as_mat3(t[1]), as_mat3(t[2])


def table1_matrix(s: str, alpha: float, beta: float, a: float, b: float, c: float) -> np.ndarray:
    check_tag(s)
    al, bt = float(alpha), float(beta)
    if s == "F1":
        m = [[0, 0, 0], [0, al * b, bt * b], [0, -al * a, -bt * a]]
    elif s == "F4":
        m = [[0, -al * b, al * a], [0, 0, -al * c], [0, al * c, 0]]
    elif s == "F5":
        m = [[0, al * a, al * b], [0, -al * c, 0], [0, 0, -al * c]]
    elif s == "F8":
        m = [[0, al * b, al * a], [-2 * al * b, 0, -al * c], [2 * al * a, -al * c, 0]]
    elif s == "F9":
        m = [[0, al * a, -al * b], [0, -al * c, 0], [0, 0, al * c]]
    elif s == "F10":
        m = [[0, al * b, al * a], [0, 0, -al * c], [0, -al * c, 0]]
    else:
        m = [[al * a + bt * b, 0, 0], [-al * c, 0, 0], [-bt * c, 0, 0]]
    return _matrix(np.array(m, dtype=float) + 0.0)


def family_scalar(s: str, A) -> float:
    """tau of A^2 = tau A for F1, F5, F11; kappa = tr(A^2) / 2 of A^3 = kappa A otherwise."""
    check_tag(s)
    A = _matrix(A)
    if s in ("F1", "F11"):
        return float(np.trace(A))
    if s == "F5":
        return 0.5 * float(np.trace(A))
    return 0.5 * float(np.trace(A @ A))


def _check_family(s: str, A: np.ndarray, scalar: float, tol: float) -> None:
    size = max(1.0, frobenius(A))
    if s in QUADRATIC_CLASSES:
        residual = frobenius(A @ A - scalar * A)
        limit = tol * size**2
        rule = "A^2 = tau A"
    else:
        residual = frobenius(A @ A @ A - scalar * A)
        limit = tol * size**3
        rule = "A^3 = kappa A"
    if residual > limit:
        raise FamilyViolationError(
            f"{s}: matrix is outside the {rule} family (residual {residual:.3e} > {limit:.3e})"
        )


def _series(quadratic: bool, x: float) -> Tuple[float, float]:
    if quadratic:
        return 1.0 + x / 2.0 + x**2 / 6.0 + x**3 / 24.0, 0.0
    t = 1.0 + x / 6.0 + x**2 / 120.0 + x**3 / 5040.0
    u = 0.5 + x / 24.0 + x**2 / 720.0 + x**3 / 40320.0
    return t, u


def _trig(kappa: float) -> Tuple[float, float]:
    x = math.sqrt(-kappa)
    return math.sin(x) / x, 2.0 * math.sin(x / 2.0) ** 2 / x**2


def _hyperbolic(kappa: float) -> Tuple[float, float]:
    x = math.sqrt(kappa)
    return math.sinh(x) / x, 2.0 * math.sinh(x / 2.0) ** 2 / kappa


def _corrected(
    s: str, A: np.ndarray, scalar: float, threshold: float
) -> Tuple[float, float, str]:
    quadratic = s in QUADRATIC_CLASSES
    size = max(1.0, frobenius(A))
    if scalar == 0.0:
        if quadratic:
            return 1.0, 0.0, "trace-zero"
        return 1.0, (0.5 if np.any(A @ A != 0.0) else 0.0), "trsq-zero"
    if abs(scalar) <= threshold * size**2:
        t, u = _series(quadratic, scalar)
        return t, u, "series-fallback"
    if quadratic:
        return math.expm1(scalar) / scalar, 0.0, "trace-nonzero"
    if scalar < 0:
        return _trig(scalar) + ("trsq-negative",)
    return _hyperbolic(scalar) + ("trsq-positive",)


def _printed(s: str, scalar: float) -> Tuple[float, float, str]:
    # Entries as published, evaluated through cancellation-free equivalents.
    if s in QUADRATIC_CLASSES:
        if scalar == 0.0:
            return 1.0, 0.0, "trace-zero"
        numerator = math.expm1(-scalar) if s == "F11" else math.expm1(scalar)
        return numerator / scalar, 0.0, "trace-nonzero"
    if scalar == 0.0:
        return 1.0, (0.5 if s == "F8" else 0.0), "trsq-zero"
    if scalar < 0 and s in ("F9", "F10"):
        raise FamilyViolationError(f"{s}: the printed table has no entry for tr A^2 < 0")
    if scalar > 0 and s == "F4":
        raise FamilyViolationError("F4: the printed table has no entry for tr A^2 > 0")
    if scalar < 0:
        t, u = _trig(scalar)
        if s == "F8":
            t = -t
        return t, u, "trsq-negative"
    x = math.sqrt(scalar)
    t = math.sinh(x) / x
    with np.errstate(over="ignore"):
        if s == "F9":
            u = float(2.0 * np.sinh(scalar / 2.0) ** 2 / scalar)
        elif s == "F10":
            u = float(np.cosh(x) / scalar)
        else:
            u = 2.0 * math.sinh(x / 2.0) ** 2 / scalar
    return t, u, "trsq-positive"


def table1_coefficients(
    s: str,
    A,
    mode: str = "corrected",
    family_tol: Optional[float] = None,
    branch_threshold: Optional[float] = None,
) -> ExpCoefficients:
    settings = get_settings()
    check_tag(s)
    if mode not in ("printed", "corrected"):
        raise InputError(f"unknown mode {mode!r}; expected printed or corrected")
    A = _matrix(A)
    scalar = family_scalar(s, A)
    _check_family(s, A, scalar, resolve_tol(family_tol, settings.family_tol))
    try:
        if mode == "printed":
            t, u, branch = _printed(s, scalar)
        else:
            threshold = resolve_tol(branch_threshold, settings.branch_threshold)
            t, u, branch = _corrected(s, A, scalar, threshold)
    except OverflowError as exc:
        raise InputError(
            f"{s}: e^A overflows double precision (branch scalar {scalar:.6g})"
        ) from exc
    return ExpCoefficients(t=t, u=u, branch=branch, mode=mode, scalar=scalar)


def closed_form_exp(A, coeffs: ExpCoefficients) -> np.ndarray:
    A = _matrix(A)
    return EYE + coeffs.t * A + coeffs.u * (A @ A)


def reference_expm(A) -> np.ndarray:
    """Scaling and squaring with a Taylor series on the scaled matrix."""
    A = _matrix(A)
    norm = frobenius(A)
    squarings = 0
    if norm > 2.0**-5:
        squarings = int(math.ceil(math.log2(norm / 2.0**-5)))
    X = A / 2.0**squarings
    result = EYE.copy()
    term = EYE.copy()
    eps = np.finfo(float).eps
    for k in range(1, 31):
        term = term @ X / k
        result = result + term
        if frobenius(term) <= eps * frobenius(result):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def _clusters(eigenvalues: np.ndarray, merge: float) -> List[Tuple[complex, int]]:
    """Eigenvalues within ``merge`` of a cluster's first member share one root."""
    groups: List[List[complex]] = []
    for value in eigenvalues:
        for group in groups:
            if abs(value - group[0]) <= merge:
                group.append(complex(value))
                break
        else:
            groups.append([complex(value)])
    return [(complex(np.mean(group)), len(group)) for group in groups]


def _annihilator(roots: Sequence[complex], powers: Sequence[int], A: np.ndarray) -> np.ndarray:
    P = np.eye(3, dtype=complex)
    for root, power in zip(roots, powers):
        for _ in range(power):
            P = P @ (A - root * EYE)
    return P


def _minimal_powers(
    A: np.ndarray, clusters: Sequence[Tuple[complex, int]], tol: float, size: float
) -> Optional[Tuple[int, ...]]:
    """Lowest root multiplicities whose polynomial annihilates A."""
    roots = [root for root, _ in clusters]
    candidates = sorted(product(*(range(1, m + 1) for _, m in clusters)), key=sum)
    for powers in candidates:
        residual = float(np.linalg.norm(_annihilator(roots, powers, A)))
        if residual <= tol * size ** sum(powers):
            return tuple(powers)
    return None


def _newton_coefficients(nodes: Sequence[complex]) -> List[complex]:
    # Confluent divided differences of exp; equal nodes are contiguous.
    n = len(nodes)
    table = [[0j] * n for _ in range(n)]
    for i in range(n):
        table[i][i] = np.exp(nodes[i])
    for width in range(1, n):
        for i in range(n - width):
            j = i + width
            if nodes[i] == nodes[j]:
                table[i][j] = np.exp(nodes[i]) / math.factorial(width)
            else:
                table[i][j] = (table[i + 1][j] - table[i][j - 1]) / (nodes[j] - nodes[i])
    return [table[0][j] for j in range(n)]


def spectral_exp(A, gap: Optional[float] = None) -> SpectralExp:
    """Interpolate exp on the roots of the minimal polynomial of A.

    Eigenvalues closer than ``spectral_merge`` (relative to max(1, |A|_F)) are one root.
    Its multiplicity in the minimal polynomial is the lowest power that annihilates A,
    which adds Hermite terms for a nontrivial Jordan block. Distinct roots closer than
    ``gap``, or a spectrum no candidate polynomial annihilates, use reference_expm.
    """
    A = _matrix(A)
    settings = get_settings()
    gap = resolve_tol(gap, settings.spectral_gap)
    size = max(1.0, frobenius(A))
    clusters = _clusters(np.linalg.eigvals(A), settings.spectral_merge * size)
    roots = [root for root, _ in clusters]
    separation = min(
        (abs(roots[i] - roots[j]) for i in range(len(roots)) for j in range(i + 1, len(roots))),
        default=math.inf,
    )
    powers = None
    if separation > gap * size:
        powers = _minimal_powers(A, clusters, settings.minpoly_tol, size)
    if powers is None:
        logger.debug("near-coincident spectrum (separation %.3e), using reference_expm", separation)
        return SpectralExp(matrix=reference_expm(A), method="fallback")
    nodes = [root for root, power in zip(roots, powers) for _ in range(power)]
    result = np.zeros((3, 3), dtype=complex)
    basis = np.eye(3, dtype=complex)
    for node, coefficient in zip(nodes, _newton_coefficients(nodes)):
        result = result + coefficient * basis
        basis = basis @ (A - node * EYE)
    method = "lagrange" if all(power == 1 for power in powers) else "hermite"
    return SpectralExp(matrix=_matrix(result.real), method=method, degree=len(nodes))


def relative_error(closed: np.ndarray, reference: np.ndarray) -> float:
    return frobenius(closed - reference) / max(1.0, frobenius(reference))


def _corrected_exp(s: str, alpha: float, beta: float, a: float, b: float, c: float) -> np.ndarray:
    A = table1_matrix(s, alpha, beta, a, b, c)
    return closed_form_exp(A, table1_coefficients(s, A, "corrected"))


def group_axiom_residuals(
    s: str,
    alpha: float,
    beta: float,
    a: float,
    b: float,
    c: float,
    s1: float,
    s2: float,
) -> Dict[str, float]:
    """Inverse, determinant and one-parameter additivity residuals of the corrected closed form.

    Inverse and determinant residuals are divided by max(1, |e^A| |e^-A|), additivity by
    max(1, |e^sA| |e^tA|).
    """
    forward = _corrected_exp(s, alpha, beta, a, b, c)
    backward = _corrected_exp(s, alpha, beta, -a, -b, -c)
    condition = max(1.0, frobenius(forward) * frobenius(backward))
    inverse = frobenius(forward @ backward - EYE) / condition
    expected_det = math.exp(float(np.trace(table1_matrix(s, alpha, beta, a, b, c))))
    det = abs(float(np.linalg.det(forward)) - expected_det) / (expected_det * condition)

    first = _corrected_exp(s, alpha, beta, s1 * a, s1 * b, s1 * c)
    second = _corrected_exp(s, alpha, beta, s2 * a, s2 * b, s2 * c)
    total = _corrected_exp(s, alpha, beta, (s1 + s2) * a, (s1 + s2) * b, (s1 + s2) * c)
    additivity = frobenius(first @ second - total) / max(
        1.0, frobenius(first) * frobenius(second)
    )
    return {"inverse": inverse, "determinant": det, "additivity": additivity}


def _finite_error(closed: np.ndarray, oracle: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        error = relative_error(closed, oracle)
    return error if math.isfinite(error) else math.inf


def verify_sample(
    s: str,
    alpha: float,
    beta: float,
    a: float,
    b: float,
    c: float,
    mode: str = "corrected",
    tolerance: Optional[float] = None,
    axis_steps: Optional[Tuple[float, float]] = None,
    spectral: Optional[SpectralExp] = None,
) -> GroupSample:
    """Closed form against reference_expm and spectral_exp for one point of one class.

    ``axis_steps`` = (s1, s2) also records the group-axiom residuals (corrected mode only).
    ``spectral`` reuses an interpolation already computed for the same point.
    """
    tolerance = resolve_tol(tolerance, get_settings().exp_tol)
    A = table1_matrix(s, alpha, beta, a, b, c)
    coeffs = table1_coefficients(s, A, mode)
    closed = closed_form_exp(A, coeffs)
    reference = reference_expm(A)
    if spectral is None:
        spectral = spectral_exp(A)
    error = _finite_error(closed, reference)
    spectral_error = _finite_error(closed, spectral.matrix)
    residuals: Dict[str, float] = {}
    if axis_steps is not None and mode == "corrected":
        residuals = group_axiom_residuals(s, alpha, beta, a, b, c, *axis_steps)
    logger.debug("%s %s (%g, %g, %g): %s error %.3e", s, coeffs.branch, a, b, c, mode, error)
    return GroupSample(
        class_tag=s,
        alpha=alpha,
        beta=beta,
        a=a,
        b=b,
        c=c,
        A=A,
        coeffs=coeffs,
        closed=closed,
        reference=reference,
        error=error,
        spectral_error=spectral_error,
        spectral_method=spectral.method,
        tolerance=tolerance,
        inverse_residual=residuals.get("inverse"),
        det_residual=residuals.get("determinant"),
        additivity_residual=residuals.get("additivity"),
    )
