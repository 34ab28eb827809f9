"""Structure constants, the fundamental tensor F and its Lee forms.

Two independent routes to F are kept side by side: the closed component
formulas in terms of C_ij^k (``f_from_structure``) and the Levi-Civita
connection of the left-invariant B-metric computed from the Koszul identity
(``f_from_connection``). Where they disagree the connection is ground truth;
``reconcile_tensor_formulas`` records the disagreements.
"""

import logging
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cache import cache_result
from config import get_settings
from errors import InputError, JacobiError, OracleError
from models import (
    PHI_BASIS,
    ConnectionCoefficients,
    FTensor,
    JacobiReport,
    LeeForms,
    ReconciliationEntry,
    StructureConstants,
    TensorReconciliation,
)

logger = logging.getLogger(__name__)

# (factor, pair, k) stands for factor * C_pair^k.
Term = Tuple[float, Tuple[int, int], int]

# Component formulas in terms of the structure constants; every row fixes two
# components of F and all unlisted components vanish.
PRINTED_COMPONENTS: Tuple[Tuple[Tuple[Tuple[int, int, int], ...], str, Tuple[Term, ...]], ...] = (
    (((1, 1, 1), (1, 2, 2)), "2 C12^1", ((2.0, (1, 2), 1),)),
    (((2, 1, 1), (2, 2, 2)), "2 C12^2", ((2.0, (1, 2), 2),)),
    (((1, 2, 0), (1, 0, 2)), "-C01^1", ((-1.0, (0, 1), 1),)),
    (((0, 2, 0), (0, 0, 2)), "-C01^0", ((-1.0, (0, 1), 0),)),
    (((2, 1, 0), (2, 0, 1)), "-C02^2", ((-1.0, (0, 2), 2),)),
    (((0, 1, 0), (0, 0, 1)), "C02^0", ((1.0, (0, 2), 0),)),
    (
        ((1, 1, 0), (1, 0, 1)),
        "1/2 (C12^0 - C01^2 + C02^1)",
        ((0.5, (1, 2), 0), (-0.5, (0, 1), 2), (0.5, (0, 2), 1)),
    ),
    (
        ((2, 2, 0), (2, 0, 2)),
        "1/2 (C12^0 + C01^2 - C02^1)",
        ((0.5, (1, 2), 0), (0.5, (0, 1), 2), (-0.5, (0, 2), 1)),
    ),
    (
        ((0, 1, 1), (0, 2, 2)),
        "C12^0 + C01^2 + C02^1",
        ((1.0, (1, 2), 0), (1.0, (0, 1), 2), (1.0, (0, 2), 1)),
    ),
)

# Lee-form formulas: (form, index, label, terms). omega_0 is identically zero.
PRINTED_LEE_FORMS: Tuple[Tuple[str, int, str, Tuple[Term, ...]], ...] = (
    ("theta", 0, "theta_0 = -C01^2 + C02^1", ((-1.0, (0, 1), 2), (1.0, (0, 2), 1))),
    ("theta", 1, "theta_1 = 2 C12^1", ((2.0, (1, 2), 1),)),
    ("theta", 2, "theta_2 = -2 C12^2", ((-2.0, (1, 2), 2),)),
    ("theta_star", 0, "theta*_0 = -C01^1 - C02^2", ((-1.0, (0, 1), 1), (-1.0, (0, 2), 2))),
    ("theta_star", 1, "theta*_1 = 2 C12^2", ((2.0, (1, 2), 2),)),
    ("theta_star", 2, "theta*_2 = 2 C12^1", ((2.0, (1, 2), 1),)),
    ("omega", 1, "omega_1 = C02^0", ((1.0, (0, 2), 0),)),
    ("omega", 2, "omega_2 = -C01^0", ((-1.0, (0, 1), 0),)),
)


def resolve_tol(tol: Optional[float], default: float) -> float:
    value = default if tol is None else float(tol)
    if not np.isfinite(value) or value < 0:
        raise InputError(f"tolerance must be a finite non-negative number, got {tol!r}")
    return value


def _evaluate(C: StructureConstants, terms: Sequence[Term]) -> float:
    total = 0.0
    for factor, pair, k in terms:
        total += factor * getattr(C, "c%d%d" % pair)[k]
    return total


def bracket(C: StructureConstants, u, v) -> np.ndarray:
    """[u, v] for coordinate vectors u, v in the basis (E0, E1, E2)."""
    return np.einsum("i,j,ijk->k", np.asarray(u, float), np.asarray(v, float), C.tensor())


def validate_jacobi(C: StructureConstants, tol: Optional[float] = None) -> JacobiReport:
    tol = resolve_tol(tol, get_settings().jacobi_tol)
    t = C.tensor()
    # jac[i,j,k,:] = [[Ei,Ej],Ek] + [[Ej,Ek],Ei] + [[Ek,Ei],Ej]
    jac = (
        np.einsum("ijl,lkm->ijkm", t, t)
        + np.einsum("jkl,lim->ijkm", t, t)
        + np.einsum("kil,ljm->ijkm", t, t)
    )
    residuals: Dict[str, float] = {}
    for i, j, k in combinations(range(3), 3):
        residuals[f"E{i},E{j},E{k}"] = float(np.linalg.norm(jac[i, j, k]))
    max_residual = max(residuals.values())
    threshold = tol * C.scale
    return JacobiReport(
        valid=max_residual <= threshold,
        residuals=residuals,
        max_residual=max_residual,
        threshold=threshold,
    )


def require_lie(C: StructureConstants, tol: Optional[float] = None) -> JacobiReport:
    report = validate_jacobi(C, tol)
    if not report.valid:
        raise JacobiError(
            "Jacobi identity fails for triple (%s): residual %.3e > %.3e"
            % (report.worst_triple, report.max_residual, report.threshold)
        )
    return report


def f_from_structure(C: StructureConstants) -> FTensor:
    f = np.zeros((3, 3, 3))
    for components, _, terms in PRINTED_COMPONENTS:
        value = _evaluate(C, terms)
        for index in components:
            f[index] = value
    return FTensor(f=f)


def lee_forms(C: StructureConstants) -> LeeForms:
    values = {"theta": [0.0, 0.0, 0.0], "theta_star": [0.0, 0.0, 0.0], "omega": [0.0, 0.0, 0.0]}
    for form, index, _, terms in PRINTED_LEE_FORMS:
        values[form][index] = _evaluate(C, terms)
    return LeeForms(**{name: tuple(v) for name, v in values.items()})


def _horizontal_inverse_metric() -> np.ndarray:
    g_inv = PHI_BASIS.metric_inverse.copy()
    g_inv[0, :] = 0.0
    g_inv[:, 0] = 0.0
    return g_inv


def lee_forms_from_tensor(F: FTensor) -> LeeForms:
    """Lee forms as contractions of an arbitrary tensor.

    theta(z) = g^ij F(e_i, e_j, z), theta*(z) = g^ij F(e_i, phi e_j, z) with i, j
    horizontal, and omega(z) = F(xi, xi, z).
    """
    gh = _horizontal_inverse_metric()
    f = F.f
    theta = np.einsum("ij,ijk->k", gh, f)
    theta_star = np.einsum("ij,lj,ilk->k", gh, PHI_BASIS.phi, f)
    omega = f[PHI_BASIS.xi, PHI_BASIS.xi, :]
    return LeeForms(
        theta=tuple(float(x) for x in theta),
        theta_star=tuple(float(x) for x in theta_star),
        omega=tuple(float(x) for x in omega),
    )


def _koszul(C: StructureConstants) -> np.ndarray:
    g = PHI_BASIS.metric
    # c_low[i,j,k] = g([Ei,Ej], Ek)
    c_low = np.einsum("ijl,lk->ijk", C.tensor(), g)
    # 2 g(nabla_i Ej, Ek) = g([Ei,Ej],Ek) - g([Ej,Ek],Ei) + g([Ek,Ei],Ej)
    gamma_low = 0.5 * (
        c_low - np.einsum("jki->ijk", c_low) + np.einsum("kij->ijk", c_low)
    )
    return np.einsum("ijl,lk->ijk", gamma_low, PHI_BASIS.metric_inverse)


def connection_defects(conn: ConnectionCoefficients, C: StructureConstants) -> Dict[str, float]:
    gamma_low = np.einsum("ijl,lk->ijk", conn.gamma, PHI_BASIS.metric)
    metric = np.max(np.abs(gamma_low + np.transpose(gamma_low, (0, 2, 1))))
    torsion = np.max(np.abs(conn.gamma - np.transpose(conn.gamma, (1, 0, 2)) - C.tensor()))
    return {"metric": float(metric), "torsion": float(torsion)}


def levi_civita(C: StructureConstants) -> ConnectionCoefficients:
    settings = get_settings()
    require_lie(C)
    conn = ConnectionCoefficients(gamma=_koszul(C))
    defects = connection_defects(conn, C)
    limit = settings.oracle_tol * C.scale
    for name, value in defects.items():
        if value > limit:
            raise OracleError(f"Levi-Civita {name} defect {value:.3e} exceeds {limit:.3e}")
    return conn


def f_from_connection(C: StructureConstants) -> FTensor:
    """F(Ei, Ej, Ez) = g(nabla_i(phi Ej) - phi(nabla_i Ej), Ez) on the frame."""
    gamma = levi_civita(C).gamma
    phi = PHI_BASIS.phi
    d = np.einsum("lj,ilk->ijk", phi, gamma) - np.einsum("km,ijm->ijk", phi, gamma)
    tensor = FTensor(f=np.einsum("ijk,kz->ijz", d, PHI_BASIS.metric))
    defect = tensor.symmetry_defect()
    limit = get_settings().oracle_tol * C.scale
    if defect > limit:
        raise OracleError(f"oracle tensor is not symmetric in its last two slots ({defect:.3e})")
    return tensor


def random_lie_algebra(rng: np.random.Generator, bound: float = 2.0) -> StructureConstants:
    """Draw C_ij^k = eps_ijl n^lk + a_i delta_j^k - a_j delta_i^k with n symmetric and n a = 0."""
    s = rng.uniform(-bound, bound, size=(3, 3))
    s = 0.5 * (s + s.T)
    if rng.random() < 0.5:
        a = np.zeros(3)
        n = s
    else:
        a = rng.uniform(-bound, bound, size=3)
        p = np.eye(3) - np.outer(a, a) / float(a @ a)
        n = p @ s @ p
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    delta = np.eye(3)
    t = (
        np.einsum("ijl,lk->ijk", eps, n)
        + np.einsum("i,jk->ijk", a, delta)
        - np.einsum("j,ik->ijk", a, delta)
    )
    return StructureConstants.from_tensor(t)


def _span_basis(vectors: np.ndarray, tol: float) -> np.ndarray:
    if vectors.size == 0:
        return np.zeros((0, 3))
    _, sv, vt = np.linalg.svd(vectors)
    rank = int(np.sum(sv > tol * max(1.0, sv[0] if sv.size else 0.0)))
    return vt[:rank]


def derived_series_dims(C: StructureConstants, tol: float = 1e-12) -> List[int]:
    """Dimensions of g, [g, g], [[g, g], [g, g]], ... until zero or stable."""
    basis = np.eye(3)
    dims = [3]
    while basis.shape[0] > 0:
        images = [bracket(C, u, v) for u, v in combinations(basis, 2)]
        basis = _span_basis(np.array(images).reshape(-1, 3), tol)
        dims.append(basis.shape[0])
        if dims[-1] == dims[-2]:
            break
    return dims


def _probes(seed: int, draws: int) -> List[StructureConstants]:
    probes = [StructureConstants.from_vector(row) for row in np.eye(9)]
    rng = np.random.default_rng([seed, 9])
    probes.extend(random_lie_algebra(rng) for _ in range(draws))
    return probes


def _verdict(
    printed: np.ndarray, oracle: np.ndarray, scales: np.ndarray, tol: float
) -> Tuple[Optional[str], float]:
    agree = float(np.max(np.abs(printed - oracle) / scales))
    if agree <= tol:
        return None, agree
    flip = float(np.max(np.abs(printed + oracle) / scales))
    return ("sign-flip" if flip <= tol else "mismatch"), agree


@cache_result("tensor_reconciliation", maxsize=8)
def reconcile_tensor_formulas(
    seed: Optional[int] = None, draws: Optional[int] = None
) -> TensorReconciliation:
    settings = get_settings()
    seed = settings.seed if seed is None else seed
    draws = settings.probe_draws if draws is None else draws
    probes = _probes(seed, draws)
    scales = np.array([c.scale for c in probes])
    printed_f = np.array([f_from_structure(c).f for c in probes])
    oracle_f = np.array([f_from_connection(c).f for c in probes])
    tol = settings.oracle_tol

    entries: List[ReconciliationEntry] = []
    flips: List[Tuple[int, int, int]] = []
    for components, rhs, _ in PRINTED_COMPONENTS:
        for index in components:
            column = (slice(None),) + index
            verdict, discrepancy = _verdict(printed_f[column], oracle_f[column], scales, tol)
            if verdict is None:
                continue
            label = "F%d%d%d = %s" % (index + (rhs,))
            entries.append(
                ReconciliationEntry(
                    source="component-table",
                    identity=label,
                    verdict=verdict,
                    discrepancy=discrepancy,
                    detail="oracle value has the opposite sign"
                    if verdict == "sign-flip"
                    else "",
                )
            )
            if verdict == "sign-flip":
                flips.append(index)

    listed = {index for components, _, _ in PRINTED_COMPONENTS for index in components}
    for index in np.ndindex(3, 3, 3):
        if index in listed:
            continue
        column = (slice(None),) + index
        verdict, discrepancy = _verdict(printed_f[column], oracle_f[column], scales, tol)
        if verdict is not None:
            entries.append(
                ReconciliationEntry(
                    source="component-table",
                    identity="F%d%d%d = 0" % index,
                    verdict="mismatch",
                    discrepancy=discrepancy,
                )
            )

    oracle_forms = [lee_forms_from_tensor(FTensor(f=f)) for f in oracle_f]
    printed_forms = [lee_forms(c) for c in probes]
    for form, index, label, _ in PRINTED_LEE_FORMS:
        p = np.array([getattr(lf, form)[index] for lf in printed_forms])
        o = np.array([getattr(lf, form)[index] for lf in oracle_forms])
        verdict, discrepancy = _verdict(p, o, scales, tol)
        if verdict is not None:
            entries.append(
                ReconciliationEntry(
                    source="lee-forms", identity=label, verdict=verdict, discrepancy=discrepancy
                )
            )

    for entry in entries:
        logger.warning(
            "printed identity %s: %s (%.3e)", entry.identity, entry.verdict, entry.discrepancy
        )
    ok = all(entry.verdict == "sign-flip" for entry in entries)
    return TensorReconciliation(
        entries=tuple(entries), sign_flips=tuple(flips), probes=len(probes), ok=ok
    )


def reconciled_tensor(
    C: StructureConstants, reconciliation: Optional[TensorReconciliation] = None
) -> FTensor:
    """Printed component formulas with the recorded sign flips applied."""
    reconciliation = reconciliation or reconcile_tensor_formulas()
    f = f_from_structure(C).f.copy()
    for index in reconciliation.sign_flips:
        f[index] = -f[index]
    return FTensor(f=f)
