import logging
from typing import Dict, Optional, Tuple

import numpy as np

from algebra import f_from_connection, f_from_structure, lee_forms_from_tensor, resolve_tol
from cache import cache_result
from config import get_settings
from errors import ClassificationError, InputError
from models import (
    BASIC_CLASSES,
    TWO_PARAMETER_CLASSES,
    ClassProfile,
    ClassSignature,
    FTensor,
    ParameterRelation,
    StructureConstants,
)

logger = logging.getLogger(__name__)

# Scalars whose vanishing decides each class; F1 and F11 use a pair.
MEMBERSHIP: Dict[str, Tuple[str, ...]] = {
    "F1": ("theta1", "theta2"),
    "F4": ("theta0",),
    "F5": ("theta_star0",),
    "F8": ("lam",),
    "F9": ("mu",),
    "F10": ("nu",),
    "F11": ("omega1", "omega2"),
}

# Parameter relations as printed: (class, parameter) -> (scalar, factor).
PRINTED_RELATIONS: Dict[Tuple[str, str], Tuple[str, float]] = {
    ("F1", "alpha"): ("theta1", 0.5),
    ("F1", "beta"): ("theta2", 0.5),
    ("F4", "alpha"): ("theta0", 0.5),
    ("F5", "alpha"): ("theta_star0", -0.5),
    ("F8", "alpha"): ("lam", -1.0),
    ("F9", "alpha"): ("mu", -1.0),
    ("F10", "alpha"): ("nu", 0.5),
    ("F11", "alpha"): ("omega2", -1.0),
    ("F11", "beta"): ("omega1", 1.0),
}


def check_tag(s: str) -> str:
    if s not in BASIC_CLASSES:
        raise InputError(f"unknown class tag {s!r}; expected one of {', '.join(BASIC_CLASSES)}")
    return s


def profile_from_tensor(F: FTensor, scale: Optional[float] = None) -> ClassProfile:
    """The nine class scalars of an arbitrary F through its Lee forms and pair splits."""
    f = F.f
    forms = lee_forms_from_tensor(F)
    if scale is None:
        scale = max(1.0, float(np.max(np.abs(f))))
    return ClassProfile(
        theta0=forms.theta[0],
        theta1=forms.theta[1],
        theta2=forms.theta[2],
        theta_star0=forms.theta_star[0],
        lam=0.5 * (f[1, 0, 1] + f[2, 0, 2]),
        mu=0.5 * (f[1, 0, 2] - f[2, 0, 1]),
        nu=0.5 * (f[0, 1, 1] + f[0, 2, 2]),
        omega1=forms.omega[1],
        omega2=forms.omega[2],
        scale=scale,
    )


def extract_profile(C: StructureConstants) -> ClassProfile:
    return profile_from_tensor(f_from_structure(C), scale=C.scale)


def oracle_profile(C: StructureConstants) -> ClassProfile:
    return profile_from_tensor(f_from_connection(C), scale=C.scale)


def structure_from_profile(profile: ClassProfile) -> StructureConstants:
    """Inverse of extract_profile."""
    p = profile
    c12 = (2.0 * p.lam, 0.5 * p.theta1, -0.5 * p.theta2)
    c01 = (
        -p.omega2,
        -0.5 * (p.theta_star0 + 2.0 * p.mu),
        0.5 * (p.nu - 2.0 * p.lam - p.theta0),
    )
    c02 = (
        p.omega1,
        0.5 * (p.theta0 + p.nu - 2.0 * p.lam),
        p.mu - 0.5 * p.theta_star0,
    )
    return StructureConstants(c01=c01, c02=c02, c12=c12)


def classify(profile: ClassProfile, tol: Optional[float] = None) -> ClassSignature:
    threshold = resolve_tol(tol, get_settings().class_tol) * profile.scale
    members = []
    for tag in BASIC_CLASSES:
        values = [getattr(profile, name) for name in MEMBERSHIP[tag]]
        if max(abs(v) for v in values) > threshold:
            members.append(tag)
    return ClassSignature(members=tuple(members))


def _positive_zero(row):
    # -0.0 from negating a zero parameter
    return tuple(v + 0.0 for v in row)


def canonical_algebra(s: str, alpha: float, beta: float = 0.0) -> StructureConstants:
    check_tag(s)
    a, b = float(alpha), float(beta)
    if b != 0.0 and s not in TWO_PARAMETER_CLASSES:
        logger.warning("beta=%s ignored for one-parameter class %s", b, s)
    zero = (0.0, 0.0, 0.0)
    table = {
        "F1": (zero, zero, (0.0, a, b)),
        "F4": ((0.0, 0.0, a), (0.0, -a, 0.0), zero),
        "F5": ((0.0, a, 0.0), (0.0, 0.0, a), zero),
        "F8": ((0.0, 0.0, a), (0.0, a, 0.0), (-2.0 * a, 0.0, 0.0)),
        "F9": ((0.0, a, 0.0), (0.0, 0.0, -a), zero),
        "F10": ((0.0, 0.0, a), (0.0, a, 0.0), zero),
        "F11": ((a, 0.0, 0.0), (b, 0.0, 0.0), zero),
    }
    c01, c02, c12 = (_positive_zero(row) for row in table[s])
    return StructureConstants(c01=c01, c02=c02, c12=c12)


def reconstruct_F(profile: ClassProfile) -> FTensor:
    """Sum of the seven basic-class templates evaluated at the profile."""
    p = profile
    f = np.zeros((3, 3, 3))
    # F1
    f[1, 1, 1] += p.theta1
    f[1, 2, 2] += p.theta1
    f[2, 1, 1] -= p.theta2
    f[2, 2, 2] -= p.theta2
    # F4
    for index in ((1, 0, 1), (1, 1, 0)):
        f[index] += 0.5 * p.theta0
    for index in ((2, 0, 2), (2, 2, 0)):
        f[index] -= 0.5 * p.theta0
    # F5
    for index in ((1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        f[index] += 0.5 * p.theta_star0
    # F8
    for index in ((1, 0, 1), (1, 1, 0), (2, 0, 2), (2, 2, 0)):
        f[index] += p.lam
    # F9
    for index in ((1, 0, 2), (1, 2, 0)):
        f[index] += p.mu
    for index in ((2, 0, 1), (2, 1, 0)):
        f[index] -= p.mu
    # F10
    f[0, 1, 1] += p.nu
    f[0, 2, 2] += p.nu
    # F11
    for index in ((0, 1, 0), (0, 0, 1)):
        f[index] += p.omega1
    for index in ((0, 2, 0), (0, 0, 2)):
        f[index] += p.omega2
    return FTensor(f=f)


@cache_result("parameter_relations", maxsize=1)
def arbitrated_relations() -> Tuple[ParameterRelation, ...]:
    """Printed parameter relations next to the factors the connection oracle implies."""
    relations = []
    for (tag, parameter), (scalar, printed_factor) in PRINTED_RELATIONS.items():
        alpha, beta = (1.0, 0.0) if parameter == "alpha" else (0.0, 1.0)
        value = getattr(oracle_profile(canonical_algebra(tag, alpha, beta)), scalar)
        relation = ParameterRelation(
            class_tag=tag,
            parameter=parameter,
            scalar=scalar,
            printed_factor=printed_factor,
            factor=1.0 / value,
        )
        if relation.conflicts:
            logger.warning(
                "%s: printed %s = %g %s, oracle gives factor %g",
                tag,
                parameter,
                printed_factor,
                scalar,
                relation.factor,
            )
        relations.append(relation)
    return tuple(relations)


def recover_parameters(C: StructureConstants, s: str) -> Tuple[float, float]:
    check_tag(s)
    signature = classify(extract_profile(C))
    if not signature.is_pure(s):
        raise ClassificationError(f"expected pure class {s}, got {signature.label}")
    profile = oracle_profile(C)
    values = {"alpha": 0.0, "beta": 0.0}
    for relation in arbitrated_relations():
        if relation.class_tag == s:
            values[relation.parameter] = relation.factor * getattr(profile, relation.scalar)
    return values["alpha"], values["beta"]
