import hashlib
import json
import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    StrictFloat,
    computed_field,
    field_serializer,
    field_validator,
)

ClassTag = Literal["F1", "F4", "F5", "F8", "F9", "F10", "F11"]
BASIC_CLASSES: Tuple[str, ...] = ("F1", "F4", "F5", "F8", "F9", "F10", "F11")
TWO_PARAMETER_CLASSES: Tuple[str, ...] = ("F1", "F11")

Branch = Literal[
    "trace-zero",
    "trace-nonzero",
    "trsq-negative",
    "trsq-zero",
    "trsq-positive",
    "series-fallback",
]
ExpMode = Literal["printed", "corrected"]

# Stored bracket pairs, in storage order.
PAIRS: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (1, 2))
PROFILE_FIELDS: Tuple[str, ...] = (
    "theta0",
    "theta1",
    "theta2",
    "theta_star0",
    "lam",
    "mu",
    "nu",
    "omega1",
    "omega2",
)

Vec3 = Tuple[float, float, float]


def as_array(value, shape: Tuple[int, ...], label: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{label} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{label} has non-finite entries")
    arr.setflags(write=False)
    return arr


def as_mat3(value) -> np.ndarray:
    return as_array(value, (3, 3), "Mat3")


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


class BasisFrame(BaseModel):
    """The fixed phi-basis (E0 = xi, E1, E2) with phi E1 = E2, phi E2 = -E1."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    phi: np.ndarray
    xi: int = 0
    eta: np.ndarray
    metric: np.ndarray

    @classmethod
    def standard(cls) -> "BasisFrame":
        # Columns are the images of E0, E1, E2.
        phi = [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]
        return cls(
            phi=as_mat3(phi),
            eta=as_array([1.0, 0.0, 0.0], (3,), "eta"),
            metric=as_mat3(np.diag([1.0, 1.0, -1.0])),
        )

    @property
    def metric_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.metric)


PHI_BASIS = BasisFrame.standard()


class StructureConstants(BaseModel):
    """Brackets [E_i, E_j] = C_ij^k E_k, stored for the pairs (0,1), (0,2), (1,2) only."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    c01: Vec3 = (0.0, 0.0, 0.0)
    c02: Vec3 = (0.0, 0.0, 0.0)
    c12: Vec3 = (0.0, 0.0, 0.0)

    @field_validator("c01", "c02", "c12")
    @classmethod
    def validate_finite(cls, value: Vec3) -> Vec3:
        if not all(math.isfinite(v) for v in value):
            raise ValueError("structure constants must be finite")
        return value

    @classmethod
    def from_vector(cls, values) -> "StructureConstants":
        v = [float(x) for x in np.asarray(values, dtype=float).ravel()]
        if len(v) != 9:
            raise ValueError(f"expected 9 structure constants, got {len(v)}")
        return cls(c01=tuple(v[0:3]), c02=tuple(v[3:6]), c12=tuple(v[6:9]))

    @classmethod
    def from_tensor(cls, tensor: np.ndarray) -> "StructureConstants":
        t = np.asarray(tensor, dtype=float)
        return cls.from_vector(np.concatenate([t[i, j] for i, j in PAIRS]))

    def as_vector(self) -> np.ndarray:
        return np.array(self.c01 + self.c02 + self.c12, dtype=float)

    def tensor(self) -> np.ndarray:
        """Full antisymmetric array t[i, j, k] = C_ij^k."""
        t = np.zeros((3, 3, 3))
        for (i, j), row in zip(PAIRS, (self.c01, self.c02, self.c12)):
            t[i, j] = row
            t[j, i] = [-x for x in row]
        return t

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.as_vector()))))

    def scaled(self, k: float) -> "StructureConstants":
        return StructureConstants.from_vector(k * self.as_vector())

    def __add__(self, other: "StructureConstants") -> "StructureConstants":
        return StructureConstants.from_vector(self.as_vector() + other.as_vector())


class FTensor(BaseModel):
    """Components f[i, j, k] = F(E_i, E_j, E_k) of the fundamental tensor."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    f: np.ndarray

    @field_validator("f", mode="before")
    @classmethod
    def validate_shape(cls, value) -> np.ndarray:
        return as_array(value, (3, 3, 3), "FTensor")

    @field_serializer("f")
    def serialize_f(self, value: np.ndarray):
        return value.tolist()

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.f - np.transpose(self.f, (0, 2, 1)))))


class LeeForms(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta: Vec3
    theta_star: Vec3
    omega: Vec3

    @field_validator("omega")
    @classmethod
    def validate_omega0(cls, value: Vec3) -> Vec3:
        if value[0] != 0.0:
            raise ValueError("omega_0 must vanish")
        return value


class ConnectionCoefficients(BaseModel):
    """gamma[i, j, k] is the E_k coefficient of nabla_{E_i} E_j."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gamma: np.ndarray

    @field_validator("gamma", mode="before")
    @classmethod
    def validate_shape(cls, value) -> np.ndarray:
        return as_array(value, (3, 3, 3), "ConnectionCoefficients")


class JacobiReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    valid: bool
    residuals: Dict[str, float]
    max_residual: float
    threshold: float

    @property
    def worst_triple(self) -> str:
        return max(self.residuals, key=lambda k: self.residuals[k])


class ClassProfile(BaseModel):
    """The nine class scalars of F and the scale used for zero tests."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    theta0: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0
    theta_star0: float = 0.0
    lam: float = 0.0
    mu: float = 0.0
    nu: float = 0.0
    omega1: float = 0.0
    omega2: float = 0.0
    scale: float = Field(default=1.0, gt=0.0)

    def scalars(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in PROFILE_FIELDS}

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PROFILE_FIELDS], dtype=float)


class ClassSignature(BaseModel):
    model_config = ConfigDict(frozen=True)

    members: Tuple[ClassTag, ...] = ()

    @field_validator("members")
    @classmethod
    def canonical_order(cls, value: Tuple[str, ...]) -> Tuple[str, ...]:
        present = set(value)
        return tuple(tag for tag in BASIC_CLASSES if tag in present)

    @computed_field
    @property
    def is_f0(self) -> bool:
        return not self.members

    @property
    def label(self) -> str:
        if self.is_f0:
            return "F0 (cosymplectic)"
        return " ⊕ ".join(self.members)

    def is_pure(self, tag: str) -> bool:
        return self.members == (tag,)


class ParameterRelation(BaseModel):
    """alpha (or beta) = factor * scalar, with the printed factor kept alongside."""

    model_config = ConfigDict(frozen=True)

    class_tag: ClassTag
    parameter: Literal["alpha", "beta"]
    scalar: str
    printed_factor: float
    factor: float

    @property
    def conflicts(self) -> bool:
        return not math.isclose(self.printed_factor, self.factor, rel_tol=1e-9, abs_tol=1e-12)


class ReconciliationEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    source: Literal["component-table", "lee-forms", "class-relations", "exp-table"]
    identity: str
    verdict: Literal["sign-flip", "mismatch", "diverges"]
    discrepancy: float = Field(..., ge=0.0)
    detail: str = ""


class TensorReconciliation(BaseModel):
    """Printed tensor identities that disagree with the connection oracle."""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[ReconciliationEntry, ...]
    sign_flips: Tuple[Tuple[int, int, int], ...]
    probes: int
    ok: bool


class ExpCoefficients(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    u: float
    branch: Branch
    mode: ExpMode
    scalar: float


class SpectralExp(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray
    method: Literal["lagrange", "hermite", "fallback"]
    # degree of the interpolating minimal polynomial; None on fallback
    degree: Optional[int] = None

    @field_serializer("matrix")
    def serialize_matrix(self, value: np.ndarray):
        return value.tolist()


class GroupSample(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    class_tag: ClassTag
    alpha: float
    beta: float
    a: float
    b: float
    c: float
    A: np.ndarray
    coeffs: ExpCoefficients
    closed: np.ndarray
    reference: np.ndarray
    error: float = Field(..., ge=0.0)
    spectral_error: float = Field(..., ge=0.0)
    spectral_method: Literal["lagrange", "hermite", "fallback"]
    tolerance: float = Field(..., ge=0.0)
    inverse_residual: Optional[float] = None
    det_residual: Optional[float] = None
    additivity_residual: Optional[float] = None

    @field_serializer("A", "closed", "reference")
    def serialize_matrix(self, value: np.ndarray):
        return value.tolist()

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance

    @property
    def max_axiom_residual(self) -> Optional[float]:
        values = [
            v
            for v in (self.inverse_residual, self.det_residual, self.additivity_residual)
            if v is not None
        ]
        return max(values) if values else None


class CellResult(BaseModel):
    class_tag: ClassTag
    branch: Branch
    mode: ExpMode
    samples: int = Field(..., ge=0)
    max_error: float
    mean_error: float
    max_spectral_error: float
    spectral_fallbacks: int = Field(default=0, ge=0)
    max_axiom_residual: Optional[float] = None
    passed: bool


class DivergenceCell(BaseModel):
    class_tag: ClassTag
    branch: Branch
    max_error: float


class VerificationReport(BaseModel):
    seed: int
    tolerance: float
    near_tolerance: float
    samples: int
    cells: List[CellResult]
    divergence_cells: List[DivergenceCell]
    reconciliation: List[ReconciliationEntry]
    tensor_reconciliation_ok: bool
    all_corrected_pass: bool
    generated_at: str = ""
    body_digest: str = ""

    def body(self) -> dict:
        """Report content without wall-clock data; the digest is taken over this."""
        return self.model_dump(mode="json", exclude={"generated_at", "body_digest"})

    def compute_digest(self) -> str:
        raw = json.dumps(self.body(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()


class AlgebraFile(BaseModel):
    """On-disk algebra: {"C": {"01": [..], "02": [..], "12": [..]}, name?, description?}."""

    model_config = ConfigDict(extra="forbid")

    C: Dict[str, List[StrictFloat]]
    name: Optional[str] = None
    description: Optional[str] = None

    @field_validator("C")
    @classmethod
    def validate_constants(cls, value: Dict[str, List[float]]) -> Dict[str, List[float]]:
        expected = {"%d%d" % pair for pair in PAIRS}
        missing = sorted(expected - set(value))
        extra = sorted(set(value) - expected)
        if missing:
            raise ValueError(f"missing key(s): {', '.join(missing)}")
        if extra:
            raise ValueError(f"unexpected key(s): {', '.join(extra)}")
        for key in sorted(value):
            row = value[key]
            if len(row) != 3:
                raise ValueError(f"key {key!r} must hold 3 values, got {len(row)}")
            if not all(math.isfinite(x) for x in row):
                raise ValueError(f"key {key!r} has non-finite values")
        return value

    def to_structure(self) -> StructureConstants:
        return StructureConstants(
            c01=tuple(self.C["01"]), c02=tuple(self.C["02"]), c12=tuple(self.C["12"])
        )

    @classmethod
    def from_structure(
        cls,
        constants: StructureConstants,
        name: Optional[str] = None,
        description: Optional[str] = None,
    ) -> "AlgebraFile":
        return cls(
            C={
                "01": list(constants.c01),
                "02": list(constants.c02),
                "12": list(constants.c12),
            },
            name=name,
            description=description,
        )


class ExampleRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: Literal["GI", "GII", "GIII", "SO3"]
    variant: str
    constants: StructureConstants
    substitution: str
    expected_signature: ClassSignature
    bianchi_label: Literal["Bia(5)", "Bia(VII0)", "Bia(2)", "Bia(9)"]


class FixtureCheck(BaseModel):
    name: str
    check: str
    passed: bool
    asserted: bool = True
    detail: str = ""
    max_error: Optional[float] = None
