import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from algebra import reconcile_tensor_formulas, resolve_tol
from classification import arbitrated_relations
from config import get_settings
from errors import InputError, ReportIOError
from expgroups import spectral_exp, table1_matrix, verify_sample
from models import (
    BASIC_CLASSES,
    CellResult,
    DivergenceCell,
    GroupSample,
    ReconciliationEntry,
    VerificationReport,
)

logger = logging.getLogger(__name__)

# Regular branches each class can reach with real parameters.
REGULAR_TARGETS: Dict[str, Tuple[str, ...]] = {
    "F1": ("trace-zero", "trace-nonzero"),
    "F4": ("trsq-zero", "trsq-negative"),
    "F5": ("trace-zero", "trace-nonzero"),
    "F8": ("trsq-zero", "trsq-negative", "trsq-positive"),
    "F9": ("trsq-zero", "trsq-positive"),
    "F10": ("trsq-zero", "trsq-positive"),
    "F11": ("trace-zero", "trace-nonzero"),
}
NEAR_SIGNS: Dict[str, Tuple[int, ...]] = {
    "F1": (-1, 1),
    "F4": (-1,),
    "F5": (-1, 1),
    "F8": (-1, 1),
    "F9": (1,),
    "F10": (1,),
    "F11": (-1, 1),
}
NEAR_MAGNITUDES: Tuple[float, ...] = (1e-4, 1e-8, 1e-12)
BRANCH_ORDER: Tuple[str, ...] = (
    "trace-zero",
    "trace-nonzero",
    "trsq-negative",
    "trsq-zero",
    "trsq-positive",
    "series-fallback",
)
# (a, b, c) directions with 2a^2 - 2b^2 + c^2 = 0
F8_NULL_PATTERNS: Tuple[Tuple[int, int, int], ...] = ((1, 1, 0), (1, 3, 4), (7, 9, 8))

Point = Tuple[float, float, float, float, float]
Target = Tuple[str, Optional[float]]


def _targets(s: str) -> List[Target]:
    targets: List[Target] = [(name, None) for name in REGULAR_TARGETS[s]]
    for magnitude in NEAR_MAGNITUDES:
        for sign in NEAR_SIGNS[s]:
            targets.append(("near", sign * magnitude))
    return targets


def _nonzero(rng: np.random.Generator) -> float:
    return float(rng.choice((-1.0, 1.0)) * rng.uniform(0.25, 3.0))


def _dyadic(rng: np.random.Generator, limit: int = 24) -> float:
    return float(rng.integers(-limit, limit + 1)) / 8.0


def _uniform(rng: np.random.Generator) -> float:
    return float(rng.uniform(-3.0, 3.0))


def _exact_zero(s: str, rng: np.random.Generator) -> Point:
    # Dyadic values keep every product exact, so the branch scalar is exactly zero.
    if s == "F1":
        alpha, beta, r = _dyadic(rng), _dyadic(rng), _dyadic(rng, 8)
        return alpha, beta, r * alpha, r * beta, _uniform(rng)
    if s == "F11":
        alpha, beta, r = _dyadic(rng), _dyadic(rng), _dyadic(rng, 8)
        return alpha, beta, r * beta, -r * alpha, _uniform(rng)
    if s == "F8":
        r = _dyadic(rng, 3)
        pattern = F8_NULL_PATTERNS[int(rng.integers(len(F8_NULL_PATTERNS)))]
        signs = rng.choice((-1.0, 1.0), size=3)
        a, b, c = (float(sg * r * p) for sg, p in zip(signs, pattern))
        return _dyadic(rng), 0.0, a, b, c
    return _uniform(rng), 0.0, _uniform(rng), _uniform(rng), 0.0


def _regular(s: str, branch: str, rng: np.random.Generator) -> Point:
    if branch in ("trace-zero", "trsq-zero"):
        return _exact_zero(s, rng)
    alpha = _nonzero(rng)
    if s in ("F1", "F11"):
        return alpha, _uniform(rng), _uniform(rng), _uniform(rng), _uniform(rng)
    if s == "F8":
        while True:
            a, b, c = _uniform(rng), _uniform(rng), _uniform(rng)
            delta = 2 * a * a - 2 * b * b + c * c
            if (delta < 0) == (branch == "trsq-negative") and delta != 0.0:
                return alpha, 0.0, a, b, c
    return alpha, 0.0, _uniform(rng), _uniform(rng), _nonzero(rng)


def _near(s: str, target: float, rng: np.random.Generator) -> Point:
    """A point whose branch scalar (tau or kappa) is approximately ``target``."""
    alpha = _nonzero(rng)
    if s == "F1":
        beta, a = _uniform(rng), _uniform(rng)
        return alpha, beta, a, (target + beta * a) / alpha, _uniform(rng)
    if s == "F11":
        beta, b = _uniform(rng), _uniform(rng)
        return alpha, beta, (target - beta * b) / alpha, b, _uniform(rng)
    if s == "F5":
        return alpha, 0.0, _uniform(rng), _uniform(rng), -target / alpha
    if s == "F8":
        a, c = _uniform(rng), _uniform(rng)
        delta = target / alpha**2
        b = math.sqrt(max(0.0, (2 * a * a + c * c - delta) / 2.0))
        return alpha, 0.0, a, float(rng.choice((-1.0, 1.0))) * b, c
    # F4, F9, F10: |kappa| = alpha^2 c^2
    c = float(rng.choice((-1.0, 1.0))) * math.sqrt(abs(target)) / abs(alpha)
    return alpha, 0.0, _uniform(rng), _uniform(rng), c


def _run_job(job) -> Tuple[GroupSample, GroupSample]:
    seed, class_index, target_index, index, target, tolerance = job
    s = BASIC_CLASSES[class_index]
    rng = np.random.default_rng([seed, class_index, target_index, index])
    name, value = target
    point = _near(s, value, rng) if value is not None else _regular(s, name, rng)
    steps = tuple(float(x) for x in rng.uniform(-1.0, 1.0, size=2))
    spectral = spectral_exp(table1_matrix(s, *point))
    corrected = verify_sample(
        s, *point, mode="corrected", tolerance=tolerance, axis_steps=steps, spectral=spectral
    )
    printed = verify_sample(s, *point, mode="printed", tolerance=tolerance, spectral=spectral)
    return corrected, printed


def _jobs(samples: int, seed: int, tol: float, near_tol: float) -> List[tuple]:
    jobs = []
    near_count = max(1, samples // 10)
    for class_index, s in enumerate(BASIC_CLASSES):
        for target_index, target in enumerate(_targets(s)):
            near = target[1] is not None
            count = near_count if near else samples
            for index in range(count):
                jobs.append(
                    (seed, class_index, target_index, index, target, near_tol if near else tol)
                )
    return jobs


def sweep(
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
    max_workers: Optional[int] = None,
) -> List[GroupSample]:
    """All corrected and printed samples, in job order regardless of worker count."""
    settings = get_settings()
    samples = settings.samples if samples is None else int(samples)
    seed = settings.seed if seed is None else int(seed)
    if samples < 1:
        raise InputError(f"--samples must be at least 1, got {samples}")
    if seed < 0:
        raise InputError(f"--seed must be non-negative, got {seed}")
    tol = resolve_tol(tol, settings.exp_tol)
    workers = max_workers or settings.max_workers
    jobs = _jobs(samples, seed, tol, settings.near_branch_tol)
    logger.info("sweep: %d jobs, seed %d, %d worker(s)", len(jobs), seed, workers)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            pairs = list(executor.map(_run_job, jobs))
    else:
        pairs = [_run_job(job) for job in jobs]
    return [sample for pair in pairs for sample in pair]


def _cell_key(sample: GroupSample) -> Tuple[int, int, int]:
    return (
        BASIC_CLASSES.index(sample.class_tag),
        BRANCH_ORDER.index(sample.coeffs.branch),
        0 if sample.coeffs.mode == "corrected" else 1,
    )


def summarize(samples: Sequence[GroupSample], axiom_tol: float) -> List[CellResult]:
    groups: Dict[Tuple[int, int, int], List[GroupSample]] = {}
    for sample in samples:
        groups.setdefault(_cell_key(sample), []).append(sample)
    cells = []
    for key in sorted(groups):
        members = groups[key]
        errors = [m.error for m in members]
        axioms = [m.max_axiom_residual for m in members if m.max_axiom_residual is not None]
        passed = all(m.passed for m in members) and all(r <= axiom_tol for r in axioms)
        cells.append(
            CellResult(
                class_tag=members[0].class_tag,
                branch=members[0].coeffs.branch,
                mode=members[0].coeffs.mode,
                samples=len(members),
                max_error=max(errors),
                mean_error=float(np.mean(errors)),
                max_spectral_error=max(m.spectral_error for m in members),
                spectral_fallbacks=sum(m.spectral_method == "fallback" for m in members),
                max_axiom_residual=max(axioms) if axioms else None,
                passed=passed,
            )
        )
    return cells


def _relation_entries() -> List[ReconciliationEntry]:
    entries = []
    for relation in arbitrated_relations():
        if not relation.conflicts:
            continue
        flipped = math.isclose(relation.factor, -relation.printed_factor, rel_tol=1e-9)
        identity = "%s: %s = %g %s" % (
            relation.class_tag,
            relation.parameter,
            relation.printed_factor,
            relation.scalar,
        )
        entries.append(
            ReconciliationEntry(
                source="class-relations",
                identity=identity,
                verdict="sign-flip" if flipped else "mismatch",
                discrepancy=abs(relation.factor - relation.printed_factor),
                detail="oracle factor %g" % relation.factor,
            )
        )
    return entries


def build_report(
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
    max_workers: Optional[int] = None,
) -> VerificationReport:
    settings = get_settings()
    samples = settings.samples if samples is None else samples
    seed = settings.seed if seed is None else seed
    tol = resolve_tol(tol, settings.exp_tol)
    results = sweep(samples, seed, tol, max_workers)
    cells = summarize(results, settings.axiom_tol)
    divergence = [
        DivergenceCell(class_tag=c.class_tag, branch=c.branch, max_error=c.max_error)
        for c in cells
        if c.mode == "printed" and not c.passed
    ]
    tensor = reconcile_tensor_formulas(seed)
    reconciliation = list(tensor.entries) + _relation_entries()
    reconciliation.extend(
        ReconciliationEntry(
            source="exp-table",
            identity=f"{cell.class_tag} coefficients, {cell.branch}",
            verdict="diverges",
            discrepancy=cell.max_error if math.isfinite(cell.max_error) else 1e308,
        )
        for cell in divergence
    )
    report = VerificationReport(
        seed=seed,
        tolerance=tol,
        near_tolerance=settings.near_branch_tol,
        samples=samples,
        cells=cells,
        divergence_cells=divergence,
        reconciliation=reconciliation,
        tensor_reconciliation_ok=tensor.ok,
        all_corrected_pass=all(c.passed for c in cells if c.mode == "corrected"),
        generated_at=datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
    )
    report = report.model_copy(update={"body_digest": report.compute_digest()})
    for cell in divergence:
        logger.warning(
            "printed coefficients diverge: %s %s (max error %.3e)",
            cell.class_tag,
            cell.branch,
            cell.max_error,
        )
    return report


def write_report(report: VerificationReport, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report.model_dump(mode="json"), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc}") from exc
    logger.info("report written to %s", path)
