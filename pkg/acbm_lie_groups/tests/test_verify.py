import json

import numpy as np
import pytest

from errors import InputError, ReportIOError
from expgroups import family_scalar, table1_coefficients, table1_matrix
from models import BASIC_CLASSES, VerificationReport
from verify import (
    NEAR_MAGNITUDES,
    NEAR_SIGNS,
    REGULAR_TARGETS,
    _exact_zero,
    _near,
    build_report,
    sweep,
    write_report,
)


@pytest.fixture()
def small_report() -> VerificationReport:
    return build_report(samples=2, seed=7)


def test_corrected_cells_pass(small_report):
    corrected = [cell for cell in small_report.cells if cell.mode == "corrected"]
    assert corrected
    assert all(cell.passed for cell in corrected)
    assert small_report.all_corrected_pass
    assert small_report.tensor_reconciliation_ok
    assert all(cell.max_spectral_error <= 1e-8 for cell in corrected)


def test_every_class_is_swept(small_report):
    classes = {cell.class_tag for cell in small_report.cells}
    assert classes == {"F1", "F4", "F5", "F8", "F9", "F10", "F11"}
    f8_branches = {c.branch for c in small_report.cells if c.class_tag == "F8"}
    assert {"trsq-negative", "trsq-zero", "trsq-positive"} <= f8_branches


def test_divergence_cells_come_from_failing_printed_cells(small_report):
    failing = {
        (cell.class_tag, cell.branch)
        for cell in small_report.cells
        if cell.mode == "printed" and not cell.passed
    }
    divergent = {(cell.class_tag, cell.branch) for cell in small_report.divergence_cells}
    assert divergent == failing
    exp_entries = [e for e in small_report.reconciliation if e.source == "exp-table"]
    assert len(exp_entries) == len(divergent)


def test_reconciliation_lists_tensor_and_relation_conflicts(small_report):
    sources = {entry.source for entry in small_report.reconciliation}
    assert {"component-table", "lee-forms", "class-relations"} <= sources
    relation = [e for e in small_report.reconciliation if e.source == "class-relations"]
    assert [e.identity for e in relation] == ["F4: alpha = 0.5 theta0"]
    assert relation[0].verdict == "sign-flip"


def test_report_is_deterministic():
    first = build_report(samples=1, seed=3)
    second = build_report(samples=1, seed=3)
    threaded = build_report(samples=1, seed=3, max_workers=2)
    assert first.body_digest == second.body_digest == threaded.body_digest
    assert first.body_digest == first.compute_digest()


def test_seed_changes_digest():
    first = build_report(samples=1, seed=1)
    assert first.body_digest != build_report(samples=1, seed=2).body_digest


def test_sweep_rejects_bad_arguments():
    with pytest.raises(InputError):
        sweep(samples=0)
    with pytest.raises(InputError):
        sweep(samples=1, seed=-1)
    with pytest.raises(InputError):
        sweep(samples=1, tol=-1.0)


def test_sweep_produces_both_modes():
    samples = sweep(samples=1, seed=0)
    modes = {sample.coeffs.mode for sample in samples}
    assert modes == {"corrected", "printed"}
    corrected = [s for s in samples if s.coeffs.mode == "corrected"]
    assert all(s.max_axiom_residual is not None for s in corrected)


@pytest.mark.parametrize(
    "tag, branch", [("F1", "trace-zero"), ("F11", "trace-zero"), ("F8", "trsq-zero")]
)
def test_exact_zero_points_hit_the_branch(rng, tag, branch):
    for _ in range(50):
        alpha, beta, a, b, c = _exact_zero(tag, rng)
        A = table1_matrix(tag, alpha, beta, a, b, c)
        assert family_scalar(tag, A) == 0.0
        assert table1_coefficients(tag, A).branch == branch


@pytest.mark.parametrize("tag", ["F1", "F5", "F8", "F11", "F9"])
def test_near_points_approach_target(rng, tag):
    target = 1e-4
    point = _near(tag, target, rng)
    scalar = family_scalar(tag, table1_matrix(tag, *point))
    assert scalar == pytest.approx(target, rel=1e-6)


def test_write_report(tmp_path, small_report):
    path = tmp_path / "report.json"
    write_report(small_report, str(path))
    document = json.loads(path.read_text(encoding="utf-8"))
    assert {
        "seed",
        "tolerance",
        "samples",
        "cells",
        "divergence_cells",
        "reconciliation",
        "body_digest",
        "generated_at",
    } <= set(document)
    assert document["body_digest"] == small_report.body_digest
    assert document["cells"][0].keys() >= {
        "samples",
        "max_error",
        "mean_error",
        "max_spectral_error",
        "spectral_fallbacks",
        "passed",
    }
    assert np.isfinite(document["tolerance"])


def test_write_report_io_error(tmp_path, small_report):
    with pytest.raises(ReportIOError):
        write_report(small_report, str(tmp_path))


@pytest.fixture(scope="module")
def default_report() -> VerificationReport:
    return build_report(seed=42)


def _divergent(report: VerificationReport) -> set:
    return {(cell.class_tag, cell.branch) for cell in report.divergence_cells}


def test_default_sweep_runs_at_full_scale(default_report):
    assert default_report.samples == 1000
    assert default_report.all_corrected_pass
    assert default_report.tensor_reconciliation_ok
    for s in BASIC_CLASSES:
        corrected = [c for c in default_report.cells if c.class_tag == s and c.mode == "corrected"]
        near = 100 * len(NEAR_MAGNITUDES) * len(NEAR_SIGNS[s])
        assert sum(c.samples for c in corrected) == 1000 * len(REGULAR_TARGETS[s]) + near


def test_spectral_oracle_agrees_with_corrected_cells(default_report):
    for s in BASIC_CLASSES:
        corrected = [c for c in default_report.cells if c.class_tag == s and c.mode == "corrected"]
        assert all(c.max_spectral_error <= 1e-8 for c in corrected)
        assert sum(c.spectral_fallbacks for c in corrected) < sum(c.samples for c in corrected)


def test_divergence_cells_are_stable_across_seeds(default_report):
    assert _divergent(default_report)
    assert _divergent(build_report(samples=200, seed=7)) == _divergent(default_report)
