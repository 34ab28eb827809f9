import json
import math

import numpy as np
import pytest

from algebra import derived_series_dims, validate_jacobi
from classification import classify, extract_profile
from errors import InputError, NormalizationError, ReportIOError
from expgroups import reference_expm
from known_groups import (
    FIXTURE_NAMES,
    example_algebra,
    example_group_element,
    export,
    fixture_exp_consistency,
    gii_coordinates,
    gii_from_f4,
    printed_so3_form,
    rodrigues,
    rodrigues_check,
    run_fixtures,
    variants,
)
from models import AlgebraFile

ALL_RECORDS = [(name, variant) for name in FIXTURE_NAMES for variant in variants(name)]


@pytest.mark.parametrize("name, variant", ALL_RECORDS)
def test_records_satisfy_jacobi_exactly(name, variant):
    record = example_algebra(name, variant)
    assert validate_jacobi(record.constants, tol=0.0).valid


@pytest.mark.parametrize("name, variant", ALL_RECORDS)
def test_records_classify_as_expected(name, variant):
    record = example_algebra(name, variant)
    assert classify(extract_profile(record.constants)) == record.expected_signature


def test_stated_classifications():
    assert example_algebra("GI").expected_signature.members == ("F9",)
    assert example_algebra("GII").expected_signature.members == ("F4",)
    assert example_algebra("SO3").bianchi_label == "Bia(9)"


def test_unknown_fixture_and_variant():
    with pytest.raises(InputError):
        variants("GX")
    with pytest.raises(InputError, match="variant"):
        example_algebra("GI", "nope")


def test_group_elements():
    assert np.allclose(
        example_group_element("GII", 0.0, 0.0, math.pi / 2),
        [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        atol=1e-15,
    )
    assert np.array_equal(example_group_element("GI", 0.0, 0.0, 0.0), np.eye(3))
    assert np.array_equal(
        example_group_element("GIII", 1.0, 2.0, 3.0),
        [[1.0, 1.0, 2.0], [0.0, 1.0, 3.0], [0.0, 0.0, 1.0]],
    )
    with pytest.raises(InputError):
        example_group_element("SO3", 0.0, 0.0, 0.0)


def test_gi_elements_multiply_like_the_group():
    g = example_group_element("GI", 1.0, 2.0, 0.5)
    h = example_group_element("GI", -0.5, 0.25, -1.0)
    product = g @ h
    assert product[0, 0] == pytest.approx(math.exp(0.5))
    assert product[1, 1] == pytest.approx(math.exp(-0.5))


def test_rodrigues_z_rotation():
    theta = 0.9
    expected = [
        [math.cos(theta), -math.sin(theta), 0.0],
        [math.sin(theta), math.cos(theta), 0.0],
        [0.0, 0.0, 1.0],
    ]
    assert np.allclose(rodrigues((0.0, 0.0, 1.0), theta), expected, atol=1e-15)


def test_rodrigues_half_turn():
    result = rodrigues((1.0, 0.0, 0.0), math.pi)
    assert np.allclose(result, np.diag([1.0, -1.0, -1.0]), atol=1e-15)


def test_rodrigues_requires_unit_axis():
    with pytest.raises(NormalizationError):
        rodrigues((1.0, 1.0, 0.0), 1.0)


def test_rodrigues_check_passes():
    check = rodrigues_check(draws=25, seed=5)
    assert check.passed
    assert check.max_error <= 1e-12


def test_printed_so3_form_differs_from_exponential():
    K = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    printed, discrepancy = printed_so3_form((0.0, 0.0, 1.0), 0.75)
    assert discrepancy > 1e-3
    assert not np.allclose(printed, reference_expm(0.75 * K))
    assert np.allclose(rodrigues((0.0, 0.0, 1.0), 0.75), reference_expm(0.75 * K), atol=1e-12)


def test_gii_coordinate_map_at_identity_angle():
    a, b, c = gii_coordinates(1.5, -0.5, 0.0)
    assert (a, b, c) == (-0.5, -1.5, 0.0)
    assert np.allclose(gii_from_f4(a, b, c), example_group_element("GII", 1.5, -0.5, 0.0))


def test_gii_exp_consistency():
    check = fixture_exp_consistency("GII", draws=50, seed=11)
    assert check.passed
    assert check.max_error <= 1e-12
    with pytest.raises(InputError):
        fixture_exp_consistency("GI")


def test_giii_is_nilpotent():
    assert derived_series_dims(example_algebra("GIII").constants) == [3, 1, 0]


def test_run_fixtures_has_no_asserted_failures():
    checks = run_fixtures(draws=20)
    assert all(check.passed for check in checks if check.asserted)
    printed = [check for check in checks if check.check == "printed-form"]
    assert len(printed) == 1
    assert not printed[0].asserted
    assert {check.check for check in checks} >= {
        "jacobi",
        "classification",
        "nilpotent",
        "exp-consistency",
        "rodrigues",
    }


def test_run_fixtures_single_name():
    checks = run_fixtures("GI", draws=5)
    assert {check.name for check in checks} == {"GI/ker-eta", "GI/span-xi"}


def test_export_writes_algebra_files(tmp_path):
    paths = export(str(tmp_path / "fixtures"))
    assert len(paths) == len(ALL_RECORDS)
    with open(tmp_path / "fixtures" / "GI_ker-eta.json", encoding="utf-8") as f:
        document = AlgebraFile.model_validate(json.load(f))
    expected = example_algebra("GI").constants.as_vector()
    assert np.array_equal(document.to_structure().as_vector(), expected)


def test_export_reports_io_errors(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    with pytest.raises(ReportIOError):
        export(str(blocker))
