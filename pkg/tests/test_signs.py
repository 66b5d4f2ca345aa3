import numpy as np
import pytest

from fuzzyheat import expr
from fuzzyheat.errors import NumericalError, UsageError
from fuzzyheat.registry import load_example
from fuzzyheat.signs import (
    SamplingConfig,
    SignProfile,
    classify_samples,
    coefficient_profile,
    derivative_label,
    endpoint_pair,
    parameter_samples,
    product_label,
    sample_mesh,
    sign_profile,
)


@pytest.fixture(scope="module")
def ex1():
    return load_example(1)


@pytest.fixture(scope="module")
def ex1_profile(ex1):
    return sign_profile(ex1, ex1.oracle.solution)


@pytest.fixture(scope="module")
def ex4():
    return load_example(4)


@pytest.fixture(scope="module")
def ex4_profile(ex4):
    return sign_profile(ex4, ex4.oracle.solution)


def test_config_validation():
    with pytest.raises(UsageError, match="nodes_per_axis"):
        SamplingConfig(nodes_per_axis=2)
    with pytest.raises(UsageError, match="sign_margin"):
        SamplingConfig(sign_margin=-1.0)
    assert SamplingConfig(nodes_per_axis=11).refined().nodes_per_axis == 21


def test_sample_mesh_skips_initial_plane_and_open_bounds(ex1):
    mesh = sample_mesh(ex1)
    assert mesh["t"].min() > 0.0
    assert mesh["t"].max() == pytest.approx(1.0)
    assert mesh["x"].min() > 0.0
    assert mesh["x"].max() == pytest.approx(1.0)
    assert np.broadcast_shapes(mesh["t"].shape, mesh["x"].shape) == (21, 21)


@pytest.mark.parametrize("include_corners, count", [(True, 81), (False, 21)])
def test_parameter_samples(ex1, include_corners, count):
    samples = parameter_samples(ex1, SamplingConfig(include_corners=include_corners))
    assert samples.shape == (count, 3)
    assert [1.0, -1.0, 1.0] in samples.tolist()


def test_labels():
    assert derivative_label("G", "k") == "dG/dk"
    assert product_label("dP/dg", "dG/dg") == "dP/dg*dG/dg"


@pytest.mark.parametrize("values, sign", [
    (np.array([1.0, 2.0]), "+"),
    (np.array([-1.0, -2.0]), "-"),
    (np.array([-1.0, 2.0]), "mixed"),
    (np.array([0.0, 2.0]), "0"),
])
def test_classify_samples(values, sign):
    mesh = {"t": np.arange(values.size, dtype=float)}
    entry = classify_samples("v", values.reshape(1, -1), mesh, np.zeros((1, 0)), [], 1e-10)
    assert entry.sign == sign
    assert entry.minimum == values.min()


def test_example1_signs(ex1_profile):
    assert ex1_profile.sign("P") == "+"
    assert ex1_profile.products == ("dG/dk*dF/dk", "dP/dg*dG/dg")
    for label in ex1_profile.products:
        assert ex1_profile.sign(label) == "+"
    assert ex1_profile.sign("dG/dc") == "+"
    assert ex1_profile.sign("dG/dg") == "+"
    assert ex1_profile.mixed() == ()


def test_example2_product_is_negative():
    p = load_example(2)
    profile = sign_profile(p, p.oracle.solution)
    assert profile.sign("dP/dg*dG/dg") == "-"
    assert profile.direction("G", "g") == "decreasing"


def test_example4_mixed_product_has_positive_box(ex4, ex4_profile):
    entry = ex4_profile.entry("dG/dk*dF/dk")
    assert entry.sign == "mixed"
    assert entry.positive_witness is not None and entry.negative_witness is not None
    x_nodes = sample_mesh(ex4)["x"]
    lo, hi = entry.positive_box["x"]
    assert hi == pytest.approx(x_nodes.max())
    assert lo > x_nodes.min()
    assert ex4_profile.sign("dF/dk") == "-"
    assert ex4_profile.sign("dP/dg*dG/dg") == "-"


def test_example5_coefficient_is_negative():
    profile = coefficient_profile(load_example(5))
    assert profile.sign("P") == "-"
    assert profile.direction("P", "g") == "decreasing"
    assert profile.sign("dF/dk") == "-"


def test_missing_solution(ex1):
    with pytest.raises(UsageError, match="no closed-form solution"):
        sign_profile(ex1, None)


def test_profile_lookup():
    profile = SignProfile()
    with pytest.raises(UsageError, match="no entry"):
        profile.entry("P")
    assert profile.direction("G", "k") == "increasing"


def test_endpoint_selection_example1(ex1, ex1_profile):
    pair = endpoint_pair(ex1, ex1.oracle.solution, "G", ex1_profile)
    assert pair.selection == {"k": "lower", "c": "lower", "g": "lower"}
    assert expr.free_symbols(pair.lower) == {"t", "x", "k_lo", "c_lo", "g_lo"}
    mesh = {"t": np.array([0.5]), "x": np.array([1.0])}
    lo, hi = pair.evaluate(ex1, 0.0, mesh)
    assert lo[0] == pytest.approx(-1.5 * np.exp(-0.25) + 0.25)
    assert hi[0] == pytest.approx(-0.5 * np.exp(-0.75) + 0.75)


def test_decreasing_coefficient_swaps_endpoints():
    p = load_example(5)
    pair = endpoint_pair(p, p.P, "P", coefficient_profile(p))
    assert pair.selection == {"g": "upper"}
    low, high = pair.bind(p, 0.0)
    assert expr.evaluate(low, {}) == pytest.approx(-1.8)
    assert expr.evaluate(high, {}) == pytest.approx(-0.2)


def test_non_monotone_refusal(ex4, ex4_profile):
    with pytest.raises(NumericalError, match="not monotone in k") as info:
        endpoint_pair(ex4, ex4.oracle.solution, "G", ex4_profile)
    assert info.value.diagnostics["label"] == "dG/dk"
