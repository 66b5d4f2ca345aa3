import numpy as np
import pytest
from numpy.testing import assert_allclose

from fuzzyheat.errors import NumericalError, UsageError
from fuzzyheat.grid import (
    Axis,
    GridFunction,
    GridSpec,
    cumulative_time_integral,
    second_derivative,
    second_difference,
    sup_norm_diff,
    time_derivative,
)


@pytest.fixture
def spec1():
    return GridSpec.box(1.0, (0.0, 1.0), nt=11, nx=21, open_bounds=("x0",))


@pytest.fixture
def spec2():
    return GridSpec.box(1.0, (0.0, 1.0), (0.0, 2.0), nt=5, nx=11, ny=21, open_bounds=("x0", "x1", "y0", "y1"))


def test_axis_validation():
    with pytest.raises(UsageError, match="at least 3 nodes"):
        Axis("x", 0.0, 1.0, 2)
    with pytest.raises(UsageError, match="out of order"):
        Axis("x", 1.0, 0.0, 5)


def test_open_axis_needs_interior_nodes():
    with pytest.raises(UsageError, match="axis x collapses"):
        Axis("x", 0.0, 1.0, 3, open_lower=True, open_upper=True)
    with pytest.raises(UsageError, match="axis x collapses"):
        GridSpec.box(1.0, (0.0, 1.0), nt=5, nx=3, open_bounds=("x0", "x1"))
    assert Axis("x", 0.0, 1.0, 4, open_lower=True, open_upper=True).spacing > 0.0


def test_open_bounds_shift_inward():
    axis = Axis("x", 0.0, 1.0, 11, open_lower=True, open_upper=True)
    nodes = axis.nodes()
    assert nodes[0] == pytest.approx(0.1)
    assert nodes[-1] == pytest.approx(0.9)
    assert nodes.size == 11
    assert axis.spacing == pytest.approx(0.08)


def test_time_starts_at_closed_initial_plane():
    with pytest.raises(UsageError, match="t = 0"):
        GridSpec(Axis("t", 0.1, 1.0, 5), Axis("x", 0.0, 1.0, 5))


def test_shapes(spec1, spec2):
    assert spec1.shape == (11, 21)
    assert spec1.dimension == 1
    assert spec2.shape == (5, 11, 21)
    assert spec2.spatial_shape == (11, 21)
    assert spec2.axis_names() == ("t", "x", "y")


def test_refined_halves_spacing(spec1):
    fine = spec1.refined()
    assert fine.shape == (21, 41)
    assert fine.t.spacing == pytest.approx(spec1.t.spacing / 2)


def test_with_counts(spec2):
    assert spec2.with_counts(nt=9, ny=5).shape == (9, 11, 5)


def test_missing_axis(spec1):
    with pytest.raises(UsageError, match="no axis 'y'"):
        spec1.axis("y")


def test_node_lookup(spec1):
    f = GridFunction.from_callable(spec1, lambda t, x: t + 10 * x)
    assert f.at(t=0.5, x=0.5) == pytest.approx(0.5 + 5.0, abs=0.3)
    assert spec1.contains(t=0.5, x=0.5)
    assert not spec1.contains(t=0.5, x=0.0)
    assert not spec1.contains(t=1.5, x=0.5)


def test_non_finite_values_rejected(spec1):
    values = np.zeros(spec1.shape)
    values[3, 4] = np.nan
    with pytest.raises(NumericalError) as info:
        GridFunction(spec1, values)
    assert info.value.diagnostics["node"] == (3, 4)


def test_values_are_read_only(spec1):
    f = GridFunction.zeros(spec1)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_shape_mismatch(spec1):
    with pytest.raises(UsageError, match="do not match"):
        GridFunction(spec1, np.zeros((3, 3)))


def test_different_grids_do_not_mix(spec1):
    a = GridFunction.zeros(spec1)
    b = GridFunction.zeros(spec1.refined())
    with pytest.raises(UsageError, match="different grids"):
        a + b
    with pytest.raises(UsageError):
        sup_norm_diff(a, b)


@pytest.mark.parametrize("power", [0, 1, 2, 3])
def test_second_difference_exact_on_cubics(power):
    x = np.linspace(0.0, 1.0, 9)
    d2 = second_difference(x ** power, x[1] - x[0], 0)
    expected = power * (power - 1) * x ** max(power - 2, 0) if power >= 2 else np.zeros_like(x)
    assert_allclose(d2, expected, atol=1e-9)


def test_second_derivative_along_y(spec2):
    f = GridFunction.from_callable(spec2, lambda t, x, y: t * x + y ** 2)
    assert_allclose(second_derivative(f, "y").values, 2.0, atol=1e-9)
    assert_allclose(second_derivative(f, "x").values, 0.0, atol=1e-9)


def test_second_derivative_needs_spatial_axis(spec1):
    with pytest.raises(UsageError, match="x or y"):
        second_derivative(GridFunction.zeros(spec1), "t")


def test_cumulative_time_integral(spec1):
    f = GridFunction.from_callable(spec1, lambda t, x: 2 * t + x)
    integral = cumulative_time_integral(f)
    exact = GridFunction.from_callable(spec1, lambda t, x: t ** 2 + x * t)
    assert sup_norm_diff(integral, exact) < 1e-12


def test_time_derivative_second_order(spec1):
    f = GridFunction.from_callable(spec1, lambda t, x: t ** 2 * x)
    exact = GridFunction.from_callable(spec1, lambda t, x: 2 * t * x)
    assert sup_norm_diff(time_derivative(f), exact) < 1e-12


def test_arithmetic(spec1):
    f = GridFunction.from_callable(spec1, lambda t, x: t + x)
    g = 2.0 * f - f
    assert sup_norm_diff(g, f) == 0.0
    assert sup_norm_diff(-f + f, GridFunction.zeros(spec1)) == 0.0
