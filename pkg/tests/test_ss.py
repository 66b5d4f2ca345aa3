import numpy as np
import pytest

from fuzzyheat import expr
from fuzzyheat.errors import UsageError
from fuzzyheat.fuzzy import AlphaLevelFuzzyNumber, Interval
from fuzzyheat.grid import GridSpec
from fuzzyheat.problem import endpoint_environment, load_problem
from fuzzyheat.registry import example_source, load_example
from fuzzyheat.ss import (
    SsConfig,
    _largest_rectangle,
    _longest_run,
    assemble_system,
    example4_boundary,
    solve_levels,
    solve_ss,
    ss_fuzzy_solution,
    validity_region,
)

CLOSED_FORM_TOLERANCE = 5e-4


def oracle_endpoints(sol, index):
    p = sol.problem
    env = dict(endpoint_environment(p, sol.alphas[index]))
    env.update(sol.spec.coordinates())
    shape = sol.spec.shape
    lo = np.broadcast_to(expr.evaluate(p.oracle.ss_lower, env), shape)
    hi = np.broadcast_to(expr.evaluate(p.oracle.ss_upper, env), shape)
    return lo, hi


@pytest.fixture(scope="module")
def ex2_solution():
    return solve_levels(load_example(2))


@pytest.fixture(scope="module")
def ex5_solution():
    return solve_levels(load_example(5))


def test_config_validation():
    with pytest.raises(UsageError):
        SsConfig(workers=0)
    with pytest.raises(UsageError):
        SsConfig(tolerance_factor=-1.0)


def test_positive_coefficient_gives_uncoupled_system():
    system = assemble_system(load_example(1))
    assert system.coupling == "uncoupled"
    ((axis, pair, coupled),) = system.operators
    assert axis == "x" and not coupled
    assert system.describe()[0].startswith("(u1)_t + ")
    assert "(u1)_xx" in system.describe()[0]


def test_negative_coefficient_couples_the_endpoints():
    system = assemble_system(load_example(5))
    assert system.coupling == "cross_coupled_x"
    first, _, second, _ = system.describe()
    assert "(u2)_xx" in first
    assert "(u1)_xx" in second
    assert system.to_dict()["operators"][0]["coupled"]


def test_operators_follow_orientation():
    document = example_source(3).replace('orientation = "eq2"', 'orientation = "eq3"')
    system = assemble_system(load_problem(document))
    (first, first_pair, _), (second, second_pair, _) = system.operators
    assert (first, second) == ("y", "x")
    assert "g_lo" in expr.free_symbols(first_pair.lower)
    assert "b_lo" in expr.free_symbols(second_pair.lower)


def test_alpha_outside_unit_interval():
    p = load_example(1)
    with pytest.raises(UsageError, match=r"\[0, 1\]"):
        solve_ss(assemble_system(p), p, 1.5)


def test_example2_endpoints(ex2_solution):
    for index in range(len(ex2_solution.alphas)):
        lo, hi = oracle_endpoints(ex2_solution, index)
        assert np.max(np.abs(ex2_solution.lower[index] - lo)) <= CLOSED_FORM_TOLERANCE
        assert np.max(np.abs(ex2_solution.upper[index] - hi)) <= CLOSED_FORM_TOLERANCE


def test_example2_region_ends_at_half(ex2_solution):
    region = ex2_solution.region
    assert region.nonempty
    dt = ex2_solution.spec.t.spacing
    assert abs(region.t_max - 0.5) <= dt + 1e-12
    x_nodes = ex2_solution.spec.x.nodes()
    assert region.spatial_box["x"] == (pytest.approx(x_nodes[0]), pytest.approx(x_nodes[-1]))


def test_example4_endpoints():
    sol = solve_levels(load_example(4))
    for index in (0, 5, 10):
        lo, hi = oracle_endpoints(sol, index)
        assert np.max(np.abs(sol.lower[index] - lo)) <= CLOSED_FORM_TOLERANCE
        assert np.max(np.abs(sol.upper[index] - hi)) <= CLOSED_FORM_TOLERANCE


def test_example5_endpoints_on_region(ex5_solution):
    box = ex5_solution.region.box_mask()
    assert box.any()
    for index in range(len(ex5_solution.alphas)):
        lo, hi = oracle_endpoints(ex5_solution, index)
        assert np.max(np.abs(ex5_solution.lower[index] - lo)[box]) <= CLOSED_FORM_TOLERANCE
        assert np.max(np.abs(ex5_solution.upper[index] - hi)[box]) <= CLOSED_FORM_TOLERANCE


def test_example5_region_is_bounded_in_time(ex5_solution):
    region = ex5_solution.region
    assert region.nonempty
    assert region.t_max < ex5_solution.spec.t.upper
    assert not region.mask[-1].all()


def test_levels_solved_concurrently_agree():
    p = load_example(1)
    p = p.with_grid(p.grid.with_counts(nt=21, nx=11)).with_level_count(5)
    serial = solve_levels(p)
    threaded = solve_levels(p, cfg=SsConfig(workers=2))
    np.testing.assert_array_equal(serial.lower, threaded.lower)
    np.testing.assert_array_equal(serial.upper, threaded.upper)
    assert serial.iterations == threaded.iterations


def test_fuzzy_value_inside_region(ex2_solution):
    value = ss_fuzzy_solution(ex2_solution, {"t": 0.2, "x": 0.5})
    assert isinstance(value, AlphaLevelFuzzyNumber)
    assert value.support.lo <= value.core.lo <= value.core.hi <= value.support.hi


def test_fuzzy_value_outside_region(ex2_solution):
    verdict = ss_fuzzy_solution(ex2_solution, {"t": 0.9, "x": 0.9})
    assert not verdict
    assert verdict.alpha is not None


def test_fuzzy_value_off_grid(ex2_solution):
    with pytest.raises(UsageError, match="outside the grid"):
        ss_fuzzy_solution(ex2_solution, {"t": 2.0, "x": 0.5})


def test_stored_levels(ex2_solution):
    u1, u2 = ex2_solution.level(1.0)
    assert np.max(np.abs(u1.values - u2.values)) <= 1e-12
    with pytest.raises(UsageError, match="not a stored level"):
        ex2_solution.level(0.05)


@pytest.mark.parametrize("flags, expected", [
    ([True, True, False, True, True, True], (3, 5)),
    ([False, False], None),
    ([True], (0, 0)),
    ([True, True, False, True], (0, 1)),
])
def test_longest_run(flags, expected):
    assert _longest_run(flags) == expected


def test_largest_rectangle():
    flags = np.array([
        [1, 0, 1, 1, 1],
        [1, 1, 1, 1, 1],
        [0, 1, 1, 1, 0],
        [0, 1, 1, 1, 1],
    ], dtype=bool)
    assert _largest_rectangle(flags) == ((1, 3), (1, 3))
    assert _largest_rectangle(np.zeros((2, 2), dtype=bool)) is None


def test_validity_region_needs_three_levels():
    spec = GridSpec.box(1.0, (0.0, 1.0), nt=5, nx=5)
    with pytest.raises(UsageError, match="at least 3"):
        validity_region(spec, [0.0, 1.0], np.zeros((2,) + spec.shape), np.zeros((2,) + spec.shape))


def test_validity_region_from_crossing_endpoints():
    spec = GridSpec.box(1.0, (0.0, 1.0), nt=5, nx=5)
    alphas = np.linspace(0.0, 1.0, 3)
    t = spec.times()[:, None] * np.ones(spec.spatial_shape)
    # half-width 1 - 2t: nested for t <= 0.5
    width = (1.0 - 2.0 * t)[None] * (1.0 - alphas)[:, None, None]
    region = validity_region(spec, alphas, -width, width)
    assert region.nonempty
    assert region.t_max == pytest.approx(0.5)
    assert region.spatial_index == {"x": (0, 4)}
    assert np.isnan(region.failing_alpha[0, 0])
    assert region.failing_alpha[-1, 0] == 0.0
    assert region.box_mask().sum() == 3 * 5


def test_example4_boundary():
    bound = example4_boundary(1.0, 0.0, 2.0)
    assert bound.lo == pytest.approx((np.sqrt(768.0) - 24.0) / 8.0)
    assert bound.hi == pytest.approx(bound.lo)
    wide = example4_boundary(0.5, Interval(-0.5, 0.5), Interval(1.5, 2.5))
    assert wide.lo <= wide.hi


def test_example4_boundary_rejects():
    with pytest.raises(UsageError, match="denominator"):
        example4_boundary(2.0, 0.0, 2.0)
    with pytest.raises(UsageError, match="samples"):
        example4_boundary(1.0, 0.0, 2.0, samples=1)
