import numpy as np
import pytest
from numpy.testing import assert_allclose

from fuzzyheat import expr
from fuzzyheat.errors import NumericalError, UsageError
from fuzzyheat.grid import GridFunction, GridSpec, sup_norm_diff
from fuzzyheat.problem import crisp_core, load_problem
from fuzzyheat.registry import load_example
from fuzzyheat.vim import (
    LinearEquation,
    SeparatedField,
    VimConfig,
    correction_step,
    exponential_partial_sum,
    instance_equation,
    iterate_trace,
    solve_crisp,
    solve_system,
)

CLOSED_FORM_TOLERANCE = 5e-4


def exact_solution(inst, spec=None):
    spec = spec or inst.grid
    G = inst.bind(inst.problem.oracle.solution)
    return GridFunction.from_callable(spec, lambda **c: expr.evaluate(G, c))


@pytest.fixture
def ex1():
    return crisp_core(load_example(1))


@pytest.mark.parametrize("example", [1, 3, 4, 5])
def test_crisp_solution_matches_closed_form(example):
    inst = crisp_core(load_example(example))
    result = solve_crisp(inst)
    assert result.converged
    assert not result.diverged
    assert sup_norm_diff(result.solution, exact_solution(inst)) <= CLOSED_FORM_TOLERANCE


@pytest.mark.parametrize("example", [1, 5])
def test_refinement_reduces_error(example):
    inst = crisp_core(load_example(example))
    coarse = inst.grid
    fine = coarse.refined()
    e_coarse = sup_norm_diff(solve_crisp(inst, spec=coarse).solution, exact_solution(inst, coarse))
    e_fine = sup_norm_diff(solve_crisp(inst, spec=fine).solution, exact_solution(inst, fine))
    assert e_coarse / e_fine >= 3.0


def test_iterates_follow_partial_sums_example1(ex1):
    spec = ex1.grid.with_counts(nt=1001, nx=11)
    trace = iterate_trace(ex1, 3, spec)
    c, g, k = (ex1.bindings[name] for name in ("c", "g", "k"))
    coords = spec.coordinates()
    for n, u in enumerate(trace):
        expected = c * coords["x"] ** 2 * exponential_partial_sum(g, coords["t"], n) + k * coords["t"]
        assert_allclose(u.values, np.broadcast_to(expected, spec.shape), atol=1e-6)


def test_iterates_follow_partial_sums_example3():
    inst = crisp_core(load_example(3))
    spec = inst.grid.with_counts(nt=1001, nx=5, ny=5)
    trace = iterate_trace(inst, 3, spec)
    b = inst.bindings
    coords = spec.coordinates()
    t, x, y = coords["t"], coords["x"], coords["y"]
    for n, u in enumerate(trace[1:], start=1):
        expected = (
            b["c1"] * y ** 2 * exponential_partial_sum(b["b"], t, n)
            - b["c2"] * x ** 2 * exponential_partial_sum(b["g"], t, n)
            + b["k"] * x * y * t
        )
        assert_allclose(u.values, np.broadcast_to(expected, spec.shape), atol=1e-6)


def test_first_iterate_is_initial_condition(ex1):
    (u0,) = iterate_trace(ex1, 0)
    coords = ex1.grid.coordinates()
    assert_allclose(u0.values, np.broadcast_to(-coords["x"] ** 2, ex1.grid.shape))


def test_correction_step_forms_agree(ex1):
    u0 = ex1.bind(ex1.problem.initial)
    symbolic = correction_step(u0, ex1)
    assert isinstance(symbolic, SeparatedField)
    on_grid = correction_step(symbolic.initial_value().materialize(ex1.grid), ex1)
    assert isinstance(on_grid, GridFunction)
    assert sup_norm_diff(symbolic.materialize(ex1.grid), on_grid) < 1e-9
    assert sup_norm_diff(symbolic.materialize(ex1.grid), iterate_trace(ex1, 1)[1]) < 1e-12


def test_residual_is_small(ex1):
    result = solve_crisp(ex1)
    assert result.residual_sup < 1e-2
    assert result.deltas[-1] == result.final_delta <= VimConfig().tolerance


def test_divergence_is_reported():
    document = """
    [pde]
    P = "p"
    F = "0"
    [initial]
    expression = "sin(5*x)"
    [params.p]
    triangle = [1.0, 1.0, 1.0]
    [domain]
    M1 = 1.0
    M2 = 1.0
    nt = 21
    nx = 21
    """
    inst = crisp_core(load_problem(document))
    result = solve_crisp(inst, VimConfig(divergence_guard=10.0))
    assert result.diverged
    assert not result.converged


def test_term_growth_guard(ex1):
    with pytest.raises(NumericalError, match="expression nodes"):
        solve_crisp(ex1, VimConfig(max_term_nodes=1))


def test_source_must_separate():
    spec = GridSpec.box(1.0, (0.0, 1.0), nt=11, nx=11)
    equation = LinearEquation((("x", expr.parse("1"), 0),), expr.parse("sin(x*t)"), expr.parse("x^2"))
    with pytest.raises(NumericalError, match="not a sum of time factors"):
        solve_system([equation], spec)


def test_time_dependent_coefficient_rejected():
    spec = GridSpec.box(1.0, (0.0, 1.0), nt=11, nx=11)
    equation = LinearEquation((("x", expr.parse("t"), 0),), expr.ZERO, expr.parse("x^2"))
    with pytest.raises(NumericalError, match="depends on t"):
        solve_system([equation], spec)


def test_unbound_parameters_rejected():
    spec = GridSpec.box(1.0, (0.0, 1.0), nt=11, nx=11)
    equation = LinearEquation((("x", expr.parse("g"), 0),), expr.ZERO, expr.parse("x^2"))
    with pytest.raises(UsageError, match="unbound parameters"):
        solve_system([equation], spec)


def test_coupled_system():
    # u_t - v_xx = 0, v_t - u_xx = 0 with u(0) = v(0) = sin(x): u = v = sin(x) exp(-t)
    spec = GridSpec.box(1.0, (0.0, 1.0), nt=201, nx=11)
    first = LinearEquation((("x", expr.parse("-1"), 1),), expr.ZERO, expr.parse("sin(x)"))
    second = LinearEquation((("x", expr.parse("-1"), 0),), expr.ZERO, expr.parse("sin(x)"))
    u, v = solve_system([first, second], spec)
    exact = GridFunction.from_callable(spec, lambda t, x: np.sin(x) * np.exp(-t))
    assert u.converged and v.converged
    assert sup_norm_diff(u.solution, exact) < 1e-4
    assert sup_norm_diff(v.solution, exact) < 1e-4


def test_instance_equation(ex1):
    equation = instance_equation(ex1)
    assert equation.operators[0][0] == "x"
    assert expr.parameters(equation.source) == frozenset()


def test_exponential_partial_sum():
    assert exponential_partial_sum(2.0, 0.5, 0) == pytest.approx(1.0)
    assert exponential_partial_sum(2.0, 0.5, 2) == pytest.approx(1.0 - 1.0 + 0.5)
    assert exponential_partial_sum(1.0, 0.3, 30) == pytest.approx(np.exp(-0.3))
