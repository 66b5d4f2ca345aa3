import json
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fuzzyheat import expr
from fuzzyheat.bfs import (
    EndpointFunctions,
    EndpointPair,
    brute_force_endpoints,
    bfs_residual,
    classify,
    differentiability_check,
    endpoint_functions,
    gamma_endpoints,
    initial_condition_error,
    sign_profile,
    theorem2_consistency,
    verify_solution,
)
from fuzzyheat.errors import UsageError
from fuzzyheat.registry import load_example
from fuzzyheat.signs import sample_mesh
from fuzzyheat.ss import solve_levels

RANDOM_SAMPLES = 200


@pytest.fixture(scope="module")
def ex1():
    return load_example(1)


@pytest.fixture(scope="module")
def ex1_endpoints(ex1):
    G = ex1.oracle.solution
    return endpoint_functions(ex1, G, sign_profile(ex1, G))


@pytest.fixture(scope="module")
def ex1_report(ex1):
    return classify(ex1, ex1.oracle.solution)


def test_example1_is_bfs(ex1_report):
    assert ex1_report.verdict == "BFS"
    assert ex1_report.differentiability.passed
    assert ex1_report.residual_sup <= 1e-8
    assert ex1_report.initial_error <= 1e-8
    assert ex1_report.notes == ()


def test_bfs_and_seikkala_endpoints_coincide(ex1_report):
    assert ex1_report.ss is not None
    assert ex1_report.consistency <= 5e-4


def test_example3_is_bfs():
    p = load_example(3)
    report = classify(p, p.oracle.solution, check_consistency=False)
    assert report.verdict == "BFS"
    assert report.ss is None
    assert report.endpoints.Q is not None


def test_example4_is_not_bfs():
    p = load_example(4)
    report = classify(p, p.oracle.solution)
    assert report.verdict == "SS_only"
    assert report.endpoints is None
    assert any(note.startswith("dG/dk*dF/dk changes sign") for note in report.notes)
    assert report.ss.region.nonempty


def test_example5_is_not_bfs():
    p = load_example(5)
    report = classify(p, p.oracle.solution)
    assert report.verdict == "SS_only"
    assert "P < 0" in report.notes
    assert report.ss.system.coupling == "cross_coupled_x"


def test_report_serializes(ex1_report):
    document = json.loads(json.dumps(ex1_report.to_dict(), default=float))
    assert document["verdict"] == "BFS"
    assert document["sign_profile"]["entries"]["P"]["sign"] == "+"
    assert document["differentiability"]["lower_nondecreasing"]["passed"]


@pytest.mark.parametrize("example", [1, 2, 3])
def test_endpoints_match_brute_force(example):
    p = load_example(example)
    G = p.oracle.solution
    ep = endpoint_functions(p, G, sign_profile(p, G))
    mesh = sample_mesh(p)
    rng = np.random.default_rng(example)
    for _ in range(RANDOM_SAMPLES):
        point = {"t": rng.uniform(1e-3, p.grid.t.upper)}
        for name, coords in mesh.items():
            if name != "t":
                point[name] = rng.uniform(coords.min(), coords.max())
        alpha = rng.uniform(0.0, 1.0)
        lo, hi = ep.z.evaluate(p, alpha, {name: np.array(v) for name, v in point.items()})
        cut = brute_force_endpoints(p, G, alpha, point, samples_per_axis=3)
        assert float(lo) == pytest.approx(cut.lo, abs=1e-8)
        assert float(hi) == pytest.approx(cut.hi, abs=1e-8)


def test_brute_force_needs_interior_samples(ex1):
    with pytest.raises(UsageError, match="at least 3"):
        brute_force_endpoints(ex1, ex1.oracle.solution, 0.0, {"t": 0.5, "x": 0.5}, samples_per_axis=2)


def test_gamma_reduces_to_source_endpoints(ex1, ex1_endpoints):
    gamma = gamma_endpoints(ex1_endpoints, ex1)
    mesh = sample_mesh(ex1)
    k = ex1.parameter("k")
    for alpha in ex1.alphas():
        lo, hi = gamma.evaluate(ex1, alpha, mesh)
        assert_allclose(lo, k.lower(alpha), atol=1e-12)
        assert_allclose(hi, k.upper(alpha), atol=1e-12)


def test_coefficient_endpoints_chosen_by_axis():
    p = load_example(3)
    shared = replace(p, Q=p.P)
    ep = EndpointFunctions("z", "F", "P", "Q")
    assert ep.coefficient(shared, "x") == "P"
    assert ep.coefficient(shared, "y") == "Q"
    swapped = replace(shared, orientation="eq3")
    assert ep.coefficient(swapped, "x") == "Q"
    assert ep.coefficient(swapped, "y") == "P"


def test_differentiability_conditions_pass(ex1, ex1_endpoints):
    report = differentiability_check(ex1_endpoints, ex1)
    assert report.passed
    assert [c.name for c in report.conditions] == ["lower_nondecreasing", "upper_nonincreasing", "ordered_at_core"]
    assert all(c.witness is None for c in report.conditions)


def test_decreasing_source_endpoint_is_located(ex1, ex1_endpoints):
    z = ex1_endpoints.z
    mutant_lower = expr.substitute(z.lower, {"k_lo": expr.Symbol("k_hi")})
    mutant = replace(ex1_endpoints, z=EndpointPair(mutant_lower, z.upper, z.selection))
    report = differentiability_check(mutant, ex1)
    assert not report.passed
    rising = report.conditions[0]
    assert rising.name == "lower_nondecreasing"
    assert not rising.passed
    assert set(rising.witness) == {"alpha", "t", "x"}
    assert rising.witness["alpha"] > 0.0
    assert report.conditions[1].passed


def test_residual_and_initial_condition(ex1, ex1_endpoints):
    assert bfs_residual(ex1_endpoints, ex1) <= 1e-10
    assert initial_condition_error(ex1_endpoints, ex1) <= 1e-12


@pytest.mark.parametrize("example", [1, 2, 3, 4, 5])
def test_registered_solutions_solve_their_problems(example):
    p = load_example(example)
    check = verify_solution(p, p.oracle.solution)
    assert check.passed(1e-8)


def test_perturbed_solution_is_rejected(ex1):
    G = expr.make_add(ex1.oracle.solution, expr.parse("0.01*x*t"))
    check = verify_solution(ex1, G)
    assert not check.passed(1e-8)
    assert check.pde_residual == pytest.approx(0.01, rel=1e-6)
    report = classify(ex1, G, check_consistency=False)
    assert report.verdict != "BFS"
    assert any(note.startswith("G does not solve") for note in report.notes)


def test_missing_solution(ex1):
    with pytest.raises(UsageError):
        classify(ex1, None)


def test_consistency_with_seikkala_levels(ex1, ex1_endpoints, ex1_report):
    assert theorem2_consistency(ex1_endpoints, ex1_report.ss) == pytest.approx(ex1_report.consistency)
    coarse = ex1.with_grid(ex1.grid.with_counts(nt=11, nx=11)).with_level_count(3)
    assert theorem2_consistency(ex1_endpoints, solve_levels(coarse)) > ex1_report.consistency
