import pytest

from fuzzyheat import expr
from fuzzyheat.errors import FuzzyDomainError, ProblemFileError, UsageError
from fuzzyheat.problem import (
    crisp_core,
    dump_problem,
    endpoint_environment,
    instantiate,
    load_problem,
    parameter_box,
    parameter_roles,
    read_problem,
)
from fuzzyheat.registry import example_source, load_example

DOCUMENT = """
name = "heat"

[pde]
dimension = 1
P = "(g/2)*x^2"
F = "k"

[initial]
expression = "c*x^2"

[params.k]
triangle = [0.5, 1.0, 1.5]

[params.c]
triangle = [-1.5, -1.0, -0.5]

[params.g]
triangle = [0.5, 1.0, 1.5]
admissible = [0.0, 2.0]

[domain]
M1 = 1.0
M2 = 1.0
nt = 11
nx = 21
open = ["x0"]
"""


@pytest.fixture
def problem():
    return load_problem(DOCUMENT)


def test_load(problem):
    assert problem.name == "heat"
    assert problem.dimension == 1
    assert problem.parameter_names == ("k", "c", "g")
    assert problem.grid.shape == (11, 21)
    assert problem.grid.x.open_lower and not problem.grid.x.open_upper
    assert problem.level_count == 11
    assert problem.parameter("g").admissible == (0.0, 2.0)
    assert problem.operators() == (("x", problem.P),)


def test_orientation_eq3_swaps_axes():
    p = load_example(3)
    assert [axis for axis, _ in p.operators()] == ["x", "y"]
    document = example_source(3).replace('orientation = "eq2"', 'orientation = "eq3"')
    swapped = load_problem(document)
    assert swapped.operators() == (("y", swapped.P), ("x", swapped.Q))
    assert [p.coefficient_name(a) for a in ("x", "y")] == ["P", "Q"]
    assert [swapped.coefficient_name(a) for a in ("x", "y")] == ["Q", "P"]


def test_coefficient_name_needs_spatial_axis(problem):
    assert problem.coefficient_name("x") == "P"
    with pytest.raises(UsageError, match="no spatial axis 'y'"):
        problem.coefficient_name("y")


@pytest.mark.parametrize("old, new, location", [
    ('P = "(g/2)*x^2"', 'P = "(g/2)*x^2 + t"', "pde.P"),
    ('F = "k"', 'F = "k*z"', "pde.F"),
    ('F = "k"', 'F = "k +"', "pde.F"),
    ('expression = "c*x^2"', 'expression = "c*y"', "initial.expression"),
    ("triangle = [0.5, 1.0, 1.5]\n\n[params.c]", "triangle = [1.5, 1.0, 0.5]\n\n[params.c]", "params.k.triangle"),
    ('open = ["x0"]', 'open = ["z0"]', "domain.open"),
    ("nx = 21", "nx = 2", "domain"),
    ("M1 = 1.0", "", "domain.M1"),
    ("dimension = 1", "dimension = 3", "pde.dimension"),
    ('name = "heat"', 'name = "heat"\nalpha = 5', "alpha"),
    ("admissible = [0.0, 2.0]", 'admissible = ["a", "b"]', "params.g.admissible"),
    ("admissible = [0.0, 2.0]", "admissible = [true, 2.0]", "params.g.admissible"),
    ("admissible = [0.0, 2.0]", "admissible = [2.0, 0.0]", "params.g.admissible"),
    ("admissible = [0.0, 2.0]", "admissible = [0.0]", "params.g.admissible"),
])
def test_validation_locations(old, new, location):
    with pytest.raises(ProblemFileError) as info:
        load_problem(DOCUMENT.replace(old, new))
    assert info.value.location == location


def test_not_toml():
    with pytest.raises(ProblemFileError, match="not a TOML document"):
        load_problem("[pde")


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_problem(tmp_path / "absent.toml")


def test_support_must_fit_admissible_range():
    with pytest.raises(ProblemFileError, match="admissible"):
        load_problem(DOCUMENT.replace("admissible = [0.0, 2.0]", "admissible = [0.6, 2.0]"))


def test_reserved_parameter_name():
    document = DOCUMENT.replace("[params.k]", "[params.exp]").replace('F = "k"', 'F = "1"')
    with pytest.raises(ProblemFileError, match="reserved"):
        load_problem(document)


def test_instantiate_corners(problem):
    lower = instantiate(problem, "lower", 0.5)
    assert lower.bindings == {"k": 0.75, "c": -1.25, "g": 0.75}
    mixed = instantiate(problem, {"k": "upper", "c": -1.0, "g": "peak"}, 0.0)
    assert mixed.bindings == {"k": 1.5, "c": -1.0, "g": 1.0}
    assert crisp_core(problem).bindings == {"k": 1.0, "c": -1.0, "g": 1.0}


def test_instantiate_rejects_values_outside_the_cut(problem):
    with pytest.raises(FuzzyDomainError, match="outside its cut") as info:
        instantiate(problem, {"k": 0.6, "c": "peak", "g": "peak"}, 0.5)
    assert info.value.offending == ("k", 0.6)


def test_instantiate_rejects_unknown_selector(problem):
    with pytest.raises(UsageError, match="unknown selector"):
        instantiate(problem, {"k": "middle", "c": "peak", "g": "peak"})


def test_bound_instance(problem):
    inst = crisp_core(problem)
    bound = inst.bind(problem.P)
    assert expr.free_symbols(bound) == {"x"}
    assert expr.evaluate(bound, {"x": 2.0}) == pytest.approx(2.0)


def test_parameter_box_and_endpoint_environment(problem):
    box = parameter_box(problem, 0.5)
    assert box["c"].lo == pytest.approx(-1.25)
    env = endpoint_environment(problem, 0.0)
    assert env["g_lo"] == 0.5 and env["g_hi"] == 1.5


def test_sign_classes(problem):
    assert problem.parameter("c").sign_class() == "negative"
    assert problem.parameter("k").sign_class() == "positive"


@pytest.mark.parametrize("example, roles", [
    (1, {"k": ("source",), "c": ("initial",), "g": ("x_coefficient",)}),
    (3, {"k": ("source",), "c1": ("initial",), "c2": ("initial",), "g": ("x_coefficient",), "b": ("y_coefficient",)}),
])
def test_parameter_roles(example, roles):
    assert parameter_roles(load_example(example)) == roles


@pytest.mark.parametrize("example", [1, 2, 3, 4, 5])
def test_dump_reads_back(example):
    p = load_example(example)
    again = load_problem(dump_problem(p))
    assert again == p


def test_with_grid_and_levels(problem):
    assert problem.with_level_count(5).alphas().size == 5
    coarse = problem.with_grid(problem.grid.with_counts(nt=5))
    assert coarse.grid.shape == (5, 21)
