"""
Heat-like problems with triangular fuzzy parameters.

A problem is ``U_t + P U_xx (+ Q U_yy) = F`` on a space-time box with the
initial condition ``U(0, x[, y])``.  Problems are read from TOML documents;
the schema is

.. code-block:: toml

    name = "example 1"                 # optional

    [pde]
    dimension = 1                      # 1 or 2
    P = "(g/2)*x^2"                    # coefficient of U_xx
    Q = "(b/2)*y^2"                    # 2D only
    F = "k"
    orientation = "eq2"                # 2D only; "eq3" puts P on U_yy

    [initial]
    expression = "c*x^2"

    [params.k]
    triangle = [0.5, 1.0, 1.5]
    admissible = [0.0, 2.0]            # optional, defaults to the support

    [domain]
    M1 = 1.0                           # t in [0, M1]
    M2 = 1.0                           # x in [x0, M2]
    M3 = 1.0                           # y in [y0, M3], 2D only
    x0 = 0.0                           # optional
    y0 = 0.0                           # optional
    nt = 101
    nx = 101
    ny = 101
    open = ["x0"]                      # bounds excluded from the grid

    [alpha]
    level_count = 11

    [oracle]                           # optional
    solution = "c*x^2*exp(-g*t)+k*t"
    verdict = "BFS"                    # "BFS", "SS_only" or "none"
    ss_lower = "..."                   # may use <name>_lo and <name>_hi
    ss_upper = "..."
    region_t_max = 0.5
    note = "..."
"""
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path

from fuzzyheat import expr
from fuzzyheat.errors import ExpressionSyntaxError, FuzzyDomainError, ProblemFileError, UsageError
from fuzzyheat.fuzzy import DEFAULT_LEVEL_COUNT, Interval, TriangularFuzzy, alpha_grid
from fuzzyheat.grid import DEFAULT_COUNT, GridSpec

logger = logging.getLogger(__name__)

ORIENTATIONS = ("eq2", "eq3")
VERDICTS = ("BFS", "SS_only", "none")
CORNERS = ("lower", "upper", "peak")
OPEN_BOUNDS = ("x0", "x1", "y0", "y1")
ROLE_SOURCE = "source"
ROLE_X_COEFFICIENT = "x_coefficient"
ROLE_Y_COEFFICIENT = "y_coefficient"
ROLE_INITIAL = "initial"
BINDING_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FuzzyParameter:
    """
    A named triangular fuzzy constant

    Parameters
    ----------
    name : str
    shape : TriangularFuzzy
    admissible : tuple of float, optional
        Range the parameter may take; defaults to the support ``(u1, u3)``
    """

    name: str
    shape: TriangularFuzzy
    admissible: tuple = None

    def __post_init__(self):
        if self.admissible is None:
            object.__setattr__(self, "admissible", (self.shape.u1, self.shape.u3))
        lo, hi = (float(v) for v in self.admissible)
        object.__setattr__(self, "admissible", (lo, hi))
        if lo > hi:
            raise FuzzyDomainError(f"parameter {self.name}: admissible range out of order", offending=(lo, hi))
        if self.shape.u1 < lo or self.shape.u3 > hi:
            raise FuzzyDomainError(
                f"parameter {self.name}: support [{self.shape.u1:g}, {self.shape.u3:g}] "
                f"leaves the admissible range [{lo:g}, {hi:g}]",
                offending=(self.shape.u1, self.shape.u3),
            )

    @property
    def admissible_range(self):
        return Interval(*self.admissible)

    @property
    def peak(self):
        return self.shape.u2

    @property
    def is_crisp(self):
        return self.shape.is_crisp

    def cut(self, alpha):
        return self.shape.cut(alpha)

    def lower(self, alpha):
        return self.shape.lower(alpha)

    def upper(self, alpha):
        return self.shape.upper(alpha)

    def sign_class(self):
        """ ``"positive"``, ``"negative"``, ``"nonnegative"``, ``"nonpositive"`` or ``"mixed"`` """
        u1, u3 = self.shape.u1, self.shape.u3
        if u1 > 0.0:
            return "positive"
        if u3 < 0.0:
            return "negative"
        if u1 >= 0.0:
            return "nonnegative"
        if u3 <= 0.0:
            return "nonpositive"
        return "mixed"


@dataclass(frozen=True)
class Oracle:
    """
    Reference results registered with a problem

    Attributes
    ----------
    solution : Expression or None
        Crisp closed-form solution G
    verdict : str or None
        Expected classification
    ss_lower, ss_upper : Expression or None
        Closed-form Seikkala endpoints in ``<name>_lo`` / ``<name>_hi``
    region_t_max : float or None
        Expected time extent of the validity region
    note : str
    """

    solution: expr.Expression = None
    verdict: str = None
    ss_lower: expr.Expression = None
    ss_upper: expr.Expression = None
    region_t_max: float = None
    note: str = ""


@dataclass(frozen=True)
class HeatLikeProblem:
    """
    ``U_t + P U_xx (+ Q U_yy) = F`` with ``U(0, .) = initial``

    Parameters
    ----------
    dimension : int
        1 or 2
    P, Q, F, initial : Expression
        ``Q`` is None in one dimension
    parameters : tuple of FuzzyParameter
    grid : GridSpec
    orientation : str
        ``"eq2"`` (P on U_xx) or ``"eq3"`` (P on U_yy)
    level_count : int
        Number of alpha levels used by the fuzzy analysis
    name : str
    oracle : Oracle
    """

    dimension: int
    P: expr.Expression
    Q: expr.Expression
    F: expr.Expression
    initial: expr.Expression
    parameters: tuple
    grid: GridSpec
    orientation: str = "eq2"
    level_count: int = DEFAULT_LEVEL_COUNT
    name: str = ""
    oracle: Oracle = field(default_factory=Oracle)

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if self.dimension not in (1, 2):
            raise ProblemFileError(f"dimension must be 1 or 2, got {self.dimension}", "pde.dimension")
        if (self.Q is not None) != (self.dimension == 2):
            raise ProblemFileError("Q is required in two dimensions and forbidden in one", "pde.Q")
        if self.grid.dimension != self.dimension:
            raise ProblemFileError("domain dimension does not match the pde", "domain")
        if self.orientation not in ORIENTATIONS:
            raise ProblemFileError(f"orientation must be one of {ORIENTATIONS}", "pde.orientation")
        if self.level_count < 2:
            raise ProblemFileError("level_count must be at least 2", "alpha.level_count")
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ProblemFileError("parameter declared twice", "params")
        for name in names:
            if name in expr.VARIABLES or name in expr.FUNCTIONS:
                raise ProblemFileError(f"{name!r} is reserved", f"params.{name}")
        declared = set(names) | set(expr.VARIABLES)
        for location, e, banned in self._checked_expressions():
            undeclared = expr.free_symbols(e) - declared
            if undeclared:
                raise ProblemFileError(f"undeclared symbol(s) {sorted(undeclared)}", location)
            used = expr.free_symbols(e) & banned
            if used:
                raise ProblemFileError(f"may not depend on {sorted(used)}", location)
        if self.dimension == 1:
            for location, e, _ in self._checked_expressions():
                if expr.depends_on(e, "y"):
                    raise ProblemFileError("y is not a variable of a one-dimensional problem", location)

    def _checked_expressions(self):
        yield "pde.P", self.P, {"t"}
        if self.Q is not None:
            yield "pde.Q", self.Q, {"t"}
        yield "pde.F", self.F, set()
        yield "initial.expression", self.initial, {"t"}
        if self.oracle.solution is not None:
            yield "oracle.solution", self.oracle.solution, set()

    @property
    def parameter_names(self):
        return tuple(p.name for p in self.parameters)

    def parameter(self, name):
        for p in self.parameters:
            if p.name == name:
                return p
        raise UsageError(f"problem has no parameter {name!r}")

    def operators(self):
        """ ``(axis, coefficient)`` pairs of the spatial operator """
        if self.dimension == 1:
            return (("x", self.P),)
        if self.orientation == "eq2":
            return (("x", self.P), ("y", self.Q))
        return (("y", self.P), ("x", self.Q))

    def coefficient_name(self, axis):
        """ ``"P"`` or ``"Q"``, whichever multiplies the second derivative along ``axis`` """
        axes = ("x",) if self.dimension == 1 else ("x", "y")
        if axis not in axes:
            raise UsageError(f"{self.name} has no spatial axis {axis!r}")
        leading = "y" if self.dimension == 2 and self.orientation == "eq3" else "x"
        return "P" if axis == leading else "Q"

    def alphas(self):
        return alpha_grid(self.level_count)

    def with_grid(self, grid):
        return replace(self, grid=grid)

    def with_level_count(self, level_count):
        return replace(self, level_count=int(level_count))

    def with_oracle(self, oracle):
        return replace(self, oracle=oracle)


@dataclass(frozen=True)
class CrispInstance:
    """
    A problem with one real value bound to every parameter

    Raises
    ------
    UsageError
        When a parameter is left unbound
    FuzzyDomainError
        When a binding lies outside the parameter's support
    """

    problem: HeatLikeProblem
    bindings: dict

    def __post_init__(self):
        bindings = {name: float(value) for name, value in self.bindings.items()}
        missing = set(self.problem.parameter_names) - set(bindings)
        if missing:
            raise UsageError(f"parameters not bound: {sorted(missing)}")
        extra = set(bindings) - set(self.problem.parameter_names)
        if extra:
            raise UsageError(f"bindings for undeclared parameters: {sorted(extra)}")
        for p in self.problem.parameters:
            if not p.cut(0.0).contains(bindings[p.name], tol=BINDING_TOLERANCE):
                raise FuzzyDomainError(
                    f"{p.name} = {bindings[p.name]:g} lies outside the support "
                    f"[{p.shape.u1:g}, {p.shape.u3:g}]",
                    offending=(p.name, bindings[p.name]),
                )
        object.__setattr__(self, "bindings", bindings)

    def bind(self, e):
        """ ``e`` with the parameter values substituted """
        return expr.substitute(e, self.bindings)

    @property
    def grid(self):
        return self.problem.grid


def instantiate(problem, corner, alpha=1.0):
    """
    Bind every parameter to a point of its alpha-cut.

    Parameters
    ----------
    problem : HeatLikeProblem
    corner : str or dict
        Either one of ``"lower"``, ``"upper"``, ``"peak"`` for every
        parameter, or a map from parameter name to one of those selectors
        or to an explicit real value
    alpha : float
        Level of the cut the endpoints are taken from

    Returns
    -------
    CrispInstance

    Raises
    ------
    FuzzyDomainError
        When an explicit value lies outside the alpha-cut
    """
    if not 0.0 <= alpha <= 1.0:
        raise UsageError(f"alpha must lie in [0, 1], got {alpha}")
    if isinstance(corner, str):
        corner = {name: corner for name in problem.parameter_names}
    missing = set(problem.parameter_names) - set(corner)
    if missing:
        raise UsageError(f"no selector for parameters {sorted(missing)}")
    bindings = {}
    for p in problem.parameters:
        choice = corner[p.name]
        cut = p.cut(alpha)
        if choice == "lower":
            bindings[p.name] = float(cut.lo)
        elif choice == "upper":
            bindings[p.name] = float(cut.hi)
        elif choice == "peak":
            bindings[p.name] = float(p.peak)
        elif isinstance(choice, str):
            raise UsageError(f"unknown selector {choice!r} for {p.name}; use one of {CORNERS}")
        else:
            value = float(choice)
            if not cut.contains(value, tol=BINDING_TOLERANCE):
                raise FuzzyDomainError(
                    f"{p.name} = {value:g} lies outside its cut [{cut.lo:g}, {cut.hi:g}] at alpha={alpha:g}",
                    offending=(p.name, value),
                )
            bindings[p.name] = value
    return CrispInstance(problem, bindings)


def crisp_core(problem):
    """ the instance at the peak of every parameter """
    return instantiate(problem, "peak", 1.0)


def parameter_box(problem, alpha):
    """ alpha-cut of every parameter as ``{name: Interval}`` """
    return {p.name: p.cut(alpha) for p in problem.parameters}


def endpoint_environment(problem, alpha):
    """ bindings for ``<name>_lo`` and ``<name>_hi`` at one alpha level """
    env = {}
    for p in problem.parameters:
        cut = p.cut(alpha)
        env[f"{p.name}_lo"] = float(cut.lo)
        env[f"{p.name}_hi"] = float(cut.hi)
    return env


def parameter_roles(problem):
    """
    Where each parameter enters the pde

    Returns
    -------
    dict
        Parameter name to a tuple of roles drawn from ``"source"`` (in F),
        ``"x_coefficient"`` (in P), ``"y_coefficient"`` (in Q); a parameter
        in none of them has the single role ``"initial"``
    """
    roles = {}
    for name in problem.parameter_names:
        found = []
        if expr.depends_on(problem.F, name):
            found.append(ROLE_SOURCE)
        if expr.depends_on(problem.P, name):
            found.append(ROLE_X_COEFFICIENT)
        if problem.Q is not None and expr.depends_on(problem.Q, name):
            found.append(ROLE_Y_COEFFICIENT)
        roles[name] = tuple(found) if found else (ROLE_INITIAL,)
    return roles


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------


def _require(table, key, location, kind=None):
    where = f"{location}.{key}" if location else key
    if key not in table:
        raise ProblemFileError("missing required entry", where)
    value = table[key]
    if kind is not None and not isinstance(value, kind):
        raise ProblemFileError("expected a table" if kind is dict else f"expected {kind.__name__}", where)
    return value


def _number(table, key, location, default=None):
    if key not in table:
        if default is None:
            raise ProblemFileError("missing required entry", f"{location}.{key}")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError("expected a number", f"{location}.{key}")
    return float(value)


def _integer(table, key, location, default):
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProblemFileError("expected an integer", f"{location}.{key}")
    return value


def _expression(text, location):
    if not isinstance(text, str):
        raise ProblemFileError("expected an expression string", location)
    try:
        return expr.simplify(expr.parse(text))
    except ExpressionSyntaxError as exc:
        raise ProblemFileError(str(exc), location) from exc


def _parameters(table):
    if not isinstance(table, dict) or not table:
        raise ProblemFileError("at least one parameter table is required", "params")
    parameters = []
    for name, entry in table.items():
        location = f"params.{name}"
        if not isinstance(entry, dict):
            raise ProblemFileError("expected a table", location)
        if entry.get("shape", "triangular") != "triangular":
            raise ProblemFileError("only triangular parameters are supported", f"{location}.shape")
        triangle = _require(entry, "triangle", location, list)
        if len(triangle) != 3 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in triangle):
            raise ProblemFileError("expected three numbers [u1, u2, u3]", f"{location}.triangle")
        admissible = entry.get("admissible")
        if admissible is not None:
            if (
                not isinstance(admissible, list)
                or len(admissible) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in admissible)
            ):
                raise ProblemFileError("expected two numbers [lo, hi]", f"{location}.admissible")
            if admissible[0] > admissible[1]:
                raise ProblemFileError("admissible range out of order", f"{location}.admissible")
        try:
            shape = TriangularFuzzy(*(float(v) for v in triangle))
            parameters.append(FuzzyParameter(name, shape, tuple(admissible) if admissible else None))
        except FuzzyDomainError as exc:
            raise ProblemFileError(str(exc), f"{location}.triangle") from exc
    return tuple(parameters)


def _domain(table, dimension):
    location = "domain"
    open_bounds = table.get("open", [])
    if not isinstance(open_bounds, list) or any(b not in OPEN_BOUNDS for b in open_bounds):
        raise ProblemFileError(f"expected a list drawn from {OPEN_BOUNDS}", "domain.open")
    y_bounds = None
    if dimension == 2:
        y_bounds = (_number(table, "y0", location, 0.0), _number(table, "M3", location))
    try:
        return GridSpec.box(
            _number(table, "M1", location),
            (_number(table, "x0", location, 0.0), _number(table, "M2", location)),
            y_bounds,
            nt=_integer(table, "nt", location, DEFAULT_COUNT),
            nx=_integer(table, "nx", location, DEFAULT_COUNT),
            ny=_integer(table, "ny", location, DEFAULT_COUNT),
            open_bounds=open_bounds,
        )
    except UsageError as exc:
        raise ProblemFileError(str(exc), location) from exc


def _oracle(table, parameters):
    if table is None:
        return Oracle()
    if not isinstance(table, dict):
        raise ProblemFileError("expected a table", "oracle")
    solution = table.get("solution")
    verdict = table.get("verdict")
    if verdict is not None and verdict not in VERDICTS:
        raise ProblemFileError(f"verdict must be one of {VERDICTS}", "oracle.verdict")
    endpoint_names = set(expr.VARIABLES)
    for p in parameters:
        endpoint_names.update((f"{p.name}_lo", f"{p.name}_hi"))
    bounds = {}
    for key in ("ss_lower", "ss_upper"):
        if key in table:
            e = _expression(table[key], f"oracle.{key}")
            undeclared = expr.free_symbols(e) - endpoint_names
            if undeclared:
                raise ProblemFileError(f"undeclared symbol(s) {sorted(undeclared)}", f"oracle.{key}")
            bounds[key] = e
    region = table.get("region_t_max")
    return Oracle(
        solution=_expression(solution, "oracle.solution") if solution is not None else None,
        verdict=verdict,
        ss_lower=bounds.get("ss_lower"),
        ss_upper=bounds.get("ss_upper"),
        region_t_max=_number(table, "region_t_max", "oracle") if region is not None else None,
        note=str(table.get("note", "")),
    )


def load_problem(document):
    """
    Parse and validate a TOML problem document.

    Parameters
    ----------
    document : str
        TOML text following the module schema

    Returns
    -------
    HeatLikeProblem

    Raises
    ------
    ProblemFileError
        With the dotted location of the faulty entry
    """
    try:
        data = tomllib.loads(document)
    except tomllib.TOMLDecodeError as exc:
        raise ProblemFileError(f"not a TOML document: {exc}", "document") from exc

    pde = _require(data, "pde", "", dict)
    dimension = _integer(pde, "dimension", "pde", 1)
    if dimension not in (1, 2):
        raise ProblemFileError(f"dimension must be 1 or 2, got {dimension}", "pde.dimension")
    P = _expression(_require(pde, "P", "pde"), "pde.P")
    Q = _expression(_require(pde, "Q", "pde"), "pde.Q") if dimension == 2 else None
    if dimension == 1 and "Q" in pde:
        raise ProblemFileError("Q is only allowed in two dimensions", "pde.Q")
    F = _expression(_require(pde, "F", "pde"), "pde.F")
    initial = _expression(_require(_require(data, "initial", "", dict), "expression", "initial"), "initial.expression")
    parameters = _parameters(data.get("params"))
    grid = _domain(_require(data, "domain", "", dict), dimension)
    alpha = _require(data, "alpha", "", dict) if "alpha" in data else {}
    level_count = _integer(alpha, "level_count", "alpha", DEFAULT_LEVEL_COUNT)
    problem = HeatLikeProblem(
        dimension=dimension,
        P=P,
        Q=Q,
        F=F,
        initial=initial,
        parameters=parameters,
        grid=grid,
        orientation=pde.get("orientation", "eq2"),
        level_count=level_count,
        name=str(data.get("name", "")),
        oracle=_oracle(data.get("oracle"), parameters),
    )
    logger.debug("loaded problem %r with parameters %s", problem.name, problem.parameter_names)
    return problem


def read_problem(path):
    """ load a problem document from disk; a missing file raises FileNotFoundError """
    return load_problem(Path(path).read_text(encoding="utf-8"))


def _toml_value(value):
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, expr.Expression):
        return json.dumps(expr.to_string(value))
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def dump_problem(problem):
    """ TOML text that ``load_problem`` reads back to an equal problem """
    lines = []
    if problem.name:
        lines.append(f"name = {_toml_value(problem.name)}")
        lines.append("")
    lines += ["[pde]", f"dimension = {problem.dimension}", f"P = {_toml_value(problem.P)}"]
    if problem.Q is not None:
        lines.append(f"Q = {_toml_value(problem.Q)}")
        lines.append(f"orientation = {_toml_value(problem.orientation)}")
    lines += [f"F = {_toml_value(problem.F)}", "", "[initial]", f"expression = {_toml_value(problem.initial)}"]
    for p in problem.parameters:
        lines += [
            "",
            f"[params.{p.name}]",
            f"triangle = {_toml_value((p.shape.u1, p.shape.u2, p.shape.u3))}",
            f"admissible = {_toml_value(p.admissible)}",
        ]
    grid = problem.grid
    open_bounds = [
        name
        for name, flag in (
            ("x0", grid.x.open_lower),
            ("x1", grid.x.open_upper),
            ("y0", grid.y is not None and grid.y.open_lower),
            ("y1", grid.y is not None and grid.y.open_upper),
        )
        if flag
    ]
    lines += [
        "",
        "[domain]",
        f"M1 = {_toml_value(grid.t.upper)}",
        f"x0 = {_toml_value(grid.x.lower)}",
        f"M2 = {_toml_value(grid.x.upper)}",
    ]
    if grid.y is not None:
        lines += [f"y0 = {_toml_value(grid.y.lower)}", f"M3 = {_toml_value(grid.y.upper)}"]
    lines += [f"nt = {grid.t.count}", f"nx = {grid.x.count}"]
    if grid.y is not None:
        lines.append(f"ny = {grid.y.count}")
    lines += [f"open = {_toml_value(open_bounds)}", "", "[alpha]", f"level_count = {problem.level_count}"]
    oracle = problem.oracle
    entries = [
        ("solution", oracle.solution),
        ("verdict", oracle.verdict),
        ("ss_lower", oracle.ss_lower),
        ("ss_upper", oracle.ss_upper),
        ("region_t_max", oracle.region_t_max),
        ("note", oracle.note or None),
    ]
    entries = [(key, value) for key, value in entries if value is not None]
    if entries:
        lines += ["", "[oracle]"] + [f"{key} = {_toml_value(value)}" for key, value in entries]
    return "\n".join(lines) + "\n"
