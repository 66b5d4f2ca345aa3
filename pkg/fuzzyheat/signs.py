"""
Sampled sign analysis of coefficients, sources and their parameter
derivatives.

Every derivative is taken symbolically; its sign is then read off a dense
sample of the space-time box (``t`` strictly positive, open spatial bounds
moved inward) crossed with the corners of every alpha-cut of the parameter
box.  A sign is definite only when every sample clears the margin.
"""
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from fuzzyheat import expr
from fuzzyheat.errors import NumericalError, UsageError
from fuzzyheat.grid import Axis
from fuzzyheat.problem import (
    ROLE_SOURCE,
    ROLE_X_COEFFICIENT,
    ROLE_Y_COEFFICIENT,
    endpoint_environment,
    parameter_roles,
)

logger = logging.getLogger(__name__)

SIGNS = ("+", "-", "0", "mixed")


@dataclass(frozen=True)
class SamplingConfig:
    """
    Sampling controls shared by the sign, differentiability and residual checks

    Parameters
    ----------
    nodes_per_axis : int
        Samples along t and every spatial axis
    sign_margin : float
        A sample counts as signed only when its magnitude exceeds this
    include_corners : bool
        Sample every corner of each alpha-cut box; otherwise only the all-lower
        and all-upper corners
    residual_tolerance : float
        Relative bound on the endpoint residual
    monotonicity_tolerance : float
        Relative slack of the alpha monotonicity checks
    """

    nodes_per_axis: int = 21
    sign_margin: float = 1e-10
    include_corners: bool = True
    residual_tolerance: float = 1e-8
    monotonicity_tolerance: float = 1e-10

    def __post_init__(self):
        if self.nodes_per_axis < 3:
            raise UsageError("nodes_per_axis must be at least 3")
        if self.sign_margin < 0.0:
            raise UsageError("sign_margin must be non-negative")
        if not self.residual_tolerance > 0.0 or self.monotonicity_tolerance < 0.0:
            raise UsageError("tolerances must be positive")

    def refined(self):
        return SamplingConfig(
            2 * (self.nodes_per_axis - 1) + 1,
            self.sign_margin,
            self.include_corners,
            self.residual_tolerance,
            self.monotonicity_tolerance,
        )


@dataclass(frozen=True)
class SignEntry:
    """
    Sign of one sampled quantity

    Attributes
    ----------
    label : str
        ``"P"``, ``"dF/dk"``, ``"dP/dg*dG/dg"``, ...
    sign : str
        ``"+"``, ``"-"``, ``"0"`` (neither definite nor mixed) or ``"mixed"``
    minimum, maximum : float
        Extremes over all samples
    positive_witness, negative_witness : dict or None
        A sample point (variables and parameters) on each side of the margin
    positive_box : dict or None
        Per-variable ``(lo, hi)`` bounding box of the samples above the margin
    """

    label: str
    sign: str
    minimum: float
    maximum: float
    margin: float = 0.0
    positive_witness: dict = None
    negative_witness: dict = None
    positive_box: dict = None

    @property
    def direction(self):
        """ ``"increasing"``, ``"decreasing"`` or ``"mixed"`` for a derivative entry """
        if self.minimum >= -self.margin:
            return "increasing"
        if self.maximum <= self.margin:
            return "decreasing"
        return "mixed"

    def to_dict(self):
        return {
            "sign": self.sign,
            "min": self.minimum,
            "max": self.maximum,
            "positive_witness": self.positive_witness,
            "negative_witness": self.negative_witness,
            "positive_box": self.positive_box,
        }


@dataclass(frozen=True)
class SignProfile:
    """
    Signs of the coefficients, of the parameter derivatives and of the
    products that decide whether endpoint functions solve the fuzzy pde

    Attributes
    ----------
    entries : dict
        Label to ``SignEntry``
    products : tuple of str
        Labels of the derivative products, in role order
    """

    entries: dict = field(default_factory=dict)
    products: tuple = ()

    def __contains__(self, label):
        return label in self.entries

    def entry(self, label):
        try:
            return self.entries[label]
        except KeyError:
            raise UsageError(f"sign profile has no entry {label!r}") from None

    def sign(self, label):
        return self.entry(label).sign

    def direction(self, function, name):
        """ monotonicity of ``function`` in parameter ``name``; constant counts as increasing """
        label = derivative_label(function, name)
        if label not in self.entries:
            return "increasing"
        return self.entries[label].direction

    def mixed(self):
        return tuple(label for label, e in self.entries.items() if e.sign == "mixed")

    def to_dict(self):
        return {
            "entries": {label: e.to_dict() for label, e in sorted(self.entries.items())},
            "products": list(self.products),
        }


def derivative_label(function, name):
    return f"d{function}/d{name}"


def product_label(*labels):
    return "*".join(labels)


def sample_mesh(problem, cfg=SamplingConfig()):
    """
    Broadcastable sample coordinates over ``(0, M1]`` and the spatial axes.

    Returns
    -------
    dict
        ``t``, ``x`` and, in two dimensions, ``y`` arrays shaped for
        broadcasting over ``(nt, nx[, ny])``
    """
    n = cfg.nodes_per_axis
    axes = [np.linspace(0.0, problem.grid.t.upper, n + 1)[1:]]
    for a in problem.grid.spatial_axes():
        axes.append(Axis(a.name, a.lower, a.upper, n, a.open_lower, a.open_upper).nodes())
    names = ("t",) + tuple(a.name for a in problem.grid.spatial_axes())
    return dict(zip(names, np.meshgrid(*axes, indexing="ij", sparse=True)))


def parameter_samples(problem, cfg=SamplingConfig()):
    """
    Parameter points visited by the sign analysis.

    Every alpha level contributes the corners of its cut box (or only the
    all-lower and all-upper corners), and the peak is always included.

    Returns
    -------
    numpy.ndarray
        Shape ``(count, n_parameters)``, columns ordered as
        ``problem.parameter_names``; rows are unique
    """
    names = problem.parameter_names
    if not names:
        return np.zeros((1, 0))
    rows = [[p.peak for p in problem.parameters]]
    for alpha in problem.alphas():
        cuts = [p.cut(alpha) for p in problem.parameters]
        if cfg.include_corners:
            rows.extend(itertools.product(*((c.lo, c.hi) for c in cuts)))
        else:
            rows.append([c.lo for c in cuts])
            rows.append([c.hi for c in cuts])
    return np.unique(np.asarray(rows, dtype=float), axis=0)


def sample_values(factors, mesh, samples, names):
    """
    Product of ``factors`` at every (parameter sample, mesh node).

    Parameter samples are first projected onto the parameters the factors
    use, so unused parameters do not multiply the work.

    Returns
    -------
    points : numpy.ndarray
        Projected parameter samples, shape ``(count, len(used))``
    used : list of str
    values : numpy.ndarray
        Shape ``(count,) + mesh shape``
    """
    used = sorted(set().union(*(expr.parameters(f) for f in factors)))
    if used:
        columns = [names.index(n) for n in used]
        points = np.unique(samples[:, columns], axis=0)
    else:
        points = np.zeros((1, 0))
    shape = np.broadcast_shapes(*(np.shape(v) for v in mesh.values()))
    lead = (-1,) + (1,) * len(shape)
    env = {name: value[None] for name, value in mesh.items()}
    for column, name in enumerate(used):
        env[name] = points[:, column].reshape(lead)
    values = np.ones((len(points),) + shape)
    for f in factors:
        values = values * np.broadcast_to(expr.evaluate(f, env), values.shape)
    return points, used, values


def _witness(index, mesh, points, used):
    variables = list(mesh)
    shape = np.broadcast_shapes(*(np.shape(v) for v in mesh.values()))
    point = {}
    for axis, name in enumerate(variables):
        point[name] = float(np.broadcast_to(mesh[name], shape)[index[1:]])
    for column, name in enumerate(used):
        point[name] = float(points[index[0], column])
    return point


def classify_samples(label, values, mesh, points, used, margin):
    """ reduce sampled values to a ``SignEntry`` """
    positive = values > margin
    negative = values < -margin
    minimum, maximum = float(np.min(values)), float(np.max(values))
    if positive.all():
        sign = "+"
    elif negative.all():
        sign = "-"
    elif positive.any() and negative.any():
        sign = "mixed"
    else:
        sign = "0"
    positive_witness = negative_witness = positive_box = None
    if positive.any():
        positive_witness = _witness(tuple(np.argwhere(positive)[0]), mesh, points, used)
    if negative.any():
        negative_witness = _witness(tuple(np.argwhere(negative)[0]), mesh, points, used)
    if sign == "mixed":
        somewhere = positive.any(axis=0)
        shape = somewhere.shape
        positive_box = {}
        for name, coords in mesh.items():
            inside = np.broadcast_to(coords, shape)[somewhere]
            positive_box[name] = (float(inside.min()), float(inside.max()))
    return SignEntry(label, sign, minimum, maximum, margin, positive_witness, negative_witness, positive_box)


def _functions(problem):
    yield "P", problem.P
    if problem.Q is not None:
        yield "Q", problem.Q
    yield "F", problem.F
    yield "I", problem.initial


def _sample_entry(label, factors, mesh, samples, names, cfg):
    points, used, values = sample_values(factors, mesh, samples, names)
    entry = classify_samples(label, values, mesh, points, used, cfg.sign_margin)
    logger.debug("sign %s: %s (min %.3e, max %.3e)", label, entry.sign, entry.minimum, entry.maximum)
    return entry


def coefficient_profile(problem, cfg=SamplingConfig()):
    """
    Signs of P (and Q) and of the parameter derivatives of P, Q, F and the
    initial condition.  No solution expression is needed.

    Parameters
    ----------
    problem : HeatLikeProblem
    cfg : SamplingConfig

    Returns
    -------
    SignProfile
        Entries ``"P"``, ``"Q"`` and ``"dX/ds"`` for every function ``X`` in
        ``P, Q, F, I`` that depends on parameter ``s``
    """
    mesh = sample_mesh(problem, cfg)
    samples = parameter_samples(problem, cfg)
    names = list(problem.parameter_names)
    entries = {}
    entries["P"] = _sample_entry("P", [problem.P], mesh, samples, names, cfg)
    if problem.Q is not None:
        entries["Q"] = _sample_entry("Q", [problem.Q], mesh, samples, names, cfg)
    for function, e in _functions(problem):
        for name in names:
            if expr.depends_on(e, name):
                label = derivative_label(function, name)
                entries[label] = _sample_entry(label, [expr.differentiate(e, name)], mesh, samples, names, cfg)
    return SignProfile(entries)


def sign_profile(problem, G, cfg=SamplingConfig()):
    """
    Signs needed to decide whether the fuzzified solution ``G`` yields a
    Buckley-Feuring solution.

    Adds to ``coefficient_profile`` the derivatives ``dG/ds`` and the
    products ``dP/ds*dG/ds`` (x-coefficient parameters), ``dQ/ds*dG/ds``
    (y-coefficient parameters) and ``dG/ds*dF/ds`` (source parameters).

    Parameters
    ----------
    problem : HeatLikeProblem
    G : Expression
        Crisp closed-form solution
    cfg : SamplingConfig

    Returns
    -------
    SignProfile

    Raises
    ------
    UsageError
        When ``G`` is missing
    """
    if G is None:
        raise UsageError(
            "no closed-form solution G: pass one with --oracle, use a registry problem, "
            "or fit one to the VIM solution first"
        )
    base = coefficient_profile(problem, cfg)
    mesh = sample_mesh(problem, cfg)
    samples = parameter_samples(problem, cfg)
    names = list(problem.parameter_names)
    entries = dict(base.entries)
    dG = {name: expr.differentiate(G, name) for name in names}
    for name in names:
        if expr.depends_on(G, name):
            label = derivative_label("G", name)
            entries[label] = _sample_entry(label, [dG[name]], mesh, samples, names, cfg)

    products = []
    roles = parameter_roles(problem)
    for name in names:
        pairs = []
        if ROLE_X_COEFFICIENT in roles[name]:
            pairs.append((("P", problem.P), ("G", G)))
        if ROLE_Y_COEFFICIENT in roles[name]:
            pairs.append((("Q", problem.Q), ("G", G)))
        if ROLE_SOURCE in roles[name]:
            pairs.append((("G", G), ("F", problem.F)))
        for (fa, ea), (fb, eb) in pairs:
            label = product_label(derivative_label(fa, name), derivative_label(fb, name))
            factors = [expr.differentiate(ea, name), expr.differentiate(eb, name)]
            entries[label] = _sample_entry(label, factors, mesh, samples, names, cfg)
            products.append(label)
    profile = SignProfile(entries, tuple(products))
    if profile.mixed():
        logger.info("mixed signs: %s", ", ".join(profile.mixed()))
    return profile


# ---------------------------------------------------------------------------
# endpoint assignment
# ---------------------------------------------------------------------------


def endpoint_symbols(name):
    """ the symbols standing for the lower and upper cut endpoints of ``name`` """
    return expr.Symbol(f"{name}_lo"), expr.Symbol(f"{name}_hi")


@dataclass(frozen=True)
class EndpointPair:
    """
    Lower and upper endpoint functions of a fuzzified expression

    Attributes
    ----------
    lower, upper : Expression
        The expression with every parameter replaced by ``<name>_lo`` or
        ``<name>_hi``
    selection : dict
        Parameter name to ``"lower"`` or ``"upper"``: the cut endpoint the
        lower function uses.  The upper function uses the other one.
    """

    lower: expr.Expression
    upper: expr.Expression
    selection: dict = field(default_factory=dict)

    def bind(self, problem, alpha):
        """ both endpoints with the cut endpoints at ``alpha`` substituted """
        env = endpoint_environment(problem, alpha)
        return expr.substitute(self.lower, env), expr.substitute(self.upper, env)

    def evaluate(self, problem, alpha, mesh):
        env = dict(mesh)
        env.update(endpoint_environment(problem, alpha))
        shape = np.broadcast_shapes(*(np.shape(v) for v in mesh.values()))
        lo = np.broadcast_to(expr.evaluate(self.lower, env), shape)
        hi = np.broadcast_to(expr.evaluate(self.upper, env), shape)
        return lo, hi

    def to_dict(self):
        return {
            "lower": expr.to_string(self.lower),
            "upper": expr.to_string(self.upper),
            "selection": dict(sorted(self.selection.items())),
        }


def endpoint_pair(problem, e, function, profile):
    """
    Assign cut endpoints to the parameters of ``e`` by monotonicity.

    A parameter ``e`` increases in takes its lower endpoint in the lower
    function and its upper endpoint in the upper one; a decreasing
    parameter is swapped.  Crisp parameters take the lower endpoint.

    Parameters
    ----------
    problem : HeatLikeProblem
    e : Expression
    function : str
        Label of ``e`` in ``profile`` (``"G"``, ``"F"``, ``"P"``, ``"Q"``, ``"I"``)
    profile : SignProfile

    Returns
    -------
    EndpointPair

    Raises
    ------
    NumericalError
        When ``e`` is not monotone in one of its fuzzy parameters; the box
        enumeration of ``bfs.brute_force_endpoints`` still applies there
    """
    lower_bindings, upper_bindings, selection = {}, {}, {}
    for p in problem.parameters:
        if not expr.depends_on(e, p.name):
            continue
        lo, hi = endpoint_symbols(p.name)
        direction = "increasing" if p.is_crisp else profile.direction(function, p.name)
        if direction == "mixed":
            entry = profile.entry(derivative_label(function, p.name))
            raise NumericalError(
                f"{function} is not monotone in {p.name}: {entry.label} changes sign; "
                "use brute-force box enumeration for its endpoints",
                diagnostics={
                    "label": entry.label,
                    "positive_witness": entry.positive_witness,
                    "negative_witness": entry.negative_witness,
                },
            )
        if direction == "increasing":
            lower_bindings[p.name], upper_bindings[p.name] = lo, hi
            selection[p.name] = "lower"
        else:
            lower_bindings[p.name], upper_bindings[p.name] = hi, lo
            selection[p.name] = "upper"
    return EndpointPair(expr.substitute(e, lower_bindings), expr.substitute(e, upper_bindings), selection)
