"""
Buckley-Feuring analysis of a fuzzified closed-form solution.

Given the crisp solution ``G`` of ``U_t + P U_xx (+ Q U_yy) = F``, the
fuzzified solution ``Z`` has cut endpoints ``z1 <= z2`` obtained by putting
each fuzzy parameter at the cut endpoint its monotonicity dictates.  ``Z`` is
a Buckley-Feuring solution when

* P (and Q) are positive and every derivative product
  ``dP/ds*dG/ds``, ``dQ/ds*dG/ds``, ``dG/ds*dF/ds`` is positive,
* ``Gamma_i = (z_i)_t + P_i (z_i)_xx (+ Q_i (z_i)_yy)`` are the cut endpoints
  of a fuzzy number (lower nondecreasing, upper nonincreasing in alpha,
  ordered at alpha = 1),
* ``Gamma_i = F_i`` and ``z_i(0, .)`` are the endpoints of the fuzzified
  initial condition.

When it is not, ``classify`` falls back on the Seikkala pipeline.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from fuzzyheat import expr
from fuzzyheat.errors import NumericalError, UsageError
from fuzzyheat.fuzzy import Interval
from fuzzyheat.signs import (
    EndpointPair,
    SamplingConfig,
    endpoint_pair,
    parameter_samples,
    sample_mesh,
    sample_values,
    sign_profile,
)
from fuzzyheat.ss import SsConfig, solve_levels

logger = logging.getLogger(__name__)

__all__ = [
    "ClassificationReport",
    "ConditionResult",
    "DifferentiabilityReport",
    "EndpointFunctions",
    "SolutionCheck",
    "bfs_residual",
    "brute_force_endpoints",
    "classify",
    "differentiability_check",
    "endpoint_functions",
    "gamma_endpoints",
    "initial_condition_error",
    "sign_profile",
    "theorem2_consistency",
    "verify_solution",
]


@dataclass(frozen=True)
class EndpointFunctions:
    """
    Endpoint functions of the fuzzified solution and of the pde's data

    Attributes
    ----------
    z : EndpointPair
        ``z1``, ``z2`` of the solution G
    F : EndpointPair
    P : EndpointPair
    Q : EndpointPair or None
        Absent in one dimension
    """

    z: EndpointPair
    F: EndpointPair
    P: EndpointPair
    Q: EndpointPair = None

    def coefficient(self, problem, axis):
        """ endpoint pair of the coefficient acting along ``axis`` of ``problem`` """
        return getattr(self, problem.coefficient_name(axis))

    def to_dict(self):
        out = {"z": self.z.to_dict(), "F": self.F.to_dict(), "P": self.P.to_dict()}
        if self.Q is not None:
            out["Q"] = self.Q.to_dict()
        return out


def endpoint_functions(problem, G, profile):
    """
    Bind every parameter to the cut endpoint its monotonicity dictates.

    Parameters
    ----------
    problem : HeatLikeProblem
    G : Expression
    profile : SignProfile
        From ``sign_profile(problem, G)``

    Returns
    -------
    EndpointFunctions

    Raises
    ------
    NumericalError
        When G, F, P or Q is not monotone in one of its parameters;
        ``brute_force_endpoints`` still gives the cut there
    """
    Q = None
    if problem.Q is not None:
        Q = endpoint_pair(problem, problem.Q, "Q", profile)
    return EndpointFunctions(
        endpoint_pair(problem, G, "G", profile),
        endpoint_pair(problem, problem.F, "F", profile),
        endpoint_pair(problem, problem.P, "P", profile),
        Q,
    )


def brute_force_endpoints(problem, G, alpha, point, samples_per_axis=21):
    """
    Cut of the fuzzified G at one point by enumerating the parameter box.

    Parameters
    ----------
    problem : HeatLikeProblem
    G : Expression
    alpha : float
    point : dict
        ``{"t": ..., "x": ...[, "y": ...]}``
    samples_per_axis : int
        Samples along every parameter's cut, ends included

    Returns
    -------
    Interval
        Min and max of G over the sampled box
    """
    if samples_per_axis < 3:
        raise UsageError("samples_per_axis must be at least 3")
    used = [p for p in problem.parameters if expr.depends_on(G, p.name)]
    env = {name: float(value) for name, value in point.items()}
    if used:
        cuts = [p.cut(alpha) for p in used]
        axes = [np.linspace(c.lo, c.hi, samples_per_axis) for c in cuts]
        for p, values in zip(used, np.meshgrid(*axes, indexing="ij", sparse=True)):
            env[p.name] = values
    values = np.asarray(expr.evaluate(G, env), dtype=float)
    return Interval(float(values.min()), float(values.max()))


def gamma_endpoints(ep, problem):
    """
    ``Gamma_i = (z_i)_t + sum_axis X_i (z_i)_aa`` for both endpoints, with
    ``X`` the coefficient acting on each axis.
    """
    sides = []
    for side in ("lower", "upper"):
        z = getattr(ep.z, side)
        gamma = expr.differentiate(z, "t")
        for axis, _ in problem.operators():
            X = getattr(ep.coefficient(problem, axis), side)
            d2 = expr.differentiate(expr.differentiate(z, axis), axis)
            gamma = expr.make_add(gamma, expr.make_mul(X, d2))
        sides.append(gamma)
    return EndpointPair(sides[0], sides[1], dict(ep.z.selection))


def _stack(pair, problem, mesh):
    lows, highs = [], []
    for alpha in problem.alphas():
        lo, hi = pair.evaluate(problem, alpha, mesh)
        lows.append(lo)
        highs.append(hi)
    return np.stack(lows), np.stack(highs)


def _location(index, mesh, alphas):
    shape = np.broadcast_shapes(*(np.shape(v) for v in mesh.values()))
    point = {"alpha": float(alphas[index[0]])}
    for name, coords in mesh.items():
        point[name] = float(np.broadcast_to(coords, shape)[index[1:]])
    return point


@dataclass(frozen=True)
class ConditionResult:
    """
    One sampled condition

    Attributes
    ----------
    name : str
    passed : bool
    worst : float
        Largest violation beyond tolerance; non-positive when passed
    witness : dict or None
        Location (variables and alpha) of the worst sample
    """

    name: str
    passed: bool
    worst: float
    witness: dict = None

    def to_dict(self):
        return {"passed": self.passed, "worst": self.worst, "witness": self.witness}


@dataclass(frozen=True)
class DifferentiabilityReport:
    """
    Conditions on the Gamma endpoints

    Attributes
    ----------
    conditions : tuple of ConditionResult
        ``lower_nondecreasing``, ``upper_nonincreasing`` and
        ``ordered_at_core``
    gamma : EndpointPair
    """

    conditions: tuple
    gamma: EndpointPair = None

    @property
    def passed(self):
        return all(c.passed for c in self.conditions)

    def to_dict(self):
        out = {c.name: c.to_dict() for c in self.conditions}
        if self.gamma is not None:
            out["gamma"] = self.gamma.to_dict()
        return out


def _condition(name, violation, mesh, alphas, level_offset=0):
    index = np.unravel_index(int(np.argmax(violation)), violation.shape)
    worst = float(violation[index])
    witness = None
    if worst > 0.0:
        witness = _location((index[0] + level_offset,) + tuple(index[1:]), mesh, alphas)
    return ConditionResult(name, worst <= 0.0, worst, witness)


def differentiability_check(ep, problem, cfg=SamplingConfig()):
    """
    Check that the Gamma endpoints are the cuts of a fuzzy number.

    Over the sample mesh and all alpha levels: the lower endpoint is
    nondecreasing in alpha, the upper nonincreasing, and lower <= upper at
    alpha = 1, each with slack ``monotonicity_tolerance * (1 + |Gamma|)``.

    Returns
    -------
    DifferentiabilityReport
    """
    mesh = sample_mesh(problem, cfg)
    alphas = problem.alphas()
    gamma = gamma_endpoints(ep, problem)
    lo, hi = _stack(gamma, problem, mesh)
    slack_lo = cfg.monotonicity_tolerance * (1.0 + np.abs(lo))
    slack_hi = cfg.monotonicity_tolerance * (1.0 + np.abs(hi))
    rising = -np.diff(lo, axis=0) - slack_lo[1:]
    falling = np.diff(hi, axis=0) - slack_hi[1:]
    crossing = (lo[-1] - hi[-1] - np.maximum(slack_lo[-1], slack_hi[-1]))[None]
    report = DifferentiabilityReport(
        (
            _condition("lower_nondecreasing", rising, mesh, alphas, 1),
            _condition("upper_nonincreasing", falling, mesh, alphas, 1),
            _condition("ordered_at_core", crossing, mesh, alphas, len(alphas) - 1),
        ),
        gamma,
    )
    for c in report.conditions:
        if not c.passed:
            logger.info("differentiability condition %s fails at %s", c.name, c.witness)
    return report


def bfs_residual(ep, problem, cfg=SamplingConfig()):
    """ sup over the samples and levels of ``|Gamma_i - F_i|``, both endpoints """
    mesh = sample_mesh(problem, cfg)
    g_lo, g_hi = _stack(gamma_endpoints(ep, problem), problem, mesh)
    f_lo, f_hi = _stack(ep.F, problem, mesh)
    return float(max(np.max(np.abs(g_lo - f_lo)), np.max(np.abs(g_hi - f_hi))))


def initial_condition_error(ep, problem, cfg=SamplingConfig()):
    """
    sup over the spatial samples and levels of the distance between
    ``z_i(0, .)`` and the interval extension of the initial condition
    """
    mesh = {name: values[0] for name, values in sample_mesh(problem, cfg).items() if name != "t"}
    zero = dict(mesh, t=0.0)
    worst = 0.0
    for alpha in problem.alphas():
        z_lo, z_hi = ep.z.evaluate(problem, alpha, zero)
        env = dict(mesh)
        env.update({p.name: p.cut(alpha) for p in problem.parameters})
        cut = expr.evaluate_interval(problem.initial, env)
        worst = max(worst, float(np.max(np.abs(z_lo - cut.lo))), float(np.max(np.abs(z_hi - cut.hi))))
    return worst


@dataclass(frozen=True)
class SolutionCheck:
    """
    How well the supplied G solves the crisp problem at sampled parameters

    Attributes
    ----------
    pde_residual : float
        sup of ``|G_t + P G_xx (+ Q G_yy) - F|``
    initial_residual : float
        sup of ``|G(0, .) - initial|``
    scale : float
        sup of ``|G|``, the reference the residuals are measured against
    """

    pde_residual: float
    initial_residual: float
    scale: float

    def passed(self, tolerance):
        bound = tolerance * (1.0 + self.scale)
        return self.pde_residual <= bound and self.initial_residual <= bound

    def to_dict(self):
        return {"pde_residual": self.pde_residual, "initial_residual": self.initial_residual, "scale": self.scale}


def verify_solution(problem, G, cfg=SamplingConfig()):
    """
    Evaluate the crisp residuals of ``G`` over the sample mesh and the
    parameter samples of the sign analysis.

    Returns
    -------
    SolutionCheck
    """
    residual = expr.differentiate(G, "t")
    for axis, coefficient in problem.operators():
        d2 = expr.differentiate(expr.differentiate(G, axis), axis)
        residual = expr.make_add(residual, expr.make_mul(coefficient, d2))
    residual = expr.make_sub(residual, problem.F)
    initial = expr.make_sub(expr.substitute(G, {"t": 0.0}), problem.initial)
    mesh = sample_mesh(problem, cfg)
    samples = parameter_samples(problem, cfg)
    names = list(problem.parameter_names)
    _, _, pde = sample_values([residual], mesh, samples, names)
    _, _, start = sample_values([initial], mesh, samples, names)
    _, _, values = sample_values([G], mesh, samples, names)
    check = SolutionCheck(float(np.max(np.abs(pde))), float(np.max(np.abs(start))), float(np.max(np.abs(values))))
    logger.debug("G residuals: pde %.3e, initial %.3e", check.pde_residual, check.initial_residual)
    return check


def theorem2_consistency(ep, sol):
    """
    Largest difference between the Buckley-Feuring endpoints and the
    endpoint fields of the Seikkala pipeline, over every grid node and
    stored level.
    """
    problem = sol.problem
    coords = sol.spec.coordinates()
    worst = 0.0
    for index, alpha in enumerate(sol.alphas):
        z_lo, z_hi = ep.z.evaluate(problem, alpha, coords)
        worst = max(
            worst,
            float(np.max(np.abs(z_lo - sol.lower[index]))),
            float(np.max(np.abs(z_hi - sol.upper[index]))),
        )
    return worst


@dataclass(frozen=True)
class ClassificationReport:
    """
    Verdict on a fuzzy heat-like problem and the evidence behind it

    Attributes
    ----------
    verdict : str
        ``"BFS"``, ``"SS_only"`` or ``"none"``
    sign_profile : SignProfile
    solution_check : SolutionCheck
    endpoints : EndpointFunctions or None
    differentiability : DifferentiabilityReport or None
    residual_sup : float or None
    initial_error : float or None
    consistency : float or None
        Distance to the Seikkala endpoints when the verdict is BFS
    ss : SsSolution or None
    notes : tuple of str
    """

    verdict: str
    sign_profile: object
    solution_check: SolutionCheck
    endpoints: EndpointFunctions = None
    differentiability: DifferentiabilityReport = None
    residual_sup: float = None
    initial_error: float = None
    consistency: float = None
    ss: object = field(default=None, repr=False)
    notes: tuple = ()

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "sign_profile": self.sign_profile.to_dict(),
            "solution_check": self.solution_check.to_dict(),
            "endpoints": None if self.endpoints is None else self.endpoints.to_dict(),
            "differentiability": None if self.differentiability is None else self.differentiability.to_dict(),
            "residual_sup": self.residual_sup,
            "initial_error": self.initial_error,
            "consistency": self.consistency,
            "ss": None if self.ss is None else self.ss.to_dict(),
            "notes": list(self.notes),
        }


def _sign_note(label, entry):
    if entry.sign == "-":
        return f"{label} < 0"
    if entry.sign == "mixed":
        return f"{label} changes sign; positive on {entry.positive_box}"
    return f"{label} is not strictly positive"


def classify(problem, G, cfg=SamplingConfig(), ss_cfg=SsConfig(), check_consistency=True):
    """
    Decide whether the fuzzified G is a Buckley-Feuring solution, and if not
    whether a Seikkala solution exists on a nonempty region.

    Parameters
    ----------
    problem : HeatLikeProblem
    G : Expression
        Crisp closed-form solution
    cfg : SamplingConfig
    ss_cfg : SsConfig
    check_consistency : bool
        Also run the Seikkala pipeline for a BFS and report the distance
        between the two endpoint pairs

    Returns
    -------
    ClassificationReport
        Never raises for the conditions it reports on
    """
    notes = []
    profile = sign_profile(problem, G, cfg)
    check = verify_solution(problem, G, cfg)
    bound = cfg.residual_tolerance * (1.0 + check.scale)
    if not check.passed(cfg.residual_tolerance):
        notes.append(
            f"G does not solve the crisp problem: pde residual {check.pde_residual:.3g}, "
            f"initial residual {check.initial_residual:.3g}"
        )

    signs_hold = True
    for label in ("P", "Q") if problem.Q is not None else ("P",):
        if profile.sign(label) != "+":
            signs_hold = False
            notes.append(_sign_note(label, profile.entry(label)))
    for label in profile.products:
        if profile.sign(label) != "+":
            signs_hold = False
            notes.append(_sign_note(label, profile.entry(label)))

    endpoints = differentiability = residual = initial_error = None
    bfs = False
    if signs_hold and check.passed(cfg.residual_tolerance):
        try:
            endpoints = endpoint_functions(problem, G, profile)
        except NumericalError as exc:
            notes.append(str(exc))
        if endpoints is not None:
            differentiability = differentiability_check(endpoints, problem, cfg)
            residual = bfs_residual(endpoints, problem, cfg)
            initial_error = initial_condition_error(endpoints, problem, cfg)
            if not differentiability.passed:
                notes.append("Gamma endpoints are not the cuts of a fuzzy number")
            if residual > bound:
                notes.append(f"endpoint residual {residual:.3g} exceeds {bound:.3g}")
            if initial_error > bound:
                notes.append(f"z(0) misses the initial condition endpoints by {initial_error:.3g}")
            bfs = differentiability.passed and residual <= bound and initial_error <= bound

    solution = consistency = None
    if not bfs or check_consistency:
        try:
            solution = solve_levels(problem, profile, ss_cfg, cfg)
        except NumericalError as exc:
            notes.append(f"no Seikkala solution: {exc}")
    if bfs:
        verdict = "BFS"
        if solution is not None:
            consistency = theorem2_consistency(endpoints, solution)
    elif solution is not None and solution.region.nonempty:
        verdict = "SS_only"
    else:
        verdict = "none"
        if solution is not None:
            notes.append("the Seikkala validity region is empty")
    logger.info("verdict for %s: %s", problem.name or "problem", verdict)
    return ClassificationReport(
        verdict,
        profile,
        check,
        endpoints,
        differentiability,
        residual,
        initial_error,
        consistency,
        solution,
        tuple(notes),
    )
