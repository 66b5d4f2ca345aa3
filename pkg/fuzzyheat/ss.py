"""
Seikkala solutions: endpoint systems, their per-level solution and the
region where the computed endpoints form fuzzy numbers.

The endpoint pair ``(u1, u2)`` of ``U_t + P U_xx (+ Q U_yy) = F`` solves

    (u1)_t + P1 (v1)_xx = F1        (u2)_t + P2 (v2)_xx = F2

with ``(v1, v2) = (u1, u2)`` on an axis whose coefficient is non-negative and
``(v1, v2) = (u2, u1)`` on an axis whose coefficient is non-positive.  The
lower and upper coefficient, source and initial endpoints are chosen from
the monotonicity of each function in its parameters.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from fuzzyheat import expr
from fuzzyheat.errors import NumericalError, UsageError
from fuzzyheat.fuzzy import FuzzyRejection, FuzzyValidity, Interval, from_endpoint_samples, validate_fuzzy
from fuzzyheat.grid import GridFunction
from fuzzyheat.problem import endpoint_environment
from fuzzyheat.signs import SamplingConfig, coefficient_profile, endpoint_pair
from fuzzyheat.vim import LinearEquation, VimConfig, solve_system

logger = logging.getLogger(__name__)

COUPLINGS = ("uncoupled", "cross_coupled_x", "cross_coupled_y", "cross_coupled_both")


@dataclass(frozen=True)
class SsConfig:
    """
    Controls of the Seikkala pipeline

    Parameters
    ----------
    tolerance_factor : float
        Slack ``tolerance_factor * (1 + |u|)`` of the alpha-monotonicity and
        ordering checks
    workers : int
        Alpha levels solved concurrently
    vim : VimConfig
        Iteration controls for every level
    """

    tolerance_factor: float = 1e-8
    workers: int = 1
    vim: VimConfig = field(default_factory=VimConfig)

    def __post_init__(self):
        if self.tolerance_factor < 0.0:
            raise UsageError("tolerance_factor must be non-negative")
        if self.workers < 1:
            raise UsageError("workers must be at least 1")


@dataclass(frozen=True)
class SeikkalaSystem:
    """
    The endpoint system of a fuzzy heat-like problem

    Attributes
    ----------
    coupling : str
        One of ``COUPLINGS``
    operators : tuple of (str, EndpointPair, bool)
        Axis, coefficient endpoints, and whether the axis is cross-coupled
    source, initial : EndpointPair
    """

    coupling: str
    operators: tuple
    source: object
    initial: object

    def equations(self, problem, alpha):
        """ the two parameter-free equations at one alpha level """
        env = endpoint_environment(problem, alpha)
        first, second = [], []
        for axis, pair, coupled in self.operators:
            first.append((axis, expr.substitute(pair.lower, env), 1 if coupled else 0))
            second.append((axis, expr.substitute(pair.upper, env), 0 if coupled else 1))
        f1, f2 = (expr.substitute(e, env) for e in (self.source.lower, self.source.upper))
        i1, i2 = (expr.substitute(e, env) for e in (self.initial.lower, self.initial.upper))
        return LinearEquation(tuple(first), f1, i1), LinearEquation(tuple(second), f2, i2)

    def describe(self):
        """ the system printed with ``<name>_lo`` / ``<name>_hi`` endpoints """
        lines = []
        for index, side in ((1, "lower"), (2, "upper")):
            terms = [f"(u{index})_t"]
            for axis, pair, coupled in self.operators:
                target = 3 - index if coupled else index
                terms.append(f"{expr.to_string(getattr(pair, side))} (u{target})_{axis}{axis}")
            lines.append(" + ".join(terms) + f" = {expr.to_string(getattr(self.source, side))}")
            lines.append(f"u{index}(0) = {expr.to_string(getattr(self.initial, side))}")
        return lines

    def to_dict(self):
        return {
            "coupling": self.coupling,
            "operators": [
                {"axis": axis, "coefficient": pair.to_dict(), "coupled": coupled}
                for axis, pair, coupled in self.operators
            ],
            "source": self.source.to_dict(),
            "initial": self.initial.to_dict(),
            "equations": self.describe(),
        }


def assemble_system(problem, profile=None, cfg=SamplingConfig()):
    """
    Build the endpoint system from the signs of the coefficients.

    Parameters
    ----------
    problem : HeatLikeProblem
    profile : SignProfile, optional
        Computed with ``coefficient_profile`` when omitted
    cfg : SamplingConfig

    Returns
    -------
    SeikkalaSystem

    Raises
    ------
    NumericalError
        When a coefficient changes sign over the domain, or P, Q, F or the
        initial condition is not monotone in one of its parameters
    """
    if profile is None:
        profile = coefficient_profile(problem, cfg)
    operators = []
    coupled_axes = []
    for axis, coefficient in problem.operators():
        function = problem.coefficient_name(axis)
        entry = profile.entry(function)
        if entry.direction == "mixed":
            raise NumericalError(
                f"{function} changes sign over the domain; no endpoint system applies",
                diagnostics={"positive_witness": entry.positive_witness, "negative_witness": entry.negative_witness},
            )
        coupled = entry.direction == "decreasing"
        if coupled:
            coupled_axes.append(axis)
        operators.append((axis, endpoint_pair(problem, coefficient, function, profile), coupled))
    if not coupled_axes:
        coupling = "uncoupled"
    elif len(coupled_axes) == 2:
        coupling = "cross_coupled_both"
    else:
        coupling = f"cross_coupled_{coupled_axes[0]}"
    system = SeikkalaSystem(
        coupling,
        tuple(operators),
        endpoint_pair(problem, problem.F, "F", profile),
        endpoint_pair(problem, problem.initial, "I", profile),
    )
    logger.debug("endpoint system (%s): %s", coupling, "; ".join(system.describe()))
    return system


def _solve_level(system, problem, alpha, cfg, spec=None):
    results = solve_system(system.equations(problem, alpha), spec or problem.grid, cfg.vim)
    if any(r.diverged for r in results):
        raise NumericalError(
            f"endpoint system diverged at alpha={alpha:g}",
            diagnostics={"alpha": float(alpha), "iterations": results[0].iterations_used, "deltas": results[0].deltas},
        )
    if not all(r.converged for r in results):
        logger.warning("endpoint system at alpha=%g did not reach tolerance (delta %.3e)", alpha, results[0].final_delta)
    return results


def solve_ss(system, problem, alpha, cfg=SsConfig(), spec=None):
    """
    Solve the endpoint system at one alpha level.

    Returns
    -------
    (GridFunction, GridFunction)
        ``u1`` and ``u2`` on the problem's grid

    Raises
    ------
    NumericalError
        When the iteration diverges
    """
    if not 0.0 <= alpha <= 1.0:
        raise UsageError(f"alpha must lie in [0, 1], got {alpha}")
    first, second = _solve_level(system, problem, alpha, cfg, spec)
    return first.solution, second.solution


@dataclass(frozen=True)
class ValidityRegion:
    """
    Nodes where the endpoint pairs form fuzzy numbers, and the box inside them

    Attributes
    ----------
    mask : numpy.ndarray of bool
        Per-node validity over all alpha levels
    failing_alpha : numpy.ndarray
        First alpha level at which a node fails; NaN where valid
    t_index : int
        Last time row of the box, -1 when even the initial row fails
    t_max : float or None
    spatial_index : dict
        Axis name to the inclusive ``(first, last)`` node indices of the box
    spatial_box : dict
        Axis name to the ``(lo, hi)`` coordinates of the box
    """

    mask: np.ndarray = field(repr=False)
    failing_alpha: np.ndarray = field(repr=False)
    t_index: int
    t_max: float = None
    spatial_index: dict = None
    spatial_box: dict = None

    @property
    def nonempty(self):
        return self.t_index >= 1 and self.spatial_box is not None

    def box_mask(self):
        """ boolean array selecting the nodes of the box """
        inside = np.zeros(self.mask.shape, dtype=bool)
        if not self.nonempty:
            return inside
        index = [slice(0, self.t_index + 1)]
        index.extend(slice(first, last + 1) for first, last in self.spatial_index.values())
        inside[tuple(index)] = True
        return inside

    def to_dict(self):
        return {
            "nonempty": self.nonempty,
            "t_max": self.t_max,
            "spatial_box": self.spatial_box,
            "valid_fraction": float(np.mean(self.mask)),
        }


def _longest_run(flags):
    best, start = (0, None), None
    for i, flag in enumerate(list(flags) + [False]):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start > best[0]:
                best = (i - start, (start, i - 1))
            start = None
    return best[1]


def _largest_rectangle(flags):
    """ largest all-true rectangle of a 2D boolean array as ((r0, r1), (c0, c1)) """
    rows, cols = flags.shape
    heights = np.zeros(cols, dtype=int)
    best = (0, None)
    for i in range(rows):
        heights = np.where(flags[i], heights + 1, 0)
        stack = []
        for j in range(cols + 1):
            h = int(heights[j]) if j < cols else 0
            start = j
            while stack and stack[-1][1] >= h:
                start, height = stack.pop()
                area = height * (j - start)
                if area > best[0]:
                    best = (area, ((i - height + 1, i), (start, j - 1)))
            stack.append((start, h))
    return best[1]


def validity_region(spec, alphas, lower, upper, tolerance_factor=1e-8):
    """
    Mark the nodes where the endpoint samples form fuzzy numbers.

    A node is valid when, at every level, ``du1/dalpha >= -tol``,
    ``du2/dalpha <= tol`` and ``u1 <= u2 + tol`` with
    ``tol = tolerance_factor * (1 + |u|)``.  Alpha derivatives are one-sided
    at the first and last level and central elsewhere.

    The box extends in time from the initial row for as long as the valid
    spatial sets of all rows so far still share a node; its spatial extent
    is the largest interval (1D) or rectangle (2D) inside that shared set.

    Parameters
    ----------
    spec : GridSpec
    alphas : array_like
        At least three levels
    lower, upper : numpy.ndarray
        Endpoint samples of shape ``(levels,) + spec.shape``

    Returns
    -------
    ValidityRegion
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.size < 3:
        raise UsageError("the validity check needs at least 3 alpha levels")
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    du1 = np.gradient(lower, alphas, axis=0, edge_order=1)
    du2 = np.gradient(upper, alphas, axis=0, edge_order=1)
    tol1 = tolerance_factor * (1.0 + np.abs(lower))
    tol2 = tolerance_factor * (1.0 + np.abs(upper))
    ok = (du1 >= -tol1) & (du2 <= tol2) & (lower <= upper + np.maximum(tol1, tol2))
    mask = ok.all(axis=0)
    failing = np.where(mask, np.nan, alphas[np.argmax(~ok, axis=0)])

    shared = np.ones(spec.spatial_shape, dtype=bool)
    t_index = -1
    for row in range(spec.shape[0]):
        narrowed = shared & mask[row]
        if not narrowed.any():
            break
        shared, t_index = narrowed, row
    if t_index < 1:
        return ValidityRegion(mask, failing, t_index)

    if len(spec.spatial_shape) == 1:
        found = _longest_run(shared)
        found = None if found is None else (found,)
    else:
        found = _largest_rectangle(shared)
    if found is None:
        return ValidityRegion(mask, failing, t_index)
    spatial_index, spatial_box = {}, {}
    for a, (first, last) in zip(spec.spatial_axes(), found):
        nodes = a.nodes()
        spatial_index[a.name] = (int(first), int(last))
        spatial_box[a.name] = (float(nodes[first]), float(nodes[last]))
    t_max = float(spec.times()[t_index])
    return ValidityRegion(mask, failing, t_index, t_max, spatial_index, spatial_box)


@dataclass(frozen=True, eq=False)
class SsSolution:
    """
    Endpoint fields at every alpha level, with their validity region

    Attributes
    ----------
    problem : HeatLikeProblem
    system : SeikkalaSystem
    alphas : numpy.ndarray
    lower, upper : numpy.ndarray
        Shape ``(levels,) + grid shape``
    region : ValidityRegion
    iterations : tuple of int
        VIM steps per level
    residuals : tuple of float
        Largest finite-difference residual of the pair, per level
    """

    problem: object
    system: SeikkalaSystem
    alphas: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    region: ValidityRegion = None
    iterations: tuple = ()
    residuals: tuple = ()

    @property
    def spec(self):
        return self.problem.grid

    @property
    def mask(self):
        return self.region.mask

    def level_index(self, alpha):
        index = int(np.argmin(np.abs(self.alphas - alpha)))
        if abs(self.alphas[index] - alpha) > 1e-12:
            raise UsageError(f"alpha={alpha:g} is not a stored level")
        return index

    def level(self, alpha):
        """ ``(u1, u2)`` at a stored level """
        index = self.level_index(alpha)
        return GridFunction(self.spec, self.lower[index]), GridFunction(self.spec, self.upper[index])

    def to_dict(self):
        return {
            "system": self.system.to_dict(),
            "alphas": [float(a) for a in self.alphas],
            "region": self.region.to_dict(),
            "iterations": list(self.iterations),
            "residuals": list(self.residuals),
        }


def solve_levels(problem, profile=None, cfg=SsConfig(), sampling=SamplingConfig(), system=None):
    """
    Solve the endpoint system at every alpha level of ``problem`` and locate
    the validity region.

    Parameters
    ----------
    problem : HeatLikeProblem
    profile : SignProfile, optional
    cfg : SsConfig
        ``cfg.workers > 1`` solves the levels on a thread pool
    sampling : SamplingConfig
        Used when the coefficient profile has to be computed
    system : SeikkalaSystem, optional
        Assembled from the profile when omitted

    Returns
    -------
    SsSolution
    """
    if system is None:
        system = assemble_system(problem, profile, sampling)
    alphas = problem.alphas()

    def run(alpha):
        return _solve_level(system, problem, alpha, cfg)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            levels = list(executor.map(run, alphas))
    else:
        levels = [run(alpha) for alpha in alphas]

    lower = np.stack([first.solution.values for first, _ in levels])
    upper = np.stack([second.solution.values for _, second in levels])
    region = validity_region(problem.grid, alphas, lower, upper, cfg.tolerance_factor)
    if region.nonempty:
        logger.info("validity region: t <= %g, %s", region.t_max, region.spatial_box)
    else:
        logger.info("validity region is empty")
    return SsSolution(
        problem,
        system,
        alphas,
        lower,
        upper,
        region,
        tuple(first.iterations_used for first, _ in levels),
        tuple(max(first.residual_sup, second.residual_sup) for first, second in levels),
    )


def ss_fuzzy_solution(sol, point):
    """
    The fuzzy value of the solution at a grid node.

    Parameters
    ----------
    sol : SsSolution
    point : dict
        ``{"t": ..., "x": ...[, "y": ...]}``; the nearest node is used

    Returns
    -------
    AlphaLevelFuzzyNumber or FuzzyValidity
        A falsy ``FuzzyValidity`` locating the violating level when the node
        lies outside the validity mask

    Raises
    ------
    UsageError
        When the point lies outside the grid
    """
    spec = sol.spec
    if not spec.contains(tol=1e-9, **point):
        raise UsageError(f"point {point} lies outside the grid")
    node = spec.node(**point)
    index = (slice(None),) + node
    lo, hi = sol.lower[index], sol.upper[index]
    if not sol.mask[node]:
        verdict = validate_fuzzy(list(zip(sol.alphas, zip(lo, hi))))
        if verdict:
            verdict = FuzzyValidity(False, float(sol.region.failing_alpha[node]), "alpha derivative")
        return verdict
    try:
        return from_endpoint_samples(lo, hi, len(sol.alphas))
    except FuzzyRejection as exc:
        return exc.verdict


def example4_boundary(t, R, S, samples=21):
    """
    Levelwise bound ``(g + sqrt(h)) / l`` of the region of the quartic
    variable-coefficient example, with

        g = -12 S t - R t^4
        h = 144 S t + 144 S^2 t^2 - 48 S t^4 - 12 R t^4 + 24 R S t^5 + 4 R t^7 + R^2 t^8
        l = 12 - 4 t^3

    ``g`` and ``h`` range over the ``(R, S)`` cut box (dense sampling);
    negative ``h`` is clipped to zero before the square root.

    Parameters
    ----------
    t : float
    R, S : Interval or float
        Cuts of ``gamma - K`` and ``C + gamma``
    samples : int
        Samples per box edge

    Returns
    -------
    Interval
    """
    l = 12.0 - 4.0 * t ** 3
    if l <= 0.0:
        raise UsageError(f"boundary denominator vanishes for t={t:g}")
    if samples < 2:
        raise UsageError("samples must be at least 2")
    R = R if isinstance(R, Interval) else Interval.point(R)
    S = S if isinstance(S, Interval) else Interval.point(S)
    r, s = np.meshgrid(np.linspace(R.lo, R.hi, samples), np.linspace(S.lo, S.hi, samples), indexing="ij")
    g = -12.0 * s * t - r * t ** 4
    h = (
        144.0 * s * t
        + 144.0 * s ** 2 * t ** 2
        - 48.0 * s * t ** 4
        - 12.0 * r * t ** 4
        + 24.0 * r * s * t ** 5
        + 4.0 * r * t ** 7
        + r ** 2 * t ** 8
    )
    lo = (g.min() + np.sqrt(max(h.min(), 0.0))) / l
    hi = (g.max() + np.sqrt(max(h.max(), 0.0))) / l
    return Interval(float(lo), float(hi))

