"""
Variational iteration for linear heat-like equations.

For ``U_t + L U = F`` with ``L = P d2/dx2 (+ Q d2/dy2)`` the correction
functional with multiplier -1 reads

    U_{n+1}(t) = U_n(t) - int_0^t [ (U_n)_s + L U_n - F ] ds
               = U_n(0) - int_0^t [ L U_n - F ] ds

since the time-derivative term integrates to ``U_n(t) - U_n(0)``.  Iterates
are held as sums of exact spatial monomials times sampled time profiles:
spatial derivatives are symbolic, the time integral is the cumulative
trapezoid on the t grid.  Coupled systems (one equation per unknown, an
operator may act on another unknown) are iterated the same way.
"""
import logging
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from fuzzyheat import expr
from fuzzyheat.errors import EvaluationError, NumericalError, UsageError
from fuzzyheat.grid import (
    GridFunction,
    cumulative_time_integral,
    integrate_time,
    second_derivative,
    time_derivative,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VimConfig:
    """
    Iteration controls

    Parameters
    ----------
    max_iterations : int
        Upper bound on correction steps
    tolerance : float
        Convergence threshold on the sup-norm of successive iterates
    divergence_guard : float
        Iteration stops as diverged when an iterate exceeds this in sup-norm
    max_term_nodes : int
        Refuse to continue when the spatial monomials grow beyond this many
        expression nodes
    """

    max_iterations: int = 50
    tolerance: float = 1e-8
    divergence_guard: float = 1e12
    max_term_nodes: int = 20000

    def __post_init__(self):
        if self.max_iterations < 1:
            raise UsageError("max_iterations must be at least 1")
        if not self.tolerance > 0.0:
            raise UsageError("tolerance must be positive")
        if not self.divergence_guard > 0.0:
            raise UsageError("divergence_guard must be positive")
        if self.max_term_nodes < 1:
            raise UsageError("max_term_nodes must be at least 1")


@dataclass(frozen=True)
class LinearEquation:
    """
    ``(u_i)_t + sum_j coefficient_j (u_{source_j})_{axis_j axis_j} = source``

    Parameters
    ----------
    operators : tuple of (str, Expression, int)
        Axis, t-free coefficient and index of the unknown it acts on
    source : Expression
        Right-hand side; a sum of t-only factors times t-free factors
    initial : Expression
        Value at t = 0
    """

    operators: tuple
    source: expr.Expression
    initial: expr.Expression


@dataclass(frozen=True)
class VimResult:
    """
    Outcome of a VIM solve for one unknown

    Attributes
    ----------
    solution : GridFunction
        Final iterate on the grid
    iterations_used : int
        Correction steps performed
    final_delta : float
        Sup-norm of the last successive-iterate difference
    residual_sup : float
        Sup over interior nodes of the finite-difference pde residual
    converged : bool
    diverged : bool
    deltas : tuple of float
        Successive-iterate differences, one per step
    separated : SeparatedField
        The final iterate in separated form
    """

    solution: GridFunction
    iterations_used: int
    final_delta: float
    residual_sup: float
    converged: bool
    diverged: bool = False
    deltas: tuple = ()
    separated: object = field(default=None, repr=False)


class SeparatedField(object):
    """
    ``sum_m phi_m(t) psi_m(x[, y])`` with exact spatial monomials ``psi_m``

    Parameters
    ----------
    times : numpy.ndarray
        The t grid the profiles are sampled on
    terms : dict
        Printed monomial to ``(monomial, profile)``
    """

    def __init__(self, times, terms=None):
        self.times = np.asarray(times, dtype=float)
        self.terms = dict(terms or {})

    @classmethod
    def from_expression(cls, e, times):
        """
        Split a parameter-free expression into time profiles and monomials.

        Raises
        ------
        NumericalError
            When a factor depends on t and on a spatial variable together
        """
        times = np.asarray(times, dtype=float)
        result = cls(times)
        for coef, time_part, space_part in expr.separate(e, "t"):
            mixed = expr.free_symbols(time_part) - {"t"}
            if mixed:
                raise NumericalError(
                    f"{expr.to_string(e)} is not a sum of time factors times space factors",
                    diagnostics={"factor": expr.to_string(time_part), "symbols": sorted(mixed)},
                )
            profile = coef * np.broadcast_to(expr.evaluate(time_part, {"t": times}), times.shape)
            result.add(space_part, profile)
        return result

    def add(self, monomial, profile):
        key = expr.to_string(monomial)
        if key in self.terms:
            self.terms[key] = (monomial, self.terms[key][1] + profile)
        else:
            self.terms[key] = (monomial, np.array(profile, dtype=float))

    def initial_value(self):
        """ the field frozen at its t = 0 value """
        ones = np.ones_like(self.times)
        return SeparatedField(self.times, {k: (m, phi[0] * ones) for k, (m, phi) in self.terms.items()})

    def __sub__(self, other):
        result = SeparatedField(self.times, self.terms)
        for monomial, phi in other.terms.values():
            result.add(monomial, -phi)
        return result

    def node_count(self):
        return sum(expr.node_count(m) for m, _ in self.terms.values())

    def values(self, spec):
        """ raw samples on ``spec``'s nodes """
        coords = spec.spatial_coordinates()
        out = np.zeros(spec.shape)
        expand_time = (slice(None),) + (None,) * len(spec.spatial_shape)
        for monomial, phi in self.terms.values():
            psi = np.broadcast_to(_evaluate_located(monomial, coords, "spatial term"), spec.spatial_shape)
            out += phi[expand_time] * psi[None]
        return out

    def materialize(self, spec):
        return GridFunction(spec, self.values(spec))

    def __repr__(self):
        return f"SeparatedField({len(self.terms)} terms)"


def _evaluate_located(e, env, what):
    """ evaluate on a grid, re-raising failures with the first failing node """
    try:
        return expr.evaluate(e, env)
    except EvaluationError as exc:
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values()))
        for index in np.ndindex(*shape):
            point = {name: float(np.broadcast_to(v, shape)[index]) for name, v in env.items()}
            try:
                expr.evaluate(e, point)
            except EvaluationError:
                raise EvaluationError(
                    f"{what} {expr.to_string(e)} fails at {point}: {exc}",
                    symbol=exc.symbol,
                    subexpression=exc.subexpression,
                    node=point,
                ) from exc
        raise


def instance_equation(inst):
    """ the crisp pde of a ``CrispInstance`` as a one-unknown equation """
    problem = inst.problem
    operators = tuple((axis, inst.bind(coefficient), 0) for axis, coefficient in problem.operators())
    return LinearEquation(operators, inst.bind(problem.F), inst.bind(problem.initial))


def _check_equations(equations):
    for index, eq in enumerate(equations):
        for axis, coefficient, source in eq.operators:
            if expr.depends_on(coefficient, "t"):
                raise NumericalError(
                    f"equation {index}: coefficient {expr.to_string(coefficient)} depends on t",
                    diagnostics={"equation": index, "axis": axis},
                )
            if not 0 <= source < len(equations):
                raise UsageError(f"equation {index}: operator acts on unknown {source} of {len(equations)}")
        leftover = expr.parameters(eq.source) | expr.parameters(eq.initial)
        for _, coefficient, _ in eq.operators:
            leftover |= expr.parameters(coefficient)
        if leftover:
            raise UsageError(f"equation {index} still has unbound parameters {sorted(leftover)}")
        if expr.depends_on(eq.initial, "t"):
            raise UsageError(f"equation {index}: initial condition depends on t")


class _Operator(object):
    """ applies the spatial operators of a system with a derivative cache """

    def __init__(self, equations, times):
        self.equations = equations
        self.times = times
        self.cache = {}
        self.forcing = [SeparatedField.from_expression(eq.source, times) for eq in equations]

    def _image(self, index, axis, coefficient, monomial):
        key = (index, axis, expr.to_string(monomial))
        if key not in self.cache:
            d2 = expr.differentiate(expr.differentiate(monomial, axis), axis)
            self.cache[key] = [] if d2 == expr.ZERO else expr.collect_terms(expr.make_mul(coefficient, d2))
        return self.cache[key]

    def correct(self, fields):
        """ one correction step for every unknown """
        updated = []
        for i, eq in enumerate(self.equations):
            integrand = SeparatedField(self.times)
            for j, (axis, coefficient, source) in enumerate(eq.operators):
                for monomial, phi in fields[source].terms.values():
                    for coef, image in self._image((i, j), axis, coefficient, monomial):
                        integrand.add(image, coef * phi)
            for monomial, phi in self.forcing[i].terms.values():
                integrand.add(monomial, -phi)
            result = fields[i].initial_value()
            keys = list(integrand.terms)
            if keys:
                profiles = np.stack([integrand.terms[k][1] for k in keys], axis=1)
                integrals = integrate_time(profiles, self.times)
                for column, k in enumerate(keys):
                    result.add(integrand.terms[k][0], -integrals[:, column])
            updated.append(result)
        return updated


def _seed(equations, times, seeds=None):
    if seeds is None:
        seeds = [eq.initial for eq in equations]
    fields = []
    for seed in seeds:
        if isinstance(seed, SeparatedField):
            fields.append(seed)
        else:
            fields.append(SeparatedField.from_expression(seed, times))
    return fields


def system_residual(equations, solutions):
    """
    Sup over interior nodes of ``|(u_i)_t + sum coefficient (u_j)_aa - F_i|``,
    all derivatives by finite differences on the grid.
    """
    residuals = []
    for eq, u in zip(equations, solutions):
        spec = u.spec
        coords = spec.coordinates()
        total = time_derivative(u).values.copy()
        for axis, coefficient, source in eq.operators:
            coef = _evaluate_located(coefficient, spec.spatial_coordinates(), "coefficient")
            total += np.asarray(coef)[None] * second_derivative(solutions[source], axis).values
        total -= np.broadcast_to(_evaluate_located(eq.source, coords, "source"), spec.shape)
        residuals.append(float(np.max(np.abs(total[spec.interior()]))))
    return residuals


def solve_system(equations, spec, cfg=VimConfig(), seeds=None):
    """
    Iterate the correction functional on a system of linear equations.

    Parameters
    ----------
    equations : sequence of LinearEquation
        Parameter-free equations, one per unknown
    spec : GridSpec
        Grid the iterates are sampled on
    cfg : VimConfig
    seeds : sequence, optional
        Starting iterates (Expression or SeparatedField); defaults to the
        initial conditions

    Returns
    -------
    tuple of VimResult
        One per unknown, sharing the iteration history

    Raises
    ------
    NumericalError
        When the source is not separable or the monomials outgrow
        ``cfg.max_term_nodes``
    """
    equations = tuple(equations)
    _check_equations(equations)
    times = spec.times()
    operator = _Operator(equations, times)
    fields = _seed(equations, times, seeds)
    with np.errstate(over="ignore", invalid="ignore"):
        previous = [f.values(spec) for f in fields]
    deltas = []
    converged = diverged = False
    delta = np.inf
    iteration = 0
    for iteration in range(1, cfg.max_iterations + 1):
        updated = operator.correct(fields)
        nodes = sum(f.node_count() for f in updated)
        if nodes > cfg.max_term_nodes:
            raise NumericalError(
                f"iterate grew to {nodes} expression nodes at step {iteration}",
                diagnostics={"iteration": iteration, "nodes": nodes},
            )
        with np.errstate(over="ignore", invalid="ignore"):
            samples = [f.values(spec) for f in updated]
            delta = max(float(np.max(np.abs(s - p))) for s, p in zip(samples, previous))
            size = max(float(np.max(np.abs(s))) for s in samples)
        deltas.append(delta)
        fields, previous = updated, samples
        logger.debug("vim step %d: delta=%.3e terms=%d", iteration, delta, sum(len(f.terms) for f in fields))
        if not np.isfinite(size) or not np.isfinite(delta) or size > cfg.divergence_guard:
            diverged = True
            logger.warning("vim diverged at step %d (sup-norm %.3e)", iteration, size)
            break
        if delta <= cfg.tolerance:
            converged = True
            break
    if converged:
        logger.info("vim converged in %d steps (delta %.3e)", iteration, delta)
    elif not diverged:
        logger.warning("vim stopped after %d steps without converging (delta %.3e)", iteration, delta)

    if diverged:
        results = []
        for f in fields:
            with np.errstate(over="ignore", invalid="ignore"):
                values = np.nan_to_num(f.values(spec), nan=np.inf)
            clipped = np.clip(values, -cfg.divergence_guard, cfg.divergence_guard)
            results.append(
                VimResult(GridFunction(spec, clipped), iteration, delta, np.inf, False, True, tuple(deltas), f)
            )
        return tuple(results)

    solutions = [f.materialize(spec) for f in fields]
    residuals = system_residual(equations, solutions)
    return tuple(
        VimResult(u, iteration, delta, r, converged, False, tuple(deltas), f)
        for u, r, f in zip(solutions, residuals, fields)
    )


def solve_crisp(inst, cfg=VimConfig(), spec=None):
    """
    Solve the crisp pde of an instance by variational iteration.

    Parameters
    ----------
    inst : CrispInstance
    cfg : VimConfig
    spec : GridSpec, optional
        Defaults to the problem's grid

    Returns
    -------
    VimResult
        A diverged result carries ``diverged=True`` and the iteration history
    """
    (result,) = solve_system([instance_equation(inst)], spec or inst.grid, cfg)
    return result


def correction_step(Un, inst, spec=None):
    """
    Apply the correction functional once.

    Parameters
    ----------
    Un : SeparatedField, Expression or GridFunction
        The current iterate.  A GridFunction is corrected entirely on the
        grid (finite-difference spatial derivatives); the other forms keep
        spatial derivatives exact.
    inst : CrispInstance
    spec : GridSpec, optional
        Grid for symbolic iterates; defaults to the problem's grid

    Returns
    -------
    SeparatedField or GridFunction
        Same form as ``Un`` (an Expression comes back separated)
    """
    equation = instance_equation(inst)
    _check_equations((equation,))
    if isinstance(Un, GridFunction):
        return _grid_correction(Un, equation)
    times = (spec or inst.grid).times()
    if isinstance(Un, SeparatedField):
        if Un.times.shape != times.shape or not np.allclose(Un.times, times):
            raise UsageError("iterate is sampled on a different t grid")
        field_ = Un
    else:
        field_ = SeparatedField.from_expression(inst.bind(Un), times)
    (updated,) = _Operator((equation,), times).correct([field_])
    return updated


def _grid_correction(u, equation):
    spec = u.spec
    coords = spec.coordinates()
    integrand = -np.broadcast_to(_evaluate_located(equation.source, coords, "source"), spec.shape)
    for axis, coefficient, _ in equation.operators:
        coef = _evaluate_located(coefficient, spec.spatial_coordinates(), "coefficient")
        integrand = integrand + np.asarray(coef)[None] * second_derivative(u, axis).values
    integral = cumulative_time_integral(GridFunction(spec, integrand))
    return GridFunction(spec, u.values[:1] - integral.values)


def iterate_trace(inst, n, spec=None):
    """
    The iterates ``U_0 ... U_n`` on the grid, starting from the initial condition.

    Returns
    -------
    list of GridFunction
    """
    if n < 0:
        raise UsageError("n must be non-negative")
    spec = spec or inst.grid
    equation = instance_equation(inst)
    _check_equations((equation,))
    times = spec.times()
    operator = _Operator((equation,), times)
    fields = _seed((equation,), times)
    trace = [fields[0].materialize(spec)]
    for _ in range(n):
        fields = operator.correct(fields)
        trace.append(fields[0].materialize(spec))
    return trace


def exponential_partial_sum(rate, t, n):
    """ ``sum_{j<=n} (-rate t)^j / j!``, the truncated decay factor of the iterates """
    t = np.asarray(t, dtype=float)
    return sum((-rate * t) ** j / factorial(j) for j in range(n + 1))
