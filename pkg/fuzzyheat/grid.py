"""
Uniform tensor-product space-time grids and the finite-difference and
quadrature operators defined on them.

Arrays are indexed ``(it, ix[, iy])``.  Time always starts at the initial
plane ``t = 0``; spatial bounds flagged as open are moved inward by one
spacing of the closed grid before the nodes are laid out.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from fuzzyheat.errors import NumericalError, UsageError

logger = logging.getLogger(__name__)

DEFAULT_COUNT = 101
SPATIAL_AXES = ("x", "y")


@dataclass(frozen=True)
class Axis:
    """
    One uniform axis of a grid

    Parameters
    ----------
    name : str
        ``t``, ``x`` or ``y``
    lower, upper : float
        Bounds of the closed interval
    count : int
        Number of nodes, at least 3
    open_lower, open_upper : bool
        Whether the bound is excluded; an excluded bound is replaced by the
        first interior node of the closed grid
    """

    name: str
    lower: float
    upper: float
    count: int = DEFAULT_COUNT
    open_lower: bool = False
    open_upper: bool = False

    def __post_init__(self):
        if self.count < 3:
            raise UsageError(f"axis {self.name} needs at least 3 nodes, got {self.count}")
        if not self.upper > self.lower:
            raise UsageError(f"axis {self.name} bounds out of order: [{self.lower}, {self.upper}]")
        if not self.stop > self.start:
            raise UsageError(f"axis {self.name} collapses to a point with both bounds open and {self.count} nodes")

    @property
    def closed_spacing(self):
        return (self.upper - self.lower) / (self.count - 1)

    @property
    def start(self):
        return self.lower + self.closed_spacing if self.open_lower else self.lower

    @property
    def stop(self):
        return self.upper - self.closed_spacing if self.open_upper else self.upper

    @property
    def spacing(self):
        return (self.stop - self.start) / (self.count - 1)

    def nodes(self):
        return np.linspace(self.start, self.stop, self.count)

    def refined(self):
        return replace(self, count=2 * (self.count - 1) + 1)


@dataclass(frozen=True)
class GridSpec:
    """
    Space-time box ``[0, M1] x X [x Y]`` with uniform spacing on each axis

    Attributes
    ----------
    t, x : Axis
    y : Axis or None
        Present for two-dimensional problems only
    """

    t: Axis
    x: Axis
    y: Axis = None

    def __post_init__(self):
        if self.t.lower != 0.0 or self.t.open_lower:
            raise UsageError("time axis must start at the closed initial plane t = 0")

    @classmethod
    def box(cls, t_max, x_bounds, y_bounds=None, nt=DEFAULT_COUNT, nx=DEFAULT_COUNT, ny=DEFAULT_COUNT, open_bounds=()):
        open_bounds = set(open_bounds)
        t = Axis("t", 0.0, float(t_max), nt)
        x = Axis("x", float(x_bounds[0]), float(x_bounds[1]), nx, "x0" in open_bounds, "x1" in open_bounds)
        y = None
        if y_bounds is not None:
            y = Axis("y", float(y_bounds[0]), float(y_bounds[1]), ny, "y0" in open_bounds, "y1" in open_bounds)
        return cls(t, x, y)

    @property
    def dimension(self):
        return 1 if self.y is None else 2

    def axes(self):
        return (self.t, self.x) if self.y is None else (self.t, self.x, self.y)

    def spatial_axes(self):
        return self.axes()[1:]

    def axis_names(self):
        return tuple(a.name for a in self.axes())

    def axis_index(self, name):
        names = self.axis_names()
        if name not in names:
            raise UsageError(f"grid has no axis {name!r}; axes are {names}")
        return names.index(name)

    def axis(self, name):
        return self.axes()[self.axis_index(name)]

    @property
    def shape(self):
        return tuple(a.count for a in self.axes())

    @property
    def spatial_shape(self):
        return self.shape[1:]

    def coordinates(self):
        """ broadcastable node coordinates keyed by axis name """
        ndim = len(self.axes())
        coords = {}
        for index, a in enumerate(self.axes()):
            shape = [1] * ndim
            shape[index] = a.count
            coords[a.name] = a.nodes().reshape(shape)
        return coords

    def spatial_coordinates(self):
        """ coordinates of the spatial axes only, broadcastable over the spatial shape """
        ndim = len(self.spatial_axes())
        coords = {}
        for index, a in enumerate(self.spatial_axes()):
            shape = [1] * ndim
            shape[index] = a.count
            coords[a.name] = a.nodes().reshape(shape)
        return coords

    def times(self):
        return self.t.nodes()

    def refined(self):
        return GridSpec(*(a.refined() for a in self.axes()))

    def with_counts(self, nt=None, nx=None, ny=None):
        t = replace(self.t, count=nt) if nt else self.t
        x = replace(self.x, count=nx) if nx else self.x
        y = self.y
        if y is not None and ny:
            y = replace(y, count=ny)
        return GridSpec(t, x, y)

    def with_t_max(self, t_max):
        return GridSpec(replace(self.t, upper=float(t_max)), self.x, self.y)

    def interior(self):
        """ index tuple selecting nodes off every boundary plane """
        return tuple(slice(1, -1) for _ in self.axes())

    def node(self, **point):
        """ index of the node nearest to ``point`` """
        index = []
        for a in self.axes():
            if a.name not in point:
                raise UsageError(f"point is missing coordinate {a.name!r}")
            index.append(int(np.argmin(np.abs(a.nodes() - point[a.name]))))
        return tuple(index)

    def contains(self, tol=1e-12, **point):
        for a in self.axes():
            value = point.get(a.name)
            if value is None or value < a.start - tol or value > a.stop + tol:
                return False
        return True


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Values of a scalar field at every node of a grid

    Parameters
    ----------
    spec : GridSpec
    values : numpy.ndarray
        Array of shape ``spec.shape``; stored read-only
    """

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.spec.shape:
            raise UsageError(f"values of shape {values.shape} do not match grid shape {self.spec.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise NumericalError(
                f"non-finite grid value at node {tuple(int(i) for i in bad)}",
                diagnostics={"node": tuple(int(i) for i in bad)},
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, spec, fn):
        """ evaluate ``fn(t=..., x=...[, y=...])`` on broadcast coordinates """
        values = np.broadcast_to(np.asarray(fn(**spec.coordinates()), dtype=float), spec.shape)
        return cls(spec, values)

    @classmethod
    def zeros(cls, spec):
        return cls(spec, np.zeros(spec.shape))

    def with_values(self, values):
        return GridFunction(self.spec, values)

    def at(self, **point):
        return float(self.values[self.spec.node(**point)])

    def time_slice(self, index):
        return self.values[index]

    def __add__(self, other):
        return self.with_values(self.values + _values(other, self.spec))

    def __sub__(self, other):
        return self.with_values(self.values - _values(other, self.spec))

    def __mul__(self, other):
        return self.with_values(self.values * _values(other, self.spec))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def _values(other, spec):
    if isinstance(other, GridFunction):
        _check_same_spec(other.spec, spec)
        return other.values
    return np.asarray(other, dtype=float)


def _check_same_spec(a, b):
    if a != b:
        raise UsageError("grid functions live on different grids")


def second_difference(values, spacing, axis):
    """
    Second derivative along ``axis`` of a uniformly sampled array.

    Central three-point stencil inside; one-sided second-order
    ``(2, -5, 4, -1) / h^2`` at the two ends.  With only three nodes the
    central value is copied to the ends.
    """
    u = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    out = np.empty_like(u)
    h2 = spacing * spacing
    out[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / h2
    if u.shape[0] >= 4:
        out[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2
        out[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h2
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def second_derivative(f, axis):
    """
    Second derivative of ``f`` along a spatial axis

    Parameters
    ----------
    f : GridFunction
    axis : str
        ``"x"`` or ``"y"``

    Returns
    -------
    GridFunction

    Raises
    ------
    UsageError
        If the axis is not a spatial axis of ``f``'s grid
    """
    if axis not in SPATIAL_AXES:
        raise UsageError(f"second derivative is taken along x or y, not {axis!r}")
    index = f.spec.axis_index(axis)
    return f.with_values(second_difference(f.values, f.spec.axis(axis).spacing, index))


def integrate_time(values, times):
    """ cumulative trapezoid along the leading axis, zero at the first node """
    return cumulative_trapezoid(values, times, axis=0, initial=0.0)


def cumulative_time_integral(f):
    """ trapezoidal ``int_0^t f ds`` at every node of ``f``'s grid """
    return f.with_values(integrate_time(f.values, f.spec.times()))


def time_derivative(f):
    """ second-order time derivative; central inside, one-sided at both ends """
    return f.with_values(np.gradient(f.values, f.spec.times(), axis=0, edge_order=2))


def sup_norm_diff(a, b):
    """
    max over all nodes of ``|a - b|``

    Raises
    ------
    UsageError
        If the two functions do not share a grid
    """
    _check_same_spec(a.spec, b.spec)
    return float(np.max(np.abs(a.values - b.values)))
