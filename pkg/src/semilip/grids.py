"""Uniform box grids, trapezoidal quadrature and finite-difference seminorms.

Everything downstream (semigroup engines, seminorm reports, operator
calculus) works on functions sampled on the tensor grid [-R, R]^n with an
odd number of points per axis, so the origin is always a grid point.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Grid", "GridFunction", "integrate", "sup_norm",
           "second_difference_sup", "first_difference_sup",
           "export_csv", "import_csv"]


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on the box [-extent, extent]^dimension."""

    dimension: int
    extent: float
    points_per_axis: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.extent <= 0:
            raise ValueError("extent must be positive")
        if self.points_per_axis < 3 or self.points_per_axis % 2 == 0:
            raise ValueError("points_per_axis must be odd and >= 3")

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / (self.points_per_axis - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.points_per_axis)

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dimension

    def meshgrid(self) -> list:
        """Coordinate arrays, one per axis, each of shape ``self.shape``."""
        return list(np.meshgrid(*([self.axis] * self.dimension), indexing="ij"))

    def radii(self) -> np.ndarray:
        """|x| at every grid point, shape ``self.shape``."""
        coords = self.meshgrid()
        return np.sqrt(sum(c ** 2 for c in coords))

    def trapezoid_weights_1d(self) -> np.ndarray:
        w = np.full(self.points_per_axis, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def refined(self, factor: int = 2) -> "Grid":
        """Same box with the per-axis point count scaled by ``factor``."""
        return Grid(self.dimension, self.extent,
                    factor * (self.points_per_axis - 1) + 1)


class GridFunction:
    """Samples of a function on a :class:`Grid` plus growth metadata.

    ``growth_exponent`` is the exponent gamma in the asserted bound
    |f(x)| <= C (1+|x|)^gamma; the smallest grid constant C is recorded at
    construction.  It feeds the size-condition bookkeeping of the
    semigroup modules.
    """

    def __init__(self, grid: Grid, values, growth_exponent: float = 0.0):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} does not match "
                             f"grid shape {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        if growth_exponent < 0:
            raise ValueError("growth_exponent must be nonnegative")
        self.grid = grid
        self.values = values
        self.growth_exponent = float(growth_exponent)
        with np.errstate(invalid="ignore"):
            self.growth_constant = float(
                np.max(np.abs(values) / (1.0 + grid.radii()) ** growth_exponent))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values, self.growth_exponent)

    def __add__(self, other):
        return self.with_values(self.values + np.asarray(other.values if
                                isinstance(other, GridFunction) else other))

    def __sub__(self, other):
        return self.with_values(self.values - np.asarray(other.values if
                                isinstance(other, GridFunction) else other))

    def __mul__(self, c: float):
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def integrate(f: GridFunction) -> float:
    """Tensor-product trapezoidal integral over the box."""
    vals = f.values
    w = f.grid.trapezoid_weights_1d()
    for axis in range(f.grid.dimension):
        vals = np.tensordot(vals, w, axes=([0], [0]))
    return float(vals)


def sup_norm(f: GridFunction, weight=None) -> float:
    """max |weight(x) f(x)| over grid points; weight defaults to 1.

    ``weight`` may be a callable of |x| or an array matching the grid
    shape.
    """
    if weight is None:
        return float(np.max(np.abs(f.values)))
    if callable(weight):
        w = weight(f.grid.radii())
    else:
        w = np.asarray(weight)
    return float(np.max(np.abs(w * f.values)))


def export_csv(f: GridFunction, path) -> None:
    """Write ``x1,...,xn,value`` rows (with header) for every grid point."""
    coords = [c.ravel() for c in f.grid.meshgrid()]
    vals = f.values.ravel()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(f.grid.dimension)]
                        + ["value"])
        for row in zip(*coords, vals):
            writer.writerow([repr(float(v)) for v in row])


def import_csv(path, grid: Grid, growth_exponent: float = 0.0) -> GridFunction:
    """Read a :func:`export_csv` file back onto ``grid`` (order-checked)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "value" or len(header) != grid.dimension + 1:
            raise ValueError(f"expected x1..x{grid.dimension},value header, "
                             f"got {header}")
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows, dtype=float)
    if data.shape[0] != int(np.prod(grid.shape)):
        raise ValueError(f"{data.shape[0]} rows do not fill grid {grid.shape}")
    coords = [c.ravel() for c in grid.meshgrid()]
    for i, c in enumerate(coords):
        if not np.array_equal(data[:, i], c):
            raise ValueError(f"column x{i + 1} does not match the grid axis")
    return GridFunction(grid, data[:, -1].reshape(grid.shape),
                        growth_exponent)


def _shift_vectors(grid: Grid, max_norm: float):
    """Integer shift vectors 0 < |j*h| <= max_norm, up to sign."""
    h = grid.spacing
    jmax = int(np.floor(max_norm / h))
    if grid.dimension == 1:
        return [(j,) for j in range(1, jmax + 1)]
    shifts = []
    for j in itertools.product(range(-jmax, jmax + 1),
                               repeat=grid.dimension):
        if all(c == 0 for c in j):
            continue
        # keep one representative of each +-pair
        if j < tuple(-c for c in j):
            continue
        if h * np.sqrt(sum(c ** 2 for c in j)) <= max_norm:
            shifts.append(j)
    return shifts


def _shifted_views(values, shift):
    """(f(x+z), f(x-z), f(x)) on the subdomain where x +- z stay on-grid."""
    ndim = values.ndim
    # center window: x such that both x+z and x-z stay in range
    sl_plus, sl_minus, sl_center = [], [], []
    for axis in range(ndim):
        j = abs(shift[axis])
        n = values.shape[axis]
        if 2 * j >= n:
            return None
        s = shift[axis]
        sl_center.append(slice(j, n - j))
        sl_plus.append(slice(j + s, n - j + s))
        sl_minus.append(slice(j - s, n - j - s))
    return (values[tuple(sl_plus)], values[tuple(sl_minus)],
            values[tuple(sl_center)])


def second_difference_sup(f: GridFunction, alpha: float,
                          max_shift: float | None = None) -> float:
    """sup over on-grid (x, z) of |f(x+z)+f(x-z)-2f(x)| / |z|^alpha.

    Shifts are truncated to |z| <= extent/2 so that boundary effects do
    not dominate; the truncation radius can be overridden.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError("alpha must lie in (0, 2]")
    if max_shift is None:
        max_shift = f.grid.extent / 2.0
    h = f.grid.spacing
    best = 0.0
    for shift in _shift_vectors(f.grid, max_shift):
        views = _shifted_views(f.values, shift)
        if views is None:
            continue
        plus, minus, center = views
        znorm = h * np.sqrt(sum(c ** 2 for c in shift))
        second = np.max(np.abs(plus + minus - 2.0 * center))
        best = max(best, second / znorm ** alpha)
    return best


def _one_sided_views(values, shift):
    """(f(x+z), f(x)) on the subdomain where x + z stays on-grid."""
    sl_plus, sl_center = [], []
    for axis in range(values.ndim):
        s = shift[axis]
        n = values.shape[axis]
        if abs(s) >= n:
            return None
        if s >= 0:
            sl_center.append(slice(0, n - s))
            sl_plus.append(slice(s, n))
        else:
            sl_center.append(slice(-s, n))
            sl_plus.append(slice(0, n + s))
    return values[tuple(sl_plus)], values[tuple(sl_center)]


def first_difference_sup(f: GridFunction, alpha: float,
                         max_shift: float | None = None) -> float:
    """sup over on-grid (x, z) of |f(x-z)-f(x)| / |z|^alpha, alpha in (0, 1].

    Only x and x - z need to stay on-grid, so shifts range up to the full
    box diameter (unlike second differences, which need x +- z).  alpha=1
    is admitted so the Zygmund-but-not-Lipschitz witness can be probed at
    the boundary exponent.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if max_shift is None:
        max_shift = f.grid.extent / 2.0
    h = f.grid.spacing
    best = 0.0
    for shift in _shift_vectors(f.grid, max_shift):
        views = _one_sided_views(f.values, shift)
        if views is None:
            continue
        plus, center = views
        znorm = h * np.sqrt(sum(c ** 2 for c in shift))
        best = max(best, np.max(np.abs(plus - center)) / znorm ** alpha)
    return best
