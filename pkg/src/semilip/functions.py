"""Builtin test-function families and Hermite functions.

The families here are the ones the verification suites exercise:
``abs-pow:s`` (plateau bump times |x1|^s, regularity exactly s at the
origin), ``hermite-h<k>``, ``const:c``, ``xlogx`` (the Zygmund witness)
and ``step-bump`` (bounded, discontinuous).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Grid, GridFunction

__all__ = ["ProfileFunction", "builtin", "plateau_bump",
           "hermite_function", "hermite_functions"]


def _smooth_step(t):
    """C^inf monotone step: 0 for t<=0, 1 for t>=1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        g = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        g1 = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return g / (g + g1)


def plateau_bump(r, radius):
    """Smooth cutoff: 1 on |x| <= radius/2, 0 beyond |x| = radius."""
    return _smooth_step(2.0 - 2.0 * np.abs(r) / radius)


def hermite_function(k: int, x):
    """L^2-normalized Hermite function h_k; (-d2/dx2 + x^2) h_k = (2k+1) h_k."""
    return hermite_functions(k, x)[k]


def hermite_functions(kmax: int, x):
    """h_0 .. h_kmax stacked along axis 0, by the stable recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x ** 2)
    if kmax >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = (np.sqrt(2.0 / (k + 1)) * x * out[k]
                      - np.sqrt(k / (k + 1.0)) * out[k - 1])
    return out


@dataclass(frozen=True)
class ProfileFunction:
    """A named analytic profile that can be sampled on any grid.

    ``fn(coords, extent)`` receives the coordinate arrays of the grid and
    its half-width; cutoff scales track the grid so refinement studies
    resample the same underlying function.
    """

    name: str
    fn: object
    growth_exponent: float

    def sample(self, grid: Grid) -> GridFunction:
        values = self.fn(grid.meshgrid(), grid.extent)
        return GridFunction(grid, values, self.growth_exponent)


def _abs_pow(s: float) -> ProfileFunction:
    def fn(coords, extent):
        r = np.sqrt(sum(c ** 2 for c in coords))
        return plateau_bump(r, extent / 2.0) * np.abs(coords[0]) ** s
    return ProfileFunction(f"abs-pow:{s:g}", fn, s)


def _hermite(k: int) -> ProfileFunction:
    def fn(coords, extent):
        if len(coords) != 1:
            raise ValueError("hermite profiles are one-dimensional")
        return hermite_function(k, coords[0])
    return ProfileFunction(f"hermite-h{k}", fn, 0.0)


def _const(c: float) -> ProfileFunction:
    def fn(coords, extent):
        return np.full_like(coords[0], c)
    return ProfileFunction(f"const:{c:g}", fn, 0.0)


def _xlogx() -> ProfileFunction:
    def fn(coords, extent):
        x = coords[0]
        r = np.sqrt(sum(c ** 2 for c in coords))
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(x == 0.0, 0.0, x * np.log(np.abs(np.where(x == 0, 1.0, x))))
        return plateau_bump(r, extent / 2.0) * v
    return ProfileFunction("xlogx", fn, 1.0)


def _step_bump() -> ProfileFunction:
    def fn(coords, extent):
        r = np.sqrt(sum(c ** 2 for c in coords))
        return np.where(r <= extent / 4.0, 1.0, 0.0)
    return ProfileFunction("step-bump", fn, 0.0)


def builtin(name: str) -> ProfileFunction:
    """Parse a family spec like ``abs-pow:0.5`` or ``hermite-h2``."""
    if name.startswith("abs-pow:"):
        s = float(name.split(":", 1)[1])
        if s <= 0:
            raise ValueError("abs-pow exponent must be positive")
        return _abs_pow(s)
    if name.startswith("hermite-h"):
        return _hermite(int(name[len("hermite-h"):]))
    if name.startswith("const:"):
        return _const(float(name.split(":", 1)[1]))
    if name == "xlogx":
        return _xlogx()
    if name == "step-bump":
        return _step_bump()
    raise ValueError(f"unknown builtin function family: {name!r}")
