"""Admissible potentials, reverse Holder diagnostics and the critical radius.

Supported potentials are radial: zero, hermite (|x|^2), radial powers
c|x|^a and tabulated radial profiles.  Ball integrals therefore reduce to
1D radial quadrature (composite Gauss-Legendre, 64 nodes per decade),
which is what the critical-radius bisection and the reverse Holder
estimator are built on.  Dimensions 1 and 3 are supported for ball
integrals; the reverse Holder theory needs n >= 3, n = 1 runs carry a
``theory_flag`` note in reports.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = ["PotentialDescriptor", "CriticalRadiusField", "Unbounded",
           "UNBOUNDED", "reverse_holder_estimate", "critical_radius",
           "rho_comparison_check", "potential_smoothing_check",
           "load_tabulated_radial"]


class Unbounded:
    """Tagged infinite critical radius (V = 0). Never enters arithmetic."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"


UNBOUNDED = Unbounded()


@dataclass(frozen=True)
class PotentialDescriptor:
    """Radial potential V >= 0 with its dimension and reverse Holder exponent.

    kind: "zero", "hermite", "radial-power" (exponent ``power``, optional
    ``coefficient``) or "tabulated-radial" (``table`` = (radii, values)).
    ``rh_exponent`` is q > n/2, or the string "all" for polynomial kinds.
    """

    kind: str
    dimension: int
    rh_exponent: object = "all"
    power: float | None = None
    coefficient: float = 1.0
    table: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "hermite", "radial-power",
                             "tabulated-radial"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.rh_exponent != "all":
            q = float(self.rh_exponent)
            if q <= self.dimension / 2.0:
                raise ValueError("rh_exponent must exceed n/2")
        if self.kind == "radial-power":
            if self.power is None or self.power <= 0:
                raise ValueError("radial-power needs a positive exponent")
            if self.coefficient < 0:
                raise ValueError("coefficient must be nonnegative")
        if self.kind == "tabulated-radial":
            radii, values = self.table
            radii = np.asarray(radii, float)
            values = np.asarray(values, float)
            if radii.ndim != 1 or radii.shape != values.shape:
                raise ValueError("table must be two equal-length 1D arrays")
            if np.any(np.diff(radii) <= 0):
                raise ValueError("table radii must be strictly increasing")
            if np.any(values < 0):
                raise ValueError("potential values must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    @property
    def table_range(self) -> float | None:
        if self.kind == "tabulated-radial":
            return float(np.asarray(self.table[0])[-1])
        return None

    def radial(self, u):
        """V as a function of |x|; constant extrapolation beyond the table."""
        u = np.abs(np.asarray(u, dtype=float))
        if self.kind == "zero":
            return np.zeros_like(u)
        if self.kind == "hermite":
            return u ** 2
        if self.kind == "radial-power":
            return self.coefficient * u ** self.power
        radii, values = self.table
        return np.interp(u, np.asarray(radii, float), np.asarray(values, float))


def load_tabulated_radial(path, dimension: int,
                          rh_exponent=2.0) -> PotentialDescriptor:
    """Load a tabulated radial potential from CSV with header radius,value."""
    radii, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip() for c in header] != ["radius", "value"]:
            raise ValueError("tabulated potential CSV must have header "
                             "'radius,value'")
        for row in reader:
            radii.append(float(row[0]))
            values.append(float(row[1]))
    return PotentialDescriptor("tabulated-radial", dimension, rh_exponent,
                               table=(tuple(radii), tuple(values)))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _gl_panels(a: float, b: float) -> tuple:
    """Composite Gauss-Legendre nodes on [a, b], 64 nodes per decade.

    Panels follow decades of the upper endpoint so the rule resolves
    integrands concentrated near zero.
    """
    if b <= a:
        return np.empty(0), np.empty(0)
    edges = [b]
    lo = max(a, b * 1e-10)
    e = b
    while e > lo * (1 + 1e-12):
        e = max(e / 10.0, lo)
        edges.append(e)
    if a < lo:
        edges.append(a)
    edges = np.array(edges[::-1])
    nodes, weights = [], []
    for p0, p1 in zip(edges[:-1], edges[1:]):
        half = 0.5 * (p1 - p0)
        nodes.append(0.5 * (p0 + p1) + half * _GL_NODES)
        weights.append(half * _GL_WEIGHTS)
    return np.concatenate(nodes), np.concatenate(weights)


def ball_integral(V: PotentialDescriptor, center_radius: float, r: float,
                  power: float = 1.0) -> float:
    """integral of V^power over the ball B(x, r), |x| = center_radius.

    Radial reduction; dimensions 1 and 3 only.
    """
    d, n = float(center_radius), V.dimension
    if V.is_zero:
        return 0.0

    def g(u):
        return V.radial(u) ** power

    if n == 1:
        nodes, weights = _gl_panels(d - r, d + r)
        return float(np.sum(weights * g(np.abs(nodes))))
    if n == 3:
        if d == 0.0:
            nodes, weights = _gl_panels(0.0, r)
            return float(4.0 * np.pi * np.sum(weights * nodes ** 2 * g(nodes)))
        nodes, weights = _gl_panels(max(0.0, d - r), d + r)
        integrand = nodes * g(nodes) * (r ** 2 - (d - nodes) ** 2)
        return float(np.pi / d * np.sum(weights * integrand))
    raise NotImplementedError("ball integrals support dimensions 1 and 3")


def ball_volume(n: int, r: float) -> float:
    if n == 1:
        return 2.0 * r
    if n == 3:
        return 4.0 * np.pi * r ** 3 / 3.0
    raise NotImplementedError("dimensions 1 and 3 only")


def reverse_holder_estimate(V: PotentialDescriptor, q: float,
                            ball_samples) -> float:
    """Empirical lower bound for the reverse Holder constant.

    Maximum over the sampled balls of (avg V^q)^(1/q) / (avg V); the 0/0
    case (zero potential) returns 1 by convention.
    """
    if q <= V.dimension / 2.0:
        raise ValueError("q must exceed n/2")
    best = 0.0
    for center, radius in ball_samples:
        d = float(np.linalg.norm(np.atleast_1d(center)))
        rng = V.table_range
        if rng is not None and d + radius > rng:
            raise ValueError("ball exceeds the tabulated radial range")
        vol = ball_volume(V.dimension, radius)
        mean_v = ball_integral(V, d, radius) / vol
        mean_vq = ball_integral(V, d, radius, power=q) / vol
        if mean_v == 0.0:
            ratio = 1.0 if mean_vq == 0.0 else np.inf
        else:
            ratio = mean_vq ** (1.0 / q) / mean_v
        best = max(best, ratio)
    return float(best)


def critical_radius(V: PotentialDescriptor, x, tolerance: float = 1e-12):
    """Critical radius at x: the r with r^(2-n) * int_B(x,r) V = 1.

    Bisection on the monotone map after a doubling/halving bracket search;
    returns UNBOUNDED for the zero potential.
    """
    if V.is_zero:
        return UNBOUNDED
    d = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    n = V.dimension

    def phi(r):
        return r ** (2 - n) * ball_integral(V, d, r) - 1.0

    lo = hi = 1.0
    v = phi(1.0)
    if v < 0.0:
        for _ in range(200):
            hi *= 2.0
            if phi(hi) > 0.0:
                break
        else:
            raise RuntimeError("failed to bracket the critical radius")
        lo = hi / 2.0
    elif v > 0.0:
        for _ in range(200):
            lo /= 2.0
            if phi(lo) < 0.0:
                break
        else:
            raise RuntimeError("failed to bracket the critical radius")
        hi = lo * 2.0
    else:
        return 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tolerance * max(1.0, lo):
            break
    return 0.5 * (lo + hi)


@dataclass
class CriticalRadiusField:
    """Cached evaluator x -> rho(x) for a fixed potential.

    The cache is populated before any parallel read; evaluation itself is
    pure.  ``unbounded`` is True exactly for V = 0.
    """

    potential: PotentialDescriptor
    tolerance: float = 1e-12
    cache: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def unbounded(self) -> bool:
        return self.potential.is_zero

    def rho(self, x):
        if self.unbounded:
            return UNBOUNDED
        d = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
        key = round(d, 14)
        if key not in self.cache:
            value = critical_radius(self.potential, d, self.tolerance)
            rng = self.potential.table_range
            if rng is not None and value > rng:
                self.warnings.append(
                    f"critical radius {value:.6g} at |x|={d:.6g} exceeds the "
                    f"tabulated range {rng:.6g} (constant extrapolation used)")
            self.cache[key] = value
        return self.cache[key]

    def weight(self, radii, alpha: float):
        """rho(x)^(-alpha) on an array of |x|; 0 when rho is unbounded."""
        radii = np.asarray(radii, dtype=float)
        if self.unbounded:
            return np.zeros_like(radii)
        flat = radii.ravel()
        out = np.array([self.rho(d) ** (-alpha) for d in flat])
        return out.reshape(radii.shape)


def rho_comparison_check(V: PotentialDescriptor, pairs,
                         k0_grid=None) -> dict:
    """Fit the two-sided critical-radius comparison constants.

    Searches k0 >= 1 minimizing the constant C for which, on every sampled
    pair (x, z),

        C^-1 rho(x) (1 + |x-z|/rho(x))^-k0
            <= rho(z) <= C rho(x) (1 + |x-z|/rho(x))^(k0/(1+k0)).

    Returns the fitted (C, k0) and any violating pairs at that fit (none,
    unless C is infinite).
    """
    if V.is_zero:
        return {"C": 1.0, "k0": 1.0, "violations": [],
                "note": "zero potential: both sides unbounded, trivially "
                        "satisfied"}
    if k0_grid is None:
        k0_grid = np.linspace(1.0, 8.0, 141)
    fieldr = CriticalRadiusField(V)
    data = []
    for x, z in pairs:
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        za = np.atleast_1d(np.asarray(z, dtype=float))
        rx, rz = fieldr.rho(xa), fieldr.rho(za)
        data.append((float(np.linalg.norm(xa - za)), rx, rz))
    best = None
    for k0 in k0_grid:
        c_needed = 1.0
        for dist, rx, rz in data:
            bracket = 1.0 + dist / rx
            c_needed = max(c_needed,
                           rx * bracket ** -k0 / rz,
                           rz / (rx * bracket ** (k0 / (1.0 + k0))))
        if best is None or c_needed < best[0]:
            best = (c_needed, float(k0))
    C, k0 = best
    violations = []
    for dist, rx, rz in data:
        bracket = 1.0 + dist / rx
        lo = rx * bracket ** -k0 / C
        hi = C * rx * bracket ** (k0 / (1.0 + k0))
        if not (lo <= rz * (1 + 1e-8) and rz <= hi * (1 + 1e-8)):
            violations.append((dist, rx, rz))
    return {"C": float(C), "k0": k0, "violations": violations}


def potential_smoothing_check(V: PotentialDescriptor, x, y_samples) -> dict:
    """Check Gaussian smoothing of V against y^-1 (sqrt(y)/rho)^(2-n/q).

    The majorant is the unit Gaussian profile, so the left side is the
    classical heat smoothing of V at time y.  Returns the fitted constant,
    the worst ratio, and the fitted log-log slope of the left side.
    """
    d = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    n = V.dimension
    if V.is_zero:
        return {"C": 0.0, "worst_ratio": 0.0, "slope": None,
                "samples": [(float(y), 0.0) for y in y_samples]}
    rho = critical_radius(V, d)
    lhs, kept = [], []
    for y in y_samples:
        y = float(y)
        if y > rho ** 2 * (1 + 1e-12):
            raise ValueError(f"sample y={y:.6g} exceeds rho(x)^2="
                             f"{rho ** 2:.6g}")
        umax = d + 30.0 * np.sqrt(y)
        nodes, weights = _gl_panels(0.0, umax)
        g = V.radial(nodes)
        if n == 1:
            kern = (np.exp(-(d - nodes) ** 2 / (4 * y))
                    + np.exp(-(d + nodes) ** 2 / (4 * y)))
            val = (4 * np.pi * y) ** -0.5 * np.sum(weights * g * kern)
        elif n == 3:
            if d == 0.0:
                kern = 4 * np.pi * nodes ** 2 * np.exp(-nodes ** 2 / (4 * y))
            else:
                # sphere-averaged Gaussian, written overflow-free
                kern = (4 * np.pi * nodes * y / d) * (
                    np.exp(-(d - nodes) ** 2 / (4 * y))
                    - np.exp(-(d + nodes) ** 2 / (4 * y)))
            val = (4 * np.pi * y) ** -1.5 * np.sum(weights * g * kern)
        else:
            raise NotImplementedError("dimensions 1 and 3 only")
        lhs.append(float(val))
        kept.append(y)
    nq = 0.0 if V.rh_exponent == "all" else n / float(V.rh_exponent)
    ys = np.asarray(kept)
    bound_shape = (np.sqrt(ys) / rho) ** (2.0 - nq) / ys
    ratios = np.asarray(lhs) / bound_shape
    slope = None
    if len(ys) >= 2 and min(lhs) > 0:
        slope = float(np.polyfit(np.log(ys), np.log(lhs), 1)[0])
    return {"C": float(np.max(ratios)), "worst_ratio": float(np.max(ratios)),
            "slope": slope, "samples": list(zip(kept, lhs)),
            "theory_flag": None if n >= 3 else
            "reverse Holder theory assumes n >= 3; n = 1 run is desk-scale"}
