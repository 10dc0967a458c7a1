"""Poisson semigroup P_y = e^{-y sqrt(L)} by subordination to the heat flow.

The subordination identity

    P_y f = int_0^inf (y / (2 sqrt(pi))) e^{-y^2/(4 tau)} tau^{-3/2} W_tau f dtau

is discretized with log-spaced midpoint nodes.  The weight decays
double-exponentially toward tau -> 0 and like tau^{-3/2} toward infinity,
so the truncated quadrature is superalgebraically accurate in the node
spacing and the heavy tail beyond the last node is handled analytically:
W_tau f is modeled there as c0 + c1 tau^{-1/2} (exact for constants and
for the large-time spreading of compactly supported data), and the two
tail moments of the subordination weight have elementary closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .grids import GridFunction, integrate
from .heat import SemigroupEngine

__all__ = ["SubordinationQuadrature", "apply_poisson", "poisson_derivative",
           "poisson_kernel_bound_check", "poisson_size_norm",
           "poisson_vanishing_check", "classical_poisson_convolution"]

MAX_POISSON_DERIVATIVE = 3
# 128 log-midpoint nodes leave a subordinator mass defect below 2e-10
# and match the 256-node output to the last grid-limited digit
_N_NODES = 128
_WINDOW_FACTOR = 400.0
_MASS_TOL = 1e-8


@lru_cache(maxsize=8)
def _weight_lambdas(k: int):
    """k-th y-derivative of the subordination weight g(y, tau)."""
    import sympy as sp
    y, tau = sp.symbols("y tau", positive=True)
    g = y / (2 * sp.sqrt(sp.pi)) * sp.exp(-y ** 2 / (4 * tau)) * tau ** sp.Rational(-3, 2)
    return sp.lambdify((y, tau), sp.diff(g, y, k), modules="numpy")


@lru_cache(maxsize=8)
def _endpoint_lambdas(k: int):
    """d/dl of phi_k(y, l) = e^l d^k g/dy^k (y, e^l), l = log tau.

    Feeds the Euler-Maclaurin endpoint correction of the composite
    midpoint rule: the integrand is cut mid-decay at tau_max, so the
    leading (spacing^2 / 24) (phi'(b) - phi'(a)) term is not negligible
    at the 1e-8 mass tolerance.
    """
    import sympy as sp
    y, tau, l = sp.symbols("y tau l", positive=True, real=True)
    g = y / (2 * sp.sqrt(sp.pi)) * sp.exp(-y ** 2 / (4 * tau)) * tau ** sp.Rational(-3, 2)
    phi = (sp.exp(l) * sp.diff(g, y, k)).subs(tau, sp.exp(l))
    return sp.lambdify((y, l), sp.diff(phi, l), modules="numpy")


@lru_cache(maxsize=8)
def _tail_moment_lambdas(k: int):
    """y-derivatives of the tail moments of g over (T, inf).

    With a = y^2/4:
    I0 = int_T^inf g dtau            = erf(y / (2 sqrt(T)))
    I1 = int_T^inf g tau^-1/2 dtau   = (2/(y sqrt(pi))) (1 - e^{-a/T})
    I2 = int_T^inf g tau^-3/2 dtau   = (y/(2 sqrt(pi))) a^-2 (1 - e^{-a/T}(1 + a/T))
    """
    import sympy as sp
    y, T = sp.symbols("y T", positive=True)
    a = y ** 2 / 4
    i0 = sp.erf(y / (2 * sp.sqrt(T)))
    i1 = 2 / (y * sp.sqrt(sp.pi)) * (1 - sp.exp(-a / T))
    i2 = (y / (2 * sp.sqrt(sp.pi))) / a ** 2 * (1 - sp.exp(-a / T) * (1 + a / T))
    return tuple(sp.lambdify((y, T), sp.diff(expr, y, k),
                             modules=["scipy", "numpy"])
                 for expr in (i0, i1, i2))


@dataclass(frozen=True)
class SubordinationQuadrature:
    """Log-spaced midpoint nodes for the subordination integral at level y."""

    y: float
    n_nodes: int = _N_NODES

    @property
    def tau_min(self) -> float:
        return self.y ** 2 / _WINDOW_FACTOR

    @property
    def tau_max(self) -> float:
        return _WINDOW_FACTOR * max(self.y ** 2, 1.0)

    def nodes_and_weights(self, k: int = 0):
        """(tau_i, w_i) with w_i = dlog tau . tau_i . d^k g/dy^k (y, tau_i)."""
        lo, hi = np.log(self.tau_min), np.log(self.tau_max)
        dl = (hi - lo) / self.n_nodes
        taus = np.exp(lo + (np.arange(self.n_nodes) + 0.5) * dl)
        g = _weight_lambdas(k)
        return taus, dl * taus * g(self.y, taus)

    def endpoint_corrections(self, k: int = 0) -> tuple:
        """(lower, upper) Euler-Maclaurin midpoint corrections times 1.

        The corrected integral is  sum(w_i f_i) + (dl^2/24)(phi'(b) f(b)
        - phi'(a) f(a)) + tail;  the lower term is double-exponentially
        small and returned mostly for the record.
        """
        lo, hi = np.log(self.tau_min), np.log(self.tau_max)
        dl = (hi - lo) / self.n_nodes
        dphi = _endpoint_lambdas(k)
        fac = dl ** 2 / 24.0
        return (fac * float(dphi(self.y, lo)), fac * float(dphi(self.y, hi)))

    def tail_moments(self, k: int = 0) -> tuple:
        """(I0, I1, I2): k-th y-derivatives of the tail moments of g."""
        return tuple(float(f(self.y, self.tau_max))
                     for f in _tail_moment_lambdas(k))

    def mass_error(self) -> float:
        """Defect of total subordinator mass: quadrature + analytic tail - 1.

        The head below tau_min carries mass erfc(y/(2 sqrt(tau_min))) =
        erfc(10), below 1e-40, and is ignored.
        """
        _, w = self.nodes_and_weights(0)
        c_lo, c_hi = self.endpoint_corrections(0)
        return abs(float(np.sum(w)) + (c_hi - c_lo)
                   + self.tail_moments(0)[0] - 1.0)


def _validity_window(engine: SemigroupEngine) -> tuple:
    """y-range where the subordination nodes are resolvable on the grid.

    Below 2h the subordinator puts non-negligible mass on heat times
    tau < h^2 where the kernel is narrower than the grid; above R the
    box no longer carries the kernel.
    """
    return (2.0 * engine.grid.spacing, engine.grid.extent)


def _accumulate(quad: SubordinationQuadrature, k: int, heat_at):
    """Weighted tau-sum of ``heat_at(tau)`` plus tail and endpoint terms.

    ``heat_at`` returns an array (kernel matrix, wall-mass vector, ...)
    representing the heat flow at time tau.  The tail beyond tau_max
    models it as d0 + d1 u + d2 u^3 with u = (tau_max/tau)^{1/2},
    matched at tau_max, tau_max/4 and tau_max/16 (the true large-time
    expansion of the 1D heat action on box data has these powers), and
    the Euler-Maclaurin endpoint term repairs the midpoint cut.
    """
    taus, weights = quad.nodes_and_weights(k)
    acc = weights[0] * heat_at(taus[0])
    for tau, w in zip(taus[1:], weights[1:]):
        acc += w * heat_at(tau)
    T = quad.tau_max
    w1, w2, w4 = heat_at(T), heat_at(T / 4.0), heat_at(T / 16.0)
    vander = np.array([[1.0, 1.0, 1.0],
                       [1.0, 2.0, 8.0],
                       [1.0, 4.0, 64.0]])
    d0, d1, d2 = np.linalg.solve(vander, np.stack(
        [np.asarray(w1, dtype=float).ravel(),
         np.asarray(w2, dtype=float).ravel(),
         np.asarray(w4, dtype=float).ravel()])).reshape((3,) + np.shape(w1))
    i0, i1, i2 = quad.tail_moments(k)
    s = T ** -0.5
    acc += d0 * i0 + d1 * (i1 / s) + d2 * (i2 / s ** 3)
    _, c_hi = quad.endpoint_corrections(k)
    lo, hi = np.log(quad.tau_min), np.log(quad.tau_max)
    dl = (hi - lo) / quad.n_nodes
    phi_hi = T * _weight_lambdas(k)(quad.y, T)
    acc += c_hi * w1 + (dl ** 2 / 24.0) * phi_hi * (w1 - w2) / np.log(4.0)
    return acc


def _gaussian_outside_mass(engine: SemigroupEngine, tau: float) -> np.ndarray:
    """1 - (in-box mass of the classical kernel) at each grid point."""
    from scipy.special import erf
    xs = engine.grid.axis
    R = engine.grid.extent
    return 1.0 - 0.5 * (erf((R - xs) / (2.0 * np.sqrt(tau)))
                        + erf((R + xs) / (2.0 * np.sqrt(tau))))


_operator_cache: dict = {}


def _checked_quadrature(engine: SemigroupEngine,
                        y: float) -> SubordinationQuadrature:
    quad = SubordinationQuadrature(y)
    y_lo, y_hi = _validity_window(engine)
    if not y_lo <= y <= y_hi:
        raise ValueError(f"y={y:.4g} outside the validity window "
                         f"[{y_lo:.4g}, {y_hi:.4g}] of this grid")
    err = quad.mass_error()
    if err > _MASS_TOL:
        raise ValueError(f"subordinator mass defect {err:.2e} exceeds "
                         f"{_MASS_TOL:g} at y={y:.4g}")
    return quad


def subordinated_operator(engine: SemigroupEngine, y: float, k: int = 0):
    """(kernel matrix, wall vector) of d^k/dy^k P_y on the engine's grid.

    The wall vector multiplies the wall average of f in the gaussian
    regime (far-field model of the box truncation); it is None for
    confining potentials.  Cached per engine with a small LRU.
    """
    quad = _checked_quadrature(engine, y)
    key = (id(engine), float(y), k)
    if key in _operator_cache:
        return _operator_cache[key]
    mat = _accumulate(quad, k,
                      lambda tau: engine.kernel_matrix(tau, cache=False))
    wall = None
    if engine.regime == "gaussian":
        wall = _accumulate(quad, k,
                           lambda tau: _gaussian_outside_mass(engine, tau))
    per_engine = sum(1 for kk in _operator_cache if kk[0] == id(engine))
    if per_engine >= 24:
        for kk in [kk for kk in _operator_cache if kk[0] == id(engine)][:4]:
            del _operator_cache[kk]
    _operator_cache[key] = (mat, wall)
    return mat, wall


def _subordinate(engine: SemigroupEngine, f: GridFunction, y: float,
                 k: int) -> GridFunction:
    if engine.regime == "gaussian":
        # the FFT heat path makes per-node vector accumulation cheap;
        # no kernel matrix is ever materialized
        quad = _checked_quadrature(engine, y)
        out = _accumulate(quad, k,
                          lambda tau: engine.apply(f, tau).values)
        return GridFunction(engine.grid, out, f.growth_exponent)
    mat, wall = subordinated_operator(engine, y, k)
    w = engine.grid.trapezoid_weights_1d()
    out = mat @ (w * f.values)
    if wall is not None:
        out = out + 0.5 * (f.values[0] + f.values[-1]) * wall
    return GridFunction(engine.grid, out, f.growth_exponent)


def _subordinate_rows(engine: SemigroupEngine, f: GridFunction, y: float,
                      k: int, indices) -> np.ndarray:
    """d^k/dy^k P_y f at the given output indices only.

    Localized sup-norm evaluation needs a small sub-block of the output,
    so only those kernel rows are built per heat node; the gaussian
    regime keeps its cheaper FFT path and slices afterwards.
    """
    if engine.regime == "gaussian":
        return _subordinate(engine, f, y, k).values[np.asarray(indices)]
    quad = _checked_quadrature(engine, y)
    wf = engine.grid.trapezoid_weights_1d() * f.values
    return _accumulate(quad, k,
                       lambda tau: engine.kernel_rows(tau, indices) @ wf)


def apply_poisson(engine: SemigroupEngine, f: GridFunction,
                  y: float) -> GridFunction:
    """P_y f by subordination quadrature against the heat semigroup."""
    return _subordinate(engine, f, y, 0)


def poisson_derivative(engine: SemigroupEngine, f: GridFunction, y: float,
                       k: int) -> GridFunction:
    """d^k/dy^k P_y f by differentiating the subordination weight in y."""
    if not 1 <= k <= MAX_POISSON_DERIVATIVE:
        raise ValueError(f"k must lie in 1..{MAX_POISSON_DERIVATIVE}")
    return _subordinate(engine, f, y, k)


def poisson_spectral_apply(engine: SemigroupEngine, f: GridFunction,
                           y: float, k: int = 0,
                           n_modes: int = 32) -> GridFunction:
    """(-sqrt(lambda))^k e^{-sqrt(lambda) y} through the eigen-expansion.

    Cross-check path for the subordination quadrature; unavailable for
    the gaussian regime.
    """
    def symbol(lam):
        root = np.sqrt(lam)
        return (-root) ** k * np.exp(-root * y)
    return engine.spectral_symbol_apply(f, symbol, n_modes=n_modes)


def classical_poisson_convolution(f: GridFunction, y: float) -> GridFunction:
    """Classical 1D half-space Poisson integral (1/pi) y/(y^2+t^2) * f.

    Exact-oracle path for V = 0 with compactly supported f.
    """
    if f.grid.dimension != 1:
        raise ValueError("classical Poisson oracle is one-dimensional")
    xs = f.grid.axis
    kernel = (y / np.pi) / (y ** 2 + (xs[:, None] - xs[None, :]) ** 2)
    w = f.grid.trapezoid_weights_1d()
    return GridFunction(f.grid, kernel @ (w * f.values), f.growth_exponent)


def poisson_kernel_bound_check(engine: SemigroupEngine, samples, k: int,
                               N: float) -> dict:
    """Fit the smallest constant in the Poisson kernel bounds

        k = 0:  P_y(x,z)           <= C y D^-(n+1) B^-N
        k >= 1: |d^k/dy^k P_y(x,z)| <= C D^-(n+k)  B^-N

    with D = (|x-z|^2 + y^2)^{1/2} and B = 1 + D/rho(x) + D/rho(z).
    Kernel entries come from subordinating the heat kernel column by
    column.  Passes iff a finite C exists (all ratios <= 1 after fitting).
    """
    n = engine.grid.dimension
    h = engine.grid.spacing
    rows = []
    for x, z, y in samples:
        mat, _ = subordinated_operator(engine, float(y), k)
        i = int(round((x + engine.grid.extent) / h))
        j = int(round((z + engine.grid.extent) / h))
        val = mat[i, j]
        d = np.hypot(x - z, y)
        if engine.rho_field.unbounded:
            bracket = 1.0
        else:
            bracket = (1.0 + d / engine.rho_field.rho(x)
                       + d / engine.rho_field.rho(z))
        envelope = ((y * d ** -(n + 1)) if k == 0 else d ** -(n + k))
        envelope *= bracket ** (-N)
        rows.append((abs(float(val)), envelope))
    C = max(v / e for v, e in rows)
    worst = max(v / (C * e) for v, e in rows) if C > 0 else 0.0
    return {"C": float(C), "N": float(N), "k": int(k),
            "worst_ratio": float(worst),
            "passes": bool(np.isfinite(C) and worst <= 1.0 + 1e-12)}


def _far_field_amplitude(f: GridFunction) -> float:
    """max |f| on the outer quarter shell |x| >= 3R/4 of the box."""
    shell = f.grid.radii() >= 0.75 * f.grid.extent
    return float(np.max(np.abs(f.values[shell])))


def poisson_size_norm(f: GridFunction) -> dict:
    """int |f(x)| / (1+|x|)^{n+1} dx with an analytic out-of-box tail bound.

    The tail uses the growth model |f| <= A (1+|x|)^gamma with the
    amplitude A measured on the outer shell of the box, so compactly
    supported functions get a zero tail.  Flags divergence when the
    modeled integrand fails to decay.
    """
    n = f.grid.dimension
    radii = f.grid.radii()
    quad = integrate(f.with_values(np.abs(f.values) / (1.0 + radii) ** (n + 1)))
    gamma = f.growth_exponent
    amp = _far_field_amplitude(f)
    R = f.grid.extent
    if amp == 0.0:
        return {"value": quad, "tail": 0.0, "diverges": False}
    if gamma >= 1.0:
        # modeled tail integrand (1+r)^{gamma-n-1} r^{n-1} is not integrable
        return {"value": float("inf"), "tail": float("inf"),
                "diverges": True}
    surface = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}[n]
    # bound r^{n-1} <= (1+r)^{n-1} on the tail
    tail = amp * surface * (1.0 + R) ** (gamma - 1.0) / (1.0 - gamma)
    return {"value": quad + tail, "tail": float(tail), "diverges": False}


def poisson_vanishing_check(engine: SemigroupEngine, f: GridFunction,
                            n_steps: int = 6) -> dict:
    """Decay of d^l/dy^l P_y f as y grows, and P_y f -> f as y -> 0.

    The l = 0 large-y limit only holds for decaying data; for functions
    with a nonvanishing far field it is reported as not-applicable.
    """
    y_lo, y_hi = _validity_window(engine)
    interior = np.abs(engine.grid.axis) <= engine.grid.extent / 2.0
    ys = [y_hi / 2.0 ** j for j in range(n_steps)][::-1]
    results = {}
    amp = _far_field_amplitude(f)
    for ell in (0, 1, 2):
        if ell == 0 and amp > 1e-12:
            results[0] = {"status": "not-applicable",
                          "reason": "nonvanishing far field"}
            continue
        sups = []
        for y in ys:
            g = _subordinate(engine, f, y, ell)
            sups.append(float(np.max(np.abs(g.values[interior]))))
        results[ell] = {"status": "ok", "y": ys, "sup_norms": sups,
                        "vanishing": bool(sups[-1] <= 0.5 * sups[0]
                                          or sups[-1] < 1e-10)}
    small = [y_lo * 2.0 ** j for j in range(4)][::-1]
    errs = [float(np.max(np.abs(
        (apply_poisson(engine, f, y).values - f.values)[interior])))
        for y in small]
    return {"large_y": results,
            "small_y": {"y": small, "errors": errs,
                        "converges": bool(errs[-1] <= errs[0])}}
