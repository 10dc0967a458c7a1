"""Seminorms, scaling-exponent fits and the space-equivalence verdicts.

A function belongs to the smoothness class of order alpha in three
observable ways on a finite grid:

* pointwise: the Zygmund seminorm N_alpha stays bounded under grid
  refinement (together with the critical-radius weighted sup);
* heat: ||d^k/dy^k W_y f||_inf decays like y^{-k+alpha/2} with
  k = floor(alpha/2)+1;
* Poisson: ||d^k/dy^k P_y f||_inf decays like y^{-k+alpha} with
  k = floor(alpha)+1.

The fitted log-log slope over a dyadic ladder is the observable
surrogate for each seminorm's finiteness; the three legs must agree for
a PASS verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .functions import ProfileFunction
from .grids import (GridFunction, first_difference_sup, second_difference_sup,
                    sup_norm)
from .heat import SemigroupEngine
from .poisson import _subordinate_rows, _validity_window, poisson_size_norm

__all__ = ["SmoothnessParams", "ScalingFit", "SeminormReport",
           "weighted_size", "zygmund_seminorm", "first_difference_seminorm",
           "classical_weighted_size", "heat_scaling_fit",
           "poisson_scaling_fit", "verify_space_equivalence",
           "derivative_transfer_check"]

HEAT_SLOPE_TOL = 0.05
POISSON_SLOPE_TOL = 0.1
REFINEMENT_IN_RATIO = 1.2     # N_alpha growth below this: finite seminorm
REFINEMENT_OUT_RATIO = 1.3    # above this: divergence under refinement
_ZERO_FLOOR = 1e-12


@dataclass(frozen=True)
class SmoothnessParams:
    """Order alpha with its heat and Poisson derivative orders."""

    alpha: float
    dimension: int = 1
    rh_exponent: object = "all"   # "all" or finite q > n/2

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def k_heat(self) -> int:
        return int(np.floor(self.alpha / 2.0)) + 1

    @property
    def k_poisson(self) -> int:
        return int(np.floor(self.alpha)) + 1

    @property
    def alpha_max(self) -> float:
        if self.rh_exponent == "all":
            return 2.0
        return 2.0 - self.dimension / float(self.rh_exponent)

    @property
    def admissible(self) -> bool:
        return self.alpha <= self.alpha_max + 1e-12


@dataclass
class ScalingFit:
    """Least-squares line through (log y, log sup-norm) on a dyadic ladder."""

    slope: float | None
    intercept: float | None
    residual: float
    window: tuple
    n_samples: int
    clipped: bool
    status: str                      # "ok" or "infinitely smooth"
    y: list = field(default_factory=list)
    sup_norms: list = field(default_factory=list)
    seminorm_estimate: float | None = None

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "residual": self.residual,
                "window": [self.window[0], self.window[1]],
                "n_samples": self.n_samples, "clipped": self.clipped,
                "status": self.status, "y": list(self.y),
                "sup_norms": list(self.sup_norms),
                "seminorm_estimate": self.seminorm_estimate}


def weighted_size(f: GridFunction, alpha: float, rho_field) -> dict:
    """sup |rho(x)^-alpha f(x)|; zero by convention when rho is infinite."""
    if rho_field.unbounded:
        return {"value": 0.0, "status": "rho unbounded"}
    radii = f.grid.radii()
    w = rho_field.weight(radii, alpha)
    return {"value": sup_norm(f, weight=w), "status": "ok"}


def zygmund_seminorm(f: GridFunction, alpha: float) -> float:
    """sup |f(x+z)+f(x-z)-2f(x)| / |z|^alpha over on-grid pairs."""
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    return second_difference_sup(f, alpha)


def first_difference_seminorm(f: GridFunction, alpha: float,
                              max_shift=None) -> float:
    """sup |f(x-z)-f(x)| / |z|^alpha over on-grid pairs, alpha in (0, 1].

    The classical Lipschitz seminorm for alpha < 1; alpha = 1 is admitted
    to probe the boundary where the Zygmund class is strictly larger.
    """
    return first_difference_sup(f, alpha, max_shift=max_shift)


def classical_weighted_size(f: GridFunction, alpha: float) -> float:
    """sup |(1+|x|)^-alpha f(x)|: the classical growth-weighted size."""
    return sup_norm(f, weight=lambda r: (1.0 + r) ** -alpha)


def _dyadic_ladder(y_lo: float, y_hi: float, n_target: int = 8):
    ys = [y_hi / 2.0 ** j for j in range(n_target)]
    ys = [y for y in ys if y >= y_lo * (1.0 - 1e-12)]
    return ys[::-1]


def _fit(ys, sups, k: int, alpha, exponent_at_alpha):
    if max(sups) <= _ZERO_FLOOR:
        return ScalingFit(None, None, 0.0, (min(ys), max(ys)), len(ys),
                          False, "infinitely smooth", list(ys), list(sups))
    logy, logs = np.log(ys), np.log(sups)
    if len(ys) < 2:
        slope, intercept = 0.0, float(logs[0])
    else:
        design = np.column_stack([logy, np.ones_like(logy)])
        (slope, intercept), *_ = np.linalg.lstsq(design, logs, rcond=None)
    residual = float(np.max(np.abs(logs - (slope * logy + intercept))))
    clipped = False
    if slope < -k or slope > 0.0:
        slope = float(np.clip(slope, -k, 0.0))
        clipped = True
    est = None
    if alpha is not None:
        est = float(max(s * y ** (k - exponent_at_alpha(alpha))
                        for y, s in zip(ys, sups)))
    return ScalingFit(float(slope), float(intercept), residual,
                      (min(ys), max(ys)), len(ys), clipped, "ok",
                      list(ys), list(sups), est)


def heat_scaling_fit(engine: SemigroupEngine, f: GridFunction, k: int,
                     window=None, alpha=None,
                     fit_radius=None) -> ScalingFit:
    """Fit log ||d^k/dy^k W_y f||_inf against log y on a dyadic ladder.

    The seminorm estimate (when alpha is given) is the max over samples
    of y^{k - alpha/2} ||d^k/dy^k W_y f||_inf.  ``fit_radius`` restricts
    the sup to |x| <= fit_radius (default R/2): the scaling exponent of
    a localized singularity is cleanest measured near it, away from the
    O(1) background that support edges and the potential contribute.
    """
    y_lo, y_hi = engine.reliable_window
    if window is not None:
        y_lo, y_hi = max(y_lo, window[0]), min(y_hi, window[1])
    else:
        # cap so the confining regimes' e^{-lambda y} decay does not
        # contaminate the power-law window
        y_hi = min(y_hi, 0.4)
    if fit_radius is None:
        fit_radius = engine.grid.extent / 2.0
    ys = _dyadic_ladder(y_lo, y_hi)
    if engine.regime == "gaussian":
        interior = np.abs(engine.grid.axis) <= fit_radius
        sups = [float(np.max(np.abs(engine.apply(f, y, k=k).values[interior])))
                for y in ys]
    else:
        # confining regimes: only the kernel rows inside the fit radius
        # are needed for the sup, never the full matrix
        idx = np.flatnonzero(np.abs(engine.grid.axis) <= fit_radius)
        wf = engine.grid.trapezoid_weights_1d() * f.values
        sups = [float(np.max(np.abs(engine.kernel_rows(y, idx, k=k) @ wf)))
                for y in ys]
    return _fit(ys, sups, k, alpha, lambda a: a / 2.0)


def poisson_scaling_fit(engine: SemigroupEngine, f: GridFunction, k: int,
                        window=None, alpha=None,
                        fit_radius=None) -> ScalingFit:
    """Fit log ||d^k/dy^k P_y f||_inf against log y on a dyadic ladder.

    The sup is restricted to |x| <= fit_radius and evaluated through the
    row-restricted subordination path, so confining regimes never build
    full kernel matrices for the ladder.
    """
    y_lo, y_hi = _validity_window(engine)
    if window is not None:
        y_lo, y_hi = max(y_lo, window[0]), min(y_hi, window[1])
    else:
        y_hi = min(y_hi, (engine.grid.extent / 4.0) ** 2, 4.0)
    if fit_radius is None:
        fit_radius = engine.grid.extent / 2.0
    interior = np.flatnonzero(np.abs(engine.grid.axis) <= fit_radius)
    ys = _dyadic_ladder(y_lo, y_hi)
    sups = [float(np.max(np.abs(_subordinate_rows(engine, f, y, k, interior))))
            for y in ys]
    return _fit(ys, sups, k, alpha, lambda a: float(a))


def _three_valued(margin: float, tol: float) -> str:
    if margin >= -tol:
        return "in"
    if margin <= -2.0 * tol:
        return "out"
    return "borderline"


@dataclass
class SeminormReport:
    """All seminorms and fits of one (engine, function, alpha) experiment."""

    alpha: float
    M_L_alpha: float | None
    N_alpha: float | None
    M_tilde_alpha: float | None
    M_P: float | None
    first_diff_lipschitz: float | None
    heat_fit: ScalingFit | None
    poisson_fit: ScalingFit | None
    legs: dict
    verdict: str

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "M_L_alpha": self.M_L_alpha,
                "N_alpha": self.N_alpha,
                "M_tilde_alpha": self.M_tilde_alpha, "M_P": self.M_P,
                "first_diff_lipschitz": self.first_diff_lipschitz,
                "heat_fit": self.heat_fit.as_dict() if self.heat_fit else None,
                "poisson_fit": (self.poisson_fit.as_dict()
                                if self.poisson_fit else None),
                "legs": dict(self.legs), "verdict": self.verdict}


def verify_space_equivalence(engine: SemigroupEngine, profile,
                             alpha: float, heat_window=None,
                             poisson_window=None, fit_radius=None,
                             heat_fit: ScalingFit | None = None,
                             poisson_fit: ScalingFit | None = None
                             ) -> SeminormReport:
    """Three-legged membership test at order alpha with a joint verdict.

    ``profile`` is a ProfileFunction (so the pointwise leg can resample
    on a refined grid) or a GridFunction (pointwise leg then skipped).
    PASS iff all legs agree the function is in the class, FAIL iff all
    agree it is not, INDETERMINATE otherwise.  The window and fit-radius
    arguments tune the two semigroup legs the same way as the fit
    functions themselves.  ``heat_fit``/``poisson_fit`` inject fits
    computed beforehand (possibly on a finer grid of the same box) for
    the matching derivative orders; the verdict logic is unchanged.
    """
    params = SmoothnessParams(alpha, engine.grid.dimension,
                              engine.potential.rh_exponent)
    if not params.admissible:
        raise ValueError(
            f"alpha={alpha:g} outside the admissible range (0, "
            f"{params.alpha_max:g}] for this potential class")
    if isinstance(profile, ProfileFunction):
        f = profile.sample(engine.grid)
        f_fine = profile.sample(engine.grid.refined())
    else:
        f, f_fine = profile, None

    n_alpha = zygmund_seminorm(f, alpha)
    m_l = weighted_size(f, alpha, engine.rho_field)["value"] + n_alpha
    m_tilde = classical_weighted_size(f, alpha)
    m_p = poisson_size_norm(f)

    legs = {}
    if f_fine is None:
        legs["pointwise"] = "borderline"
    elif n_alpha <= _ZERO_FLOOR:
        legs["pointwise"] = "in"
    else:
        ratio = zygmund_seminorm(f_fine, alpha) / n_alpha
        legs["pointwise"] = ("in" if ratio <= REFINEMENT_IN_RATIO
                             else "out" if ratio >= REFINEMENT_OUT_RATIO
                             else "borderline")

    hf = heat_fit
    if hf is None:
        hf = heat_scaling_fit(engine, f, params.k_heat, window=heat_window,
                              alpha=alpha, fit_radius=fit_radius)
    if hf.status == "infinitely smooth":
        legs["heat"] = "in"
    else:
        legs["heat"] = _three_valued(
            hf.slope - (-params.k_heat + alpha / 2.0), HEAT_SLOPE_TOL)

    if m_p["diverges"]:
        legs["poisson"] = "not-applicable"
        pf = None
    else:
        pf = poisson_fit
        if pf is None:
            pf = poisson_scaling_fit(engine, f, params.k_poisson,
                                     window=poisson_window, alpha=alpha,
                                     fit_radius=fit_radius)
        if pf.status == "infinitely smooth":
            legs["poisson"] = "in"
        else:
            legs["poisson"] = _three_valued(
                pf.slope - (-params.k_poisson + alpha), POISSON_SLOPE_TOL)

    active = [v for v in legs.values() if v != "not-applicable"]
    if all(v == "in" for v in active):
        verdict = "PASS"
    elif all(v == "out" for v in active):
        verdict = "FAIL"
    elif not active:
        verdict = "NOT-APPLICABLE"
    else:
        verdict = "INDETERMINATE"
    fd = (first_difference_seminorm(f, alpha) if 0.0 < alpha <= 1.0
          else None)
    return SeminormReport(alpha, m_l, n_alpha, m_tilde,
                          None if m_p["diverges"] else m_p["value"],
                          fd, hf, pf, legs, verdict)


def derivative_transfer_check(engine: SemigroupEngine, f: GridFunction,
                              alpha: float) -> dict:
    """Heat fit of the centered x-derivative of f at level alpha - 1.

    For f of class alpha in (1, 2), the derivative should fit the class
    alpha - 1: heat slope -k + (alpha-1)/2 with k = floor((alpha-1)/2)+1.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    h = f.grid.spacing
    deriv = np.gradient(f.values, h, edge_order=2)
    df = GridFunction(f.grid, deriv, max(f.growth_exponent - 1.0, 0.0))
    params = SmoothnessParams(alpha - 1.0, engine.grid.dimension,
                              engine.potential.rh_exponent)
    fit = heat_scaling_fit(engine, df, params.k_heat, alpha=alpha - 1.0)
    predicted = -params.k_heat + (alpha - 1.0) / 2.0
    if fit.status == "infinitely smooth":
        return {"fit": fit, "predicted_slope": predicted, "passes": True}
    return {"fit": fit, "predicted_slope": predicted,
            "passes": bool(abs(fit.slope - predicted) <= 2.0 * POISSON_SLOPE_TOL
                           or fit.slope >= predicted - POISSON_SLOPE_TOL)}
