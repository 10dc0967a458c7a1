"""Operator calculus: eigen oracles, divergence gates, smoothness shifts."""

import numpy as np
import pytest

from semilip.functions import builtin
from semilip.grids import Grid, GridFunction
from semilip.heat import SemigroupEngine
from semilip.operators import (DivergenceError, MultiplierSymbol,
                               OperatorSpec, apply_operator,
                               node_doubling_check, regularity_shift_check,
                               spatial_derivative)


# -- specs and symbols -----------------------------------------------------

def test_multiplier_symbol_validation():
    with pytest.raises(ValueError):
        MultiplierSymbol("mystery")
    with pytest.raises(ValueError):
        MultiplierSymbol("indicator")                    # missing threshold
    with pytest.raises(ValueError):
        MultiplierSymbol("table", table=((0.0, 1.0), (1.0,)))
    with pytest.raises(ValueError):
        MultiplierSymbol("table", table=((1.0, 0.5), (1.0, 2.0)))


def test_multiplier_symbol_evaluation():
    const = MultiplierSymbol("const", value=2.0)
    assert np.all(const(np.array([0.0, 5.0])) == 2.0)
    ind = MultiplierSymbol("indicator", value=1.0, threshold=2.0)
    assert np.array_equal(ind(np.array([1.0, 3.0])), [1.0, 0.0])
    assert ind.sup == 1.0 and ind.breakpoints == [2.0]
    tab = MultiplierSymbol("table", table=((0.0, 1.0, 2.0), (0.0, 1.0, 0.0)))
    assert tab(np.array([0.5]))[0] == pytest.approx(0.5)
    assert tab.sup == 1.0


def test_operator_spec_validation():
    with pytest.raises(ValueError):
        OperatorSpec("mystery")
    with pytest.raises(ValueError):
        OperatorSpec("bessel")                           # missing beta
    with pytest.raises(ValueError):
        OperatorSpec("frac_laplacian", beta=-1.0)
    with pytest.raises(ValueError):
        OperatorSpec("laplace_multiplier")               # missing symbol


def test_order_m_and_alpha_shift():
    assert OperatorSpec("frac_laplacian", beta=1.0).order_m == 1
    assert OperatorSpec("frac_laplacian", beta=2.5).order_m == 2
    assert OperatorSpec("bessel", beta=1.0).alpha_shift(0.5) == 1.5
    assert OperatorSpec("frac_integral", beta=1.5).alpha_shift(0.5) == 2.0
    assert OperatorSpec("frac_laplacian", beta=0.5).alpha_shift(1.5) == 1.0
    assert OperatorSpec("riesz_calderon").alpha_shift(1.2) == 1.2


# -- eigenfunction oracles -------------------------------------------------

def _oracles():
    ind = MultiplierSymbol("indicator", value=1.0, threshold=2.0)
    return [
        (OperatorSpec("bessel", beta=1.0), lambda lam: (1.0 + lam) ** -0.5),
        (OperatorSpec("frac_integral", beta=1.5), lambda lam: lam ** -0.75),
        (OperatorSpec("frac_laplacian", beta=1.0), lambda lam: lam ** 0.5),
        (OperatorSpec("laplace_multiplier", symbol=ind),
         lambda lam: 1.0 - np.exp(-2.0 * lam)),
    ]


@pytest.mark.parametrize("case", range(4))
@pytest.mark.parametrize("k", [0, 1])
def test_eigenfunction_oracles(mehler513, case, k):
    spec, symbol = _oracles()[case]
    hk = builtin(f"hermite-h{k}").sample(mehler513.grid)
    lam = 2.0 * k + 1.0
    out = apply_operator(mehler513, spec, hk)
    target = symbol(lam) * hk.values
    rel = np.max(np.abs(out.values - target)) / np.max(np.abs(target))
    assert rel < 1e-4


def test_constant_multiplier_is_exact(mehler513):
    spec = OperatorSpec("laplace_multiplier",
                        symbol=MultiplierSymbol("const", value=3.0))
    h1 = builtin("hermite-h1").sample(mehler513.grid)
    out = apply_operator(mehler513, spec, h1)
    assert np.max(np.abs(out.values - 3.0 * h1.values)) < 1e-10


def test_riesz_transform_oracles(mehler513):
    # d/dx + x maps h0 to -sqrt(2) h1; L^{-1/2} divides by sqrt(lambda_1)
    h0 = builtin("hermite-h0").sample(mehler513.grid)
    h1 = builtin("hermite-h1").sample(mehler513.grid)
    cal = apply_operator(mehler513, OperatorSpec("riesz_calderon"), h0)
    assert np.max(np.abs(cal.values + h1.values / np.sqrt(2.0))) < 1e-6
    adj = apply_operator(mehler513, OperatorSpec("riesz_adjoint"), h0)
    assert np.max(np.abs(adj.values + h1.values / np.sqrt(6.0))) < 1e-6


# -- divergence gates ------------------------------------------------------

def test_fractional_integral_diverges_without_spectral_gap(gaussian513):
    one = builtin("const:1").sample(gaussian513.grid)
    with pytest.raises(DivergenceError):
        apply_operator(gaussian513, OperatorSpec("frac_integral", beta=1.0),
                       one)


def test_fractional_laplacian_needs_enough_smoothness(mehler513):
    f = builtin("abs-pow:1.2").sample(mehler513.grid)
    with pytest.raises(DivergenceError):
        apply_operator(mehler513, OperatorSpec("frac_laplacian", beta=2.5), f)


# -- quadrature convergence ------------------------------------------------

@pytest.mark.parametrize("spec,profile", [
    (OperatorSpec("bessel", beta=1.0), "abs-pow:1.2"),
    (OperatorSpec("frac_integral", beta=1.5), "abs-pow:1.2"),
    (OperatorSpec("frac_laplacian", beta=1.0), "abs-pow:1.2"),
    (OperatorSpec("frac_laplacian", beta=2.5), "hermite-h2"),
    (OperatorSpec("riesz_calderon"), "abs-pow:1.2"),
    (OperatorSpec("riesz_adjoint"), "abs-pow:1.2"),
    (OperatorSpec("laplace_multiplier",
                  symbol=MultiplierSymbol("indicator", value=1.0,
                                          threshold=1.0)), "abs-pow:1.2"),
])
def test_node_doubling_converges(mehler513, spec, profile):
    f = builtin(profile).sample(mehler513.grid)
    out = node_doubling_check(mehler513, spec, f)
    assert out["passes"], out["delta"]


def test_composition_inverts(mehler513):
    # L^{-beta/2} after L^{beta/2} returns the original at beta = 1
    f = builtin("abs-pow:1.2").sample(mehler513.grid)
    rough = apply_operator(mehler513, OperatorSpec("frac_laplacian", beta=1.0),
                           f)
    back = apply_operator(mehler513, OperatorSpec("frac_integral", beta=1.0),
                          rough)
    assert np.max(np.abs(back.values - f.values)) < 1e-3


# -- auxiliary derivative --------------------------------------------------

def test_spatial_derivative_of_sine():
    g = Grid(1, 8.0, 1025)
    f = GridFunction(g, np.sin(g.axis))
    d = spatial_derivative(f)
    interior = np.abs(g.axis) < 7.0
    assert np.max(np.abs((d.values - np.cos(g.axis))[interior])) < 1e-6


# -- smoothness shift ------------------------------------------------------

def test_shift_check_rejects_nonpositive_output_class(mehler513):
    f = builtin("abs-pow:1.2").sample(mehler513.grid)
    with pytest.raises(ValueError):
        regularity_shift_check(mehler513, OperatorSpec("frac_laplacian",
                                                       beta=1.5),
                               f, 1.2)
