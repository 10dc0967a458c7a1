"""Potentials: descriptors, ball integrals, critical radius, comparisons."""

import numpy as np
import pytest

from semilip.potentials import (UNBOUNDED, CriticalRadiusField,
                                PotentialDescriptor, ball_integral,
                                ball_volume, critical_radius,
                                load_tabulated_radial,
                                potential_smoothing_check,
                                reverse_holder_estimate, rho_comparison_check)


# -- descriptors -----------------------------------------------------------

def test_descriptor_rejects_bad_parameters():
    with pytest.raises(ValueError):
        PotentialDescriptor("mystery", 1)
    with pytest.raises(ValueError):
        PotentialDescriptor("radial-power", 1)            # missing power
    with pytest.raises(ValueError):
        PotentialDescriptor("radial-power", 1, power=-2.0)
    with pytest.raises(ValueError):
        PotentialDescriptor("hermite", 0)
    with pytest.raises(ValueError):
        PotentialDescriptor("hermite", 3, rh_exponent=1.0)  # q <= n/2
    with pytest.raises(ValueError):
        PotentialDescriptor("tabulated-radial", 1,
                            table=((0.0, 1.0, 0.5), (1.0, 2.0, 3.0)))
    with pytest.raises(ValueError):
        PotentialDescriptor("tabulated-radial", 1,
                            table=((0.0, 1.0), (1.0, -2.0)))


def test_radial_evaluation():
    hermite = PotentialDescriptor("hermite", 1)
    assert np.allclose(hermite.radial([-2.0, 0.0, 3.0]), [4.0, 0.0, 9.0])
    power = PotentialDescriptor("radial-power", 3, power=1.5,
                                coefficient=2.0)
    assert power.radial(4.0) == pytest.approx(16.0)
    zero = PotentialDescriptor("zero", 1)
    assert np.all(zero.radial(np.linspace(0, 5, 11)) == 0.0)


def test_tabulated_radial_interpolates_and_extrapolates():
    table = PotentialDescriptor("tabulated-radial", 1,
                                table=((0.0, 1.0, 2.0), (0.0, 1.0, 4.0)))
    assert table.radial(0.5) == pytest.approx(0.5)
    assert table.radial(1.5) == pytest.approx(2.5)
    assert table.radial(10.0) == pytest.approx(4.0)   # constant beyond range
    assert table.table_range == 2.0


# -- ball integrals --------------------------------------------------------

def test_ball_volume():
    assert ball_volume(1, 2.0) == pytest.approx(4.0)
    assert ball_volume(3, 1.0) == pytest.approx(4.0 * np.pi / 3.0)


def test_ball_integral_square_potential_1d():
    v = PotentialDescriptor("hermite", 1)
    # int_{-r}^{r} u^2 du = 2 r^3 / 3
    assert ball_integral(v, 0.0, 1.5) == pytest.approx(2.0 * 1.5 ** 3 / 3.0,
                                                       rel=1e-10)


def test_ball_integral_square_potential_3d():
    v = PotentialDescriptor("radial-power", 3, power=2.0)
    # int_{B_r} |x|^2 dx = 4 pi r^5 / 5
    r = 1.3
    assert ball_integral(v, 0.0, r) == pytest.approx(4.0 * np.pi * r ** 5 / 5.0,
                                                     rel=1e-10)


# -- critical radius -------------------------------------------------------

def test_critical_radius_zero_potential_unbounded():
    assert critical_radius(PotentialDescriptor("zero", 1), 0.3) is UNBOUNDED


def test_critical_radius_square_potential_3d():
    # r^{-1} int_{B_r} |x|^2 = (4 pi / 5) r^4 = 1  =>  r = (5/(4 pi))^{1/4}
    rho = critical_radius(PotentialDescriptor("radial-power", 3, power=2.0),
                          0.0)
    assert rho == pytest.approx((5.0 / (4.0 * np.pi)) ** 0.25, abs=1e-10)


def test_critical_radius_square_potential_1d():
    # r * (2 r^3 / 3) = 1  =>  r = (3/2)^{1/4}
    rho = critical_radius(PotentialDescriptor("hermite", 1), 0.0)
    assert rho == pytest.approx(1.5 ** 0.25, abs=1e-10)


def test_critical_radius_constant_potential_1d():
    # r * (2 r c) = 1 with c = 1  =>  r = 2^{-1/2}
    v = PotentialDescriptor("radial-power", 1, power=1e-12)
    # nearly-constant power approximates V = 1; use an exact constant table
    v = PotentialDescriptor("tabulated-radial", 1,
                            table=((0.0, 100.0), (1.0, 1.0)))
    assert critical_radius(v, 0.0) == pytest.approx(2.0 ** -0.5, abs=1e-8)


def test_critical_radius_decreases_for_growing_potential():
    v = PotentialDescriptor("hermite", 1)
    rhos = [critical_radius(v, x) for x in (0.0, 1.0, 3.0, 8.0)]
    assert all(a > b for a, b in zip(rhos, rhos[1:]))


def test_critical_radius_field_caches_and_weights():
    fieldr = CriticalRadiusField(PotentialDescriptor("hermite", 1))
    assert not fieldr.unbounded
    first = fieldr.rho(2.0)
    assert fieldr.rho(-2.0) == first          # radial: same cached entry
    assert len(fieldr.cache) == 1
    w = fieldr.weight(np.array([0.0, 2.0]), 1.0)
    assert w[1] == pytest.approx(1.0 / first)

    unbounded = CriticalRadiusField(PotentialDescriptor("zero", 1))
    assert unbounded.unbounded
    assert np.all(unbounded.weight(np.array([0.0, 1.0]), 1.0) == 0.0)


# -- two-sided comparison --------------------------------------------------

def test_rho_comparison_zero_potential_trivial():
    out = rho_comparison_check(PotentialDescriptor("zero", 1),
                               [(0.0, 1.0)])
    assert out["C"] == 1.0 and out["violations"] == []


def test_rho_comparison_hermite_no_violations():
    pairs = [(x, z) for x in (0.0, 1.0, 3.0) for z in (0.5, 2.0, 6.0)]
    out = rho_comparison_check(PotentialDescriptor("hermite", 1), pairs)
    assert np.isfinite(out["C"]) and out["C"] >= 1.0
    assert out["k0"] >= 1.0
    assert out["violations"] == []


# -- reverse Holder --------------------------------------------------------

def test_reverse_holder_rejects_small_exponent():
    with pytest.raises(ValueError):
        reverse_holder_estimate(PotentialDescriptor("radial-power", 3,
                                                    power=2.0), 1.0,
                                [((0.0, 0.0, 0.0), 1.0)])


def test_reverse_holder_constant_potential_is_one():
    v = PotentialDescriptor("tabulated-radial", 1,
                            table=((0.0, 50.0), (2.0, 2.0)))
    est = reverse_holder_estimate(v, 2.0, [(0.0, 1.0), (3.0, 2.0)])
    assert est == pytest.approx(1.0, rel=1e-8)


def test_reverse_holder_hermite_finite():
    v = PotentialDescriptor("radial-power", 3, power=2.0)
    est = reverse_holder_estimate(v, 2.0, [((0.0, 0.0, 0.0), 1.0),
                                           ((2.0, 0.0, 0.0), 0.5)])
    assert 1.0 <= est < 10.0


# -- smoothing check -------------------------------------------------------

def test_potential_smoothing_zero_potential():
    out = potential_smoothing_check(PotentialDescriptor("zero", 1), 0.0,
                                    [0.1, 0.2])
    assert out["C"] == 0.0 and out["worst_ratio"] == 0.0


def test_potential_smoothing_hermite_bounded():
    v = PotentialDescriptor("hermite", 1)
    rho = critical_radius(v, 0.0)
    ys = [rho ** 2 / 2.0 ** j for j in range(1, 6)]
    out = potential_smoothing_check(v, 0.0, ys)
    assert np.isfinite(out["C"]) and out["C"] > 0.0
    assert out["theory_flag"] is not None      # n = 1 run is flagged


def test_potential_smoothing_rejects_large_y():
    v = PotentialDescriptor("hermite", 1)
    rho = critical_radius(v, 0.0)
    with pytest.raises(ValueError):
        potential_smoothing_check(v, 0.0, [2.0 * rho ** 2])


# -- tabulated loading -----------------------------------------------------

def test_load_tabulated_radial_round_trip(tmp_path):
    path = tmp_path / "pot.csv"
    radii = np.linspace(0.0, 12.0, 401)
    lines = ["radius,value"] + [f"{r},{r * r}" for r in radii]
    path.write_text("\n".join(lines) + "\n")
    v = load_tabulated_radial(path, 1)
    assert v.kind == "tabulated-radial"
    # interpolated square potential reproduces the hermite critical radius
    rho_tab = critical_radius(v, 0.0)
    rho_exact = critical_radius(PotentialDescriptor("hermite", 1), 0.0)
    assert rho_tab == pytest.approx(rho_exact, rel=1e-3)


def test_load_tabulated_radial_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("r,v\n0.0,0.0\n")
    with pytest.raises(ValueError):
        load_tabulated_radial(path, 1)
