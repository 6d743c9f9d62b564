import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from congsiegel.arith import zeta_N
from congsiegel.lattice import Annulus, Basis, CongruenceCondition, Disk, Rect, list_congruence_classes
from congsiegel.moments import (
    Indicator,
    cone_first_moment_mc,
    cone_kernel_mc,
    cone_kernel_quad,
    cone_second_moment_rhs,
    eta_integral,
    eta_integral_disk_closed,
    eta_integral_slab_mc,
    first_moment_mc,
    first_moment_theory,
    mc_values,
    measure_constants,
    second_moment_coefficient,
    second_moment_mc,
    second_moment_rhs,
    siegel_value,
    z_check,
)
from congsiegel.randlat import ConeSample, LatticeSample

S10 = CongruenceCondition((1, 0), 2)
S11 = CongruenceCondition((1, 1), 2)


def test_measure_constants():
    c1, c2, c3 = (measure_constants(N) for N in (1, 2, 3))
    assert c1.index == 1 and c1.nu_to_eta == pytest.approx(math.pi**2 / 6)
    assert c2.index == 6 and c2.nu_to_eta == pytest.approx(math.pi**2)
    assert c3.index == 24 and c3.nu_to_eta == pytest.approx(27 * 4 * math.pi**2 / 27)


def test_siegel_value_identity():
    base = LatticeSample(Basis.identity(), ((1, 0), (0, 1)))
    assert siegel_value(base, S10, Indicator(Disk(2.5))) == 6
    assert siegel_value(ConeSample(0.25, base), S10, Indicator(Disk(1.25))) == 6
    assert siegel_value(base, S10, Indicator(Rect(1, 0, 0, 1))) == 0
    with pytest.raises(ValueError):
        siegel_value(base, S10, Disk(1), t=0)


def test_siegel_value_uses_twisted_class():
    # u = [[1,1],[0,1]] sends the class of (1,0) mod 2 to itself and (0,1) to (1,1)
    base = LatticeSample(Basis.identity(), ((1, 1), (0, 1)))
    assert siegel_value(base, CongruenceCondition((0, 1), 2), Disk(1.5)) == 4  # (+-1, +-1)


def test_first_moment_theory_values():
    assert first_moment_theory(1, CongruenceCondition((1, 0), 1), Disk(5)) == pytest.approx(25 * math.pi / (math.pi**2 / 6))
    assert first_moment_theory(2, S10, Disk(5)) == pytest.approx(50 / math.pi)
    assert first_moment_theory(3, CongruenceCondition((1, 0), 3), Rect(0, 4, 0, 4)) == pytest.approx(
        16 / (zeta_N(3).value * 9))


@pytest.mark.parametrize("N", [2, 3, 5])
def test_class_sum_consistency(N):
    A = Disk(2)
    total = sum(first_moment_theory(N, s, A) for s in list_congruence_classes(N))
    assert total == pytest.approx(region_area_disk(2) / (math.pi**2 / 6), rel=1e-12)


def region_area_disk(R):
    return math.pi * R * R


def test_first_moment_mc_brackets_theory():
    est = first_moment_mc(2, S10, Disk(5), 50_000, seed=1)
    assert z_check("f", 50 / math.pi, est).passed
    assert est.samples == 50_000 and est.stderr > 0


def test_empty_region_gives_zero():
    est = first_moment_mc(2, S10, Rect(1, 0, 0, 1), 200, seed=1)
    assert est.mean == 0 and est.stderr == 0
    assert second_moment_rhs(2, S11, Rect(1, 0, 0, 1)).value == 0


def test_tiny_region_mean_near_zero():
    est = second_moment_mc(2, S11, Disk(0.1), 5_000, seed=3)
    rhs = second_moment_rhs(2, S11, Disk(0.1)).value  # diagonal only, about 0.0127
    assert est.mean < 0.05 and abs(est.mean - rhs) <= 4 * est.stderr


def test_mc_requires_samples():
    with pytest.raises(ValueError):
        first_moment_mc(2, S10, Disk(1), 50, seed=0)


def test_class_equidistribution():
    a = first_moment_mc(3, CongruenceCondition((1, 0), 3), Disk(3), 40_000, seed=5)
    b = first_moment_mc(3, CongruenceCondition((1, 2), 3), Disk(3), 40_000, seed=6)
    assert abs(a.mean - b.mean) <= 4 * math.hypot(a.stderr, b.stderr)


def test_flat_and_cone_first_moments_agree():
    a = first_moment_mc(2, S10, Disk(3), 40_000, seed=8)
    b = cone_first_moment_mc(2, S10, Disk(3), 40_000, seed=9)
    assert abs(a.mean - b.mean) <= 4 * math.hypot(a.stderr, b.stderr)


def test_scaling_covariance():
    a = first_moment_mc(2, S10, Disk(1), 40_000, seed=10)
    b = first_moment_mc(2, S10, Disk(2), 40_000, seed=11)
    assert abs(b.mean - 4 * a.mean) <= 4 * math.hypot(b.stderr, 4 * a.stderr)


def test_worker_count_does_not_change_values():
    one = mc_values("cone-second", 2, S11, Disk(2), 10_000, seed=4, workers=1)
    many = mc_values("cone-second", 2, S11, Disk(2), 10_000, seed=4, workers=4)
    assert one.tobytes() == many.tobytes()


@pytest.mark.parametrize("n", [1.0, 2.0, 4.0, 8.5, -3.0])
def test_eta_disk_closed_form(n):
    val, err = eta_integral(Disk(3), n)
    assert val == pytest.approx(eta_integral_disk_closed(3, n), rel=1e-9)


def test_eta_frozen_value():
    # (4 pi / 2)(sqrt(77) - 2 arccos(2/9))
    assert eta_integral(Disk(3), 2)[0] == pytest.approx(38.21155535768, rel=1e-10)


def test_eta_vanishes_beyond_max_det():
    assert eta_integral(Disk(3), 9.5) == (0.0, 0.0)
    assert eta_integral(Rect(0, 2, 0, 1), 2.5) == (0.0, 0.0)
    with pytest.raises(ValueError):
        eta_integral(Disk(1), 0)


@pytest.mark.parametrize("A,n", [(Disk(3), 2), (Rect(-3, 3, -2, 2), 2), (Annulus(1, 3), 4), (Rect(0, 3, -1, 2), -3)])
def test_eta_against_slab_monte_carlo(A, n):
    val, _ = eta_integral(A, n)
    mc, se = eta_integral_slab_mc(A, n, 0.02, 2_000_000, seed=1)
    # slab width adds an O(eps^2) bias, far below the stderr here
    assert abs(val - mc) <= 4 * se + 1e-3 * abs(val)


@settings(max_examples=6)
@given(st.floats(0.5, 2), st.floats(0.1, 2.5))
def test_eta_symmetric_region_even_in_n(R, n):
    A = Rect(-R, R, -R / 2, R / 2)
    assert eta_integral(A, n)[0] == pytest.approx(eta_integral(A, -n)[0], rel=1e-6, abs=1e-9)


def test_second_moment_rhs_small_disk():
    # n_max = 1 < 2: only the diagonal survives, (pi + pi) / (zeta_2(2) 4) = 4 / pi
    rhs = second_moment_rhs(2, S11, Disk(1))
    assert rhs.breakdown["kernel"] == 0
    assert rhs.value == pytest.approx(4 / math.pi)


def test_second_moment_rhs_truncation_and_coefficients():
    rhs = second_moment_rhs(2, S11, Disk(3))
    assert set(rhs.eta_terms) == {2, -2, 4, -4, 6, -6, 8, -8}
    for n in (10, 12, 20):
        assert eta_integral(Disk(3), n)[0] == 0.0
    assert second_moment_coefficient(2, 4, "orbit") == pytest.approx(2 * second_moment_coefficient(2, 4, "stated"))
    with pytest.raises(ValueError):
        second_moment_coefficient(2, 4, "other")


def test_diagonal_without_negation_for_larger_modulus():
    # for N >= 3 the class of v never contains -v
    rhs = second_moment_rhs(3, CongruenceCondition((1, 0), 3), Disk(1))
    assert rhs.value == pytest.approx(math.pi / (zeta_N(3).value * 9))


def test_second_moment_matches_orbit_normalization():
    est = second_moment_mc(2, S11, Disk(3), 60_000, seed=21)
    assert z_check("s", second_moment_rhs(2, S11, Disk(3)).value, est).passed
    assert not z_check("s", second_moment_rhs(2, S11, Disk(3), normalization="stated").value, est).passed


def test_cone_kernel_quadrature_matches_mc():
    q, qerr = cone_kernel_quad(2, Disk(2))
    m, se = cone_kernel_mc(2, Disk(2), 1_000_000, seed=3)
    assert abs(q - m) <= 4 * se + qerr


def test_cone_rhs_variants_differ_by_half_diagonal():
    a = cone_second_moment_rhs(2, S11, Disk(1), half_factor=True, M=20_000, seed=1)
    b = cone_second_moment_rhs(2, S11, Disk(1), half_factor=False, M=20_000, seed=1)
    assert b.value - a.value == pytest.approx(a.breakdown["diagonal"])
    assert a.breakdown["kernel"] > 0
    e = cone_second_moment_rhs(2, S11, Rect(1, 0, 0, 1), M=1000)
    assert e.value == 0
