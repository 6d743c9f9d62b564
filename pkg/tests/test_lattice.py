import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from congsiegel.lattice import (
    Annulus,
    Basis,
    CongruenceCondition,
    Disk,
    KhintchineBox,
    PowerLaw,
    Rect,
    Table,
    enumerate_points,
    in_class,
    is_primitive,
    list_congruence_classes,
    max_abs_det,
    negated_overlap_area,
    parse_region,
    region_area,
    region_from_dict,
    sample_uniform,
)


def brute(g: Basis, A, filt):
    """Scan a box of integer vectors large enough to cover g^-1 A."""
    inv = np.linalg.inv(g.matrix)
    xlo, xhi, ylo, yhi = A.bbox()
    corners = inv @ np.array([[xlo, xlo, xhi, xhi], [ylo, yhi, ylo, yhi]])
    lo = np.floor(corners.min(axis=1)).astype(int) - 1
    hi = np.ceil(corners.max(axis=1)).astype(int) + 1
    n = 0
    for q in range(lo[1], hi[1] + 1):
        for p in range(lo[0], hi[0] + 1):
            if p == 0 and q == 0:
                continue
            x = p * g.a11 + q * g.a12
            y = p * g.a21 + q * g.a22
            if not A.contains(x, y):
                continue
            if filt == "all" or (filt == "primitive" and is_primitive((p, q))) or (
                isinstance(filt, CongruenceCondition) and in_class((p, q), filt)
            ):
                n += 1
    return n


def test_congruence_condition_reduces_and_validates():
    s = CongruenceCondition((3, -1), 2)
    assert s.v0 == (1, 1) and str(s) == "((1,1),2)"
    assert CongruenceCondition.from_dict(s.to_dict()) == s
    with pytest.raises(ValueError):
        CongruenceCondition((2, 4), 2)
    with pytest.raises(ValueError):
        CongruenceCondition((1, 0), 0)


def test_class_lists():
    assert len(list_congruence_classes(6)) == 24
    assert [c.v0 for c in list_congruence_classes(2)] == [(0, 1), (1, 0), (1, 1)]


def test_identity_disk_counts():
    g = Basis.identity()
    assert enumerate_points(g, Disk(2.5), "primitive") == 16
    assert enumerate_points(g, Disk(2.5), "all") == 20
    n, pts = enumerate_points(g, Disk(2.5), CongruenceCondition((1, 0), 2), return_points=True)
    assert n == 6
    assert sorted(map(tuple, pts)) == [(-1, -2), (-1, 0), (-1, 2), (1, -2), (1, 0), (1, 2)]


def test_boundary_is_closed():
    assert enumerate_points(Basis.identity(), Disk(1.0), "primitive") == 4
    assert enumerate_points(Basis.identity(), Rect(0, 1, 0, 1), "all") == 3


def test_empty_regions():
    g = Basis.identity()
    assert enumerate_points(g, Rect(1, 0, 0, 1), "all") == 0
    assert enumerate_points(g, Disk(0.5), "primitive") == 0


def test_singular_basis_rejected():
    with pytest.raises(ValueError):
        enumerate_points(Basis(1, 2, 2, 4), Disk(3), "all")


basis_strategy = st.tuples(
    st.floats(-1.0, 1.0), st.floats(0.3, 3.0), st.floats(0, 2 * math.pi)
).map(lambda t: Basis(*_shape(*t)))


def _shape(x, y, th):
    c, s = math.cos(th), math.sin(th)
    b11, b12, b22 = 1 / math.sqrt(y), x / math.sqrt(y), math.sqrt(y)
    return c * b11, c * b12 - s * b22, s * b11, s * b12 + c * b22


region_strategy = st.one_of(
    st.floats(0.1, 6).map(Disk),
    st.tuples(st.floats(-5, 5), st.floats(0.1, 6), st.floats(-5, 5), st.floats(0.1, 6)).map(
        lambda t: Rect(t[0], t[0] + t[1], t[2], t[2] + t[3])
    ),
    st.tuples(st.floats(0, 4), st.floats(0.1, 3)).map(lambda t: Annulus(t[0], t[0] + t[1])),
)

filter_strategy = st.one_of(
    st.sampled_from(["all", "primitive"]),
    st.integers(2, 6).flatmap(lambda N: st.sampled_from(list_congruence_classes(N))),
)


@given(basis_strategy, region_strategy, filter_strategy)
def test_enumeration_matches_brute_force(g, A, filt):
    assert enumerate_points(g, A, filt) == brute(g, A, filt)


@given(basis_strategy, st.floats(0.5, 5), st.integers(2, 5))
def test_classes_partition_primitive_points(g, R, N):
    A = Disk(R)
    total = sum(enumerate_points(g, A, s) for s in list_congruence_classes(N))
    assert total == enumerate_points(g, A, "primitive")


@given(basis_strategy, st.floats(0.5, 4), st.floats(1.01, 2))
def test_count_monotone_in_radius(g, R, k):
    assert enumerate_points(g, Disk(R), "primitive") <= enumerate_points(g, Disk(k * R), "primitive")


def test_areas():
    assert region_area(Disk(2)).value == pytest.approx(4 * math.pi)
    assert region_area(Annulus(1, 2)).value == pytest.approx(3 * math.pi)
    assert region_area(Rect(0, 2, -1, 3)).value == 8
    # 4 int_0^4 t^-1/2 dt = 16
    assert region_area(KhintchineBox(PowerLaw(1, 0.5), 4)).value == pytest.approx(16, abs=1e-10)
    assert region_area(KhintchineBox(Table((0, 2), (1.0, 0.5)), 3)).value == pytest.approx(4 * 2.5)


def test_negated_overlap():
    assert negated_overlap_area(Disk(1)) == pytest.approx(math.pi)
    assert negated_overlap_area(Rect(0, 2, 0, 2)) == 0
    assert negated_overlap_area(Rect(-1, 3, -2, 2)) == pytest.approx(2 * 4)


def test_max_abs_det():
    assert max_abs_det(Disk(3)) == 9
    assert max_abs_det(Rect(0, 2, 0, 1)) == 2
    assert max_abs_det(Rect(-1, 1, -1, 1)) == 2


@given(st.floats(0.5, 4), st.integers(0, 2**32 - 1))
def test_uniform_samples_lie_in_region(R, seed):
    pts = sample_uniform(Annulus(R / 2, R), np.random.default_rng(seed), 200)
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert pts.shape == (200, 2) and np.all((r >= R / 2) & (r <= R))


def test_parse_and_serialize_regions():
    for text in ("disk:5", "rect:-1,2,0,3", "annulus:1,2", "khintchine:1,0.5,100"):
        A = parse_region(text)
        assert region_from_dict(A.to_dict()) == A
    for bad in ("disk", "disk:1,2", "ellipse:1", "rect:a,b,c,d"):
        with pytest.raises(ValueError):
            parse_region(bad)


def test_khintchine_box_needs_upper_triangular_basis():
    with pytest.raises(ValueError):
        enumerate_points(Basis(1, 0, 0.1, 1), KhintchineBox(PowerLaw(1, 0.5), 10), "all")


def test_khintchine_box_excludes_axis_and_is_strict():
    box = KhintchineBox(Table((0.0,), (1.0,)), 2)
    # |p| < 1 with 1 <= |q| <= 2 leaves only p = 0
    assert enumerate_points(Basis.identity(), box, "all") == 4
    assert enumerate_points(Basis.identity(), box, "primitive") == 2


@given(st.floats(1.5, 20), st.floats(0, 1))
def test_psi_power_law_integral(T, alpha):
    assume(alpha < 0.95)
    val, _ = PowerLaw(2.0, alpha).integral(T)
    assert val == pytest.approx(2 * T ** (1 - alpha) / (1 - alpha), rel=1e-9)
