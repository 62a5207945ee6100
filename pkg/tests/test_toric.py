"""Exact fan intersection theory, ampleness, and the pair enumeration."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from instanton import toric
from instanton.errors import InvalidFan, NonSmoothCorner, ParamOutOfRange


def test_fan_validation():
    with pytest.raises(InvalidFan):
        toric.Fan2D(rays=((1, 0), (2, 0), (0, 1)))        # not primitive
    with pytest.raises(InvalidFan):
        toric.Fan2D(rays=((1, 0), (0, 1)))                # too few rays
    with pytest.raises(InvalidFan):
        toric.Fan2D(rays=((1, 0), (0, -1), (0, 1)))       # wrong order
    with pytest.raises(InvalidFan):
        toric.Fan2D(rays=((1, 0), (0, 1), (1, 1)))        # not complete


def test_param_validation():
    with pytest.raises(ParamOutOfRange):
        toric.fmn(3, 2)
    with pytest.raises(ParamOutOfRange):
        toric.hirzebruch(-1)
    with pytest.raises(ParamOutOfRange):
        toric.standard_fans("nosuch")


@pytest.mark.parametrize("k", range(1, 6))
def test_ruled_surface_section_square(k):
    table = toric.intersection_matrix(toric.hirzebruch(k))
    assert table[1][1] == Fraction(-k)
    assert table[3][3] == Fraction(k)


def test_intersection_values_orbifold_family():
    for n in range(2, 7):
        for m in range(1, n):
            if math.gcd(m, n) != 1:
                continue
            table = toric.intersection_matrix(toric.fmn(m, n))
            assert table[2][1] == Fraction(1, n)
            assert table[2][3] == Fraction(1, n)
            for k in range(0, 4):
                tp = toric.intersection_matrix(toric.possible1(k, m, n))
                assert tp[3][3] == Fraction(-m + n * k, n)
                assert tp[1][1] == Fraction(m - n * k, n)


def test_common_factor_reduces():
    assert toric.fmn(2, 4).rays == toric.fmn(1, 2).rays


def test_intersection_matrix_symmetric():
    for fan in (toric.projective_plane(), toric.hirzebruch(3),
                toric.fmn(2, 5), toric.bl_fmn(1, 3), toric.possible2(2, 1, 4)):
        t = toric.intersection_matrix(fan)
        n = len(fan)
        assert all(t[i][j] == t[j][i] for i in range(n) for j in range(n))


def test_ampleness_window():
    for n in range(2, 7):
        for m in range(1, n):
            if math.gcd(m, n) != 1:
                continue
            for k in range(0, 4):
                v = toric.log_anticanonical_check(toric.possible1(k, m, n), 2)
                assert v.ample == ((k - 1) * n < m < (k + 1) * n)
                assert v.ample == (len(v.violated) == 0)


def test_plane_always_log_ample():
    for i in range(3):
        assert toric.log_anticanonical_check(toric.projective_plane(),
                                             i).ample


def test_interior_minus_two_curve_blocks_ampleness():
    f2 = toric.blowup(toric.blowup(toric.projective_plane(), 0), 0)
    idx = f2.rays.index((1, 1))
    assert toric.intersection_matrix(f2)[idx][idx] == Fraction(-2)
    verdict = toric.log_anticanonical_check(f2, f2.rays.index((-1, -1)))
    assert not verdict.ample and idx in verdict.violated


def test_blowup_facts():
    assert toric.equivalent(toric.blowup_p2(), toric.hirzebruch(1))
    b = toric.blowup(toric.fmn(1, 2), ((1, 0), (0, 1)))
    assert b.rays == toric.bl_fmn(1, 2).rays
    with pytest.raises(NonSmoothCorner):
        toric.blowup(toric.fmn(1, 2), ((0, 1), (-2, -1)))


@pytest.mark.parametrize("fan,r", [
    (toric.projective_plane(), 3), (toric.p1xp1(), 4),
    (toric.hirzebruch(1), 4), (toric.hirzebruch(4), 4),
    (toric.blowup_p2(), 4), (toric.blowup(toric.blowup_p2(), 1), 5)])
def test_noether_identity_on_smooth_fans(fan, r):
    assert fan.is_smooth()
    assert toric.canonical_self_intersection(fan) == Fraction(12 - r)


def test_blowup_drops_canonical_square_by_one():
    for fan in (toric.projective_plane(), toric.hirzebruch(3),
                toric.p1xp1()):
        k2 = toric.canonical_self_intersection(fan)
        assert toric.canonical_self_intersection(
            toric.blowup(fan, 0)) == k2 - 1


_UNIMODULAR = st.sampled_from([
    (1, 0, 0, 1), (1, 1, 0, 1), (1, 0, 1, 1), (0, -1, 1, 0),
    (1, -1, 0, 1), (2, 1, 1, 1), (1, 2, 1, 3), (0, 1, -1, 0),
])
_FANS = st.sampled_from([
    toric.projective_plane(), toric.p1xp1(), toric.hirzebruch(2),
    toric.fmn(1, 3), toric.fmn(2, 5), toric.bl_fmn(1, 2),
    toric.possible2(2, 1, 4),
])


@given(_FANS, _UNIMODULAR)
@settings(max_examples=60, deadline=None)
def test_canonical_form_is_a_lattice_invariant(fan, mat):
    a, b, c, d = mat
    assert abs(a * d - b * c) == 1
    rays = tuple((a * x + b * y, c * x + d * y) for x, y in fan.rays)
    if a * d - b * c < 0:
        rays = tuple(reversed(rays))
    moved = toric.Fan2D(rays=rays, name="moved")
    assert toric.canonical_form(moved) == toric.canonical_form(fan)


@given(_FANS)
@settings(max_examples=20, deadline=None)
def test_intersection_numbers_are_lattice_invariants(fan):
    t1 = toric.intersection_matrix(fan)
    rays = tuple((x + y, y) for x, y in fan.rays)   # shear
    t2 = toric.intersection_matrix(toric.Fan2D(rays=rays, name="sheared"))
    assert t1 == t2


def test_classification_matches_expected_list():
    pairs = toric.classify_pairs(6, 3)
    ample = [p for p in pairs if p.ample]
    assert all(p.family != "unrecognized" for p in ample)
    families = {p.family for p in ample}
    assert {"p2_hyperplane", "blp2_degree_one", "p1xp1_ruling"} <= families
    assert {f"hirzebruch({k})" for k in (1, 2, 3)} <= families
    # four-ray candidates identify with the orbifold ruled family, five-ray
    # ones with its blow-up; nothing else appears
    for p in ample:
        assert (p.family in {"p2_hyperplane", "blp2_degree_one",
                             "p1xp1_ruling"}
                or p.family.startswith(("hirzebruch(", "fmn(", "bl_fmn(")))
    # the reflection trade: k = 1 four-ray pairs match the complementary
    # slope parameter
    by_name = {p.fan.name: p.family for p in ample}
    assert by_name.get("cand4(1;1,3)") == "fmn(2,3)"
    assert by_name.get("cand4(1;2,5)") == "fmn(3,5)"


def test_divisor_arithmetic():
    fan = toric.hirzebruch(2)
    K = toric.canonical_divisor(fan)
    D = toric.ray_divisor(fan, 1)
    # the two fibers each meet the section once; the opposite section not
    assert (-(K + D)).intersect(D) == Fraction(2)
    assert K.intersect(K) == Fraction(8)
