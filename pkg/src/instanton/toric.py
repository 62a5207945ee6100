"""Exact-rational intersection theory on complete 2-dimensional fans.

Complete fans in the plane encode compact toric surfaces, possibly with
orbifold points when a cone has determinant larger than one.  This module
computes intersection matrices of the invariant divisors, tests ampleness
of the log-anticanonical class -(K + D) against all invariant curves
(Nakai-Moishezon on a complete surface), performs blow-ups at smooth
corners, and enumerates the candidate surface/divisor pairs arising as
compactifications of asymptotically flat ends.  All arithmetic is exact
(integers and fractions); no floating point enters anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InvalidFan, NonSmoothCorner, ParamOutOfRange

Ray = tuple[int, int]


def _det(a: Ray, b: Ray) -> int:
    return a[0] * b[1] - a[1] * b[0]


def _is_primitive(v: Ray) -> bool:
    return math.gcd(v[0], v[1]) == 1 and v != (0, 0)


def _ccw_key(v: Ray):
    """Sort key ordering rays counterclockwise starting from (1, 0).

    Exact: partitions the plane into half-planes and compares within each
    half-plane by cross product, avoiding any floating-point angles.
    """
    x, y = v
    if y > 0 or (y == 0 and x > 0):
        half = 0
    else:
        half = 1

    class _K:
        __slots__ = ("v", "half")

        def __init__(self, v, half):
            self.v = v
            self.half = half

        def __lt__(self, other):
            if self.half != other.half:
                return self.half < other.half
            return _det(self.v, other.v) > 0

    return _K(v, half)


@dataclass(frozen=True)
class Fan2D:
    """A complete fan in the plane: primitive rays, counterclockwise.

    ``labels`` optionally names the invariant divisor of each ray;
    ``name`` identifies the construction for reports.
    """

    rays: tuple[Ray, ...]
    labels: tuple[str, ...] | None = None
    name: str = "fan"

    def __post_init__(self):
        rays = tuple((int(v[0]), int(v[1])) for v in self.rays)
        object.__setattr__(self, "rays", rays)
        if len(rays) < 3:
            raise InvalidFan(f"{self.name}: a complete fan needs >= 3 rays")
        if len(set(rays)) != len(rays):
            raise InvalidFan(f"{self.name}: repeated rays")
        for v in rays:
            if not _is_primitive(v):
                raise InvalidFan(f"{self.name}: ray {v} is not primitive")
        n = len(rays)
        for i in range(n):
            d = _det(rays[i], rays[(i + 1) % n])
            if d <= 0:
                raise InvalidFan(
                    f"{self.name}: rays {rays[i]}, {rays[(i + 1) % n]} are "
                    "not in strict counterclockwise order")
        # completeness: the cyclic sequence must wrap the origin exactly once
        sorted_rays = sorted(rays, key=_ccw_key)
        start = rays.index(sorted_rays[0])
        rotated = rays[start:] + rays[:start]
        if rotated != tuple(sorted_rays):
            raise InvalidFan(f"{self.name}: rays wrap the origin more than "
                             "once or are out of order")
        if self.labels is not None and len(self.labels) != n:
            raise InvalidFan(f"{self.name}: {len(self.labels)} labels for "
                             f"{n} rays")

    def __len__(self) -> int:
        return len(self.rays)

    def label(self, i: int) -> str:
        if self.labels is not None:
            return self.labels[i]
        return f"D{i}"

    def corner_determinants(self) -> tuple[int, ...]:
        n = len(self.rays)
        return tuple(_det(self.rays[i], self.rays[(i + 1) % n])
                     for i in range(n))

    def is_smooth(self) -> bool:
        return all(d == 1 for d in self.corner_determinants())


@dataclass(frozen=True)
class ToricDivisor:
    """A rational linear combination of the invariant divisors of a fan."""

    fan: Fan2D
    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.coeffs) != len(self.fan):
            raise InvalidFan("divisor coefficient count does not match fan")
        object.__setattr__(
            self, "coeffs", tuple(Fraction(c) for c in self.coeffs))

    def __add__(self, other: "ToricDivisor") -> "ToricDivisor":
        if other.fan is not self.fan and other.fan != self.fan:
            raise InvalidFan("divisors live on different fans")
        return ToricDivisor(self.fan, tuple(
            a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "ToricDivisor":
        return ToricDivisor(self.fan, tuple(-a for a in self.coeffs))

    def __sub__(self, other: "ToricDivisor") -> "ToricDivisor":
        return self + (-other)

    def intersect(self, other: "ToricDivisor") -> Fraction:
        table = intersection_matrix(self.fan)
        total = Fraction(0)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                if b == 0:
                    continue
                total += a * b * table[i][j]
        return total


def ray_divisor(fan: Fan2D, i: int) -> ToricDivisor:
    coeffs = [Fraction(0)] * len(fan)
    coeffs[i] = Fraction(1)
    return ToricDivisor(fan, tuple(coeffs))


def canonical_divisor(fan: Fan2D) -> ToricDivisor:
    return ToricDivisor(fan, tuple(Fraction(-1) for _ in fan.rays))


def intersection_matrix(fan: Fan2D) -> tuple[tuple[Fraction, ...], ...]:
    """Exact intersection numbers of the invariant divisors.

    Adjacent divisors meet in the orbifold point of their common cone with
    multiplicity 1/det; self-intersections come from the two neighboring
    cones; distinct non-adjacent divisors are disjoint.
    """
    n = len(fan)
    rays = fan.rays
    table = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        prev = rays[(i - 1) % n]
        nxt = rays[(i + 1) % n]
        d_prev = _det(prev, rays[i])
        d_next = _det(rays[i], nxt)
        table[i][i] = Fraction(-_det(prev, nxt), d_prev * d_next)
        table[i][(i + 1) % n] = Fraction(1, d_next)
        table[(i + 1) % n][i] = Fraction(1, d_next)
    return tuple(tuple(row) for row in table)


@dataclass(frozen=True)
class PairVerdict:
    """Ampleness verdict for -(K + D) on a fan with boundary ray D."""

    fan: Fan2D
    boundary_ray: int
    ample: bool
    intersection_table: tuple[tuple[Fraction, ...], ...]
    violated: tuple[int, ...]
    degrees: tuple[Fraction, ...] = ()

    def __post_init__(self):
        if self.ample != (len(self.violated) == 0):
            raise InvalidFan("verdict inconsistent with its violation list")


def log_anticanonical_check(fan: Fan2D, boundary_ray: int) -> PairVerdict:
    """Test ampleness of -(K + D) via intersections with every ray divisor.

    With K = -sum of all ray divisors, -(K + D) is the sum of the ray
    divisors other than D; on a complete surface it is ample exactly when
    its degree against every invariant curve is positive.
    """
    n = len(fan)
    if not -n <= boundary_ray < n:
        raise InvalidFan(f"boundary ray index {boundary_ray} out of range")
    boundary_ray %= n
    table = intersection_matrix(fan)
    degrees = []
    violated = []
    for i in range(n):
        deg = sum(table[j][i] for j in range(n) if j != boundary_ray)
        degrees.append(deg)
        if deg <= 0:
            violated.append(i)
    return PairVerdict(fan=fan, boundary_ray=boundary_ray,
                       ample=not violated,
                       intersection_table=table,
                       violated=tuple(violated),
                       degrees=tuple(degrees))


def canonical_self_intersection(fan: Fan2D) -> Fraction:
    k = canonical_divisor(fan)
    return k.intersect(k)


def blowup(fan: Fan2D, corner: int | tuple[Ray, Ray]) -> Fan2D:
    """Star subdivision at a smooth corner: insert the sum of its rays.

    ``corner`` is either the index i of the cone spanned by rays i and
    i+1, or that pair of rays.  The new divisor is a (-1)-curve.
    """
    n = len(fan)
    if isinstance(corner, int):
        i = corner % n
    else:
        a = (int(corner[0][0]), int(corner[0][1]))
        b = (int(corner[1][0]), int(corner[1][1]))
        try:
            i = next(j for j in range(n)
                     if {fan.rays[j], fan.rays[(j + 1) % n]} == {a, b})
        except StopIteration:
            raise InvalidFan(f"{a}, {b} is not a corner of {fan.name}")
    v, w = fan.rays[i], fan.rays[(i + 1) % n]
    if _det(v, w) != 1:
        raise NonSmoothCorner(
            f"corner {v}, {w} has determinant {_det(v, w)} > 1")
    new_ray = (v[0] + w[0], v[1] + w[1])
    rays = fan.rays[:i + 1] + (new_ray,) + fan.rays[i + 1:]
    labels = None
    if fan.labels is not None:
        labels = fan.labels[:i + 1] + ("E",) + fan.labels[i + 1:]
    return Fan2D(rays=rays, labels=labels, name=f"Bl({fan.name})")


# ---------------------------------------------------------------------------
# Lattice equivalence
# ---------------------------------------------------------------------------


def _normalized_from(rays: Sequence[Ray], start: int) -> tuple[Ray, ...]:
    """Map the fan by the unimodular transform pinning ray ``start``.

    The transform sends ray ``start`` to (1, 0) and shears so the next
    ray's first coordinate lies in [0, det); the image sequence is a
    complete invariant of the fan with that ray marked, up to GL(2, Z).
    """
    n = len(rays)
    cyc = [rays[(start + j) % n] for j in range(n)]
    vx, vy = cyc[0]
    g, p, q = _ext_gcd(vx, vy)
    if g < 0:
        p, q = -p, -q
    # rows (p, q) and (-vy, vx): determinant p*vx + q*vy = 1
    mapped = [(p * x + q * y, -vy * x + vx * y) for x, y in cyc]
    d = mapped[1][1]
    x1 = mapped[0 + 1][0]
    t = -(x1 // d)
    mapped = [(x + t * y, y) for x, y in mapped]
    return tuple(mapped)


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def canonical_form(fan: Fan2D,
                   marked_ray: int | None = None) -> tuple[Ray, ...]:
    """Lexicographically minimal ray sequence over GL(2, Z), rotations,
    and reflection.  Two fans are lattice-equivalent exactly when their
    canonical forms agree; marking a ray restricts to equivalences that
    preserve it (for comparing surface/divisor pairs)."""
    n = len(fan)
    candidates = []
    orientations = [tuple(fan.rays)]
    # a reflection reverses the cyclic order; negate one coordinate to
    # keep determinants positive
    reflected = tuple((x, -y) for x, y in reversed(fan.rays))
    orientations.append(reflected)
    for rays in orientations:
        if marked_ray is None:
            starts: Iterable[int] = range(n)
        elif rays is orientations[0]:
            starts = (marked_ray % n,)
        else:
            starts = (n - 1 - (marked_ray % n),)
        for s in starts:
            candidates.append(_normalized_from(rays, s))
    return min(candidates)


def equivalent(fan_a: Fan2D, fan_b: Fan2D,
               marked_a: int | None = None,
               marked_b: int | None = None) -> bool:
    if len(fan_a) != len(fan_b):
        return False
    return canonical_form(fan_a, marked_a) == canonical_form(fan_b, marked_b)


# ---------------------------------------------------------------------------
# Standard fans
# ---------------------------------------------------------------------------


def projective_plane() -> Fan2D:
    return Fan2D(rays=((1, 0), (0, 1), (-1, -1)), name="P2")


def p1xp1() -> Fan2D:
    return Fan2D(rays=((1, 0), (0, 1), (-1, 0), (0, -1)), name="P1xP1")


def hirzebruch(k: int) -> Fan2D:
    """The ruled surface over the line with a section of square -k."""
    k = int(k)
    if k < 0:
        raise ParamOutOfRange(f"hirzebruch index must be >= 0, got {k}")
    if k == 0:
        return Fan2D(rays=((1, 0), (0, 1), (-1, 0), (0, -1)),
                     name="H0", labels=("F", "Cinf", "F'", "C0"))
    return Fan2D(rays=((1, 0), (0, 1), (-1, k), (0, -1)),
                 name=f"H{k}", labels=("F", "Cinf", "F'", "C0"))


def _check_mn(m: int, n: int) -> tuple[int, int]:
    """Validate 0 < m < n and reduce by the gcd.

    Only the reduced fraction m/n enters the quotient construction the
    boundary ray encodes, and a fan ray must be primitive, so (m, n)
    with a common factor denotes the same fan as the reduced pair.
    """
    m, n = int(m), int(n)
    if not 0 < m < n:
        raise ParamOutOfRange(f"need 0 < m < n, got m={m}, n={n}")
    g = math.gcd(m, n)
    return m // g, n // g


def fmn(m: int, n: int) -> Fan2D:
    """Four-ray fan with boundary ray (-n, -m): an orbifold ruled surface."""
    m, n = _check_mn(m, n)
    return Fan2D(rays=((1, 0), (0, 1), (-n, -m), (0, -1)),
                 name=f"F({m},{n})", labels=("D3", "D1", "D", "D2"))


def bl_fmn(m: int, n: int) -> Fan2D:
    """Blow-up of the four-ray fan at its smooth (1,0)/(0,1) corner."""
    m, n = _check_mn(m, n)
    return Fan2D(rays=((1, 0), (1, 1), (0, 1), (-n, -m), (0, -1)),
                 name=f"BlF({m},{n})", labels=("D3", "E", "D1", "D", "D2"))


def possible1(k: int, m: int, n: int) -> Fan2D:
    """Four-ray candidate fan: rays (1, k), (0, 1), (-n, -m), (0, -1)."""
    m, n = _check_mn(m, n)
    k = int(k)
    if k < 0:
        raise ParamOutOfRange(f"need k >= 0, got {k}")
    return Fan2D(rays=((1, k), (0, 1), (-n, -m), (0, -1)),
                 name=f"cand4({k};{m},{n})", labels=("D2", "D3", "D", "D1"))


def possible2(k: int, m: int, n: int) -> Fan2D:
    """Five-ray candidate fan: adds the ray (1, k-1) to the four-ray one."""
    m, n = _check_mn(m, n)
    k = int(k)
    if k < 1:
        raise ParamOutOfRange(f"need k >= 1 for the five-ray fan, got {k}")
    if k == 1:
        rays: tuple[Ray, ...] = ((1, 0), (1, 1), (0, 1), (-n, -m), (0, -1))
        labels = ("E", "D2", "D3", "D", "D1")
    else:
        rays = ((1, k - 1), (1, k), (0, 1), (-n, -m), (0, -1))
        labels = ("E", "D2", "D3", "D", "D1")
    return Fan2D(rays=rays, labels=labels, name=f"cand5({k};{m},{n})")


def blowup_p2() -> Fan2D:
    """Blow-up of the plane at one fixed point."""
    return blowup(projective_plane(), 0)


_STANDARD = {
    "projective_plane": lambda params: projective_plane(),
    "p1xp1": lambda params: p1xp1(),
    "hirzebruch": lambda params: hirzebruch(params["k"]),
    "fmn": lambda params: fmn(params["m"], params["n"]),
    "bl_fmn": lambda params: bl_fmn(params["m"], params["n"]),
    "blowup_p2": lambda params: blowup_p2(),
    "possible1": lambda params: possible1(params["k"], params["m"],
                                          params["n"]),
    "possible2": lambda params: possible2(params["k"], params["m"],
                                          params["n"]),
}


def standard_fans(kind: str, params: dict | None = None) -> Fan2D:
    if kind not in _STANDARD:
        raise ParamOutOfRange(
            f"unknown fan kind {kind!r}; choose from "
            f"{sorted(_STANDARD)}")
    return _STANDARD[kind](params or {})


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassifiedPair:
    """A candidate pair with its verdict and its identification, if ample.

    ``family`` names the lattice-equivalence class of an ample pair in
    terms of the standard list (plane, one-point blow-up of the plane,
    product of lines, ruled surfaces, the F(m, n) family and its
    blow-up); empty for non-ample pairs.
    """

    verdict: PairVerdict
    family: str = ""

    @property
    def fan(self) -> Fan2D:
        return self.verdict.fan

    @property
    def ample(self) -> bool:
        return self.verdict.ample


def _identify(fan: Fan2D, boundary: int, max_n: int) -> str:
    """Name the lattice-equivalence class of (fan, boundary ray)."""
    four_ref: list[tuple[tuple[Ray, ...], str]] = []
    for nn in range(2, max_n + 1):
        for mm in range(1, nn):
            f = fmn(mm, nn)
            four_ref.append((canonical_form(f, 2), f"fmn({mm},{nn})"))
    references: dict[int, list[tuple[tuple[Ray, ...], str]]] = {
        3: [(canonical_form(projective_plane(), i), "p2_hyperplane")
            for i in range(3)],
        4: ([(canonical_form(p1xp1(), 0), "p1xp1_ruling"),
             (canonical_form(blowup_p2(), 3), "blp2_degree_one")]
            + [(canonical_form(hirzebruch(kk), 1), f"hirzebruch({kk})")
               for kk in range(1, 12)]
            + four_ref),
        5: [(canonical_form(bl_fmn(mm, nn), 3), f"bl_fmn({mm},{nn})")
            for nn in range(2, max_n + 1) for mm in range(1, nn)],
    }
    cf = canonical_form(fan, boundary)
    for ref, name in references.get(len(fan), []):
        if cf == ref:
            return name
    return "unrecognized"


def classify_pairs(max_n: int, max_k: int) -> list[ClassifiedPair]:
    """Enumerate the candidate compactification pairs and their verdicts.

    Covers the standard surfaces (plane with a hyperplane, its one-point
    blow-up, the product of lines with a ruling, the ruled surfaces with
    the section at infinity) and the four- and five-ray candidate fans
    with boundary ray (-n, -m) over 0 < m < n <= max_n, k <= max_k.
    Ample pairs are identified up to lattice equivalence.
    """
    if max_n < 1 or max_k < 0:
        raise ParamOutOfRange("need max_n >= 1 and max_k >= 0")
    out: list[ClassifiedPair] = []

    def add(fan: Fan2D, boundary: int):
        verdict = log_anticanonical_check(fan, boundary)
        family = _identify(fan, boundary, max_n) if verdict.ample else ""
        out.append(ClassifiedPair(verdict=verdict, family=family))

    add(projective_plane(), 2)
    add(blowup_p2(), 3)          # the image of the hyperplane, square 1
    add(p1xp1(), 0)              # a ruling, square 0
    for k in range(1, max_k + 1):
        add(hirzebruch(k), 1)    # the section at infinity, square -k
    for n in range(2, max_n + 1):
        for m in range(1, n):
            for k in range(0, max_k + 1):
                add(possible1(k, m, n), 2)
            for k in range(1, max_k + 1):
                add(possible2(k, m, n), 3)
    return out
