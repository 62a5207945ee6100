"""SU(infinity) Toda ansatz toolkit.

A solution u(rho, x, y) of (e^u)_rhorho + u_xx + u_yy = 0 with positive
potential V = -12 rho + 6 rho^2 u_rho determines a Ricci-flat 4-metric

    h = V (drho^2 + e^u (dx^2 + dy^2)) + V^{-1} eta^2,

conformally Kahler via g = xi^2 h with xi = 1/rho.  This module builds such
metrics, verifies the closed-form identities they satisfy (compatibility of
the connection form, the scalar-curvature formula, the fiberwise Gauss
curvature relation), computes level-surface integrals with their cubic
volume consequences, indicial roots of the linearized radial equation,
asymptotic profile residuals, and the compactifying coordinate change with
its extension density.

Conventions: k is normalized to 1; the conformal-side fields are
xi = 1/rho, v = u - 2 log(rho^2), W = rho^2 V, so that e^u dx dy
= e^v dx dy / xi^4 and V = xi^2 W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import jets as jt
from .errors import DomainError, FitError, IntegrationError, SignError
from .geometry import MetricChart, _as_batch

_GL_NODES, _GL_WEIGHTS = leggauss(48)


# ---------------------------------------------------------------------------
# Toda fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TodaField:
    """A scalar solution candidate u(rho, x, y) with its reduction surface.

    ``u`` must accept Jet or ndarray coordinates (closed under the helpers
    in ``jets``).  ``surface`` is "torus" (unit-area flat fiber, periodic
    coordinates), "sphere" (round conformal factor ``varpi``, stereographic
    chart coordinates), or "chart" (no global fiber data).
    """

    u: Callable
    domain_box: tuple                  # ((rho0, rho1), (x0, x1), (y0, y1))
    surface: str = "chart"
    euler_char: int = 0
    varpi: Optional[Callable] = None   # fiber conformal factor for "sphere"
    name: str = "custom"

    def require_domain(self, pts: np.ndarray) -> None:
        box = np.asarray(self.domain_box, dtype=float)
        ok = np.ones(pts.shape[1], dtype=bool)
        for k in range(3):
            ok &= (pts[k] >= box[k, 0]) & (pts[k] <= box[k, 1])
        if not np.all(ok):
            raise DomainError(f"{self.name}: point outside field domain")


def _as_batch3(points) -> tuple[np.ndarray, bool]:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        return points[:, None], True
    return points, False


def _coerce(value, template: jt.Jet) -> jt.Jet:
    if isinstance(value, jt.Jet):
        return value
    arr = np.broadcast_to(np.asarray(value, dtype=float),
                          template.coeffs.shape[1:]).copy()
    return jt.Jet.constant(arr, template.space.order,
                           template.coeffs.shape[1:])


def _eval_u(field: TodaField, rho, x, y) -> jt.Jet:
    return _coerce(field.u(rho, x, y), rho)


def _rho_derivative(fn: Callable, rho: jt.Jet, x, y, s: jt.Jet) -> jt.Jet:
    """Partial of fn(rho, x, y) in its first slot, at jet arguments.

    Implemented with the spare jet variable ``s`` (centered at 0): the
    series derivative of fn(rho + s, x, y) along s is the first-slot
    partial, no matter how rho itself depends on the active variables.
    Accurate through one order less than the ambient jet order.
    """
    return _coerce(fn(rho + s, x, y), rho).derivative(3)


def _frame(pts: np.ndarray, order: int, first: str = "rho") -> tuple:
    """Jet variables (var0, x, y, s) centered at the given points.

    ``first`` selects whether var0 is rho itself or xi = 1/rho; the spare
    variable s is centered at 0 and reserved for first-slot derivatives.
    """
    center = np.zeros((4,) + pts.shape[1:])
    center[0] = pts[0] if first == "rho" else 1.0 / pts[0]
    center[1:3] = pts[1:3]
    return jt.Jet.variables(center, order)


def _strip_spare(jet: jt.Jet) -> jt.Jet:
    """Zero all coefficients involving the spare variable.

    Derivatives taken with the spare-variable device leave higher
    s-coefficients behind; they are harmless for s-independent extractions
    but must not be read as partials along the fourth chart coordinate.
    """
    coeffs = jet.coeffs.copy()
    for k, idx in enumerate(jet.space.indices):
        if idx[3] > 0:
            coeffs[k] = 0.0
    return jt.Jet(jet.space, coeffs)


def _u_jet(field: TodaField, pts: np.ndarray, order: int) -> jt.Jet:
    rho, x, y, _ = _frame(pts, order)
    return _eval_u(field, rho, x, y)


def toda_residual(field: TodaField, p) -> float | np.ndarray:
    """(e^u)_rhorho + u_xx + u_yy, evaluated by exact jet arithmetic."""
    pts, single = _as_batch3(p)
    field.require_domain(pts)
    u = _u_jet(field, pts, 2)
    res = (u.exp().partial((2, 0, 0, 0)) + u.partial((0, 2, 0, 0))
           + u.partial((0, 0, 2, 0)))
    return float(res[0]) if single else res


def gauss_curvature_residual(field: TodaField, p) -> float | np.ndarray:
    """|(1/2)(e^u)_rhorho e^{-u} - K| with K the fiber Gauss curvature.

    K is computed independently from the conformal fiber metric
    e^u (dx^2 + dy^2) at fixed rho: K = -(1/2) e^{-u} (u_xx + u_yy).
    """
    pts, single = _as_batch3(p)
    field.require_domain(pts)
    u = _u_jet(field, pts, 2)
    eu = np.exp(u.value)
    lhs = 0.5 * u.exp().partial((2, 0, 0, 0)) / eu
    K = -0.5 * (u.partial((0, 2, 0, 0)) + u.partial((0, 0, 2, 0))) / eu
    res = np.abs(lhs - K)
    return float(res[0]) if single else res


def fiber_gauss_curvature(field: TodaField, p) -> float | np.ndarray:
    """Gauss curvature of the fiber metric e^u (dx^2 + dy^2) at fixed rho."""
    pts, single = _as_batch3(p)
    u = _u_jet(field, pts, 2)
    K = -0.5 * (u.partial((0, 2, 0, 0))
                + u.partial((0, 0, 2, 0))) / np.exp(u.value)
    return float(K[0]) if single else K


# ---------------------------------------------------------------------------
# Derived ansatz fields
# ---------------------------------------------------------------------------


def _derived(field: TodaField, rho: jt.Jet, x, y, s) -> dict:
    """Jets of u, u_rho, V, W, v at arbitrary jet arguments.

    u and v are exact at the ambient order; u_rho, V, W lose one order to
    the first-slot derivative.
    """
    u = _eval_u(field, rho, x, y)
    u_rho = _rho_derivative(field.u, rho, x, y, s)
    V = -12.0 * rho + 6.0 * rho * rho * u_rho
    W = rho * rho * V
    v = u - 2.0 * (rho * rho).log()
    return {"u": u, "u_rho": u_rho, "V": V, "W": W, "v": v}


@dataclass(frozen=True)
class AnsatzData:
    """Derived data (V, W, v, xi, eta) of a Toda solution, k normalized to 1.

    ``eta`` holds jet-capable callables (X, Y, Z) of (rho, x, y) for the
    connection form eta = dt + X dx + Y dy + Z drho in a trivializing
    gauge.
    """

    field: TodaField
    eta: tuple
    k_const: float = 1.0
    name: str = "ansatz"

    def _values(self, pts: np.ndarray, key: str) -> np.ndarray:
        rho, x, y, s = _frame(pts, 1)
        return _derived(self.field, rho, x, y, s)[key].value

    def V(self, p):
        pts, single = _as_batch3(p)
        val = self._values(pts, "V")
        return float(val[0]) if single else val

    def W(self, p):
        pts, single = _as_batch3(p)
        val = self._values(pts, "W")
        return float(val[0]) if single else val

    def v(self, p):
        pts, single = _as_batch3(p)
        val = self._values(pts, "v")
        return float(val[0]) if single else val

    def xi(self, p):
        pts, single = _as_batch3(p)
        val = 1.0 / pts[0]
        return float(val[0]) if single else val


def sample_field(field: TodaField, n: int, seed: int = 0) -> np.ndarray:
    """Low-discrepancy interior samples of the field's (rho, x, y) box."""
    from scipy.stats import qmc
    box = np.asarray(field.domain_box, dtype=float)
    sampler = qmc.Halton(d=3, scramble=True, seed=seed)
    raw = sampler.random(n)
    return (box[:, 0] + raw * (box[:, 1] - box[:, 0])).T


def ansatz_from_toda(field: TodaField, eta_gauge: tuple | None = None,
                     n_check: int = 64, seed: int = 0) -> AnsatzData:
    """Derive the ansatz data of a Toda solution; V must be positive.

    When no gauge is supplied the connection components are integrated
    radially (Z = 0, X and Y from line integrals of W-derivatives, the
    level values of Y from an x-line integral of (W e^v)_xi at the far
    radial level), which satisfies the required curvature d eta whenever
    the compatibility equation holds.
    """
    probe = AnsatzData(field=field, eta=(None, None, None), name=field.name)
    pts = sample_field(field, n_check, seed)
    V = probe._values(pts, "V")
    if np.any(V <= 0):
        branch = "rho < 0" if np.all(pts[0] < 0) else "rho > 0"
        raise SignError(
            f"{field.name}: potential V = -12 rho + 6 rho^2 u_rho is not "
            f"positive on the {branch} branch (min {V.min():.3e}); no "
            "Riemannian metric on this domain")
    if eta_gauge is None:
        eta_gauge = _integrated_gauge(field)
    return AnsatzData(field=field, eta=tuple(eta_gauge), name=field.name)


def _integrated_gauge(field: TodaField) -> tuple:
    """Radial-integration gauge (Z = 0) for the connection components."""
    box = np.asarray(field.domain_box, dtype=float)
    # anchor at the far radial level (largest |rho|) and the left x edge
    rho0 = box[0, 0] if abs(box[0, 0]) >= abs(box[0, 1]) else box[0, 1]
    xi0 = 1.0 / rho0
    x_base = box[1, 0]

    def _radial_part(rho, x, y, s, direction: int, sign: float):
        """sign * integral_{xi0}^{xi} of dW/d(direction) d xi'."""
        xi = 1.0 / rho
        half = (xi - xi0) * 0.5
        total = None
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            xi_s = xi0 + half * (node + 1.0)
            rho_s = 1.0 / xi_s

            def W_of(r, a, b):
                ur = _rho_derivative(field.u, _coerce(r, s), a, b, s)
                return r * r * (-12.0 * r + 6.0 * r * r * ur)

            W = W_of(rho_s, x, y)
            dW = W.derivative(direction)
            term = dW * weight
            total = term if total is None else total + term
        return total * (half * sign)

    def _level_part(rho, x, y, s):
        """integral_{x_base}^{x} of (W e^v)_xi at the far level.

        With W e^v = V e^u / rho^2 the xi-derivative at the constant level
        rho0 expands by the chain rule; the u-derivatives in rho come from
        repeated series derivatives along the spare variable.
        """
        half = (x - x_base) * 0.5
        total = None
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            x_s = x_base + half * (node + 1.0)
            us = _coerce(field.u(rho0 + s, x_s, y), s)
            u_r = us.derivative(3)
            u_rr = u_r.derivative(3)
            eu = _strip_spare(us).exp()
            u_r = _strip_spare(u_r)
            u_rr = _strip_spare(u_rr)
            V0 = -12.0 * rho0 + 6.0 * rho0 ** 2 * u_r
            V_r = -12.0 + 12.0 * rho0 * u_r + 6.0 * rho0 ** 2 * u_rr
            dwev = ((V_r + V0 * u_r) * eu / rho0 ** 2
                    - 2.0 * V0 * eu / rho0 ** 3)
            term = (-(rho0 * rho0)) * dwev * weight
            total = term if total is None else total + term
        return total * half

    def X(rho, x, y, s):
        return _radial_part(rho, x, y, s, direction=2, sign=1.0)

    def Y(rho, x, y, s):
        return (_radial_part(rho, x, y, s, direction=1, sign=-1.0)
                + _level_part(rho, x, y, s))

    def Z(rho, x, y, s):
        return rho * 0.0

    return (X, Y, Z)


def _eval_eta(data: AnsatzData, rho, x, y, s) -> tuple:
    """Evaluate the gauge components at jet arguments.

    Gauge callables may take (rho, x, y) or (rho, x, y, s); the latter is
    used by the integrated gauge, which needs the spare variable.
    """
    out = []
    for comp in data.eta:
        try:
            val = comp(rho, x, y)
        except TypeError:
            val = comp(rho, x, y, s)
        out.append(_coerce(val, rho if isinstance(rho, jt.Jet) else s))
    return tuple(out)


# ---------------------------------------------------------------------------
# Metric construction
# ---------------------------------------------------------------------------


class TodaComponents:
    """Metric components of V(drho^2 + e^u(dx^2+dy^2)) + V^{-1} eta^2.

    Jets are built two orders above the request: one order is consumed by
    the series derivative u_rho inside V, a second by the W-derivatives
    inside integrated gauge components.
    """

    def __init__(self, data: AnsatzData):
        self.data = data

    def metric_jets(self, points: np.ndarray, order: int,
                    cfg=None) -> list:
        rho, x, y, s = _frame(points, order + 2)
        d = _derived(self.data.field, rho, x, y, s)
        V, eu = d["V"], d["u"].exp()
        Vi = 1.0 / V
        X, Y, Z = _eval_eta(self.data, rho, x, y, s)
        fiber = V * eu
        grid = [[None] * 4 for _ in range(4)]
        grid[0][0] = V + Z * Z * Vi
        grid[1][1] = fiber + X * X * Vi
        grid[2][2] = fiber + Y * Y * Vi
        grid[3][3] = Vi
        grid[0][1] = grid[1][0] = Z * X * Vi
        grid[0][2] = grid[2][0] = Z * Y * Vi
        grid[0][3] = grid[3][0] = Z * Vi
        grid[1][2] = grid[2][1] = X * Y * Vi
        grid[1][3] = grid[3][1] = X * Vi
        grid[2][3] = grid[3][2] = Y * Vi
        return [[_strip_spare(grid[i][j]) for j in range(4)]
                for i in range(4)]


def build_metric(data: AnsatzData, orientation: int = 1) -> MetricChart:
    """Coordinate chart (rho, x, y, t) of the metric determined by the data."""
    box = np.asarray(data.field.domain_box, dtype=float)

    def domain(pts):
        ok = np.ones(pts.shape[1], dtype=bool)
        for k in range(3):
            ok &= (pts[k] > box[k, 0] - 1e-12) & (pts[k] < box[k, 1] + 1e-12)
        if not np.any(ok):
            return ok
        vals = np.full(pts.shape[1], -1.0)
        sub = pts[:3, ok]
        rho, x, y, s = _frame(sub, 1)
        vals[ok] = _derived(data.field, rho, x, y, s)["V"].value
        return ok & (vals > 0)

    def fd_scale(pts):
        one = np.ones_like(pts[0])
        return np.stack([np.abs(pts[0]), one, one, one])

    sampling_box = tuple(map(tuple, box)) + ((0.0, 2.0 * math.pi),)
    return MetricChart(
        coord_names=("rho", "x", "y", "t"),
        components=TodaComponents(data),
        domain=domain,
        sampling_box=sampling_box,
        orientation=orientation,
        scale_hint=1.0,
        radial_proxy=lambda pts: np.abs(pts[0]),
        fd_scale_fn=fd_scale,
        name=data.name + "+ansatz")


# ---------------------------------------------------------------------------
# Scalar curvature and compatibility
# ---------------------------------------------------------------------------


def scalar_from_ansatz(data: AnsatzData, p) -> float | np.ndarray:
    """s_g = -((e^v)_xixi + v_xx + v_yy) / (W e^v) at (rho, x, y) points."""
    pts, single = _as_batch3(p)
    xi, x, y, s = _frame(pts, 3, first="xi")
    rho = 1.0 / xi
    d = _derived(data.field, rho, x, y, s)
    ev = d["v"].exp()
    num = (ev.partial((2, 0, 0, 0)) + d["v"].partial((0, 2, 0, 0))
           + d["v"].partial((0, 0, 2, 0)))
    val = -num / (d["W"].value * ev.value)
    return float(val[0]) if single else val


def compatibility_residual(data: AnsatzData, p) -> tuple:
    """(|(W e^v)_xixi + W_xx + W_yy|, |d eta - required d eta|) at points.

    The first entry is the integrability condition for the connection form;
    the second evaluates the exterior derivative of the gauge components
    against the required curvature two-form and reports the largest
    coefficient deviation.
    """
    pts, single = _as_batch3(p)
    xi, x, y, s = _frame(pts, 4, first="xi")
    rho = 1.0 / xi
    d = _derived(data.field, rho, x, y, s)
    wev = d["W"] * d["v"].exp()
    formula = np.abs(wev.partial((2, 0, 0, 0)) + d["W"].partial((0, 2, 0, 0))
                     + d["W"].partial((0, 0, 2, 0)))

    # d eta cross-check in the rho-centered frame; the required curvature
    # components (W e^v)_xi, W_x, W_y come from the xi-frame jets above
    rho_f, x_f, y_f, s_f = _frame(pts, 2)
    X, Y, Z = _eval_eta(data, rho_f, x_f, y_f, s_f)
    rho2 = pts[0] ** 2
    wev_xi = wev.partial((1, 0, 0, 0))
    dxdy = (Y.partial((0, 1, 0, 0)) - X.partial((0, 0, 1, 0)) - wev_xi)
    w_x = d["W"].partial((0, 1, 0, 0))
    w_y = d["W"].partial((0, 0, 1, 0))
    dydxi = (-(rho2) * (Z.partial((0, 0, 1, 0)) - Y.partial((1, 0, 0, 0)))
             - w_x)
    dxidx = (-(rho2) * (X.partial((1, 0, 0, 0)) - Z.partial((0, 1, 0, 0)))
             - w_y)
    gauge = np.max(np.abs(np.stack([dxdy, dydxi, dxidx])), axis=0)
    if single:
        return float(formula[0]), float(gauge[0])
    return formula, gauge


# ---------------------------------------------------------------------------
# Reduction integrals and volumes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReductionIntegrals:
    a: float
    b: float
    euler_term: float            # 2 pi chi(Sigma)
    fit_residual: float
    levels: tuple
    area_values: tuple           # integral of e^u per level
    v_values: tuple              # integral of V e^u per level


def _surface_quadrature(field: TodaField) -> tuple[np.ndarray, np.ndarray]:
    """Sample points (x_i, y_i) and weights for integration over the fiber."""
    if field.surface == "torus":
        n = 32
        xs = (np.arange(n) + 0.5) / n
        box = np.asarray(field.domain_box, dtype=float)
        X0, X1 = box[1]
        Y0, Y1 = box[2]
        gx, gy = np.meshgrid(X0 + xs * (X1 - X0), Y0 + xs * (Y1 - Y0))
        w = np.full(gx.size, (X1 - X0) * (Y1 - Y0) / gx.size)
        return np.stack([gx.ravel(), gy.ravel()]), w
    if field.surface == "sphere":
        # polar coordinates with the substitution t = 1/(1 + r^2):
        # integral over the plane of f r dr dphi = f dt dphi / (2 t^2)
        n_phi = 32
        t_nodes = 0.5 * (_GL_NODES + 1.0)
        t_weights = 0.5 * _GL_WEIGHTS
        phis = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
        r = np.sqrt((1.0 - t_nodes) / t_nodes)
        R, PHI = np.meshgrid(r, phis)
        T, _ = np.meshgrid(t_nodes, phis)
        WT, _ = np.meshgrid(t_weights, phis)
        w = WT / (2.0 * T * T) * (2.0 * math.pi / n_phi)
        return np.stack([(R * np.cos(PHI)).ravel(),
                         (R * np.sin(PHI)).ravel()]), w.ravel()
    raise IntegrationError(
        f"{field.name}: surface {field.surface!r} has no global quadrature")


def reduction_integrals(field: TodaField, levels) -> ReductionIntegrals:
    """Fit integral of e^u over the fiber to 2 pi chi rho^2 + a rho + b.

    Also verifies the companion formula integral of V e^u =
    -6 a rho^2 - 12 b rho to 1e-6 relative.
    """
    levels = np.asarray(sorted(levels), dtype=float)
    if len(levels) < 5:
        raise FitError("need at least 5 levels for the quadratic fit")
    xy, w = _surface_quadrature(field)
    areas, vints = [], []
    for rho in levels:
        pts = np.vstack([np.full(xy.shape[1], rho), xy])
        r_j, x_j, y_j, s_j = _frame(pts, 1)
        d = _derived(field, r_j, x_j, y_j, s_j)
        eu = np.exp(d["u"].value)
        areas.append(float(np.dot(w, eu)))
        vints.append(float(np.dot(w, d["V"].value * eu)))
    areas = np.asarray(areas)
    vints = np.asarray(vints)
    chi_term = 2.0 * math.pi * field.euler_char
    resid_target = areas - chi_term * levels ** 2
    a, b = np.polyfit(levels, resid_target, 1)
    fit = chi_term * levels ** 2 + a * levels + b
    fit_residual = float(np.abs(areas - fit).max())
    scale = 1.0 + np.abs(areas).max()
    if fit_residual > 1e-6 * scale:
        raise FitError(
            f"{field.name}: fiber area does not follow the quadratic law "
            f"(residual {fit_residual:.3e})")
    v_expected = -6.0 * a * levels ** 2 - 12.0 * b * levels
    v_dev = np.abs(vints - v_expected).max()
    if v_dev > 1e-6 * (1.0 + np.abs(vints).max()):
        raise FitError(
            f"{field.name}: integral of V e^u deviates from "
            f"-6 a rho^2 - 12 b rho by {v_dev:.3e}")
    return ReductionIntegrals(a=float(a), b=float(b), euler_term=chi_term,
                              fit_residual=fit_residual,
                              levels=tuple(levels),
                              area_values=tuple(areas),
                              v_values=tuple(vints))


def volume_between(ints: ReductionIntegrals, D0: float, D1: float,
                   mode: str = "circle") -> float:
    """Closed-form volume of the shell D0 <= rho <= D1.

    "circle" assumes a unit circle fiber over the reduction (t of period
    2 pi); "torus" assumes the corresponding square-torus convention.
    """
    a, b = ints.a, ints.b
    if mode == "circle":
        return (-4.0 * math.pi * a * (D1 ** 3 - D0 ** 3)
                - 12.0 * math.pi * b * (D1 ** 2 - D0 ** 2))
    if mode == "torus":
        return (-32.0 * math.pi ** 2 * a * (D1 ** 3 - D0 ** 3)
                - 96.0 * math.pi ** 2 * b * (D0 ** 2 - D1 ** 2))
    raise ValueError(f"unknown volume mode {mode!r}")


# ---------------------------------------------------------------------------
# Indicial roots
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndicialPair:
    eigenvalue: object
    roots: tuple                 # descending; Fractions when exact


def indicial_roots(eigenvalue) -> IndicialPair:
    """Roots of (mu + 2)(mu + 1) + eigenvalue = 0, descending.

    For eigenvalues -k(k+1) of the fiber Laplacian the discriminant
    1 - 4 eigenvalue = (2k+1)^2 is a perfect square and the roots are
    returned as exact rationals (k - 1 and -k - 2).
    """
    if isinstance(eigenvalue, (int, Fraction)) or (
            isinstance(eigenvalue, float) and float(eigenvalue).is_integer()):
        lam = Fraction(int(eigenvalue))
        disc = 1 - 4 * lam
        if disc >= 0:
            root = _exact_sqrt(disc)
            if root is not None:
                mu1 = Fraction(-3 + root, 2) if isinstance(root, int) \
                    else (-3 + root) / 2
                mu2 = Fraction(-3 - root, 2) if isinstance(root, int) \
                    else (-3 - root) / 2
                return IndicialPair(eigenvalue=lam, roots=(mu1, mu2))
    lam = float(eigenvalue)
    disc = 1.0 - 4.0 * lam
    if disc < 0:
        raise ValueError(f"complex indicial roots for eigenvalue {lam}")
    root = math.sqrt(disc)
    return IndicialPair(eigenvalue=lam,
                        roots=((-3.0 + root) / 2.0, (-3.0 - root) / 2.0))


def _exact_sqrt(q: Fraction):
    if q.denominator != 1:
        return None
    r = math.isqrt(q.numerator)
    return r if r * r == q.numerator else None


# ---------------------------------------------------------------------------
# Asymptotic profiles
# ---------------------------------------------------------------------------


def alf_profile_residual(field: TodaField, k0: float, levels,
                         n_angular: int = 16, seed: int = 0,
                         delta: float = 0.5) -> tuple[float, float]:
    """Weighted deviation from u = 2 log rho + varpi - k0^2/(6 rho).

    Returns (sup |u - profile| rho^(1+delta), sup |V - k0^2| rho^delta)
    over the levels; both stay bounded exactly when the field has the
    asymptotically flat profile with rotation constant k0.
    """
    if field.varpi is None:
        raise DomainError(f"{field.name}: profile check needs the fiber "
                          "conformal factor varpi")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-1.0, 1.0, size=(2, n_angular))
    res_u, res_v = 0.0, 0.0
    for rho in np.asarray(levels, dtype=float):
        pts = np.vstack([np.full(n_angular, rho), xy])
        r_j, x_j, y_j, s_j = _frame(pts, 1)
        d = _derived(field, r_j, x_j, y_j, s_j)
        varpi = np.asarray(field.varpi(xy[0], xy[1]), dtype=float)
        profile = 2.0 * np.log(rho) + varpi - k0 ** 2 / (6.0 * rho)
        res_u = max(res_u,
                    float(np.abs(d["u"].value - profile).max()
                          * rho ** (1.0 + delta)))
        res_v = max(res_v,
                    float(np.abs(d["V"].value - k0 ** 2).max()
                          * rho ** delta))
    return res_u, res_v


def round_sphere_varpi(x, y):
    """Conformal factor of the unit round sphere in stereographic chart."""
    return jt.log(4.0 / (1.0 + x * x + y * y) ** 2) \
        if isinstance(x, jt.Jet) or isinstance(y, jt.Jet) \
        else np.log(4.0 / (1.0 + x * x + y * y) ** 2)


# ---------------------------------------------------------------------------
# Named solutions
# ---------------------------------------------------------------------------


def _torus_box(rho_lo=-50.0, rho_hi=-2.0):
    return ((rho_lo, rho_hi), (0.0, 1.0), (0.0, 1.0))


def toda_solution(name: str, **params) -> TodaField:
    """Closed-form Toda solutions by name.

    "kasner": u = log(-rho) on the rho < 0 branch (flat torus fiber);
    "alh_star": u = 0 (flat torus fiber, twisted connection);
    "sphere_profile": u = 2 log rho + varpi (round fiber, V = 0);
    "alf_profile": u = 2 log rho + varpi - k0^2/(6 rho) (round fiber).
    """
    if name == "kasner":
        return TodaField(u=lambda r, x, y: jt.log(-r),
                         domain_box=_torus_box(), surface="torus",
                         euler_char=0, name="kasner")
    if name == "alh_star":
        return TodaField(u=lambda r, x, y: r * 0.0,
                         domain_box=((-50.0, -2.0), (-0.5, 0.5),
                                     (-0.5, 0.5)),
                         surface="torus", euler_char=0, name="alh_star")
    if name == "sphere_profile":
        return TodaField(
            u=lambda r, x, y: 2.0 * jt.log(r) + round_sphere_varpi(x, y),
            domain_box=((2.0, 50.0), (-1.0, 1.0), (-1.0, 1.0)),
            surface="sphere", euler_char=2, varpi=round_sphere_varpi,
            name="sphere_profile")
    if name == "alf_profile":
        k0 = float(params.pop("k0", 1.0))
        return TodaField(
            u=lambda r, x, y: (2.0 * jt.log(r) + round_sphere_varpi(x, y)
                               - k0 ** 2 / (6.0 * r)),
            domain_box=((2.0, 50.0), (-1.0, 1.0), (-1.0, 1.0)),
            surface="sphere", euler_char=2, varpi=round_sphere_varpi,
            name="alf_profile")
    raise KeyError(f"no Toda solution named {name!r}")


KASNER_GAUGE = (lambda r, x, y: r * 0.0,
                lambda r, x, y: r * 0.0,
                lambda r, x, y: r * 0.0)

ALH_STAR_GAUGE = (lambda r, x, y: r * 0.0,
                  lambda r, x, y: -12.0 * x,
                  lambda r, x, y: r * 0.0)


def named_ansatz(name: str) -> AnsatzData:
    """Ansatz data with the canonical closed-form gauge for a named solution."""
    field = toda_solution(name)
    if name == "kasner":
        return ansatz_from_toda(field, eta_gauge=KASNER_GAUGE)
    if name == "alh_star":
        return ansatz_from_toda(field, eta_gauge=ALH_STAR_GAUGE)
    return ansatz_from_toda(field)


def schwarzschild_toda(m: float = 1.0) -> TodaField:
    """The radial AF chart in Toda form, via the moment map rho = s_g^{-1}.

    With c = (12 m)^(1/3): rho = r / c, V = c^2 / (1 - 2m/r), and the fiber
    conformal factor follows from matching V e^u (dx^2+dy^2) with the round
    r^2-sphere, u = varpi + log(r^2 / V).
    """
    c = (12.0 * m) ** (1.0 / 3.0)

    def u(rho, x, y):
        r = rho * c
        V = c * c / (1.0 - 2.0 * m / r)
        return round_sphere_varpi(x, y) + jt.log(r * r / V)

    return TodaField(u=u,
                     domain_box=((3.0 * m / c, 60.0 * m / c),
                                 (-1.0, 1.0), (-1.0, 1.0)),
                     surface="sphere", euler_char=2,
                     varpi=round_sphere_varpi, name="schwarzschild+toda")


# ---------------------------------------------------------------------------
# Compactification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompactChart:
    """Coordinates (zeta, w) compactifying the large-|rho| end.

    zeta(xi) = integral_xi^epsilon W, phi = phi_sign * t (plus the shift
    from the drho-component of eta, zero in the gauges used here), and
    w = exp(-zeta - i phi) places the end at w = 0.
    """

    data: AnsatzData
    epsilon: float
    phi_sign: int
    zeta_sign: int
    j_zeta_residual: float
    j_x_variation: float

    def zeta(self, xi, x=0.0, y=0.0):
        xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.empty_like(xi_arr)
        for i, xv in enumerate(xi_arr):
            half = (self.epsilon - xv) * 0.5
            nodes = xv + half * (_GL_NODES + 1.0)
            pts = np.vstack([1.0 / nodes,
                             np.full(nodes.size, x),
                             np.full(nodes.size, y)])
            W = self.data.W(pts)
            out[i] = float(np.dot(_GL_WEIGHTS, W) * half) * self.zeta_sign
        return out if np.ndim(xi) else float(out[0])

    def phi_shift(self, xi, x=0.0, y=0.0):
        return np.zeros_like(np.asarray(xi, dtype=float)) \
            if np.ndim(xi) else 0.0

    def w(self, xi, t, x=0.0, y=0.0):
        return np.exp(-self.zeta(xi, x, y)
                      - 1j * self.phi_sign * np.asarray(t, dtype=float))


def compactification_chart(data: AnsatzData, epsilon: float,
                           n_samples: int = 8, seed: int = 0,
                           orientation: int = 1) -> CompactChart:
    """Build the compactifying chart and verify the complex structure.

    Checks numerically that the complex structure of the conformal Kahler
    metric sends d/dzeta to (a sign of) d/dphi, and that the d/dzeta and
    d/dphi coefficients of J d/dx do not vary with (zeta, phi).
    """
    from . import hermitian as hm

    box = np.asarray(data.field.domain_box, dtype=float)
    xi_lo = 1.0 / box[0, 0]
    xi_hi = 1.0 / box[0, 1]
    if not (min(xi_lo, xi_hi) < epsilon <= max(xi_lo, xi_hi) + 1e-12
            or abs(epsilon) <= max(abs(xi_lo), abs(xi_hi))):
        raise IntegrationError(
            f"epsilon = {epsilon} outside the available xi range")
    probe = sample_field(data.field, n_samples, seed)
    W = data.W(probe)
    if np.any(W <= 0):
        raise IntegrationError(
            f"{data.name}: W must be positive for the compactification")

    chart = build_metric(data, orientation=orientation)
    pair = hm.conformal_pair(chart)
    structure = hm.kahler_structure(pair)
    pts4 = np.vstack([probe, np.linspace(0.3, 5.9, probe.shape[1])])
    _, J = structure.omega_J(pts4)
    V = data.V(probe)
    # J d/dzeta = (rho^2 / W) J d/drho; d/dphi = phi_sign * d/dt
    j_rho = J[:, :, 0]
    coeff_t = j_rho[:, 3] * probe[0] ** 2 / data.W(probe)
    phi_sign = -1 if np.median(coeff_t) < 0 else 1
    target = np.zeros_like(j_rho)
    target[:, 3] = phi_sign
    resid = np.abs(j_rho * (probe[0] ** 2 / data.W(probe))[:, None]
                   - target).max()
    # coefficients of J d/dx must not vary along (zeta, phi) = (rho, t)
    j_x = J[:, :, 1]
    X_coeff = j_x[:, 0] * V            # d/dzeta component
    Y_coeff = j_x[:, 3] * phi_sign     # d/dphi component
    # re-evaluate at shifted rho and t with (x, y) fixed
    probe2 = probe.copy()
    probe2[0] = 0.5 * (probe[0] + probe[0].mean())
    pts4b = np.vstack([probe2, np.linspace(1.1, 4.2, probe.shape[1])])
    _, J2 = structure.omega_J(pts4b)
    V2 = data.V(probe2)
    j_x2 = J2[:, :, 1]
    variation = max(
        float(np.abs(j_x2[:, 0] * V2 - X_coeff).max()),
        float(np.abs(j_x2[:, 3] * phi_sign - Y_coeff).max()))
    # orient zeta so it grows toward the compactified end (xi -> 0),
    # making |w| = exp(-zeta) -> 0 there
    probe_chart = CompactChart(data=data, epsilon=float(epsilon),
                               phi_sign=phi_sign, zeta_sign=1,
                               j_zeta_residual=float(resid),
                               j_x_variation=variation)
    z_end = probe_chart.zeta(0.5 * epsilon)
    zeta_sign = 1 if z_end >= 0.0 else -1
    if zeta_sign == 1:
        return probe_chart
    return CompactChart(data=data, epsilon=float(epsilon),
                        phi_sign=phi_sign, zeta_sign=zeta_sign,
                        j_zeta_residual=float(resid),
                        j_x_variation=variation)


def extension_density(data: AnsatzData, p) -> float | np.ndarray:
    """4 s_g^2 e^{-v}; extends continuously to the compactifying locus.

    For asymptotically flat profile data this converges to 4 e^{-varpi}
    (the constant multiple 4 is recorded, not normalized away).
    """
    pts, single = _as_batch3(p)
    s = np.asarray(scalar_from_ansatz(data, pts))
    v = np.asarray(data.v(pts))
    val = 4.0 * s * s * np.exp(-v)
    return float(val[0]) if single else val
