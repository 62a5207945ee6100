"""Explicit Ricci-flat metric families, asymptotic models, and decay fits.

Closed forms for the classical families follow the standard literature; their
correctness here is established by the Ricci-residual suite and the Weyl-type
table, not by trusting transcription.  The two end-model families (``kasner``
and ``alh_star``) are written down componentwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from . import jets as jt
from .errors import (InsufficientRadii, ParamOutOfRange, TypeMismatch,
                     UnknownFamily)
from .geometry import (ClosedFormComponents, MetricChart, _as_batch,
                       classify_type, lambda_field, weyl_operator_arrays)

DIVERGENCE = float("inf")  # sentinel for non-convergent fits


@dataclass(frozen=True)
class ParamSpec:
    name: str
    low: float
    high: float
    default: float


@dataclass(frozen=True)
class MetricFamily:
    name: str
    param_schema: tuple
    build: Callable            # params dict -> MetricChart
    doc: str = ""

    def make(self, **params) -> MetricChart:
        values = {}
        for spec in self.param_schema:
            v = float(params.pop(spec.name, spec.default))
            if not (spec.low <= v <= spec.high):
                raise ParamOutOfRange(
                    f"{self.name}: {spec.name}={v} outside "
                    f"[{spec.low}, {spec.high}]")
            values[spec.name] = v
        if params:
            raise ParamOutOfRange(
                f"{self.name}: unknown parameters {sorted(params)}")
        return self.build(values)


# ---------------------------------------------------------------------------
# Family constructors
# ---------------------------------------------------------------------------


def _radial_fd_scale(pts):
    """Steps proportional to the radial coordinate, unit steps elsewhere."""
    one = np.ones_like(pts[0])
    return np.stack([np.abs(pts[0]), one, one, one])

def _build_flat(params) -> MetricChart:
    comps = {(i, i): (lambda a, b, c, d: 1.0) for i in range(4)}
    return MetricChart(
        coord_names=("x0", "x1", "x2", "x3"),
        components=ClosedFormComponents(comps),
        domain=lambda pts: np.ones(pts.shape[1], dtype=bool),
        sampling_box=((-1.0, 1.0),) * 4,
        orientation=1, scale_hint=1.0,
        radial_proxy=lambda pts: np.sqrt((pts ** 2).sum(axis=0)),
        name="flat")


def _build_schwarzschild(params) -> MetricChart:
    m = params["m"]

    def f(r):
        return 1.0 - 2.0 * m / r

    comps = {
        (0, 0): lambda r, th, ph, tau: 1.0 / f(r),
        (1, 1): lambda r, th, ph, tau: r * r,
        (2, 2): lambda r, th, ph, tau: r * r * jt.sin(th) ** 2,
        (3, 3): lambda r, th, ph, tau: f(r),
    }

    def domain(pts):
        r, th = pts[0], pts[1]
        return (r > 2.0 * m * 1.0001) & (np.sin(th) > 1e-3)

    return MetricChart(
        coord_names=("r", "theta", "phi", "tau"),
        components=ClosedFormComponents(comps),
        domain=domain,
        sampling_box=((3.0 * m, 50.0 * m), (0.4, math.pi - 0.4),
                      (0.1, 6.1), (0.0, 8.0 * math.pi * m)),
        orientation=1, scale_hint=m,
        radial_proxy=lambda pts: pts[0],
        fd_scale_fn=_radial_fd_scale,
        name="schwarzschild")


def _build_kerr(params) -> MetricChart:
    m, alpha = params["m"], params["alpha"]

    def pieces(r, th):
        s2 = jt.sin(th) ** 2
        sigma = r * r - alpha * alpha * (1 - s2)
        delta = r * r - 2.0 * m * r - alpha * alpha
        return s2, sigma, delta

    def h_rr(r, th, ph, tau):
        _, sigma, delta = pieces(r, th)
        return sigma / delta

    def h_thth(r, th, ph, tau):
        _, sigma, _ = pieces(r, th)
        return sigma

    def h_tautau(r, th, ph, tau):
        s2, sigma, delta = pieces(r, th)
        return (delta + alpha * alpha * s2) / sigma

    def h_tauph(r, th, ph, tau):
        s2, sigma, delta = pieces(r, th)
        return -2.0 * m * r * alpha * s2 / sigma

    def h_phph(r, th, ph, tau):
        s2, sigma, delta = pieces(r, th)
        return (delta * alpha * alpha * s2 * s2
                + s2 * (r * r - alpha * alpha) ** 2) / sigma

    comps = {(0, 0): h_rr, (1, 1): h_thth, (2, 2): h_phph,
             (2, 3): h_tauph, (3, 3): h_tautau}
    r_plus = m + math.sqrt(m * m + alpha * alpha)

    def domain(pts):
        r, th = pts[0], pts[1]
        return (r > r_plus * 1.05) & (np.sin(th) > 1e-3)

    return MetricChart(
        coord_names=("r", "theta", "phi", "tau"),
        components=ClosedFormComponents(comps),
        domain=domain,
        sampling_box=((4.0 * m, 40.0 * m), (0.4, math.pi - 0.4),
                      (0.1, 6.1), (0.0, 8.0 * math.pi * m)),
        orientation=1, scale_hint=m,
        radial_proxy=lambda pts: pts[0],
        fd_scale_fn=_radial_fd_scale,
        name="kerr")


def _build_taub_nut(params) -> MetricChart:
    m = params["m"]

    def V(rho):
        return 1.0 + 2.0 * m / rho

    comps = {
        (0, 0): lambda rho, th, ph, ps: V(rho),
        (1, 1): lambda rho, th, ph, ps: V(rho) * rho * rho,
        (2, 2): lambda rho, th, ph, ps: (V(rho) * rho * rho * jt.sin(th) ** 2
                                         + (2.0 * m * jt.cos(th)) ** 2 / V(rho)),
        (2, 3): lambda rho, th, ph, ps: 2.0 * m * jt.cos(th) / V(rho),
        (3, 3): lambda rho, th, ph, ps: 1.0 / V(rho),
    }

    def domain(pts):
        rho, th = pts[0], pts[1]
        return (rho > 1e-3 * m) & (np.sin(th) > 1e-3)

    return MetricChart(
        coord_names=("rho", "theta", "phi", "psi"),
        components=ClosedFormComponents(comps),
        domain=domain,
        sampling_box=((1.0 * m, 50.0 * m), (0.4, math.pi - 0.4),
                      (0.1, 6.1), (0.0, 8.0 * math.pi * m)),
        orientation=1, scale_hint=m,
        radial_proxy=lambda pts: pts[0],
        fd_scale_fn=_radial_fd_scale,
        name="taub_nut")


def _build_taub_bolt(params) -> MetricChart:
    n = params["n"]
    M = 1.25 * n
    r_bolt = 2.0 * n

    def F(r):
        return (r * r - 2.0 * M * r + n * n) / (r * r - n * n)

    comps = {
        (0, 0): lambda r, th, ph, tau: 1.0 / F(r),
        (1, 1): lambda r, th, ph, tau: r * r - n * n,
        (2, 2): lambda r, th, ph, tau: ((r * r - n * n) * jt.sin(th) ** 2
                                        + F(r) * (2.0 * n * jt.cos(th)) ** 2),
        (2, 3): lambda r, th, ph, tau: 2.0 * n * F(r) * jt.cos(th),
        (3, 3): lambda r, th, ph, tau: F(r),
    }

    def domain(pts):
        r, th = pts[0], pts[1]
        return (r > r_bolt * 1.02) & (np.sin(th) > 1e-3)

    return MetricChart(
        coord_names=("r", "theta", "phi", "tau"),
        components=ClosedFormComponents(comps),
        domain=domain,
        sampling_box=((2.2 * n, 40.0 * n), (0.4, math.pi - 0.4),
                      (0.1, 6.1), (0.0, 8.0 * math.pi * n)),
        orientation=1, scale_hint=n,
        radial_proxy=lambda pts: pts[0],
        fd_scale_fn=_radial_fd_scale,
        name="taub_bolt")


def _build_eguchi_hanson(params) -> MetricChart:
    a = params["a"]

    def f(r):
        return 1.0 - (a / r) ** 4

    comps = {
        (0, 0): lambda r, th, ph, ps: 1.0 / f(r),
        (1, 1): lambda r, th, ph, ps: r * r / 4.0,
        (2, 2): lambda r, th, ph, ps: (r * r / 4.0) * (jt.sin(th) ** 2
                                                       + f(r) * jt.cos(th) ** 2),
        (2, 3): lambda r, th, ph, ps: (r * r / 4.0) * f(r) * jt.cos(th),
        (3, 3): lambda r, th, ph, ps: (r * r / 4.0) * f(r),
    }

    def domain(pts):
        r, th = pts[0], pts[1]
        return (r > a * 1.01) & (np.sin(th) > 1e-3)

    return MetricChart(
        coord_names=("r", "theta", "phi", "psi"),
        components=ClosedFormComponents(comps),
        domain=domain,
        sampling_box=((1.5 * a, 10.0 * a), (0.4, math.pi - 0.4),
                      (0.1, 6.1), (0.0, 2.0 * math.pi)),
        # Calibrated so the default orientation is the hyperkahler one
        # (W+ identically zero); the reversed chart is type II.
        orientation=-1, scale_hint=a,
        radial_proxy=lambda pts: pts[0],
        fd_scale_fn=_radial_fd_scale,
        name="eguchi_hanson")


def _kasner_radial(pts):
    rho = pts[0]
    return (2.0 / 3.0) * math.sqrt(6.0) * ((-rho) ** 1.5 - 2.0 ** 1.5)


def _build_kasner(params) -> MetricChart:
    comps = {
        (0, 0): lambda rho, x, y, t: -6.0 * rho,
        (1, 1): lambda rho, x, y, t: 6.0 * rho * rho,
        (2, 2): lambda rho, x, y, t: 6.0 * rho * rho,
        (3, 3): lambda rho, x, y, t: -1.0 / (6.0 * rho),
    }
    return MetricChart(
        coord_names=("rho", "x", "y", "t"),
        components=ClosedFormComponents(comps),
        domain=lambda pts: pts[0] < -1e-6,
        sampling_box=((-50.0, -2.0), (0.0, 1.0), (0.0, 1.0),
                      (0.0, 2.0 * math.pi)),
        orientation=1, scale_hint=1.0,
        radial_proxy=_kasner_radial,
        fd_scale_fn=_radial_fd_scale,
        name="kasner")


def _alh_star_radial(pts):
    rho = pts[0]
    return (2.0 / 3.0) * math.sqrt(12.0) * ((-rho) ** 1.5 - 2.0 ** 1.5)


def _build_alh_star(params) -> MetricChart:
    comps = {
        (0, 0): lambda rho, x, y, t: -12.0 * rho,
        (1, 1): lambda rho, x, y, t: -12.0 * rho,
        (2, 2): lambda rho, x, y, t: -12.0 * rho - 12.0 * x * x / rho,
        (2, 3): lambda rho, x, y, t: x / rho,
        (3, 3): lambda rho, x, y, t: -1.0 / (12.0 * rho),
    }
    return MetricChart(
        coord_names=("rho", "x", "y", "t"),
        components=ClosedFormComponents(comps),
        domain=lambda pts: pts[0] < -1e-6,
        sampling_box=((-50.0, -2.0), (-0.5, 0.5), (-0.5, 0.5),
                      (0.0, 2.0 * math.pi)),
        # Calibrated: the +1 side of this chart is anti-self-dual (type I);
        # the Hermitian non-Kahler structure lives on the -1 side.
        orientation=-1, scale_hint=1.0,
        radial_proxy=_alh_star_radial,
        fd_scale_fn=_radial_fd_scale,
        name="alh_star")


FAMILIES: dict[str, MetricFamily] = {
    "flat": MetricFamily("flat", (), _build_flat,
                         "Euclidean metric on R^4"),
    "schwarzschild": MetricFamily(
        "schwarzschild", (ParamSpec("m", 1e-6, 1e6, 1.0),),
        _build_schwarzschild, "Riemannian Schwarzschild in polar coordinates"),
    "kerr": MetricFamily(
        "kerr", (ParamSpec("m", 1e-6, 1e6, 1.0),
                 ParamSpec("alpha", 0.0, 0.5, 0.1)),
        _build_kerr, "Riemannian Kerr with small rotation parameter"),
    "taub_nut": MetricFamily(
        "taub_nut", (ParamSpec("m", 1e-6, 1e6, 1.0),),
        _build_taub_nut, "Taub-NUT in Gibbons-Hawking form"),
    "taub_bolt": MetricFamily(
        "taub_bolt", (ParamSpec("n", 1e-6, 1e6, 1.0),),
        _build_taub_bolt, "Taub-bolt with bolt at r = 2n"),
    "eguchi_hanson": MetricFamily(
        "eguchi_hanson", (ParamSpec("a", 1e-6, 1e6, 1.0),),
        _build_eguchi_hanson, "Eguchi-Hanson metric"),
    "kasner": MetricFamily("kasner", (), _build_kasner,
                           "special Kasner end model"),
    "alh_star": MetricFamily("alh_star", (), _build_alh_star,
                             "ALH* end model"),
}


def make_metric(name: str, params: dict | None = None) -> MetricChart:
    try:
        family = FAMILIES[name]
    except KeyError:
        raise UnknownFamily(f"no metric family named {name!r}") from None
    return family.make(**(params or {}))


# ---------------------------------------------------------------------------
# Asymptotic models and decay measurement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticModel:
    """Model geometry at infinity, with a chart sharing the family coordinates."""

    kind: str                       # ALE | ALF-A | AF | Kasner | ALHstar
    model_components: ClosedFormComponents
    params: dict

    def __post_init__(self):
        if self.kind == "AF":
            a = self.params.get("angle", 0.0)
            b = self.params.get("shift", 1.0)
            if not (0.0 <= a < 2.0 * math.pi) or b == 0.0:
                raise ParamOutOfRange("AF model needs 0 <= angle < 2 pi and "
                                      "a nonzero shift")


def af_model(angle: float = 0.0, shift: float = 2.0 * math.pi) -> AsymptoticModel:
    """Flat R^3 x S^1 written in the polar coordinates of the AF families."""
    comps = {
        (0, 0): lambda r, th, ph, tau: 1.0,
        (1, 1): lambda r, th, ph, tau: r * r,
        (2, 2): lambda r, th, ph, tau: r * r * jt.sin(th) ** 2,
        (3, 3): lambda r, th, ph, tau: 1.0,
    }
    return AsymptoticModel("AF", ClosedFormComponents(comps),
                           {"angle": angle, "shift": shift})


def alf_a_model(nut: float = 1.0) -> AsymptoticModel:
    """Circle bundle over flat R^3 with the standard degree-one connection."""
    comps = {
        (0, 0): lambda rho, th, ph, ps: 1.0,
        (1, 1): lambda rho, th, ph, ps: rho * rho,
        (2, 2): lambda rho, th, ph, ps: (rho * rho * jt.sin(th) ** 2
                                         + (2.0 * nut * jt.cos(th)) ** 2),
        (2, 3): lambda rho, th, ph, ps: 2.0 * nut * jt.cos(th),
        (3, 3): lambda rho, th, ph, ps: 1.0,
    }
    return AsymptoticModel("ALF-A", ClosedFormComponents(comps), {"nut": nut})


def flat_model() -> AsymptoticModel:
    comps = {(i, i): (lambda a, b, c, d: 1.0) for i in range(4)}
    return AsymptoticModel("ALE", ClosedFormComponents(comps), {})


@dataclass
class DecayReport:
    radii: list
    sup_deviation: list
    fitted_rate: float
    fitted_constant: Optional[float] = None


def _model_values(components: ClosedFormComponents, pts: np.ndarray):
    grid = components.metric_jets(pts, order=0)
    g = np.empty((pts.shape[1], 4, 4))
    for i in range(4):
        for j in range(4):
            g[:, i, j] = grid[i][j].value
    return g


def decay_report(chart: MetricChart, model: AsymptoticModel,
                 radii, n_angular: int = 32, seed: int = 0) -> DecayReport:
    """Sup frame-norm deviation |h - h_model| per radius and log-log rate fit.

    The deviation is measured in an orthonormal frame of the model metric; the
    rate is the slope of -log(sup deviation) against log(radius) over the last
    half of the radii.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 4:
        raise InsufficientRadii("need at least four radii")
    if any(b >= a for a, b in zip(radii[1:], radii)):
        raise ValueError("radii must be strictly increasing")
    sampler = qmc.Halton(d=3, seed=seed)
    angles = sampler.random(n_angular)  # other three coordinates
    sup = []
    box = np.asarray(chart.sampling_box, dtype=float)
    for r in radii:
        pts = np.empty((4, n_angular))
        pts[0] = r
        for k in range(3):
            lo, hi = box[k + 1]
            pts[k + 1] = lo + angles[:, k] * (hi - lo)
        h = _model_values(chart.components, pts)
        h0 = _model_values(model.model_components, pts)
        E = np.linalg.inv(np.linalg.cholesky(h0)).transpose(0, 2, 1)
        dev = np.einsum('nia,nij,njb->nab', E, h - h0, E, optimize=True)
        sup.append(float(np.sqrt((dev ** 2).sum(axis=(1, 2))).max()))
    sup_arr = np.asarray(sup)
    if np.all(sup_arr < 1e-14):
        return DecayReport(radii, sup, DIVERGENCE)
    tail = slice(len(radii) // 2, None)
    logs = np.log(np.asarray(radii)[tail])
    vals = -np.log(np.maximum(sup_arr[tail], 1e-300))
    slope = float(np.polyfit(logs, vals, 1)[0])
    return DecayReport(radii, sup, slope)


def conformal_expansion_check(chart: MetricChart, radii,
                              n_angular: int = 8, seed: int = 0,
                              lam_field: Callable | None = None):
    """Fitted limit and convergence rate of rho * lambda^(1/3) along radii.

    Returns ``(constant, rate)``; a diverging product yields the infinity
    sentinel as the constant.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 4:
        raise InsufficientRadii("need at least four radii")
    lam = lam_field if lam_field is not None else lambda_field(chart)
    sampler = qmc.Halton(d=3, seed=seed)
    angles = sampler.random(n_angular)
    box = np.asarray(chart.sampling_box, dtype=float)
    prod = []
    rhos = []
    for r in radii:
        pts = np.empty((4, n_angular))
        pts[0] = r
        for k in range(3):
            lo, hi = box[k + 1]
            pts[k + 1] = lo + angles[:, k] * (hi - lo)
        rho = np.asarray(chart.radial_proxy(pts))
        vals = rho * np.asarray(lam(pts)) ** (1.0 / 3.0)
        prod.append(float(np.mean(vals)))
        rhos.append(float(np.mean(rho)))
    prod_arr = np.asarray(prod)
    if not all(b > a for a, b in zip(rhos, rhos[1:])):
        raise ValueError("radii must move outward (increasing radial proxy)")
    if prod_arr[-1] > 2.0 * prod_arr[0] and np.all(np.diff(prod_arr) > 0):
        return DIVERGENCE, float("nan")
    constant = prod_arr[-1]
    # Convergence rate from deviations against the outermost value.
    dev = np.abs(prod_arr[:-1] - constant)
    good = dev > 1e-10 * abs(constant)
    if good.sum() >= 2:
        rate = float(np.polyfit(np.log(np.asarray(rhos[:-1])[good]),
                                -np.log(dev[good]), 1)[0])
    else:
        rate = DIVERGENCE
    return float(constant), rate
