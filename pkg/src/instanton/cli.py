"""Command-line front end: verification suites with deterministic reports.

Every subcommand assembles a list of named checks, serializes them in a
stable report format (JSON with fixed key order and 17-significant-digit
numbers, CSV, or plain text), and exits 0 when all checks pass, 1 when
any check fails, and 2 on usage errors.  Identical configurations produce
byte-identical JSON reports.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import catalog, geometry, hermitian, toda, toric
from .errors import (DomainError, FitError, InconclusiveError,
                     IntegrationError, InsufficientRadii, InvalidFan,
                     NonSmoothCorner, ParamOutOfRange, SignError,
                     TypeMismatch, UnknownFamily, UsageError)

VERSION = "1.0.0"

_USAGE_ERRORS = (UsageError, UnknownFamily, ParamOutOfRange, InvalidFan,
                 NonSmoothCorner, InsufficientRadii)


# ---------------------------------------------------------------------------
# Values and checks
# ---------------------------------------------------------------------------


def format_value(v):
    """Stable string form: rationals as p/q, floats at 17 significant digits."""
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


@dataclass
class Check:
    """One named verification record."""

    name: str
    value: object
    tol: object          # None for exact or informational checks
    passed: bool
    ref: str = ""

    def record(self) -> dict:
        return {
            "name": self.name,
            "value": format_value(self.value),
            "tol": None if self.tol is None else format_value(self.tol),
            "pass": bool(self.passed),
            "paper_ref": self.ref,
        }


def check_lt(name: str, value, tol, ref: str = "") -> Check:
    return Check(name, float(value), float(tol), float(value) < float(tol),
                 ref)


def check_true(name: str, cond: bool, value=None, ref: str = "") -> Check:
    return Check(name, cond if value is None else value, None, bool(cond),
                 ref)


def check_eq(name: str, value, expected, ref: str = "") -> Check:
    return Check(name, value, expected, value == expected, ref)


def check_range(name: str, value, lo, hi, ref: str = "") -> Check:
    return Check(name, float(value), f"{format_value(float(lo))}.."
                 f"{format_value(float(hi))}",
                 lo <= float(value) <= hi, ref)


def failed_check(name: str, exc: Exception, ref: str = "") -> Check:
    return Check(name, f"{type(exc).__name__}: {exc}", None, False, ref)


# ---------------------------------------------------------------------------
# Report assembly and emission
# ---------------------------------------------------------------------------


def build_report(command: str, params: dict, seed: int,
                 checks: list[Check]) -> dict:
    return {
        "version": VERSION,
        "command": command,
        "params": params,
        "seed": int(seed),
        "checks": [c.record() for c in checks],
        "pass": all(c.passed for c in checks),
    }


def emit_report(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("name,value,tol,pass,paper_ref\r\n")
        for rec in report["checks"]:
            row = [rec["name"], rec["value"],
                   "" if rec["tol"] is None else str(rec["tol"]),
                   "true" if rec["pass"] else "false", rec["paper_ref"]]
            buf.write(",".join('"%s"' % str(f).replace('"', '""')
                               for f in row) + "\r\n")
        return buf.getvalue()
    if fmt == "text":
        lines = [f"{report['command']} (version {report['version']}, "
                 f"seed {report['seed']})"]
        for rec in report["checks"]:
            mark = "PASS" if rec["pass"] else "FAIL"
            tol = "" if rec["tol"] is None else f" (tol {rec['tol']})"
            lines.append(f"  [{mark}] {rec['name']}: {rec['value']}{tol}")
        lines.append("summary: " + ("PASS" if report["pass"] else "FAIL"))
        return "\n".join(lines) + "\n"
    raise UsageError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> dict:
    return json.loads(text)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param needs key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            out[key] = float(raw)
        except ValueError:
            raise UsageError(f"parameter {key!r} needs a number, got {raw!r}")
    return out


def _make_chart(name: str, params: dict, orientation: str):
    chart = catalog.make_metric(name.replace("-", "_"), params)
    if orientation == "reversed":
        chart = geometry.orientation_flip(chart)
    elif orientation != "std":
        raise UsageError(f"orientation must be std or reversed, "
                         f"got {orientation!r}")
    return chart


_TYPE_TABLE = [
    # family, orientation, expected type
    ("flat", "std", "I"),
    ("eguchi_hanson", "std", "I"),
    ("eguchi_hanson", "reversed", "II"),
    ("taub_nut", "std", "I"),
    ("taub_nut", "reversed", "II"),
    ("taub_bolt", "std", "II"),
    ("taub_bolt", "reversed", "II"),
    ("schwarzschild", "std", "II"),
    ("schwarzschild", "reversed", "II"),
    ("kerr", "std", "II"),
    ("kerr", "reversed", "II"),
    ("kasner", "std", "II"),
    ("alh_star", "std", "II"),
]

# Type II entries carrying the conformal structure, with the sign of the
# Kahler scalar curvature (negative exactly on the two end models).
_HERMITIAN_TABLE = [
    ("kasner", "std", -1),
    ("kasner", "reversed", -1),
    ("alh_star", "std", -1),
    ("schwarzschild", "std", 1),
    ("schwarzschild", "reversed", 1),
    ("kerr", "std", 1),
    ("kerr", "reversed", 1),
    ("taub_nut", "reversed", 1),
    ("taub_bolt", "std", 1),
    ("taub_bolt", "reversed", 1),
    ("eguchi_hanson", "reversed", 1),
]

_HERMITIAN_TOLS = {
    "scalar_identity": 1e-5,
    "conformal_pde": 1e-4,
    "killing_g": 1e-6,
    "killing_h": 1e-6,
    "kahler": 1e-5,
    "lebrun": 1e-7,
}


def hermitian_checks(chart, expected_sign: int, n_samples: int, seed: int,
                     tols: dict | None = None,
                     tag: str = "") -> list[Check]:
    """The conformal-structure battery on one type II chart."""
    tols = {**_HERMITIAN_TOLS, **(tols or {})}
    prefix = f"{tag}:" if tag else ""
    try:
        pair = hermitian.conformal_pair(chart)
    except (TypeMismatch, InconclusiveError) as exc:
        return [failed_check(f"{prefix}conformal-structure", exc)]
    samples = hermitian.default_samples(pair, n_samples, seed)
    structure = hermitian.kahler_structure(pair)
    field = hermitian.extremal_field(pair, structure)
    si = hermitian.scalar_identity_residual(pair, samples)
    pde = hermitian.conformal_pde_residual(pair, samples)
    kg, kh = hermitian.killing_residual(field, pair, samples)
    kah, _ = hermitian.kahler_residual(pair, samples, structure)
    lb = hermitian.lebrun_form(pair, samples, structure)
    checks = [
        check_lt(f"{prefix}scalar-identity", si, tols["scalar_identity"],
                 "|s_g| = lambda^(1/3)"),
        check_lt(f"{prefix}conformal-pde", pde, tols["conformal_pde"],
                 "6 Lap t + t^4 = 0"),
        check_lt(f"{prefix}killing-g", kg, tols["killing_g"],
                 "K Killing for g"),
        check_lt(f"{prefix}killing-h", kh, tols["killing_h"],
                 "K Killing for h"),
        check_lt(f"{prefix}kahler", kah, tols["kahler"],
                 "grad omega = 0"),
        check_lt(f"{prefix}lebrun-identity", lb.identity_residual,
                 tols["lebrun"], "curvature-form identity"),
        check_eq(f"{prefix}scalar-sign", pair.sign, expected_sign,
                 "sign of s_g"),
    ]
    if expected_sign > 0:
        checks.append(check_true(f"{prefix}lebrun-positive",
                                 lb.min_eigenvalue > 0.0,
                                 value=lb.min_eigenvalue,
                                 ref="positivity on s_g > 0"))
    return checks


# ---------------------------------------------------------------------------
# Acceptance criteria (shared by `suite` and the test battery)
# ---------------------------------------------------------------------------

RICCI_FAMILIES = ["flat", "schwarzschild", "kerr", "taub_nut", "taub_bolt",
                  "eguchi_hanson", "kasner", "alh_star"]


def criterion_ricci(n_samples: int = 200, seed: int = 0,
                    tol: float = 1e-7) -> list[Check]:
    checks = []
    for name in RICCI_FAMILIES:
        chart = catalog.make_metric(name)
        pts = geometry.sample_points(chart, n_samples, seed)
        worst = float(geometry.ricci_frame_norm(chart, pts).max())
        checks.append(check_lt(f"ricci:{name}", worst, tol,
                               "Ricci-flatness"))
    return checks


def criterion_type_table(n_samples: int = 64, seed: int = 0) -> list[Check]:
    checks = []
    for name, orientation, expected in _TYPE_TABLE:
        chart = _make_chart(name, {}, orientation)
        try:
            label = geometry.classify_type(chart, n_samples=n_samples,
                                           seed=seed).label
            checks.append(check_eq(f"type:{name}:{orientation}", label,
                                   expected, "self-dual Weyl type"))
        except InconclusiveError as exc:
            checks.append(failed_check(f"type:{name}:{orientation}", exc))
    return checks


def criterion_hermitian(n_samples: int = 12, seed: int = 3) -> list[Check]:
    checks = []
    for name, orientation, sign in _HERMITIAN_TABLE:
        chart = _make_chart(name, {}, orientation)
        checks.extend(hermitian_checks(chart, sign, n_samples, seed,
                                       tag=f"{name}:{orientation}"))
    return checks


def criterion_toda(n_points: int = 1000, seed: int = 0) -> list[Check]:
    checks = []
    for name in ("kasner", "alh_star", "sphere_profile"):
        f = toda.toda_solution(name)
        pts = toda.sample_field(f, n_points, seed)
        res = float(np.abs(toda.toda_residual(f, pts)).max())
        checks.append(check_lt(f"toda-residual:{name}", res, 1e-14,
                               "Toda equation, closed form"))
    for name, slope in (("kasner", -6.0), ("alh_star", -12.0)):
        f = toda.toda_solution(name)
        data = toda.ansatz_from_toda(f)
        pts = toda.sample_field(f, 64, seed)
        # relative at the last-bit level: the profile is exactly linear,
        # with only the rounding of its floating-point evaluation left
        dev = float((np.abs(data.V(pts) - slope * pts[0])
                     / np.abs(slope * pts[0])).max())
        checks.append(check_lt(f"profile-V:{name}", dev, 1e-14,
                               f"V = {format_value(slope)} rho exactly"))
    for name in ("kasner", "alh_star"):
        data = toda.named_ansatz(name)
        built = toda.build_metric(
            data, orientation=catalog.make_metric(name).orientation)
        ref = catalog.make_metric(name)
        pts = geometry.sample_points(ref, 64, seed)
        g_b, _, _ = geometry.metric_arrays(built, pts, order=0)
        g_r, _, _ = geometry.metric_arrays(ref, pts, order=0)
        dev = float((np.abs(g_b - g_r) / (1.0 + np.abs(g_r))).max())
        checks.append(check_lt(f"build-vs-catalog:{name}", dev, 1e-12,
                               "ansatz rebuild matches the closed form"))
        s = toda.scalar_from_ansatz(data, pts[:3])
        sdev = float(np.abs(s - 1.0 / pts[0]).max())
        checks.append(check_lt(f"ansatz-scalar:{name}", sdev, 1e-6,
                               "s_g = 1/rho from the ansatz"))
    return checks


def _direct_shell_volume(chart, rho_lo: float, rho_hi: float,
                         n_radial: int = 24, n_fiber: int = 6) -> float:
    """4-dimensional volume of a radial shell by tensor quadrature."""
    nodes, weights = np.polynomial.legendre.leggauss(n_radial)
    box = np.asarray(chart.sampling_box, dtype=float)
    r = 0.5 * (rho_lo + rho_hi) + 0.5 * (rho_hi - rho_lo) * nodes
    wr = 0.5 * (rho_hi - rho_lo) * weights
    f_nodes, f_weights = np.polynomial.legendre.leggauss(n_fiber)
    total = 0.0
    fibers = []
    for k in range(1, 4):
        lo, hi = box[k]
        fibers.append((0.5 * (lo + hi) + 0.5 * (hi - lo) * f_nodes,
                       0.5 * (hi - lo) * f_weights))
    for i2, (x, wx) in enumerate(zip(*fibers[0])):
        for y, wy in zip(*fibers[1]):
            for t, wt in zip(*fibers[2]):
                pts = np.vstack([r, np.full_like(r, x), np.full_like(r, y),
                                 np.full_like(r, t)])
                g, _, _ = geometry.metric_arrays(chart, pts, order=0)
                dens = np.sqrt(np.linalg.det(g))
                total += wx * wy * wt * float(np.dot(wr, dens))
    return total


def criterion_integrals(seed: int = 0) -> list[Check]:
    checks = []
    targets = {"kasner": (0.0, -1.0, 0.0), "alh_star": (0.0, 0.0, 1.0)}
    levels = [-40.0, -30.0, -20.0, -10.0, -5.0, -3.0]
    ints = {}
    for name, (chi_term, a, b) in targets.items():
        f = toda.toda_solution(name)
        ri = toda.reduction_integrals(f, levels)
        ints[name] = ri
        dev = max(abs(ri.euler_term - chi_term), abs(ri.a - a),
                  abs(ri.b - b))
        checks.append(check_lt(f"reduction-integrals:{name}", dev, 1e-8,
                               "area/moment coefficients"))
    d0, d1 = 5.0, 15.0
    predicted = toda.volume_between(ints["kasner"], d0, d1, "circle")
    chart = catalog.make_metric("kasner")
    direct = _direct_shell_volume(chart, -d1, -d0)
    rel = abs(predicted - direct) / abs(direct)
    checks.append(check_lt("shell-volume:kasner", rel, 1e-3,
                           "volume formula vs direct quadrature"))
    return checks


def criterion_indicial() -> list[Check]:
    checks = []
    pair = toda.indicial_roots(0)
    checks.append(check_eq("indicial:lambda=0", pair.roots,
                           (Fraction(-1), Fraction(-2)),
                           "roots -1, -2"))
    exact = True
    for k in range(0, 11):
        lam = -k * (k + 1)
        pr = toda.indicial_roots(lam)
        for mu in pr.roots:
            if not isinstance(mu, Fraction) or (mu + 2) * (mu + 1) + lam != 0:
                exact = False
    checks.append(check_true("indicial:quadratic-exact", exact,
                             ref="(mu+2)(mu+1)+lambda = 0 exactly"))
    return checks


def criterion_toric() -> list[Check]:
    checks = []
    ok = all(toric.intersection_matrix(toric.hirzebruch(k))[1][1]
             == Fraction(-k) for k in range(1, 6))
    checks.append(check_true("toric:ruled-self-intersection", ok,
                             ref="section at infinity squares to -k"))
    ok = True
    window_ok = True
    for n in range(2, 7):
        for m in range(1, n):
            if math.gcd(m, n) != 1:
                continue
            table = toric.intersection_matrix(toric.fmn(m, n))
            if table[2][1] != Fraction(1, n) or table[2][3] != Fraction(1, n):
                ok = False
            for k in range(0, 4):
                tp = toric.intersection_matrix(toric.possible1(k, m, n))
                if tp[3][3] != Fraction(-m + n * k, n):
                    ok = False
                verdict = toric.log_anticanonical_check(
                    toric.possible1(k, m, n), 2)
                if verdict.ample != ((k - 1) * n < m < (k + 1) * n):
                    window_ok = False
    checks.append(check_true("toric:boundary-intersections", ok,
                             ref="D meets neighbors in 1/n; D1^2=(nk-m)/n"))
    checks.append(check_true("toric:ampleness-window", window_ok,
                             ref="ample iff (k-1)n < m < (k+1)n"))
    pairs = toric.classify_pairs(6, 3)
    ample = [p for p in pairs if p.ample]
    identified = all(p.family != "unrecognized" for p in ample)
    families = {p.family for p in ample}
    expected_std = ({"p2_hyperplane", "blp2_degree_one", "p1xp1_ruling"}
                    | {f"hirzebruch({k})" for k in range(1, 4)})
    std_present = expected_std <= families
    others_ok = all(p.family.startswith(("fmn(", "bl_fmn("))
                    for p in ample if p.family not in expected_std)
    checks.append(check_true("toric:classification-identified", identified,
                             ref="every ample pair is on the list"))
    checks.append(check_true("toric:classification-complete",
                             std_present and others_ok,
                             ref="the list is exactly the expected one"))
    return checks


def criterion_decay(seed: int = 0) -> list[Check]:
    checks = []
    radii = [8.0, 12.0, 18.0, 27.0, 40.0, 60.0, 90.0, 135.0]
    schw = catalog.make_metric("schwarzschild", {"m": 1.0})
    rate = catalog.decay_report(schw, catalog.af_model(), radii,
                                seed=seed).fitted_rate
    checks.append(check_range("decay-rate:schwarzschild", rate, 0.9, 1.1,
                              "leading falloff against the flat model"))
    const, _ = catalog.conformal_expansion_check(
        schw, [125.0, 250.0, 500.0, 1000.0], seed=seed)
    target = 12.0 ** (1.0 / 3.0)
    checks.append(check_lt("conformal-expansion:schwarzschild",
                           abs(const / target - 1.0), 0.02,
                           "rho lambda^(1/3) -> (12 m)^(1/3)"))
    tn = catalog.make_metric("taub_nut", {"m": 1.0})
    rate = catalog.decay_report(tn, catalog.alf_a_model(nut=1.0), radii,
                                seed=seed).fitted_rate
    checks.append(check_range("decay-rate:taub_nut", rate, 0.9, 1.1,
                              "falloff against the circle-bundle model"))
    return checks


def criterion_compactification(seed: int = 0) -> list[Check]:
    checks = []
    f = toda.toda_solution("alf_profile", k0=1.0)
    data = toda.ansatz_from_toda(f, seed=seed)
    eps = 0.1
    cc = toda.compactification_chart(data, epsilon=eps, seed=seed)
    checks.append(check_lt("compact:w-boundary",
                           abs(abs(cc.w(eps, 0.7)) - 1.0), 1e-12,
                           "|w| = 1 on the cut"))
    xis = np.linspace(eps, 1e-3, 30)
    mods = np.abs(cc.w(xis, 0.3))
    checks.append(check_true("compact:w-monotone",
                             bool(np.all(np.diff(mods) < 0.0)),
                             ref="|w| decreases toward the end"))
    checks.append(check_lt("compact:J-zeta", cc.j_zeta_residual, 1e-8,
                           "J d/dzeta = d/dphi"))
    checks.append(check_lt("compact:J-x-invariance", cc.j_x_variation, 1e-6,
                           "J d/dx coefficients independent of (zeta, phi)"))
    return checks


def suite_checks(samples: int = 200, seed: int = 0,
                 herm_samples: int = 12) -> list[Check]:
    checks = []
    checks.extend(criterion_ricci(samples, seed))
    checks.extend(criterion_type_table(min(samples, 64), seed))
    checks.extend(criterion_hermitian(herm_samples, seed + 3))
    checks.extend(criterion_toda(min(samples * 5, 1000), seed))
    checks.extend(criterion_integrals(seed))
    checks.extend(criterion_indicial())
    checks.extend(criterion_toric())
    checks.extend(criterion_decay(seed))
    checks.extend(criterion_compactification(seed))
    return checks


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_classify(ns) -> tuple[dict, list[Check]]:
    params = _parse_params(ns.param)
    chart = _make_chart(ns.metric, params, ns.orientation)
    info = {"metric": ns.metric, "orientation": ns.orientation,
            "metric_params": {k: format_value(v) for k, v in params.items()},
            "samples": ns.samples}
    try:
        label = geometry.classify_type(chart, n_samples=ns.samples,
                                       seed=ns.seed).label
    except InconclusiveError as exc:
        return info, [failed_check("weyl-type", exc)]
    if ns.expect:
        return info, [check_eq("weyl-type", label, ns.expect,
                               "self-dual Weyl type")]
    return info, [check_true("weyl-type", True, value=label,
                             ref="self-dual Weyl type")]


def _cmd_verify_ricci(ns) -> tuple[dict, list[Check]]:
    params = _parse_params(ns.param)
    chart = _make_chart(ns.metric, params, ns.orientation)
    info = {"metric": ns.metric, "orientation": ns.orientation,
            "metric_params": {k: format_value(v) for k, v in params.items()},
            "samples": ns.samples, "tol": format_value(ns.tol)}
    pts = geometry.sample_points(chart, ns.samples, ns.seed)
    worst = float(geometry.ricci_frame_norm(chart, pts).max())
    return info, [check_lt("ricci-frame-norm", worst, ns.tol,
                           "Ricci-flatness")]


def _cmd_verify_hermitian(ns) -> tuple[dict, list[Check]]:
    params = _parse_params(ns.param)
    chart = _make_chart(ns.metric, params, ns.orientation)
    key = (ns.metric.replace("-", "_"), ns.orientation)
    sign = next((s for n, o, s in _HERMITIAN_TABLE if (n, o) == key), 1)
    info = {"metric": ns.metric, "orientation": ns.orientation,
            "metric_params": {k: format_value(v) for k, v in params.items()},
            "samples": ns.samples}
    return info, hermitian_checks(chart, sign, ns.samples, ns.seed)


def _cmd_toda_check(ns) -> tuple[dict, list[Check]]:
    kwargs = {"k0": ns.k0} if ns.solution == "alf_profile" else {}
    f = toda.toda_solution(ns.solution, **kwargs)
    info = {"solution": ns.solution, "points": ns.points,
            "tol": format_value(ns.tol)}
    pts = toda.sample_field(f, ns.points, ns.seed)
    res = float(np.abs(toda.toda_residual(f, pts)).max())
    gauss = float(np.abs(toda.gauss_curvature_residual(f, pts)).max())
    return info, [
        check_lt("toda-residual", res, ns.tol, "Toda equation"),
        check_lt("gauss-curvature-residual", gauss, max(ns.tol, 1e-12),
                 "reduced-surface curvature consistency"),
    ]


def _cmd_toda_build(ns) -> tuple[dict, list[Check]]:
    info = {"solution": ns.solution, "samples": ns.samples}
    if ns.solution == "schwarzschild":
        f = toda.schwarzschild_toda(ns.m)
        data = toda.ansatz_from_toda(f, seed=ns.seed)
        info["m"] = format_value(ns.m)
        reference = None
        orientation = 1
    else:
        data = toda.named_ansatz(ns.solution)
        reference = catalog.make_metric(ns.solution)
        orientation = reference.orientation
    built = toda.build_metric(data, orientation=orientation)
    pts = geometry.sample_points(built, ns.samples, ns.seed)
    ric = float(geometry.ricci_frame_norm(built, pts).max())
    checks = [check_lt("built-ricci", ric, 1e-7, "Ricci-flatness")]
    if reference is not None:
        g_b, _, _ = geometry.metric_arrays(built, pts, order=0)
        g_r, _, _ = geometry.metric_arrays(reference, pts, order=0)
        dev = float((np.abs(g_b - g_r) / (1.0 + np.abs(g_r))).max())
        checks.append(check_lt("catalog-deviation", dev, 1e-12,
                               "matches the closed form"))
    s = toda.scalar_from_ansatz(data, pts[:3])
    checks.append(check_lt("ansatz-scalar",
                           float(np.abs(s - 1.0 / pts[0]).max()), 1e-6,
                           "s_g = 1/rho"))
    return info, checks


def _cmd_decay(ns) -> tuple[dict, list[Check]]:
    params = _parse_params(ns.param)
    chart = _make_chart(ns.metric, params, ns.orientation)
    try:
        lo, hi, count = ns.radii.split(":")
        radii = list(np.geomspace(float(lo), float(hi), int(count)))
    except ValueError:
        raise UsageError(f"--radii needs lo:hi:count, got {ns.radii!r}")
    models = {"af": catalog.af_model, "alf-a": catalog.alf_a_model,
              "flat": catalog.flat_model}
    if ns.model not in models:
        raise UsageError(f"unknown model {ns.model!r}")
    model = models[ns.model]()
    info = {"metric": ns.metric, "model": ns.model, "radii": ns.radii,
            "metric_params": {k: format_value(v) for k, v in params.items()}}
    rep = catalog.decay_report(chart, model, radii, seed=ns.seed)
    checks = [check_range("decay-rate", rep.fitted_rate, ns.rate_lo,
                          ns.rate_hi, "leading falloff rate")]
    if ns.expansion:
        const, _ = catalog.conformal_expansion_check(
            chart, radii, seed=ns.seed)
        m = params.get("m", 1.0)
        target = (12.0 * m) ** (1.0 / 3.0)
        checks.append(check_lt("conformal-expansion",
                               abs(const / target - 1.0), 0.02,
                               "rho lambda^(1/3) -> (12 m)^(1/3)"))
    return info, checks


def _parse_rays(text: str):
    rays = []
    for part in text.split(";"):
        xy = part.split(",")
        if len(xy) != 2:
            raise UsageError(f"--rays wants 'x1,y1;x2,y2;...', got {text!r}")
        rays.append((int(xy[0]), int(xy[1])))
    return tuple(rays)


def _toric_fan(ns):
    if ns.rays:
        return toric.Fan2D(rays=_parse_rays(ns.rays), name="cli-fan")
    params = {}
    if ns.m is not None:
        params["m"] = ns.m
    if ns.n is not None:
        params["n"] = ns.n
    if ns.k is not None:
        params["k"] = ns.k
    return toric.standard_fans(ns.fan, params)


def _cmd_toric_intersect(ns) -> tuple[dict, list[Check]]:
    fan = _toric_fan(ns)
    table = toric.intersection_matrix(fan)
    info = {
        "fan": fan.name,
        "rays": [list(v) for v in fan.rays],
        "intersection_matrix": [[format_value(x) for x in row]
                                for row in table],
    }
    checks = [check_true(
        "table-symmetric",
        all(table[i][j] == table[j][i]
            for i in range(len(fan)) for j in range(len(fan))),
        ref="intersection pairing is symmetric")]
    if ns.boundary is not None:
        verdict = toric.log_anticanonical_check(fan, ns.boundary)
        info["violated"] = list(verdict.violated)
        checks.append(check_true("log-anticanonical-ample", True,
                                 value=verdict.ample,
                                 ref="-(K+D) positivity"))
    if fan.is_smooth():
        k2 = toric.canonical_self_intersection(fan)
        checks.append(check_eq("noether", k2, Fraction(12 - len(fan)),
                               "K^2 = 12 - #rays on smooth fans"))
    return info, checks


def _cmd_toric_classify(ns) -> tuple[dict, list[Check]]:
    pairs = toric.classify_pairs(ns.max_n, ns.max_k)
    verdicts = [{"fan": p.fan.name, "ample": p.ample, "family": p.family}
                for p in pairs]
    info = {"max_n": ns.max_n, "max_k": ns.max_k, "verdicts": verdicts}
    ample = [p for p in pairs if p.ample]
    checks = [
        check_true("all-ample-identified",
                   all(p.family != "unrecognized" for p in ample),
                   ref="ample pairs land on the classification list"),
        Check("ample-count", len(ample), None, True,
              "number of ample pairs"),
    ]
    return info, checks


def _cmd_suite(ns) -> tuple[dict, list[Check]]:
    info = {"samples": ns.samples, "herm_samples": ns.herm_samples}
    return info, suite_checks(ns.samples, ns.seed, ns.herm_samples)


# ---------------------------------------------------------------------------
# Argument parsing and entry point
# ---------------------------------------------------------------------------


def _add_common(p, samples_default=64):
    p.add_argument("--samples", type=int, default=samples_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv", "text"),
                   default="json")
    p.add_argument("--output", default=None,
                   help="report path (default: stdout); relative paths are "
                        "resolved against $INSTANTON_REPORT_DIR when set")
    p.add_argument("--config", default=None,
                   help="key=value file overriding flag defaults")


def _add_metric(p):
    p.add_argument("--metric", required=True)
    p.add_argument("--orientation", choices=("std", "reversed"),
                   default="std")
    p.add_argument("--param", action="append", default=[],
                   help="metric parameter key=value (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="instanton",
        description="Verification suites for Ricci-flat 4-metrics, their "
                    "conformal Kahler structure, Toda-ansatz builds, and "
                    "toric compactification data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="self-dual Weyl type of a family")
    _add_metric(p)
    p.add_argument("--expect", choices=("I", "II", "III"), default=None)
    _add_common(p)
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("verify-ricci", help="max Ricci frame norm")
    _add_metric(p)
    p.add_argument("--tol", type=float, default=1e-7)
    _add_common(p, samples_default=200)
    p.set_defaults(handler=_cmd_verify_ricci)

    p = sub.add_parser("verify-hermitian",
                       help="conformal Kahler identities on a type II chart")
    _add_metric(p)
    _add_common(p, samples_default=12)
    p.set_defaults(handler=_cmd_verify_hermitian)

    p = sub.add_parser("toda-check", help="residuals of a Toda solution")
    p.add_argument("--solution", required=True,
                   choices=("kasner", "alh_star", "sphere_profile",
                            "alf_profile"))
    p.add_argument("--k0", type=float, default=1.0)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-14)
    _add_common(p)
    p.set_defaults(handler=_cmd_toda_check)

    p = sub.add_parser("toda-build",
                       help="build a metric from ansatz data and verify it")
    p.add_argument("--solution", required=True,
                   choices=("kasner", "alh_star", "schwarzschild"))
    p.add_argument("--m", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(handler=_cmd_toda_build)

    p = sub.add_parser("decay", help="asymptotic falloff rate fit")
    _add_metric(p)
    p.add_argument("--model", required=True)
    p.add_argument("--radii", default="8:135:8")
    p.add_argument("--rate-lo", type=float, default=0.9)
    p.add_argument("--rate-hi", type=float, default=1.1)
    p.add_argument("--expansion", action="store_true",
                   help="also check the conformal-factor expansion constant")
    _add_common(p)
    p.set_defaults(handler=_cmd_decay)

    p = sub.add_parser("toric-intersect",
                       help="exact intersection matrix of a fan")
    p.add_argument("--fan", default="projective_plane")
    p.add_argument("--rays", default=None,
                   help="explicit rays 'x1,y1;x2,y2;...'")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--boundary", type=int, default=None)
    _add_common(p)
    p.set_defaults(handler=_cmd_toric_intersect)

    p = sub.add_parser("toric-classify",
                       help="enumerate candidate compactification pairs")
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--max-k", type=int, default=3)
    _add_common(p)
    p.set_defaults(handler=_cmd_toric_classify)

    p = sub.add_parser("suite", help="run every acceptance battery")
    p.add_argument("--herm-samples", type=int, default=12)
    _add_common(p, samples_default=200)
    p.set_defaults(handler=_cmd_suite)

    return parser


def _load_config(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"config line without '=': {line!r}")
                key, _, val = line.partition("=")
                out[key.strip().replace("-", "_")] = val.strip()
        return out
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1] if \
        argv.index("--config") + 1 < len(argv) else None
    if path is None:
        raise UsageError("--config needs a file path")
    cfg = _load_config(path)
    coerced = {}
    for key, val in cfg.items():
        for cast in (int, float):
            try:
                coerced[key] = cast(val)
                break
            except ValueError:
                continue
        else:
            coerced[key] = val
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**{k: v for k, v in coerced.items()
                               if any(a.dest == k for a in sp._actions)})


def _resolve_output(path: str | None) -> str | None:
    if path is None:
        return None
    if not os.path.isabs(path):
        base = os.environ.get("INSTANTON_REPORT_DIR")
        if base:
            return os.path.join(base, path)
    return path


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            ns = parser.parse_args(argv)
        except SystemExit as exc:
            return 0 if exc.code == 0 else 2
        params, checks = ns.handler(ns)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, TypeMismatch, SignError, InconclusiveError,
            IntegrationError, FitError) as exc:
        # a well-formed request whose mathematical check failed outright
        report = build_report(argv[0], {}, getattr(ns, "seed", 0),
                              [failed_check("run", exc)])
        sys.stdout.write(emit_report(report, "text"))
        return 1
    report = build_report(ns.command, params, ns.seed, checks)
    text = emit_report(report, ns.format)
    out = _resolve_output(ns.output)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)
        summary = "PASS" if report["pass"] else "FAIL"
        print(f"{summary}: report written to {out}", file=sys.stderr)
    return 0 if report["pass"] else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
