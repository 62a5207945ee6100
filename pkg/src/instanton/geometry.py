"""Curvature engine and self-dual Weyl classifier for 4-metric charts.

Metric components are scalar fields evaluated through the jet kernel, so all
curvature quantities come from exact order-2 Taylor data at each point.  The
self-dual Weyl operator is expressed in an orthonormal basis of self-dual
2-forms built by Gram-Schmidt on the coordinate frame (in declared coordinate
order), oriented by the chart's orientation sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from . import jets as jt
from .errors import (DomainError, InconclusiveError, NonPositiveDefinite,
                     TypeMismatch)

# Tolerances of the type trichotomy (see classify_type).
TOL_EQUAL = 1e-6   # relative gap below which two eigenvalues are "equal"
TOL_ZERO = 1e-9    # relative size below which the operator is "zero"


# ---------------------------------------------------------------------------
# Metric charts and component providers
# ---------------------------------------------------------------------------


class ClosedFormComponents:
    """Symmetric grid of closed-form scalar fields g_ij(x0, x1, x2, x3).

    ``entries`` maps (i, j) with i <= j to a jet-capable callable; missing
    entries are zero.
    """

    def __init__(self, entries: dict):
        self.entries = {tuple(sorted(k)): v for k, v in entries.items()}

    def metric_jets(self, points: np.ndarray, order: int,
                    cfg: jt.DiffConfig | None = None) -> list:
        xs = jt.Jet.variables(points, order)
        batch = points.shape[1:]
        grid = [[None] * 4 for _ in range(4)]
        for i in range(4):
            for j in range(i, 4):
                f = self.entries.get((i, j))
                if f is None:
                    grid[i][j] = grid[j][i] = jt.Jet.constant(0.0, order, batch)
                    continue
                y = f(*xs)
                if not isinstance(y, jt.Jet):
                    y = jt.Jet.constant(np.broadcast_to(np.asarray(y, float),
                                                        batch).copy(),
                                        order, batch)
                grid[i][j] = grid[j][i] = y
        return grid


class ConformalComponents:
    """Components factor(p) * base_ij(p) with a black-box conformal factor.

    The factor only supports value evaluation, so its jets come from finite
    differences while the base metric keeps exact jets.
    """

    def __init__(self, base: "MetricChart", factor: Callable,
                 cfg: jt.DiffConfig | None = None):
        self.base = base
        self.factor = factor
        self.cfg = cfg or jt.DiffConfig(fd_step_scale=1e-3)

    def metric_jets(self, points: np.ndarray, order: int,
                    cfg: jt.DiffConfig | None = None) -> list:
        base_grid = self.base.components.metric_jets(points, order)
        fj = jt.numeric_jet(self.factor, points, order, self.cfg,
                            scale=self.base.fd_scale(points))
        return [[fj * base_grid[i][j] for j in range(4)] for i in range(4)]


@dataclass(frozen=True)
class MetricChart:
    """A 4-metric given by closed-form components on a coordinate box."""

    coord_names: tuple
    components: object
    domain: Callable            # (4, N) -> bool array (interior, non-singular)
    sampling_box: tuple         # 4 pairs (lo, hi)
    orientation: int = 1
    scale_hint: float = 1.0     # characteristic coordinate scale for FD steps
    radial_proxy: Optional[Callable] = None   # (4, N) -> distance-like values
    fd_scale_fn: Optional[Callable] = None    # (4, N) -> per-point step scales
    name: str = "chart"

    def fd_scale(self, points: np.ndarray):
        """Per-coordinate step scale for finite differences at these points."""
        if self.fd_scale_fn is not None:
            return self.fd_scale_fn(points)
        return self.scale_hint

    def require_domain(self, points: np.ndarray) -> None:
        ok = np.asarray(self.domain(points))
        if not np.all(ok):
            raise DomainError(f"{self.name}: point outside chart domain")


def orientation_flip(chart: MetricChart) -> MetricChart:
    """Same components, opposite orientation of the coordinate volume form."""
    return replace(chart, orientation=-chart.orientation)


# ---------------------------------------------------------------------------
# Curvature arrays (batched)
# ---------------------------------------------------------------------------


def _as_batch(points) -> tuple[np.ndarray, bool]:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        return points[:, None], True
    return points, False


def metric_arrays(chart: MetricChart, points: np.ndarray, order: int = 2):
    """Evaluate g, dg, d2g at points (4, N): shapes (N,4,4), (N,4,4,4), ...

    ``dg[n, k, i, j]`` is the partial derivative of g_ij along coordinate k.
    """
    grid = chart.components.metric_jets(points, order)
    N = points.shape[1]
    g = np.empty((N, 4, 4))
    dg = np.empty((N, 4, 4, 4)) if order >= 1 else None
    d2g = np.empty((N, 4, 4, 4, 4)) if order >= 2 else None
    eye = np.eye(4, dtype=int)
    for i in range(4):
        for j in range(4):
            jet = grid[i][j]
            g[:, i, j] = jet.value
            if order >= 1:
                for k in range(4):
                    dg[:, k, i, j] = jet.partial(tuple(eye[k]))
            if order >= 2:
                for k in range(4):
                    for l in range(k, 4):
                        val = jet.partial(tuple(eye[k] + eye[l]))
                        d2g[:, k, l, i, j] = val
                        d2g[:, l, k, i, j] = val
    return g, dg, d2g


@dataclass
class CurvatureBundle:
    """Levi-Civita curvature data of h at one or many points (lowered Riemann)."""

    point: np.ndarray
    metric: np.ndarray
    inverse: np.ndarray
    christoffel: np.ndarray   # Gamma^l_{ij} -> [..., l, i, j]
    riemann: np.ndarray       # R_{ijkl}
    ricci: np.ndarray
    scalar: np.ndarray
    weyl: np.ndarray          # lowered Weyl tensor C_{ijkl}
    frame: np.ndarray         # orthonormal frame, columns e_a^i, oriented


def _orthonormal_frame(g: np.ndarray, orientation: int) -> np.ndarray:
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as error:
        raise NonPositiveDefinite(str(error)) from error
    E = np.linalg.inv(L).transpose(0, 2, 1)  # upper triangular columns
    if orientation < 0:
        E = E.copy()
        E[:, :, 3] = -E[:, :, 3]
    return E


def curvature_arrays(chart: MetricChart, points: np.ndarray) -> CurvatureBundle:
    """Batched curvature of the chart metric at points of shape (4, N)."""
    chart.require_domain(points)
    g, dg, d2g = metric_arrays(chart, points, order=2)
    ginv = np.linalg.inv(g)
    # Gamma_low[n, m, i, j] = 1/2 (dg[n,i,j,m] + dg[n,j,i,m] - dg[n,m,i,j])
    gl = 0.5 * (np.einsum('nijm->nmij', dg) + np.einsum('njim->nmij', dg)
                - dg)
    gamma = np.einsum('nlm,nmij->nlij', ginv, gl, optimize=True)
    # dGamma[n, p, l, i, j] = partial_p Gamma^l_{ij}
    dginv = -np.einsum('nla,npab,nbm->nplm', ginv, dg, ginv, optimize=True)
    dgl = 0.5 * (np.einsum('npijm->npmij', d2g)
                 + np.einsum('npjim->npmij', d2g) - d2g)
    dgamma = (np.einsum('nplm,nmij->nplij', dginv, gl, optimize=True)
              + np.einsum('nlm,npmij->nplij', ginv, dgl, optimize=True))
    # R^r_{s m v} = d_m Gamma^r_{vs} - d_v Gamma^r_{ms}
    #              + Gamma^r_{ml} Gamma^l_{vs} - Gamma^r_{vl} Gamma^l_{ms}
    rup = (np.einsum('nmrvs->nrsmv', dgamma)
           - np.einsum('nvrms->nrsmv', dgamma)
           + np.einsum('nrml,nlvs->nrsmv', gamma, gamma, optimize=True)
           - np.einsum('nrvl,nlms->nrsmv', gamma, gamma, optimize=True))
    riem = np.einsum('nra,nasmv->nrsmv', g, rup, optimize=True)
    ricci = np.einsum('nmsmv->nsv', rup)
    scal = np.einsum('nsv,nsv->n', ginv, ricci)
    # Weyl in 4 dimensions.
    s6 = scal[:, None, None, None, None] / 6.0
    gik = g[:, :, None, :, None]
    weyl = (riem
            - 0.5 * (np.einsum('nik,njl->nijkl', g, ricci)
                     - np.einsum('nil,njk->nijkl', g, ricci)
                     - np.einsum('njk,nil->nijkl', g, ricci)
                     + np.einsum('njl,nik->nijkl', g, ricci))
            + s6 * (np.einsum('nik,njl->nijkl', g, g)
                    - np.einsum('nil,njk->nijkl', g, g)))
    frame = _orthonormal_frame(g, chart.orientation)
    return CurvatureBundle(point=points, metric=g, inverse=ginv,
                           christoffel=gamma, riemann=riem, ricci=ricci,
                           scalar=scal, weyl=weyl, frame=frame)


def curvature_bundle(chart: MetricChart, p: Sequence[float]) -> CurvatureBundle:
    """Single-point convenience wrapper around :func:`curvature_arrays`."""
    pts, _ = _as_batch(np.asarray(p, dtype=float))
    b = curvature_arrays(chart, pts)
    return CurvatureBundle(point=np.asarray(p, float), metric=b.metric[0],
                           inverse=b.inverse[0], christoffel=b.christoffel[0],
                           riemann=b.riemann[0], ricci=b.ricci[0],
                           scalar=b.scalar[0], weyl=b.weyl[0],
                           frame=b.frame[0])


def frame_tensor(bundle_frame: np.ndarray, tensor: np.ndarray,
                 rank: int) -> np.ndarray:
    """Express a lowered tensor in the orthonormal frame (batched)."""
    out = tensor
    for axis in range(1, rank + 1):
        out = np.moveaxis(
            np.einsum('nia,n...i->n...a', bundle_frame,
                      np.moveaxis(out, axis, -1), optimize=True), -1, axis)
    return out


def ricci_frame_norm(chart: MetricChart, points: np.ndarray) -> np.ndarray:
    """Frobenius norm of Ricci in an orthonormal frame at each point."""
    b = curvature_arrays(chart, points)
    ric_f = frame_tensor(b.frame, b.ricci, 2)
    return np.sqrt(np.einsum('nab,nab->n', ric_f, ric_f))


def riemann_frame_norm_from_bundle(b: CurvatureBundle) -> np.ndarray:
    rm = frame_tensor(b.frame, b.riemann, 4)
    return np.sqrt(np.einsum('nijkl,nijkl->n', rm, rm))


# ---------------------------------------------------------------------------
# Self-dual Weyl operator
# ---------------------------------------------------------------------------


def _form_basis(sign: float) -> np.ndarray:
    """Orthonormal (anti-)self-dual 2-form basis in frame indices, (3,4,4)."""
    basis = np.zeros((3, 4, 4))
    pairs = [((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2))]
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for A, ((p, q), (r, s)) in enumerate(pairs):
        basis[A, p, q] += inv_sqrt2
        basis[A, q, p] -= inv_sqrt2
        basis[A, r, s] += sign * inv_sqrt2
        basis[A, s, r] -= sign * inv_sqrt2
    return basis


_PHI_PLUS = _form_basis(+1.0)
_PHI_MINUS = _form_basis(-1.0)


@dataclass
class WeylPlusOperator:
    """W+ on Lambda+ at one or many points, with lambda = 2 sqrt(6) |W+|."""

    point: np.ndarray
    basis: np.ndarray         # frame columns e_a^i used to build Lambda+
    matrix: np.ndarray        # (..., 3, 3) symmetric trace-free
    eigenvalues: np.ndarray   # (..., 3) ascending
    lam: np.ndarray           # 2 sqrt(6) Frobenius norm
    curvature_scale: np.ndarray  # frame norm of the full Riemann tensor


def weyl_operator_arrays(chart: MetricChart, points: np.ndarray,
                         dual: bool = False) -> WeylPlusOperator:
    b = curvature_arrays(chart, points)
    weyl_f = frame_tensor(b.frame, b.weyl, 4)
    phi = _PHI_MINUS if dual else _PHI_PLUS
    mat = 0.25 * np.einsum('Aab,nabcd,Bcd->nAB', phi, weyl_f, phi,
                           optimize=True)
    eig = np.linalg.eigvalsh(mat)
    lam = 2.0 * np.sqrt(6.0) * np.sqrt(np.einsum('nAB,nAB->n', mat, mat))
    return WeylPlusOperator(point=points, basis=b.frame, matrix=mat,
                            eigenvalues=eig, lam=lam,
                            curvature_scale=riemann_frame_norm_from_bundle(b))


def weyl_plus(chart: MetricChart, p: Sequence[float]) -> WeylPlusOperator:
    pts, _ = _as_batch(np.asarray(p, dtype=float))
    op = weyl_operator_arrays(chart, pts)
    return WeylPlusOperator(point=np.asarray(p, float), basis=op.basis[0],
                            matrix=op.matrix[0], eigenvalues=op.eigenvalues[0],
                            lam=op.lam[0],
                            curvature_scale=op.curvature_scale[0])


def weyl_minus(chart: MetricChart, p: Sequence[float]) -> WeylPlusOperator:
    pts, _ = _as_batch(np.asarray(p, dtype=float))
    op = weyl_operator_arrays(chart, pts, dual=True)
    return WeylPlusOperator(point=np.asarray(p, float), basis=op.basis[0],
                            matrix=op.matrix[0], eigenvalues=op.eigenvalues[0],
                            lam=op.lam[0],
                            curvature_scale=op.curvature_scale[0])


# ---------------------------------------------------------------------------
# Sampling and the type trichotomy
# ---------------------------------------------------------------------------


def sample_points(chart: MetricChart, n: int, seed: int) -> np.ndarray:
    """Low-discrepancy samples in the chart's box, avoiding the singular locus."""
    box = np.asarray(chart.sampling_box, dtype=float)
    sampler = qmc.Halton(d=4, seed=seed)
    collected = []
    total = 0
    for _ in range(20):
        raw = sampler.random(max(n, 8))
        pts = (box[:, 0] + raw * (box[:, 1] - box[:, 0])).T  # (4, m)
        ok = np.asarray(chart.domain(pts))
        pts = pts[:, ok]
        collected.append(pts)
        total += pts.shape[1]
        if total >= n:
            break
    pts = np.concatenate(collected, axis=1)
    if pts.shape[1] < n:
        raise DomainError(f"{chart.name}: could not draw {n} interior samples")
    return pts[:, :n]


@dataclass
class TypeLabel:
    """Verdict of the eigenvalue-multiplicity trichotomy for W+."""

    label: str                   # "I", "II", or "III"
    diagnostics: dict = field(default_factory=dict)
    samples: np.ndarray = None


def classify_type(chart: MetricChart, n_samples: int = 64,
                  seed: int = 0) -> TypeLabel:
    """Classify W+ by its eigenvalue multiplicities over seeded samples.

    Two eigenvalues count as equal when their gap is below TOL_EQUAL relative
    to (1 + max |mu|); the operator counts as zero when max |mu| is below
    TOL_ZERO relative to (1 + curvature scale).  Gaps or magnitudes falling
    between the two thresholds are ambiguous and raise InconclusiveError.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    pts = sample_points(chart, n_samples, seed)
    op = weyl_operator_arrays(chart, pts)
    mu = op.eigenvalues                       # (N, 3) ascending
    max_mu = np.abs(mu).max(axis=1)
    zero_scale = 1.0 + op.curvature_scale
    is_zero = max_mu < TOL_ZERO * zero_scale
    zero_ambiguous = (~is_zero) & (max_mu < TOL_EQUAL * zero_scale)
    if np.any(zero_ambiguous):
        raise InconclusiveError(
            f"{chart.name}: |W+| in the ambiguity band at "
            f"{int(zero_ambiguous.sum())} samples")
    gap_scale = 1.0 + max_mu
    gaps = np.stack([mu[:, 1] - mu[:, 0], mu[:, 2] - mu[:, 1]], axis=1)
    equal = gaps < TOL_ZERO * gap_scale[:, None]
    distinct = gaps >= TOL_EQUAL * gap_scale[:, None]
    gap_ambiguous = (~equal) & (~distinct) & (~is_zero[:, None])
    if np.any(gap_ambiguous):
        raise InconclusiveError(
            f"{chart.name}: eigenvalue gap in the ambiguity band at "
            f"{int(gap_ambiguous.any(axis=1).sum())} samples")
    n_distinct = 3 - equal.sum(axis=1)
    diagnostics = {
        "max_abs_eigenvalue": float(max_mu.max()),
        "min_gap_nonequal": float(gaps[~equal].min()) if np.any(~equal) else 0.0,
        "seed": seed,
        "n_samples": int(n_samples),
    }
    if np.all(is_zero):
        return TypeLabel("I", diagnostics, pts)
    if np.any(n_distinct >= 3):
        return TypeLabel("III", diagnostics, pts)
    if np.all((n_distinct == 2) | is_zero):
        return TypeLabel("II", diagnostics, pts)
    raise InconclusiveError(f"{chart.name}: mixed multiplicity pattern")


def lambda_field(chart: MetricChart, check: bool = True,
                 n_samples: int = 32, seed: int = 0) -> Callable:
    """The conformal factor lambda = 2 sqrt(6) |W+| as a black-box field."""
    if check:
        verdict = classify_type(chart, n_samples=n_samples, seed=seed)
        if verdict.label != "II":
            raise TypeMismatch(
                f"{chart.name}: lambda field needs a type II chart, got "
                f"{verdict.label}")

    def field_(points: np.ndarray) -> np.ndarray:
        pts, single = _as_batch(points)
        lam = weyl_operator_arrays(chart, pts).lam
        return lam[0] if single else lam

    return field_
