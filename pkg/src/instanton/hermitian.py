"""Conformal Kahler structure attached to a type II chart.

From a type II metric h this module builds the conformally rescaled metric
g = lambda^(2/3) h, the distinguished eigen-two-form of W+ with its complex
structure J, the extremal vector field, and pointwise residual checks for
every identity relating them: the scalar-curvature identity |s_g| =
lambda^(1/3), the conformal PDE, the Killing property, parallelism of the
Kahler form, the moment-map equation, and the positivity of the curvature
form built from s_g and its differential.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import jets as jt
from .errors import EigenformBranchError, TypeMismatch
from .geometry import (ConformalComponents, MetricChart, _as_batch,
                       classify_type, curvature_arrays, frame_tensor,
                       lambda_field, metric_arrays, sample_points,
                       weyl_operator_arrays, _orthonormal_frame)

_THIRD = 1.0 / 3.0
# step scale used along directions where lambda is constant; steps become
# fd_step_scale * boost * this value, i.e. O(0.1).
_FLAT_STEP_SCALE = 100.0


def _flat_directions(lam: Callable, probes: np.ndarray,
                     box: np.ndarray, domain: Callable) -> tuple:
    """Coordinate directions along which the lambda field is constant.

    Tested by comparing lambda at small coordinate shifts of a handful of
    probe points; relative variation below 1e-9 marks a symmetry direction.
    """
    base_vals = np.asarray(lam(probes))
    ref = np.abs(base_vals).max() + 1e-300
    flat = []
    for k in range(4):
        delta = 0.05 * (box[k, 1] - box[k, 0])
        variation = None
        for s in (+1.0, -1.0):
            shifted = probes.copy()
            shifted[k] += s * delta
            ok = domain(shifted)
            if not np.any(ok):
                continue
            dev = np.abs(np.asarray(lam(shifted[:, ok]))
                         - base_vals[ok]).max()
            variation = dev if variation is None else max(variation, dev)
        # no verifiable shift: keep the conservative small step
        flat.append(variation is not None and variation < 1e-9 * ref)
    return tuple(flat)


# ---------------------------------------------------------------------------
# Conformal pair
# ---------------------------------------------------------------------------


@dataclass
class ConformalPair:
    """(h, lambda^(1/3), g = lambda^(2/3) h) with derived Kahler data."""

    base: MetricChart
    lam: Callable                 # lambda field, value-only evaluator
    kahler: MetricChart           # conformal chart g
    sign: int                     # sign of s_g (fixed at the base point)
    base_point: np.ndarray
    fd_cfg: jt.DiffConfig
    flat_dirs: tuple = (False, False, False, False)

    def scalar_fd_scale(self, points):
        """Step scales for differencing lambda-derived scalar fields.

        Directions along which lambda is constant (symmetry directions)
        take O(1) steps: the difference numerator there is pure rounding
        noise, and a small step only amplifies it.
        """
        pts, _ = _as_batch(points)
        sc = np.asarray(self.base.fd_scale(pts), dtype=float)
        if sc.ndim == 0:
            sc = np.full((4, pts.shape[1]), float(sc))
        elif sc.ndim == 1:
            sc = np.repeat(sc[:, None], pts.shape[1], axis=1)
        else:
            sc = sc.copy()
        # The lambda evaluation carries a rounding floor of order 1e-12
        # (relative), so differencing it wants larger steps than a smooth
        # closed form would: x10 relative in the varying directions.
        sc *= 10.0
        for k in range(4):
            if self.flat_dirs[k]:
                sc[k] = _FLAT_STEP_SCALE
        return sc

    def lambda_third(self, points):
        return np.asarray(self.lam(points)) ** _THIRD

    def conformal_scalar(self, points):
        """The signed conformal factor sign * lambda^(1/3) (equals s_g)."""
        return self.sign * self.lambda_third(points)

    def scalar_direct(self, points):
        """Scalar curvature of g, computed from the conformal rescaling law.

        For g = e^(2 phi) h with h Ricci-flat, the scalar curvature is
        s_g = -6 e^(-2 phi) (Delta_h phi + |d phi|_h^2).  Evaluating the
        right-hand side keeps the finite differences of phi contracted
        against the well-conditioned base inverse metric; forming the full
        curvature of the rescaled chart instead amplifies the rounding
        floor of the angular second differences by the metric anisotropy.
        """
        pts, single = _as_batch(points)

        def phi_field(q):
            return _THIRD * np.log(np.asarray(self.lam(q)))

        jet = jt.numeric_jet(phi_field, pts, 2, self.fd_cfg,
                             scale=self.scalar_fd_scale(pts))
        eye = np.eye(4, dtype=int)
        grad = np.stack([jet.partial(tuple(eye[k])) for k in range(4)], axis=1)
        hess = np.empty((pts.shape[1], 4, 4))
        for a in range(4):
            for b in range(a, 4):
                val = jet.partial(tuple(eye[a] + eye[b]))
                hess[:, a, b] = hess[:, b, a] = val
        bundle = curvature_arrays(self.base, pts)
        lap = (np.einsum('nab,nab->n', bundle.inverse, hess)
               - np.einsum('nab,nkab,nk->n', bundle.inverse,
                           bundle.christoffel, grad, optimize=True))
        dphi2 = np.einsum('nab,na,nb->n', bundle.inverse, grad, grad,
                          optimize=True)
        phi = phi_field(pts)
        s = -6.0 * np.exp(-2.0 * phi) * (lap + dphi2)
        return s[0] if single else s


def conformal_pair(chart: MetricChart, n_samples: int = 32,
                   seed: int = 0) -> ConformalPair:
    """Build the conformal pair; raises TypeMismatch off the type II locus."""
    verdict = classify_type(chart, n_samples=n_samples, seed=seed)
    if verdict.label != "II":
        raise TypeMismatch(f"{chart.name}: conformal structure needs type II, "
                           f"got {verdict.label}")
    lam = lambda_field(chart, check=False)
    fd_cfg = jt.DiffConfig(fd_step_scale=1e-3)

    def factor(points):
        return np.asarray(lam(points)) ** (2.0 * _THIRD)

    kahler = MetricChart(
        coord_names=chart.coord_names,
        components=ConformalComponents(chart, factor, fd_cfg),
        domain=chart.domain,
        sampling_box=chart.sampling_box,
        orientation=chart.orientation,
        scale_hint=chart.scale_hint,
        radial_proxy=chart.radial_proxy,
        fd_scale_fn=chart.fd_scale_fn,
        name=chart.name + "+conformal")
    box = np.asarray(chart.sampling_box, dtype=float)
    base_point = box.mean(axis=1)
    if not np.all(chart.domain(base_point[:, None])):
        base_point = sample_points(chart, 1, seed=seed)[:, 0]
    probes = sample_points(chart, 8, seed=seed + 1)
    flat = _flat_directions(lam, probes, box, chart.domain)
    pair = ConformalPair(base=chart, lam=lam, kahler=kahler, sign=+1,
                         base_point=base_point, fd_cfg=fd_cfg,
                         flat_dirs=flat)
    s0 = float(pair.scalar_direct(base_point))
    pair.sign = 1 if s0 >= 0 else -1
    return pair


# ---------------------------------------------------------------------------
# Kahler structure: eigenform and complex structure
# ---------------------------------------------------------------------------


@dataclass
class KahlerStructure:
    """Distinguished eigenform of W+ and the complex structure it induces."""

    pair: ConformalPair
    sign_choice: int
    base_alpha: np.ndarray      # reference coordinate components for alignment

    def alpha(self, points) -> np.ndarray:
        """h-unit eigenform of the non-repeated W+ eigenvalue, aligned."""
        pts, single = _as_batch(points)
        chart = self.pair.base
        op = weyl_operator_arrays(chart, pts)
        mu = op.eigenvalues                      # (N, 3) ascending
        gap_low = mu[:, 1] - mu[:, 0]
        gap_high = mu[:, 2] - mu[:, 1]
        scale = 1.0 + np.abs(mu).max(axis=1)
        if np.any(np.minimum(np.maximum(gap_low, gap_high), 1e9)
                  < 1e-9 * scale):
            raise EigenformBranchError(
                f"{chart.name}: repeated-eigenvalue structure degenerates")
        _, vecs = np.linalg.eigh(op.matrix)
        pick_top = gap_high >= gap_low           # farthest-from-the-pair rule
        idx = np.where(pick_top, 2, 0)
        v = np.take_along_axis(vecs, idx[:, None, None], axis=2)[:, :, 0]
        # Assemble the 2-form in the orthonormal frame, then lower to
        # coordinates: alpha_coord = L alpha_frame L^T with L = E^{-1}.
        from .geometry import _PHI_PLUS
        alpha_f = np.einsum('nA,Aab->nab', v, _PHI_PLUS)
        L = np.linalg.inv(op.basis)              # rows: frame covectors
        alpha = np.einsum('nai,nab,nbj->nij', L, alpha_f, L, optimize=True)
        overlap = np.einsum('nij,ij->n', alpha, self.base_alpha)
        if np.any(np.abs(overlap) < 1e-8 * np.abs(alpha).max()):
            raise EigenformBranchError(
                f"{chart.name}: eigenform alignment with the base point lost")
        alpha = alpha * np.sign(overlap)[:, None, None] * self.sign_choice
        return alpha[0] if single else alpha

    def omega_J(self, points):
        """Kahler form scaled so |omega|_g^2 = 2, and J with J^2 = -id."""
        pts, single = _as_batch(points)
        alpha = self.alpha(pts)
        g_h, _, _ = metric_arrays(self.pair.base, pts, order=0)
        lam23 = np.asarray(self.pair.lam(pts)) ** (2.0 * _THIRD)
        omega = np.sqrt(2.0) * lam23[:, None, None] * alpha
        hinv = np.linalg.inv(g_h)
        J = -np.sqrt(2.0) * np.einsum('nik,nkj->nij', hinv, alpha,
                                      optimize=True)
        if single:
            return omega[0], J[0]
        return omega, J


def kahler_structure(pair: ConformalPair,
                     sign_choice: int | None = None) -> KahlerStructure:
    """Fix the eigenform branch at the pair's base point and return it.

    The overall sign is propagated from the base point by continuity (sign of
    the coordinate-component overlap).  When ``sign_choice`` is omitted it is
    fixed so the first nonzero coordinate component of the base eigenform is
    positive.
    """
    stub = KahlerStructure(pair=pair, sign_choice=1,
                           base_alpha=np.eye(4))
    # Bootstrap: compute the unaligned eigenform at the base point.
    pts = pair.base_point[:, None]
    chart = pair.base
    op = weyl_operator_arrays(chart, pts)
    mu = op.eigenvalues
    pick_top = (mu[0, 2] - mu[0, 1]) >= (mu[0, 1] - mu[0, 0])
    _, vecs = np.linalg.eigh(op.matrix)
    v = vecs[0, :, 2 if pick_top else 0]
    from .geometry import _PHI_PLUS
    alpha_f = np.einsum('A,Aab->ab', v, _PHI_PLUS)
    L = np.linalg.inv(op.basis[0])
    alpha0 = L.T @ alpha_f @ L
    if sign_choice is None:
        flat = alpha0.ravel()
        lead = flat[np.argmax(np.abs(flat) > 1e-12 * np.abs(flat).max())]
        sign_choice = 1 if lead > 0 else -1
        alpha0 = alpha0 * sign_choice
        sign_choice = 1
    return KahlerStructure(pair=pair, sign_choice=sign_choice,
                           base_alpha=alpha0)


# ---------------------------------------------------------------------------
# Residual checks
# ---------------------------------------------------------------------------


def default_samples(pair: ConformalPair, n: int, seed: int) -> np.ndarray:
    return sample_points(pair.base, n, seed)


def scalar_identity_residual(pair: ConformalPair, samples) -> float:
    """sup | |s_g| - lambda^(1/3) | with s_g computed directly from g."""
    pts, _ = _as_batch(samples)
    s = pair.scalar_direct(pts)
    return float(np.abs(np.abs(s) - pair.lambda_third(pts)).max())


def conformal_pde_residual(pair: ConformalPair, samples) -> float:
    """sup |6 Delta_h t + t^4| for the signed conformal scalar t.

    For t > 0 this is the usual equation in lambda^(1/3); on the negative
    branch the same signed equation is the consistent variant.
    """
    pts, _ = _as_batch(samples)
    chart = pair.base

    def t_field(q):
        return pair.conformal_scalar(q)

    jet = jt.numeric_jet(t_field, pts, 2, pair.fd_cfg,
                         scale=pair.scalar_fd_scale(pts))
    eye = np.eye(4, dtype=int)
    grad = np.stack([jet.partial(tuple(eye[k])) for k in range(4)], axis=1)
    hess = np.empty((pts.shape[1], 4, 4))
    for a in range(4):
        for b in range(a, 4):
            val = jet.partial(tuple(eye[a] + eye[b]))
            hess[:, a, b] = hess[:, b, a] = val
    bundle = curvature_arrays(chart, pts)
    lap = (np.einsum('nab,nab->n', bundle.inverse, hess)
           - np.einsum('nab,nkab,nk->n', bundle.inverse, bundle.christoffel,
                       grad, optimize=True))
    t = pair.conformal_scalar(pts)
    return float(np.abs(6.0 * lap + t ** 4).max())


@dataclass
class ExtremalField:
    """The extremal vector field K = J grad_g s_g with moment s_g."""

    pair: ConformalPair
    structure: KahlerStructure

    def moment(self, points):
        return self.pair.conformal_scalar(points)

    def K(self, points) -> np.ndarray:
        pts, single = _as_batch(points)
        jet = jt.numeric_jet(self.pair.conformal_scalar, pts, 1,
                             self.pair.fd_cfg,
                             scale=self.pair.scalar_fd_scale(pts))
        eye = np.eye(4, dtype=int)
        ds = np.stack([jet.partial(tuple(eye[k])) for k in range(4)], axis=1)
        g, _, _ = metric_arrays(self.pair.kahler, pts, order=0)
        grad = np.einsum('nij,nj->ni', np.linalg.inv(g), ds, optimize=True)
        _, J = self.structure.omega_J(pts)
        K = np.einsum('nij,nj->ni', J, grad, optimize=True)
        return K[0] if single else K

    def K_via_base(self, points) -> np.ndarray:
        """Equivalent formula -sign * J grad_h lambda^(-1/3)."""
        pts, single = _as_batch(points)

        def lam_inv_third(q):
            return np.asarray(self.pair.lam(q)) ** (-_THIRD)

        jet = jt.numeric_jet(lam_inv_third, pts, 1, self.pair.fd_cfg,
                             scale=self.pair.scalar_fd_scale(pts))
        eye = np.eye(4, dtype=int)
        df = np.stack([jet.partial(tuple(eye[k])) for k in range(4)], axis=1)
        h, _, _ = metric_arrays(self.pair.base, pts, order=0)
        grad = np.einsum('nij,nj->ni', np.linalg.inv(h), df, optimize=True)
        _, J = self.structure.omega_J(pts)
        K = -self.pair.sign * np.einsum('nij,nj->ni', J, grad, optimize=True)
        return K[0] if single else K


def extremal_field(pair: ConformalPair,
                   structure: KahlerStructure | None = None) -> ExtremalField:
    return ExtremalField(pair=pair,
                         structure=structure or kahler_structure(pair))


def _lie_derivative_norm(chart: MetricChart, K_field: Callable,
                         pts: np.ndarray, cfg: jt.DiffConfig) -> np.ndarray:
    """Frame norm of L_K metric at each point (via coordinate partials)."""
    g, dg, _ = metric_arrays(chart, pts, order=1)
    jet = jt.numeric_jet(K_field, pts, 1, cfg, scale=chart.fd_scale(pts))
    eye = np.eye(4, dtype=int)
    K = jet.value                                      # (N, 4)
    dK = np.stack([jet.partial(tuple(eye[k])) for k in range(4)], axis=1)
    lie = (np.einsum('nm,nmij->nij', K, dg, optimize=True)
           + np.einsum('nmj,nim->nij', g, dK, optimize=True)
           + np.einsum('nim,njm->nij', g, dK, optimize=True))
    E = _orthonormal_frame(g, 1)
    lie_f = np.einsum('nia,nij,njb->nab', E, lie, E, optimize=True)
    return np.sqrt((lie_f ** 2).sum(axis=(1, 2)))


def killing_residual(field: ExtremalField, pair: ConformalPair,
                     samples) -> tuple[float, float]:
    """Sup frame norms of the Lie derivative of g and of h along K."""
    pts, _ = _as_batch(samples)
    cfg = jt.DiffConfig(fd_step_scale=1e-3)
    res_g = _lie_derivative_norm(pair.kahler, field.K, pts, cfg).max()
    res_h = _lie_derivative_norm(pair.base, field.K, pts, cfg).max()
    return float(res_g), float(res_h)


def kahler_residual(pair: ConformalPair, samples,
                    structure: KahlerStructure | None = None) -> tuple[float, float]:
    """sup |grad_g omega| (frame norm) and sup |d omega| over the samples."""
    structure = structure or kahler_structure(pair)
    pts, _ = _as_batch(samples)
    cfg = jt.DiffConfig(fd_step_scale=1e-3)

    def omega_field(q):
        omega, _ = structure.omega_J(q)
        return omega.reshape(q.shape[1], 16)

    jet = jt.numeric_jet(omega_field, pts, 1, cfg,
                         scale=pair.base.fd_scale(pts))
    eye = np.eye(4, dtype=int)
    omega = jet.value.reshape(-1, 4, 4)
    domega = np.stack([jet.partial(tuple(eye[k])) for k in range(4)],
                      axis=1).reshape(-1, 4, 4, 4)
    g, dg, _ = metric_arrays(pair.kahler, pts, order=1)
    gl = 0.5 * (np.einsum('nijm->nmij', dg) + np.einsum('njim->nmij', dg)
                - dg)
    gamma = np.einsum('nlm,nmij->nlij', np.linalg.inv(g), gl, optimize=True)
    nabla = (domega
             - np.einsum('ncma,ncb->nmab', gamma, omega, optimize=True)
             - np.einsum('ncmb,nac->nmab', gamma, omega, optimize=True))
    E = _orthonormal_frame(g, 1)
    nab_f = np.einsum('nim,nja,nkb,nijk->nmab', E, E, E, nabla, optimize=True)
    sup_nabla = float(np.sqrt((nab_f ** 2).sum(axis=(1, 2, 3))).max())
    dext = (np.transpose(domega, (0, 1, 2, 3))
            + np.transpose(domega, (0, 2, 3, 1))
            + np.transpose(domega, (0, 3, 1, 2)))
    sup_d = float(np.abs(dext).max())
    return sup_nabla, sup_d


def hamiltonian_residual(field: ExtremalField, pair: ConformalPair,
                         samples) -> tuple[float, int]:
    """sup |iota_K omega - sign_conv * d s_g|; the sign is fixed at the base.

    Returns (residual, moment_sign); moment_sign = -1 means the convention
    iota_K omega = -d s_g was required.
    """
    pts, _ = _as_batch(samples)
    omega, _ = field.structure.omega_J(pts)
    K = field.K(pts)
    iota = np.einsum('na,nab->nb', K, omega, optimize=True)
    jet = jt.numeric_jet(pair.conformal_scalar, pts, 1, pair.fd_cfg,
                         scale=pair.scalar_fd_scale(pts))
    eye = np.eye(4, dtype=int)
    ds = np.stack([jet.partial(tuple(eye[k])) for k in range(4)], axis=1)
    res_plus = np.abs(iota - ds).max()
    res_minus = np.abs(iota + ds).max()
    if res_plus <= res_minus:
        return float(res_plus), +1
    return float(res_minus), -1


@dataclass
class LeBrunForm:
    """Curvature-form candidate built from s_g, d s_g, J, and g."""

    tensor: np.ndarray            # symmetric (1,1) part Omega(. , J.)
    two_form: np.ndarray          # Omega itself
    identity_residual: float
    min_eigenvalue: float


def lebrun_form(pair: ConformalPair, samples,
                structure: KahlerStructure | None = None) -> LeBrunForm:
    """Assemble Omega(., J.) = (s/6) g + s^-2 (|ds|^2 g - ds x ds - Jds x Jds).

    The associated 2-form Omega is recovered through J and antisymmetrized;
    re-deriving the symmetric tensor from it measures the J-invariance defect
    (the identity residual).  The minimum eigenvalue of Omega(., J.) against g
    over the samples is the positivity report.
    """
    structure = structure or kahler_structure(pair)
    pts, _ = _as_batch(samples)
    g, _, _ = metric_arrays(pair.kahler, pts, order=0)
    _, J = structure.omega_J(pts)
    s = pair.conformal_scalar(pts)
    jet = jt.numeric_jet(pair.conformal_scalar, pts, 1, pair.fd_cfg,
                         scale=pair.scalar_fd_scale(pts))
    eye = np.eye(4, dtype=int)
    ds = np.stack([jet.partial(tuple(eye[k])) for k in range(4)], axis=1)
    ginv = np.linalg.inv(g)
    ds2 = np.einsum('nij,ni,nj->n', ginv, ds, ds, optimize=True)
    Jds = np.einsum('nji,nj->ni', J, ds, optimize=True)
    T = (s[:, None, None] / 6.0 * g
         + s[:, None, None] ** -2
         * (ds2[:, None, None] * g
            - np.einsum('ni,nj->nij', ds, ds)
            - np.einsum('ni,nj->nij', Jds, Jds)))
    omega2 = -np.einsum('nik,nkj->nij', T, J, optimize=True)
    omega2 = 0.5 * (omega2 - omega2.transpose(0, 2, 1))
    T_back = np.einsum('nik,nkj->nij', omega2, J, optimize=True)
    E = _orthonormal_frame(g, 1)
    diff = np.einsum('nia,nij,njb->nab', E, T_back - T, E, optimize=True)
    identity_residual = float(np.sqrt((diff ** 2).sum(axis=(1, 2))).max())
    T_f = np.einsum('nia,nij,njb->nab', E, T, E, optimize=True)
    min_eig = float(np.linalg.eigvalsh(0.5 * (T_f + T_f.transpose(0, 2, 1))
                                       ).min())
    return LeBrunForm(tensor=T, two_form=omega2,
                      identity_residual=identity_residual,
                      min_eigenvalue=min_eig)
