"""Truncated multivariate Taylor (jet) arithmetic in four variables.

A ``Jet`` stores the Taylor coefficients of a scalar quantity at a point, up
to a fixed total degree, and propagates them through arithmetic and the
elementary transcendental functions.  Coefficient arrays carry an optional
trailing batch axis so a single pass evaluates a field on many points at once.

A central-difference fallback (:func:`numeric_jet`, :func:`fd_partial`) covers
quantities that are only available as black-box evaluators, e.g. curvature
norms.  The scheme is second order with one Richardson refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, OrderExceeded, OrderUnsupported

NVARS = 4

MultiIndex = tuple[int, int, int, int]


# ---------------------------------------------------------------------------
# Jet spaces: multi-index enumeration and multiplication tables
# ---------------------------------------------------------------------------


def _multi_indices(order: int) -> list[MultiIndex]:
    out = []
    for total in range(order + 1):
        for a in range(total, -1, -1):
            for b in range(total - a, -1, -1):
                for c in range(total - a - b, -1, -1):
                    d = total - a - b - c
                    out.append((a, b, c, d))
    return out


class JetSpace:
    """Index bookkeeping for jets of one truncation order (cached)."""

    def __init__(self, order: int):
        if order < 0:
            raise ValueError("order must be >= 0")
        self.order = order
        self.indices: list[MultiIndex] = _multi_indices(order)
        self.n = len(self.indices)
        self.position: dict[MultiIndex, int] = {
            idx: k for k, idx in enumerate(self.indices)
        }
        self.degrees = np.array([sum(i) for i in self.indices])
        self.factorials = np.array(
            [math.prod(math.factorial(e) for e in idx) for idx in self.indices],
            dtype=float,
        )
        # Flattened multiplication table: coeffs_c[K] += coeffs_a[I]*coeffs_b[J].
        I, J, K = [], [], []
        for i, a in enumerate(self.indices):
            for j, b in enumerate(self.indices):
                s = tuple(x + y for x, y in zip(a, b))
                k = self.position.get(s)
                if k is not None:
                    I.append(i)
                    J.append(j)
                    K.append(k)
        self.mul_i = np.array(I)
        self.mul_j = np.array(J)
        self.mul_k = np.array(K)


@lru_cache(maxsize=None)
def jet_space(order: int) -> JetSpace:
    return JetSpace(order)


# ---------------------------------------------------------------------------
# The Jet class
# ---------------------------------------------------------------------------


class Jet:
    """Taylor coefficients (derivative / multi-index factorial) of a scalar.

    ``coeffs`` has shape ``(space.n,) + batch_shape``.  All operations are
    pure; instances are treated as immutable.
    """

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------------

    @staticmethod
    def constant(value, order: int, batch_shape: tuple = ()) -> "Jet":
        sp = jet_space(order)
        coeffs = np.zeros((sp.n,) + batch_shape)
        coeffs[0] = value
        return Jet(sp, coeffs)

    @staticmethod
    def variables(center: np.ndarray, order: int) -> list["Jet"]:
        """Jets of the four coordinate projections at ``center``.

        ``center`` has shape ``(4,)`` or ``(4,) + batch_shape``.
        """
        center = np.asarray(center, dtype=float)
        sp = jet_space(order)
        batch = center.shape[1:]
        out = []
        for v in range(NVARS):
            coeffs = np.zeros((sp.n,) + batch)
            coeffs[0] = center[v]
            if order >= 1:
                unit = tuple(1 if i == v else 0 for i in range(NVARS))
                coeffs[sp.position[unit]] = 1.0
            out.append(Jet(sp, coeffs))
        return out

    # -- helpers ------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space.order != self.space.order:
                raise ValueError("jet order mismatch")
            return other
        coeffs = np.zeros_like(self.coeffs + np.asarray(other))
        coeffs[0] = np.asarray(other)
        return Jet(self.space, coeffs)

    @property
    def value(self):
        return self.coeffs[0]

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.space, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet(self.space, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.coeffs * np.asarray(other))
        other = self._coerce(other)
        sp = self.space
        prod_ = self.coeffs[sp.mul_i] * other.coeffs[sp.mul_j]
        out = np.zeros_like(self.coeffs + other.coeffs)
        np.add.at(out, sp.mul_k, prod_)
        return Jet(sp, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.coeffs / np.asarray(other))
        return self * other._reciprocal()

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, int):
            if exponent == 0:
                return Jet.constant(1.0, self.space.order, self.coeffs.shape[1:])
            if exponent < 0:
                return self._reciprocal() ** (-exponent)
            result = self
            for _ in range(exponent - 1):
                result = result * self
            return result
        return self.powr(float(exponent))

    # -- composition with analytic functions --------------------------------

    def _compose(self, series: np.ndarray) -> "Jet":
        """Evaluate sum_k series[k] * (self - value)^k by Horner's rule.

        ``series[k]`` is f^(k)(value)/k!, shape broadcastable to the batch.
        """
        sp = self.space
        bar = Jet(sp, self.coeffs.copy())
        bar.coeffs[0] = 0.0
        result = Jet(sp, np.zeros_like(self.coeffs))
        result.coeffs[0] = series[sp.order]
        for k in range(sp.order - 1, -1, -1):
            result = result * bar
            result.coeffs[0] = result.coeffs[0] + series[k]
        return result

    def _series(self, fill) -> np.ndarray:
        m = self.space.order
        out = np.zeros((m + 1,) + np.shape(self.value))
        fill(out, np.asarray(self.value))
        return out

    def _reciprocal(self) -> "Jet":
        def fill(out, a0):
            inv = 1.0 / a0
            acc = inv
            for k in range(self.space.order + 1):
                out[k] = acc if k == 0 else out[k - 1] * (-inv)
        return self._compose(self._series(fill))

    def exp(self) -> "Jet":
        def fill(out, a0):
            e = np.exp(a0)
            for k in range(self.space.order + 1):
                out[k] = e / math.factorial(k)
        return self._compose(self._series(fill))

    def log(self) -> "Jet":
        def fill(out, a0):
            out[0] = np.log(a0)
            for k in range(1, self.space.order + 1):
                out[k] = ((-1.0) ** (k + 1)) / (k * a0**k)
        return self._compose(self._series(fill))

    def powr(self, e: float) -> "Jet":
        def fill(out, a0):
            coef = 1.0
            for k in range(self.space.order + 1):
                out[k] = coef * a0 ** (e - k)
                coef *= (e - k) / (k + 1)
        return self._compose(self._series(fill))

    def sqrt(self) -> "Jet":
        return self.powr(0.5)

    def sin(self) -> "Jet":
        def fill(out, a0):
            s, c = np.sin(a0), np.cos(a0)
            cycle = [s, c, -s, -c]
            for k in range(self.space.order + 1):
                out[k] = cycle[k % 4] / math.factorial(k)
        return self._compose(self._series(fill))

    def cos(self) -> "Jet":
        def fill(out, a0):
            s, c = np.sin(a0), np.cos(a0)
            cycle = [c, -s, -c, s]
            for k in range(self.space.order + 1):
                out[k] = cycle[k % 4] / math.factorial(k)
        return self._compose(self._series(fill))

    def arctan(self) -> "Jet":
        def fill(out, a0):
            # Derivatives of arctan via the recursion on 1/(1+x^2).
            out[0] = np.arctan(a0)
            if self.space.order >= 1:
                w = 1.0 / (1.0 + a0**2)
                # f'(x) = w; higher derivatives from f'(x)*(1+x^2) = 1.
                derivs = [np.arctan(a0), w]
                for k in range(2, self.space.order + 1):
                    # d^k arctan = d^{k-1} w; use Leibniz on w*(1+x^2)=1.
                    # (k-1)-th derivative of w: w_{k-1}*(1+x^2)
                    #   + (k-1)*w_{k-2}*2x + binom(k-1,2)*w_{k-3}*2 = 0.
                    km1 = k - 1
                    acc = km1 * derivs[k - 1] * 2 * a0
                    if km1 >= 2:
                        acc = acc + (km1 * (km1 - 1) / 2.0) * derivs[k - 2] * 2
                    derivs.append(-acc * w)
                for k in range(1, self.space.order + 1):
                    out[k] = derivs[k] / math.factorial(k)
        return self._compose(self._series(fill))

    # -- extraction ---------------------------------------------------------

    def coefficient(self, idx: MultiIndex):
        pos = self.space.position.get(tuple(idx))
        if pos is None:
            raise OrderExceeded(f"multi-index {idx} exceeds jet order {self.space.order}")
        return self.coeffs[pos]

    def partial(self, idx: MultiIndex):
        """The partial derivative (coefficient times multi-index factorial)."""
        fact = math.prod(math.factorial(e) for e in idx)
        return self.coefficient(idx) * fact

    def derivative(self, v: int) -> "Jet":
        """Series derivative along variable ``v`` in the same jet space.

        The top-degree coefficients of the result are zero (they would need
        order+1 data); build the source jet one order higher than the
        accuracy required of the derivative.
        """
        sp = self.space
        coeffs = np.zeros_like(self.coeffs)
        for k, idx in enumerate(sp.indices):
            if sum(idx) >= sp.order:
                continue
            src = list(idx)
            src[v] += 1
            coeffs[k] = self.coeffs[sp.position[tuple(src)]] * src[v]
        return Jet(sp, coeffs)


# ---------------------------------------------------------------------------
# Function dispatch helpers (work on Jet or plain numpy values)
# ---------------------------------------------------------------------------


def exp(x):
    return x.exp() if isinstance(x, Jet) else np.exp(x)


def log(x):
    return x.log() if isinstance(x, Jet) else np.log(x)


def sin(x):
    return x.sin() if isinstance(x, Jet) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Jet) else np.cos(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Jet) else np.sqrt(x)


def arctan(x):
    return x.arctan() if isinstance(x, Jet) else np.arctan(x)


def powr(x, e):
    return x.powr(e) if isinstance(x, Jet) else np.power(x, e)


# ---------------------------------------------------------------------------
# Jet lifting of closed-form scalar fields
# ---------------------------------------------------------------------------

ScalarField = Callable
"""A scalar field is a callable f(x0, x1, x2, x3) accepting Jet or ndarray
coordinates and closed under the helpers above."""


def jet_lift(f: ScalarField, p: np.ndarray, order: int) -> Jet:
    """Jet of ``f`` at ``p`` (shape (4,) or (4,)+batch) by forward propagation."""
    p = np.asarray(p, dtype=float)
    xs = Jet.variables(p, order)
    try:
        y = f(*xs)
    except (OverflowError, ZeroDivisionError) as error:  # pragma: no cover
        raise OrderUnsupported(str(error)) from error
    if not isinstance(y, Jet):
        return Jet.constant(np.broadcast_to(y, p.shape[1:]).copy() if p.ndim > 1 else y,
                            order, p.shape[1:])
    return y


def partial(j: Jet, idx: Sequence[int]):
    return j.partial(tuple(idx))


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiffConfig:
    """Differentiation settings.

    ``fd_step_scale`` is the base step relative to the coordinate scale for
    first/second derivatives; third/fourth derivatives use larger steps
    (see ``step_boost``) to keep rounding error in check.  The scheme is
    central second-order with one Richardson refinement.
    """

    jet_order: int = 4
    fd_step_scale: float = 1e-4
    richardson: bool = True
    step_boost: tuple = (1.0, 1.0, 1.0, 30.0, 100.0)

    def __post_init__(self):
        if self.jet_order < 2:
            raise ValueError("jet_order must be >= 2 (curvature needs it)")

    def step(self, degree: int, scale: float = 1.0) -> float:
        return self.fd_step_scale * self.step_boost[degree] * scale


# 1D central stencils: degree -> {offset_in_units: weight}; divide by h^degree.
_STENCIL_1D = {
    0: {0: 1.0},
    1: {1: 0.5, -1: -0.5},
    2: {1: 1.0, 0: -2.0, -1: 1.0},
    3: {2: 0.5, 1: -1.0, -1: 1.0, -2: -0.5},
    4: {2: 1.0, 1: -4.0, 0: 6.0, -1: -4.0, -2: 1.0},
}


def _tensor_rule(idx: MultiIndex) -> dict[tuple, float]:
    """Tensor-product central rule for one multi-index, offsets in step units."""
    rule: dict[tuple, float] = {(0, 0, 0, 0): 1.0}
    for var, deg in enumerate(idx):
        if deg == 0:
            continue
        new: dict[tuple, float] = {}
        for off, w in rule.items():
            for o1, w1 in _STENCIL_1D[deg].items():
                key = off[:var] + (off[var] + o1,) + off[var + 1:]
                new[key] = new.get(key, 0.0) + w * w1
        rule = new
    return rule


@lru_cache(maxsize=None)
def _stencil_plan(order: int, richardson: bool):
    """Offsets (in half-units) and per-multi-index weighted terms.

    Returns (offsets, terms) where offsets is a list of integer 4-tuples in
    units of h/2, and terms[idx] is a list of (offset_position, weight,
    scale_exponent); the weight is divided by (h_eff)^|idx| with h_eff = h
    for the coarse term and h/2 for the fine term.
    """
    offset_pos: dict[tuple, int] = {}
    terms: dict[MultiIndex, list] = {}

    def pos(off_half):
        if off_half not in offset_pos:
            offset_pos[off_half] = len(offset_pos)
        return offset_pos[off_half]

    for idx in _multi_indices(order):
        rule = _tensor_rule(idx)
        entry = []
        deg = sum(idx)
        if richardson and deg > 0:
            # (4 D(h/2) - D(h)) / 3, each D second-order accurate.
            for off, w in rule.items():
                entry.append((pos(tuple(o * 2 for o in off)), -w / 3.0, 1.0))
                entry.append((pos(off), 4.0 * w / 3.0, 0.5))
        else:
            for off, w in rule.items():
                entry.append((pos(tuple(o * 2 for o in off)), w, 1.0))
        terms[idx] = entry
    offsets = [None] * len(offset_pos)
    for off, k in offset_pos.items():
        offsets[k] = off
    return offsets, terms


def _numeric_coeffs(values: np.ndarray, order: int, steps: np.ndarray,
                    richardson: bool, space: JetSpace) -> np.ndarray:
    offsets, terms = _stencil_plan(order, richardson)
    coeffs = np.zeros((space.n,) + values.shape[1:])
    for k, idx in enumerate(space.indices):
        deg = sum(idx)
        # per-variable steps: effective h^deg = prod steps[var]^idx[var];
        # steps entries may be scalars or per-point arrays.
        acc = 0.0
        for pos_, w, scale in terms[idx]:
            if deg:
                hpow = 1.0
                for v in range(NVARS):
                    if idx[v]:
                        hpow = hpow * (steps[v] * scale) ** idx[v]
                term = values[pos_] * w
                term = np.moveaxis(np.moveaxis(term, 0, -1) / hpow, -1, 0) \
                    if np.ndim(hpow) and values.ndim > 1 + np.ndim(hpow) \
                    else term / hpow
                acc = acc + term
            else:
                acc = acc + values[pos_] * w
        coeffs[k] = acc / space.factorials[k]
    return coeffs


def numeric_jet(f: Callable, p: np.ndarray, order: int,
                cfg: DiffConfig | None = None,
                scale: float | np.ndarray = 1.0,
                domain: Callable | None = None) -> Jet:
    """Finite-difference jet of a black-box field ``f(points4xN) -> N``.

    ``f`` receives an array of shape ``(4, M)`` and must return shape ``(M,)``
    (or broadcastable).  ``p`` has shape (4,) or (4, N).  Steps are
    ``cfg.step(order, .)`` times ``scale`` per coordinate (scalar or (4,)).
    """
    cfg = cfg or DiffConfig()
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    pts = p[:, None] if single else p
    scale_arr = np.asarray(scale, dtype=float)
    if scale_arr.ndim == 0:
        scale_arr = np.broadcast_to(scale_arr, (NVARS,))
    # One shared step magnitude per degree keeps the plan simple; use the
    # degree giving the tightest overall budget (the requested max order).
    steps = scale_arr * cfg.step(min(order, 4) if order else 1)
    offsets, _terms = _stencil_plan(order, cfg.richardson)
    off = np.asarray(offsets, dtype=float).T * 0.5  # (4, S) in units of h
    if steps.ndim == 1:
        shifted = pts[:, None, :] + (off * steps[:, None])[:, :, None]
    else:                          # per-point steps, shape (4, N)
        shifted = pts[:, None, :] + off[:, :, None] * steps[:, None, :]
    S, N = shifted.shape[1], shifted.shape[2]
    flat = shifted.reshape(NVARS, S * N)
    if domain is not None:
        ok = np.asarray(domain(flat))
        if not np.all(ok):
            raise DomainError("finite-difference stencil leaves the domain")
    raw = np.asarray(f(flat), dtype=float)
    values = raw.reshape((S, N) + raw.shape[1:])
    sp = jet_space(order)
    coeffs = _numeric_coeffs(values, order, steps, cfg.richardson, sp)
    if single:
        coeffs = coeffs[:, 0]
    return Jet(sp, coeffs)


def fd_partial(f: Callable, p: np.ndarray, idx: Sequence[int],
               cfg: DiffConfig | None = None,
               scale: float | np.ndarray = 1.0,
               domain: Callable | None = None):
    """Central-difference partial derivative of a black-box scalar field.

    ``f`` maps ``(4, M)`` arrays to ``(M,)`` values.  Error is O(step^4) for
    derivative degrees <= 2 thanks to the Richardson refinement.
    """
    idx = tuple(idx)
    deg = sum(idx)
    if deg > 4:
        raise OrderExceeded("finite differences support degree <= 4")
    cfg = cfg or DiffConfig()
    if deg == 0:
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        pts = p[:, None] if single else p
        if domain is not None and not np.all(domain(pts)):
            raise DomainError("point outside domain")
        val = np.asarray(f(pts))
        return float(val[0]) if single else val
    j = numeric_jet(f, p, deg, cfg, scale=scale, domain=domain)
    return j.partial(idx)


# ---------------------------------------------------------------------------
# Tiny closed-form expression parser (for CLI-supplied fields)
# ---------------------------------------------------------------------------


def parse_expression(src: str, var_names: Sequence[str]) -> ScalarField:
    """Compile an arithmetic expression string into a jet-capable field.

    Allowed: the named variables, numeric literals, + - * / ** parentheses,
    and the functions exp, log, sin, cos, sqrt, arctan.
    """
    import ast

    allowed_funcs = {"exp": exp, "log": log, "sin": sin, "cos": cos,
                     "sqrt": sqrt, "arctan": arctan}
    tree = ast.parse(src, mode="eval")
    for node in ast.walk(tree):
        if isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name)
                    and node.func.id in allowed_funcs):
                raise ValueError("only exp/log/sin/cos/sqrt/arctan calls allowed")
        elif isinstance(node, ast.Name):
            if node.id not in var_names and node.id not in allowed_funcs:
                raise ValueError(f"unknown name {node.id!r} in expression")
        elif not isinstance(node, (ast.Expression, ast.BinOp, ast.UnaryOp,
                                   ast.Constant, ast.Load, ast.Add, ast.Sub,
                                   ast.Mult, ast.Div, ast.Pow, ast.USub,
                                   ast.UAdd)):
            raise ValueError(f"disallowed syntax: {type(node).__name__}")
    code = compile(tree, "<expression>", "eval")

    def field(*coords):
        env = dict(zip(var_names, coords))
        env.update(allowed_funcs)
        return eval(code, {"__builtins__": {}}, env)

    return field
