"""Model incidence geometries in a fixed chart.

The chart identifies Z with a box in R^(d+1) via coordinates (x, t):

    pi1(x, t) = x            (projection to X)
    pi2(x, t) = x + gamma(t) (projection to Y)
    Pi(y)     = y[0]         (distinguished mixed-norm direction)

with gamma a polynomial curve normalized so gamma_1(t) = t.  In this chart

    V1 = d/dt                          (spans the fibers of pi1)
    V2 = d/dt - sum_i gamma_i'(t) d/dx_i  (spans the fibers of pi2)

and Pi(pi2(exp(s V1) z)) = Pi(pi2(z)) + s holds exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ChartDomainError, ConfigError, FlowExitError

MAX_CURVE_DEGREE = 8
STEPS_PER_UNIT_TIME = 32


@dataclass(frozen=True)
class ZPoint:
    """A point (x, t) of the incidence manifold in chart coordinates."""

    x: tuple
    t: float

    def as_array(self) -> np.ndarray:
        return np.array(list(self.x) + [self.t], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ZPoint":
        arr = np.asarray(arr, dtype=float)
        return cls(x=tuple(arr[:-1].tolist()), t=float(arr[-1]))


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector at a base point, components in chart order (x..., t)."""

    base: ZPoint
    components: tuple

    def as_array(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)


def as_zarray(z, dim_z: int) -> np.ndarray:
    if isinstance(z, ZPoint):
        arr = z.as_array()
    else:
        arr = np.asarray(z, dtype=float).ravel()
    if arr.shape != (dim_z,):
        raise ConfigError(f"expected a point with {dim_z} coordinates, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ModelFamily:
    """A polynomial curve model: gamma(t) has gamma_1(t) = t and degree <= 8.

    ``curve[i]`` lists ascending coefficients of gamma_{i+1}; ``domain`` is the
    chart box, one (lo, hi) pair per coordinate of (x, t).
    """

    name: str
    curve: tuple
    domain: tuple

    def __post_init__(self):
        d = len(self.curve)
        if d < 2:
            raise ConfigError("model dimension d must be >= 2")
        if len(self.domain) != d + 1:
            raise ConfigError("domain must have d+1 axes (x..., t)")
        for coeffs in self.curve:
            if len(coeffs) > MAX_CURVE_DEGREE + 1:
                raise ConfigError(f"curve degree must be <= {MAX_CURVE_DEGREE}")
            if not all(math.isfinite(c) for c in coeffs):
                raise ConfigError("curve coefficients must be finite")
        first = list(self.curve[0]) + [0.0] * (2 - len(self.curve[0]))
        if first[0] != 0.0 or first[1] != 1.0 or any(c != 0.0 for c in first[2:]):
            raise ConfigError("gamma_1(t) must equal t exactly")
        for lo, hi in self.domain:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError("domain bounds must be finite with lo < hi")

    @property
    def d(self) -> int:
        return len(self.curve)

    @property
    def dim_z(self) -> int:
        return self.d + 1

    @cached_property
    def _coef(self) -> np.ndarray:
        """(max_deg+1, d) ascending coefficient matrix of gamma."""
        k = max(len(c) for c in self.curve)
        mat = np.zeros((k, self.d))
        for i, c in enumerate(self.curve):
            mat[: len(c), i] = c
        return mat

    @cached_property
    def _dcoef(self) -> np.ndarray:
        return npoly.polyder(self._coef, axis=0) if self._coef.shape[0] > 1 else np.zeros((1, self.d))

    @cached_property
    def _dom_lo(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.domain], dtype=float)

    @cached_property
    def _dom_hi(self) -> np.ndarray:
        return np.array([hi for _, hi in self.domain], dtype=float)

    def gamma(self, t):
        """gamma(t); vectorized, returns shape t.shape + (d,)."""
        t = np.asarray(t, dtype=float)
        vals = npoly.polyval(t, self._coef)  # (d,) + t.shape
        return np.moveaxis(vals, 0, -1)

    def dgamma(self, t):
        t = np.asarray(t, dtype=float)
        vals = npoly.polyval(t, self._dcoef)
        return np.moveaxis(vals, 0, -1)

    def contains(self, pts) -> np.ndarray:
        """Boolean mask of chart-domain membership; pts is (..., d+1)."""
        pts = np.asarray(pts, dtype=float)
        return np.all((pts >= self._dom_lo) & (pts <= self._dom_hi), axis=-1)

    def pi2(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts[..., :-1] + self.gamma(pts[..., -1])

    def pi_pi2(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return self.pi2(pts)[..., 0]

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "curve": [list(c) for c in self.curve],
            "domain": [list(ax) for ax in self.domain],
        }


def _model(name, curve, domain=None) -> ModelFamily:
    d = len(curve)
    if domain is None:
        domain = tuple((-1.0, 1.0) for _ in range(d + 1))
    return ModelFamily(name=name, curve=tuple(tuple(map(float, c)) for c in curve), domain=tuple(tuple(map(float, ax)) for ax in domain))


def builtin_models() -> dict:
    """Catalog of built-in polynomial curve models."""
    return {
        "parabola": _model("parabola", [(0, 1), (0, 0, 1)]),
        "cubic": _model("cubic", [(0, 1), (0, 0, 1), (0, 0, 0, 1)]),
        "quartic": _model("quartic", [(0, 1), (0, 0, 1, 0, 1)]),
    }


def load_model(source) -> ModelFamily:
    """Resolve a model from a catalog name, a JSON file path, or a dict."""
    if isinstance(source, ModelFamily):
        return source
    if isinstance(source, str):
        catalog = builtin_models()
        if source in catalog:
            return catalog[source]
        path = Path(source)
        if path.exists():
            source = json.loads(path.read_text())
        else:
            raise ConfigError(f"unknown model '{source}' (not in catalog, not a file)")
    if not isinstance(source, dict):
        raise ConfigError("model source must be a name, path, or mapping")
    try:
        curve = source["curve"]
    except KeyError:
        raise ConfigError("model mapping requires a 'curve' field")
    d = source.get("d", len(curve))
    if d != len(curve):
        raise ConfigError("model field 'd' disagrees with number of curve coordinates")
    domain = source.get("domain")
    if domain is not None and len(domain) == 1:
        domain = list(domain) * (d + 1)
    return _model(source.get("name", "custom"), curve, domain)


# --------------------------------------------------------------------------
# Vector fields and flows
# --------------------------------------------------------------------------

def eval_fields(model: ModelFamily, z) -> tuple:
    """(V1(z), V2(z)) in chart components; V_j spans the kernel of Dpi_j."""
    arr = as_zarray(z, model.dim_z)
    if not model.contains(arr):
        raise ChartDomainError(f"point {arr.tolist()} outside chart domain")
    d = model.d
    v1 = np.zeros(d + 1)
    v1[d] = 1.0
    v2 = np.empty(d + 1)
    v2[:d] = -model.dgamma(arr[d])
    v2[d] = 1.0
    base = ZPoint.from_array(arr)
    return (
        TangentVector(base=base, components=tuple(v1.tolist())),
        TangentVector(base=base, components=tuple(v2.tolist())),
    )


def _rhs(model: ModelFamily, pts: np.ndarray, a1, a2) -> np.ndarray:
    """Right-hand side of phi' = a1 V1 + a2 V2 at pts (..., d+1)."""
    d = model.d
    out = np.empty_like(pts)
    dg = model.dgamma(pts[..., d])
    out[..., :d] = -np.asarray(a2)[..., None] * dg if np.ndim(a2) else -a2 * dg
    out[..., d] = np.asarray(a1) + np.asarray(a2)
    return out


def rk4_many(model: ModelFamily, pts: np.ndarray, a1, a2, duration: float, substeps: int = 1) -> np.ndarray:
    """Classical RK4 for constant controls, vectorized over points."""
    p = np.array(pts, dtype=float, copy=True)
    dt = duration / substeps
    for _ in range(substeps):
        k1 = _rhs(model, p, a1, a2)
        k2 = _rhs(model, p + 0.5 * dt * k1, a1, a2)
        k3 = _rhs(model, p + 0.5 * dt * k2, a1, a2)
        k4 = _rhs(model, p + dt * k3, a1, a2)
        p += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return p


def flow(model: ModelFamily, z, controls, duration: float, steps: int | None = None) -> ZPoint:
    """Integrate phi' = a1 V1 + a2 V2 for ``duration`` from z (RK4).

    Exits of the chart domain are hard errors carrying the exit time.
    """
    if abs(duration) > 1.0:
        raise ConfigError("|duration| must be <= 1")
    a1, a2 = float(controls[0]), float(controls[1])
    arr = as_zarray(z, model.dim_z)
    if not model.contains(arr):
        raise ChartDomainError(f"start point {arr.tolist()} outside chart domain")
    if steps is None:
        steps = max(1, math.ceil(STEPS_PER_UNIT_TIME * abs(duration)))
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    dt = duration / steps
    p = arr[None, :]
    for k in range(steps):
        p = rk4_many(model, p, a1, a2, dt, substeps=1)
        if not model.contains(p[0]):
            raise FlowExitError(
                f"trajectory exited chart domain near time {(k + 1) * dt:g}",
                exit_time=(k + 1) * dt,
            )
    return ZPoint.from_array(p[0])


def check_v1_normalization(model: ModelFamily, z, s: float, steps: int | None = None) -> float:
    """|Pi(pi2(flow(z,(1,0),s))) - Pi(pi2(z)) - s|; zero in exact arithmetic."""
    arr = as_zarray(z, model.dim_z)
    moved = flow(model, arr, (1.0, 0.0), s, steps=steps)
    return float(abs(model.pi_pi2(moved.as_array()) - model.pi_pi2(arr) - s))


# --------------------------------------------------------------------------
# Brackets
# --------------------------------------------------------------------------
#
# Every field in play has components that are polynomials in t alone (the
# chart makes V1, V2 x-independent), so iterated brackets stay in that class:
# [U, W] = (dW/dt) U_t - (dU/dt) W_t  componentwise, where U_t is the
# t-component polynomial of U.  Fields are stored as (deg+1, d+1) ascending
# coefficient matrices.

def _field_matrix(model: ModelFamily, j: int, scale: float = 1.0) -> np.ndarray:
    d = model.d
    if j == 1:
        mat = np.zeros((1, d + 1))
        mat[0, d] = scale
        return mat
    if j == 2:
        dc = model._dcoef
        mat = np.zeros((dc.shape[0], d + 1))
        mat[:, :d] = -dc * scale
        mat[0, d] += scale
        return mat
    raise ConfigError("field index must be 1 or 2")


def _poly_bracket(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Bracket of two t-polynomial field matrices."""
    dim = u.shape[1]
    ut = u[:, dim - 1]
    wt = w[:, dim - 1]
    du = npoly.polyder(u, axis=0) if u.shape[0] > 1 else np.zeros((1, dim))
    dw = npoly.polyder(w, axis=0) if w.shape[0] > 1 else np.zeros((1, dim))
    cols = []
    for c in range(dim):
        a = npoly.polymul(dw[:, c], ut)
        b = npoly.polymul(du[:, c], wt)
        k = max(len(a), len(b))
        a = np.pad(a, (0, k - len(a)))
        b = np.pad(b, (0, k - len(b)))
        cols.append(a - b)
    k = max(len(c) for c in cols)
    out = np.zeros((k, dim))
    for c, col in enumerate(cols):
        out[: len(col), c] = col
    return out


def _eval_field_matrix(mat: np.ndarray, t: float) -> np.ndarray:
    return npoly.polyval(t, mat)


def lie_bracket_exact(model: ModelFamily, z, i: int, j: int) -> TangentVector:
    """[V_i, V_j](z) from the polynomial field representation."""
    arr = as_zarray(z, model.dim_z)
    mat = _poly_bracket(_field_matrix(model, i), _field_matrix(model, j))
    comp = _eval_field_matrix(mat, arr[-1])
    return TangentVector(base=ZPoint.from_array(arr), components=tuple(comp.tolist()))


def lie_bracket(model: ModelFamily, z, i: int, j: int, step: float = 1e-3) -> TangentVector:
    """[V_i, V_j](z) by symmetric finite differences of the field components."""
    if i not in (1, 2) or j not in (1, 2):
        raise ConfigError("field indices must be in {1, 2}")
    if step <= 0:
        raise ConfigError("finite-difference step must be positive")
    arr = as_zarray(z, model.dim_z)

    def field(jj, pts):
        d = model.d
        out = np.zeros_like(pts)
        if jj == 1:
            out[..., d] = 1.0
        else:
            out[..., :d] = -model.dgamma(pts[..., d])
            out[..., d] = 1.0
        return out

    vi = field(i, arr)
    vj = field(j, arr)
    dvj_vi = (field(j, arr + step * vi) - field(j, arr - step * vi)) / (2.0 * step)
    dvi_vj = (field(i, arr + step * vj) - field(i, arr - step * vj)) / (2.0 * step)
    comp = dvj_vi - dvi_vj
    return TangentVector(base=ZPoint.from_array(arr), components=tuple(comp.tolist()))


def _bracket_generators(model: ModelFamily, depth: int, v1_scale: float = 1.0, v2_scale: float = 1.0) -> list:
    """Field matrices of V1, V2 and iterated brackets up to word length ``depth``."""
    if depth < 1:
        raise ConfigError("depth must be >= 1")
    base = [_field_matrix(model, 1, v1_scale), _field_matrix(model, 2, v2_scale)]
    gens = list(base)
    level = list(base)
    for _ in range(2, depth + 1):
        nxt = []
        for w in level:
            for b in base:
                nxt.append(_poly_bracket(b, w))
        gens.extend(nxt)
        level = nxt
    return gens


def bracket_rank(model: ModelFamily, z, depth: int, v1_scale: float = 1.0, v2_scale: float = 1.0) -> int:
    """Rank of span{V1, V2, brackets up to length depth} at z.

    Rank d+1 certifies the bracket condition (hence L^p-improving) locally.
    """
    arr = as_zarray(z, model.dim_z)
    gens = _bracket_generators(model, depth, v1_scale, v2_scale)
    rows = np.stack([_eval_field_matrix(g, arr[-1]) for g in gens])
    scale = max(1.0, float(np.abs(rows).max()))
    return int(np.linalg.matrix_rank(rows, tol=1e-9 * scale))
