"""Mixed L^q(L^r) norms of grid functions sliced by the distinguished first axis.

A slice is the lattice hyperplane of thickness h at a fixed first-coordinate
cell; slice measure is counting measure times h^(d-1), the outer integral
carries weight h per slice.  Infinity exponents are essential suprema.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateError
from .lattice import LatticeSet

INF = math.inf


def conjugate(e: float) -> float:
    """Conjugate exponent with the 1 <-> infinity convention."""
    if e == 1:
        return INF
    if e == INF:
        return 1.0
    if not (1.0 < e):
        raise ConfigError(f"exponent must lie in [1, inf], got {e}")
    return e / (e - 1.0)


@dataclass(frozen=True)
class MixedExponents:
    """An (outer, inner) exponent pair q, r in [1, inf]."""

    q: float
    r: float

    def __post_init__(self):
        for e in (self.q, self.r):
            if not (e >= 1.0):
                raise ConfigError(f"exponents must lie in [1, inf], got {e}")

    @property
    def q_conj(self) -> float:
        return conjugate(self.q)

    @property
    def r_conj(self) -> float:
        return conjugate(self.r)


@dataclass
class GridFunctionY:
    """A nonnegative-or-signed grid function over Y with the first axis as Pi.

    ``origin`` is the global lattice index of values[0, ..., 0].
    """

    h: float
    origin: tuple
    values: np.ndarray

    @classmethod
    def zeros(cls, d: int, h: float, halfwidth: float = 1.0) -> "GridFunctionY":
        n_half = math.ceil(halfwidth / h - 1e-12)
        shape = (2 * n_half,) * d
        return cls(h=h, origin=(-n_half,) * d, values=np.zeros(shape))

    @classmethod
    def from_lattice_set(cls, ls: LatticeSet) -> "GridFunctionY":
        if ls.is_empty:
            raise DegenerateError("cannot densify an empty lattice set")
        lo, hi = ls.bounds()
        shape = tuple((hi - lo + 1).tolist())
        if int(np.prod(shape)) > 50_000_000:
            raise ConfigError("lattice set too large to densify")
        g = cls(h=ls.h, origin=tuple(lo.tolist()), values=np.zeros(shape))
        idx = tuple((ls.cells - lo).T)
        g.values[idx] = 1.0
        return g

    @property
    def d(self) -> int:
        return self.values.ndim

    def support(self) -> LatticeSet:
        idx = np.argwhere(self.values != 0)
        return LatticeSet(self.h, idx + np.asarray(self.origin, dtype=np.int64))

    def norm(self, q: float, r: float) -> float:
        return mixed_norm_grid(self.values, self.h, q, r)


def _outer_norm(slice_norms: np.ndarray, h: float, q: float) -> float:
    if slice_norms.size == 0:
        return 0.0
    if q == INF:
        return float(slice_norms.max())
    return float((np.sum(slice_norms ** q) * h) ** (1.0 / q))


def mixed_norm_grid(values: np.ndarray, h: float, q: float, r: float) -> float:
    """Mixed norm of a dense grid function (axis 0 is the Pi direction)."""
    exps = MixedExponents(q, r)
    vals = np.abs(np.asarray(values, dtype=float))
    flat = vals.reshape(vals.shape[0], -1)
    d = vals.ndim
    if r == INF:
        slice_norms = flat.max(axis=1)
    else:
        slice_norms = (np.sum(flat ** r, axis=1) * h ** (d - 1)) ** (1.0 / r)
    return _outer_norm(slice_norms, h, exps.q)


def mixed_norm_indicator(F: LatticeSet, q: float, r: float) -> float:
    """Mixed norm of the indicator of F, computed from per-slice cell counts."""
    MixedExponents(q, r)
    if F.is_empty:
        return 0.0
    _, counts = F.first_axis_histogram()
    masses = counts * F.h ** (F.dim - 1)
    if r == INF:
        slice_norms = np.ones_like(masses, dtype=float)
    else:
        slice_norms = masses ** (1.0 / r)
    return _outer_norm(slice_norms, F.h, q)


def mixed_norm(f, q: float, r: float) -> float:
    """Dispatch on LatticeSet (indicator) or GridFunctionY."""
    if isinstance(f, LatticeSet):
        return mixed_norm_indicator(f, q, r)
    if isinstance(f, GridFunctionY):
        return f.norm(q, r)
    raise ConfigError("mixed_norm accepts a LatticeSet or GridFunctionY")


@dataclass(frozen=True)
class HolderBound:
    lhs: float
    rhs: float
    eps_lattice: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs * (1.0 - max(self.eps_lattice, 1e-12))


def holder_lower_bound(F: LatticeSet, q: float, r: float) -> HolderBound:
    """Lower bound ||chi_F||_{q', r'} >= |F|^{1/r'} |Pi(F)|^{1/q' - 1/r'} for r >= q.

    On the lattice both sides are computed from the same cell masses, so the
    inequality is exact up to float roundoff; eps_lattice reports the
    feature-size-driven uncertainty of interpreting the result in the continuum.
    """
    if not (r >= q):
        raise ConfigError("holder_lower_bound requires r >= q")
    if F.is_empty:
        raise DegenerateError("holder_lower_bound: empty set")
    qc = conjugate(q)
    rc = conjugate(r)
    lhs = mixed_norm_indicator(F, qc, rc)
    pi_measure = len(F.first_axis_histogram()[0]) * F.h
    vol = F.measure
    inv_rc = 0.0 if rc == INF else 1.0 / rc
    inv_qc = 0.0 if qc == INF else 1.0 / qc
    rhs = vol ** inv_rc * pi_measure ** (inv_qc - inv_rc)
    _, counts = F.first_axis_histogram()
    min_slice = counts.min() * F.h ** (F.dim - 1)
    if F.dim >= 2:
        feature = min(pi_measure, min_slice ** (1.0 / (F.dim - 1)))
    else:
        feature = pi_measure
    eps = 3.0 * F.h / feature if feature > 0 else 1.0
    return HolderBound(lhs=lhs, rhs=rhs, eps_lattice=eps)
