"""Discrete curve-integration transform, adjoint, pairings and necessity tests.

The transform averages over the model curve: Tf(y) = sum_j f(y - gamma(t_j)) dt
with midpoint nodes t_j on the t-lattice (dt = h).  The adjoint uses the
mirrored index shifts of T, so discrete duality <Tf, g> = <f, T*g> holds to
float roundoff.  Because gamma_1(t) = t, the first-coordinate geometry is exact
integer arithmetic on cell indices throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ccball import BallEstimate
from .errors import ConfigError, DegenerateError, ResolutionError
from .geometry import ModelFamily
from .lattice import LatticeSet, encode_cells
from .mixednorm import GridFunctionY, conjugate, mixed_norm_indicator

MAX_DENSE_CELLS = 1 << 26


def _n_half(h: float) -> int:
    return int(math.ceil(1.0 / h - 1e-9))


def make_grid(d: int, h: float) -> GridFunctionY:
    """Dense zero grid with cell centers j*h covering the chart box [-1,1]^d."""
    nh = _n_half(h)
    n = 2 * nh + 1
    if n ** d > MAX_DENSE_CELLS:
        raise ConfigError("dense grid too large; use sparse set operations")
    return GridFunctionY(h=h, origin=(-nh,) * d, values=np.zeros((n,) * d))


def grid_from_lattice(ls: LatticeSet) -> GridFunctionY:
    g = make_grid(ls.dim, ls.h)
    nh = -g.origin[0]
    idx = ls.cells + nh
    if idx.min() < 0 or idx.max() >= g.values.shape[0]:
        raise ConfigError("lattice set exceeds the chart box")
    g.values[tuple(idx.T)] = 1.0
    return g


def t_node_range(h: float, window=(-1.0, 1.0)) -> np.ndarray:
    """Integer t-cell indices whose centers lie in the window."""
    j0 = int(math.ceil(window[0] / h - 1e-9))
    j1 = int(math.ceil(window[1] / h - 1e-9))  # exclusive
    return np.arange(j0, j1, dtype=np.int64)


def _shifts(model: ModelFamily, h: float, t_cells: np.ndarray) -> np.ndarray:
    """Integer index shifts s_j with f(y - gamma(t_j)) = f[idx(y) + s_j].

    First coordinate is exact (-j); the rest are rounded once per node, and
    the adjoint reuses the same table mirrored, keeping duality exact.
    """
    d = model.d
    out = np.empty((t_cells.shape[0], d), dtype=np.int64)
    out[:, 0] = -t_cells
    if d > 1:
        gam = model.gamma(t_cells * h)[:, 1:]
        out[:, 1:] = np.floor(0.5 - gam / h).astype(np.int64)
    return out


def _shift_add(dst: np.ndarray, src: np.ndarray, shift, weight: float):
    """dst[k] += weight * src[k + shift] where defined."""
    d = dst.ndim
    dst_sl, src_sl = [], []
    for ax in range(d):
        s = int(shift[ax])
        n = dst.shape[ax]
        lo = max(0, -s)
        hi = min(n, n - s)
        if hi <= lo:
            return
        dst_sl.append(slice(lo, hi))
        src_sl.append(slice(lo + s, hi + s))
    dst[tuple(dst_sl)] += weight * src[tuple(src_sl)]


def apply_T(model: ModelFamily, f: GridFunctionY, t_window=(-1.0, 1.0)) -> GridFunctionY:
    """Tf(y) = sum_j f(y - gamma(t_j)) dt on the shared dense grid."""
    h = f.h
    t_cells = t_node_range(h, t_window)
    shifts = _shifts(model, h, t_cells)
    out = GridFunctionY(h=h, origin=f.origin, values=np.zeros_like(f.values))
    for s in shifts:
        _shift_add(out.values, f.values, s, h)
    return out


def apply_Tstar(model: ModelFamily, g: GridFunctionY, t_window=(-1.0, 1.0)) -> GridFunctionY:
    """T*g(x) = sum_j g(x + gamma(t_j)) dt, the exact transpose of apply_T."""
    h = g.h
    t_cells = t_node_range(h, t_window)
    shifts = _shifts(model, h, t_cells)
    out = GridFunctionY(h=h, origin=g.origin, values=np.zeros_like(g.values))
    for s in shifts:
        _shift_add(out.values, g.values, -s, h)
    return out


@dataclass(frozen=True)
class PairingResult:
    """Quadrature pairing vs Z-lattice incidence measure for one (E, F) pair."""

    quadrature: float
    lattice: float
    c_pair: float

    @property
    def comparable(self) -> bool:
        return self.c_pair < math.inf


def _compatible_t_cells(E: LatticeSet, F: LatticeSet, h: float, t_window) -> np.ndarray:
    """t-cells that can connect E to F through the exact first-coordinate
    relation y1 = x1 + t (everything else only shrinks the incidence)."""
    t_cells = t_node_range(h, t_window)
    if E.is_empty or F.is_empty:
        return t_cells[:0]
    e_lo, e_hi = E.cells[:, 0].min(), E.cells[:, 0].max()
    f_lo, f_hi = F.cells[:, 0].min(), F.cells[:, 0].max()
    return t_cells[(t_cells >= f_lo - e_hi) & (t_cells <= f_hi - e_lo)]


def pairing(model: ModelFamily, E: LatticeSet, F: LatticeSet, t_window=(-1.0, 1.0), min_cells: int = 10) -> PairingResult:
    """<T chi_E, chi_F> by quadrature and |pi1^-1(E) cap pi2^-1(F)| by Z-cells.

    Raises ResolutionError when the incidence set carries fewer than
    ``min_cells`` lattice cells; the two estimates are meaningless there.
    """
    if E.is_empty or F.is_empty:
        raise DegenerateError("pairing requires nonempty sets")
    h = E.h
    if abs(F.h - h) > 1e-15 * h:
        raise ConfigError("E and F must share the lattice edge h")
    d = E.dim
    t_cells = _compatible_t_cells(E, F, h, t_window)
    shifts = _shifts(model, h, t_cells)
    e_keys = E.keys()
    f_keys = F.keys()
    quad_hits = 0
    lattice_hits = 0
    for tc, s in zip(t_cells, shifts):
        # quadrature: y-side lookup of E at y - gamma(t)
        probe = F.cells + s[None, :]
        quad_hits += int(np.isin(encode_cells(probe), e_keys, assume_unique=False).sum())
        # lattice: x-side lookup of F at x + gamma(t)
        probe = E.cells - s[None, :]
        lattice_hits += int(np.isin(encode_cells(probe), f_keys, assume_unique=False).sum())
    if lattice_hits < min_cells:
        raise ResolutionError(
            f"incidence set has {lattice_hits} cells (< {min_cells}); refine h or enlarge the sets"
        )
    quad = quad_hits * h * h ** d
    lattice = lattice_hits * h ** (d + 1)
    if quad > 0 and lattice > 0:
        ratio = quad / lattice
        c_pair = max(ratio, 1.0 / ratio)
    else:
        c_pair = math.inf
    return PairingResult(quadrature=quad, lattice=lattice, c_pair=c_pair)


def incidence_set(model: ModelFamily, E: LatticeSet, F: LatticeSet, t_window=(-1.0, 1.0)) -> LatticeSet:
    """Omega = pi1^-1(E) cap pi2^-1(F) as cells (x, t) on the Z-lattice."""
    if E.is_empty or F.is_empty:
        raise DegenerateError("incidence_set requires nonempty sets")
    h = E.h
    d = E.dim
    t_cells = _compatible_t_cells(E, F, h, t_window)
    shifts = _shifts(model, h, t_cells)
    f_keys = F.keys()
    blocks = []
    for tc, s in zip(t_cells, shifts):
        probe = E.cells - s[None, :]
        hit = np.isin(encode_cells(probe), f_keys, assume_unique=False)
        if hit.any():
            cells = np.empty((int(hit.sum()), d + 1), dtype=np.int64)
            cells[:, :d] = E.cells[hit]
            cells[:, d] = tc
            blocks.append(cells)
    if not blocks:
        return LatticeSet.empty(h, d + 1)
    return LatticeSet(h, np.concatenate(blocks, axis=0))


def rwt_ratio(model: ModelFamily, E: LatticeSet, F: LatticeSet, p, q, r, t_window=(-1.0, 1.0)) -> float:
    """<T chi_E, chi_F> / (|E|^{1/p} ||chi_F||_{q', r'})."""
    pr = pairing(model, E, F, t_window)
    ip = 0.0 if p == math.inf else 1.0 / float(p)
    norm = mixed_norm_indicator(F, conjugate(float(q)), conjugate(float(r)))
    denom = E.measure ** ip * norm
    if denom == 0:
        raise DegenerateError("degenerate denominator in rwt_ratio")
    return pr.quadrature / denom


@dataclass
class SuperlevelSet:
    """The layer E = {beta < T* chi_F <= 2 beta} with per-x fiber t-cells."""

    E: LatticeSet
    beta: float
    h: float
    x_cells: np.ndarray          # (n, d)
    fibers_t: list               # aligned list of int64 arrays of t-cells
    fiber_measures: np.ndarray   # |F(x)| = count * h

    @property
    def is_empty(self) -> bool:
        return self.E.is_empty


def superlevel_set(model: ModelFamily, F: LatticeSet, beta: float, t_window=(-1.0, 1.0)) -> SuperlevelSet:
    """E = {x : beta < T* chi_F(x) <= 2 beta}; fibers are exact t-cell sets.

    T* chi_F(x) equals h times the fiber count by construction, so membership
    and fiber measures agree exactly.
    """
    if beta <= 0:
        raise ConfigError("beta must be positive")
    if F.is_empty:
        raise DegenerateError("superlevel_set requires a nonempty F")
    h = F.h
    d = F.dim
    dense_f = grid_from_lattice(F)
    tstar = apply_Tstar(model, dense_f, t_window)
    nh = -tstar.origin[0]
    vals = tstar.values
    mask = (vals > beta) & (vals <= 2.0 * beta)
    idx = np.argwhere(mask)
    if idx.shape[0] == 0:
        return SuperlevelSet(
            E=LatticeSet.empty(h, d),
            beta=beta,
            h=h,
            x_cells=np.empty((0, d), dtype=np.int64),
            fibers_t=[],
            fiber_measures=np.empty(0),
        )
    x_cells = idx - nh
    E = LatticeSet(h, x_cells)
    x_cells = E.cells  # canonical order
    t_cells = t_node_range(h, t_window)
    shifts = _shifts(model, h, t_cells)
    f_keys = F.keys()
    hits = np.zeros((x_cells.shape[0], t_cells.shape[0]), dtype=bool)
    for col, (tc, s) in enumerate(zip(t_cells, shifts)):
        probe = x_cells - s[None, :]
        hits[:, col] = np.isin(encode_cells(probe), f_keys, assume_unique=False)
    fibers = [t_cells[row] for row in hits]
    measures = hits.sum(axis=1) * h
    # exact consistency with the dense transform
    dense_vals = vals[tuple((x_cells + nh).T)]
    if not np.allclose(dense_vals, measures, rtol=0, atol=1e-12):
        raise ConfigError("fiber measures disagree with the dense adjoint")
    return SuperlevelSet(E=E, beta=beta, h=h, x_cells=x_cells, fibers_t=fibers, fiber_measures=measures)


@dataclass
class NecessityRecord:
    n: int
    delta1: float
    delta2: float
    h: float
    n_translates: int
    spacing_cells: int
    disjoint: bool
    union_volume: float
    proj1_measure: float
    proj1_subadditive: bool
    norm: float
    ratio: float


def necessity_union(
    model: ModelFamily,
    balls,
    p,
    q,
    r,
    n_translates=None,
) -> list:
    """Unions of x1-translated congruent balls with disjoint Pi projections.

    Translation invariance of the models makes translated balls exactly
    congruent on the lattice, so disjointness and subadditivity certificates
    are exact integer checks.  Returns one record per input ball with the
    tested ratio |U| / (|pi1 U|^{1/p} ||chi_{pi2 U}||_{q', r'}).
    """
    ip = 0.0 if p == math.inf else 1.0 / float(p)
    qc, rc = conjugate(float(q)), conjugate(float(r))
    records = []
    for n, ball in enumerate(balls):
        if not isinstance(ball, BallEstimate):
            raise ConfigError("necessity_union expects BallEstimate inputs")
        h = ball.h
        span = int(ball.pi_cols.max() - ball.pi_cols.min()) + 1
        spacing = span + 1
        x1_lo, x1_hi = model.domain[0]
        idx_lo = int(math.floor(x1_lo / h + 0.5)) + 1
        idx_hi = int(math.floor(x1_hi / h + 0.5)) - 1
        ball_x1_max = int(ball.cells.cells[:, 0].max())
        ball_x1_min = int(ball.cells.cells[:, 0].min())
        fit = 1 + (idx_hi - ball_x1_max) // spacing
        if ball_x1_min < idx_lo:
            raise ConfigError("ball exceeds the chart domain on the left")
        want = n_translates if n_translates is not None else max(2, int(1.0 / ball.delta1))
        if n_translates is not None and want > fit:
            raise ConfigError(
                f"domain overflow: {want} translates at spacing {spacing} cells do not fit"
            )
        count = min(want, fit)
        z_blocks, p1_blocks, p2_blocks, cols = [], [], [], []
        for k in range(count):
            shift = k * spacing
            zc = ball.cells.cells.copy()
            zc[:, 0] += shift
            z_blocks.append(zc)
            b1 = ball.proj1.cells.copy()
            b1[:, 0] += shift
            p1_blocks.append(b1)
            b2 = ball.proj2.cells.copy()
            b2[:, 0] += shift
            p2_blocks.append(b2)
            cols.append(ball.pi_cols + shift)
        union_z = LatticeSet(h, np.concatenate(z_blocks, axis=0))
        union_p1 = LatticeSet(h, np.concatenate(p1_blocks, axis=0))
        union_p2 = LatticeSet(h, np.concatenate(p2_blocks, axis=0))
        all_cols = np.concatenate(cols)
        disjoint = np.unique(all_cols).size == all_cols.size
        if union_z.n_cells != count * ball.cells.n_cells:
            disjoint = False
        norm = mixed_norm_indicator(union_p2, qc, rc)
        ratio = union_z.measure / (union_p1.measure ** ip * norm)
        records.append(
            NecessityRecord(
                n=n,
                delta1=ball.delta1,
                delta2=ball.delta2,
                h=h,
                n_translates=count,
                spacing_cells=spacing,
                disjoint=bool(disjoint),
                union_volume=union_z.measure,
                proj1_measure=union_p1.measure,
                proj1_subadditive=bool(union_p1.measure <= count * ball.proj1_measure + 1e-12),
                norm=norm,
                ratio=float(ratio),
            )
        )
    return records
