"""Two-parameter Carnot-Caratheodory balls as lattice reachable sets.

A ball B(z0, d1, d2) is the set of points reachable from z0 in unit time along
a1 V1 + a2 V2 with |a1| <= d1, |a2| <= d2.  ``reach_ball`` computes a cell
estimate by a breadth-first fixpoint driven by the nine extreme control pairs;
``mc_ball`` is its independent Monte Carlo oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ChartDomainError, ConfigError, ResolutionError
from .geometry import ModelFamily, as_zarray, rk4_many
from .lattice import LatticeSet, decode_keys, encode_cells
from .mixednorm import conjugate, mixed_norm_indicator

MAX_RADIUS = 0.75
MC_CONTROL_PIECES = 8  # random controls are piecewise constant on this many pieces


@dataclass(frozen=True)
class ComparabilityWindow:
    """(theta, A)-weak comparability: d1 <= A d2^theta and d2 <= A d1^theta."""

    theta: float
    bigA: float

    def __post_init__(self):
        if not (0.0 < self.theta <= 1.0):
            raise ConfigError("theta must lie in (0, 1]")
        if not (self.bigA >= 1.0):
            raise ConfigError("A must be >= 1")

    def contains(self, d1: float, d2: float) -> bool:
        return d1 <= self.bigA * d2 ** self.theta and d2 <= self.bigA * d1 ** self.theta


def weakly_comparable(d1: float, d2: float, window: ComparabilityWindow) -> bool:
    return window.contains(d1, d2)


@dataclass
class BallEstimate:
    """A computed ball: cells, volume, projections, Pi-extent, slab profile."""

    model_name: str
    center: tuple
    delta1: float
    delta2: float
    h: float
    tau: float
    rounds: int
    cells: LatticeSet
    volume: float
    proj1: LatticeSet
    proj2: LatticeSet
    pi_cols: np.ndarray
    pi_extent: float
    c_geom: float
    slab_bins: np.ndarray
    slab_values: np.ndarray
    truncated: bool

    @property
    def proj1_measure(self) -> float:
        return self.proj1.measure

    @property
    def proj2_measure(self) -> float:
        return self.proj2.measure

    def translate_x1(self, shift_cells: int) -> "BallEstimate":
        """Exact congruent copy shifted along x1 by an integer number of cells.

        Valid because the model fields do not depend on x, so flows commute
        with x-translations and cell assignment shifts by whole indices.
        """
        cells = self.cells.cells.copy()
        cells[:, 0] += shift_cells
        p1 = self.proj1.cells.copy()
        p1[:, 0] += shift_cells
        p2 = self.proj2.cells.copy()
        p2[:, 0] += shift_cells
        center = (self.center[0] + shift_cells * self.h,) + self.center[1:]
        return BallEstimate(
            model_name=self.model_name,
            center=center,
            delta1=self.delta1,
            delta2=self.delta2,
            h=self.h,
            tau=self.tau,
            rounds=self.rounds,
            cells=LatticeSet(self.h, cells),
            volume=self.volume,
            proj1=LatticeSet(self.h, p1),
            proj2=LatticeSet(self.h, p2),
            pi_cols=self.pi_cols + shift_cells,
            pi_extent=self.pi_extent,
            c_geom=self.c_geom,
            slab_bins=self.slab_bins + shift_cells,
            slab_values=self.slab_values.copy(),
            truncated=self.truncated,
        )

    def to_report(self) -> dict:
        return {
            "model": self.model_name,
            "center": list(self.center),
            "delta1": self.delta1,
            "delta2": self.delta2,
            "h": self.h,
            "tau": self.tau,
            "rounds": self.rounds,
            "n_cells": self.cells.n_cells,
            "volume": self.volume,
            "proj1": self.proj1_measure,
            "proj2": self.proj2_measure,
            "pi_extent": self.pi_extent,
            "c_geom": self.c_geom,
            "truncated": self.truncated,
        }


def default_tau(d1: float, d2: float, h: float) -> float:
    """Round length: at most one t-cell per stride of the fastest extreme
    control (no skipped cells), and at least 32 rounds of control switching so
    path diversity does not depend on the radius shape."""
    return min(1.0 / 32.0, max(h / (d1 + d2), 1.0 / 4096.0))


def _check_radii(d1: float, d2: float, h: float):
    if not (0.0 < d1 <= MAX_RADIUS and 0.0 < d2 <= MAX_RADIUS):
        raise ConfigError(f"radii must lie in (0, {MAX_RADIUS}]")
    if h > min(d1, d2) / 4.0 + 1e-15:
        raise ResolutionError(
            f"h={h:g} too coarse for radii ({d1:g}, {d2:g}); need h <= min/4"
        )


def pi2_cells(model: ModelFamily, cells: np.ndarray, h: float) -> np.ndarray:
    """pi2 image of Z-cells as Y-cells.  The first coordinate is exact integer
    arithmetic (the cell center maps to x1 + t = (i + j) h since gamma_1 = t);
    remaining coordinates are rounded from cell-center evaluations."""
    d = model.d
    ycells = np.empty((cells.shape[0], d), dtype=np.int64)
    ycells[:, 0] = cells[:, 0] + cells[:, d]
    if d > 1:
        gam = model.gamma(cells[:, d] * h)[:, 1:]
        ycells[:, 1:] = np.floor((cells[:, 1:d] * h + gam) / h + 0.5).astype(np.int64)
    return ycells


def _ball_from_cells(model: ModelFamily, name, z0, d1, d2, h, tau, rounds, keys, truncated) -> BallEstimate:
    d = model.d
    cells = decode_keys(np.sort(keys), d + 1)
    zset = LatticeSet(h, cells, _sorted=False)
    volume = zset.measure
    proj1 = zset.project(range(d))
    ycells = pi2_cells(model, cells, h)
    proj2 = LatticeSet(h, ycells)
    pi_cols = np.unique(ycells[:, 0])
    pi_extent = pi_cols.shape[0] * h
    bins, counts = np.unique(ycells[:, 0], return_counts=True)
    slab_values = counts * h ** d
    return BallEstimate(
        model_name=name,
        center=tuple(np.asarray(z0, dtype=float).tolist()),
        delta1=d1,
        delta2=d2,
        h=h,
        tau=tau,
        rounds=rounds,
        cells=zset,
        volume=volume,
        proj1=proj1,
        proj2=proj2,
        pi_cols=pi_cols,
        pi_extent=pi_extent,
        c_geom=pi_extent / d1,
        slab_bins=bins,
        slab_values=slab_values,
        truncated=truncated,
    )


def reach_ball(
    model: ModelFamily,
    z0,
    delta1: float,
    delta2: float,
    h: float,
    tau: float | None = None,
    rep_refine: float | None = None,
) -> BallEstimate:
    """Breadth-first reachable-cell fixpoint under the nine extreme controls.

    The active population carries exact trajectory points, deduplicated each
    round on a refined sub-lattice: coarse pruning systematically hijacks
    advancing fronts with slow interior points, so the dedup resolution tracks
    the per-round stride (clamped to [h/4, h/2]).  Cells leaving the chart are
    dropped and flagged, never clamped.
    """
    _check_radii(delta1, delta2, h)
    z0 = as_zarray(z0, model.dim_z)
    if not model.contains(z0):
        raise ChartDomainError(f"ball center {z0.tolist()} outside chart domain")
    if tau is None:
        tau = default_tau(delta1, delta2, h)
    if not (0.0 < tau <= 1.0):
        raise ConfigError("tau must lie in (0, 1]")
    rounds = math.ceil(1.0 / tau - 1e-12)
    tau = 1.0 / rounds
    controls = [(a1, a2) for a1 in (-delta1, 0.0, delta1) for a2 in (-delta2, 0.0, delta2)]
    if rep_refine is not None:
        h_rep = h / rep_refine
    else:
        stride = (delta1 + delta2) * tau
        h_rep = min(max(stride, h / 4.0), h / 2.0)

    visited = encode_cells(np.floor(z0 / h + 0.5).astype(np.int64)[None, :])
    active = z0[None, :].copy()
    truncated = False
    for _ in range(rounds):
        batches = [rk4_many(model, active, a1, a2, tau, substeps=1) for a1, a2 in controls]
        pts = np.concatenate(batches, axis=0)
        inside = model.contains(pts)
        if not inside.all():
            truncated = True
            pts = pts[inside]
        if pts.shape[0] == 0:
            break
        rep_keys = encode_cells(np.floor(pts / h_rep + 0.5).astype(np.int64))
        # One representative per refined cell, preferring the point farthest
        # from the center: slow interior landings must not hijack the fronts.
        dist = np.sum((pts - z0) ** 2, axis=1)
        order = np.lexsort((-dist, rep_keys))
        rep_sorted = rep_keys[order]
        keep = np.empty(rep_sorted.shape[0], dtype=bool)
        keep[0] = True
        np.not_equal(rep_sorted[1:], rep_sorted[:-1], out=keep[1:])
        active = pts[order[keep]]
        keys = encode_cells(np.floor(active / h + 0.5).astype(np.int64))
        visited = np.union1d(visited, keys)
    return _ball_from_cells(model, model.name, z0, delta1, delta2, h, tau, rounds, visited, truncated)


@dataclass
class McBall:
    """Monte Carlo ball estimate: endpoint cloud plus occupied-cell volume."""

    endpoints: np.ndarray
    cells: LatticeSet
    volume: float
    n_paths: int
    n_escaped: int


def _integrate_paths(model: ModelFamily, z0: np.ndarray, controls: np.ndarray, steps: int) -> tuple:
    """Integrate piecewise-constant control paths; returns (endpoints, alive mask).

    ``controls`` is (paths, pieces, 2); total time is 1, RK4 uses ``steps``
    integration steps distributed over the pieces.  Paths leaving the chart
    are dropped (once out, always out).
    """
    n_paths, pieces, _ = controls.shape
    substeps = max(1, round(steps / pieces))
    dt = (1.0 / pieces) / substeps
    pts = np.tile(z0, (n_paths, 1))
    alive = np.ones(n_paths, dtype=bool)
    for k in range(pieces):
        a1 = controls[:, k, 0]
        a2 = controls[:, k, 1]
        for _ in range(substeps):
            pts = rk4_many(model, pts, a1, a2, dt, substeps=1)
            alive &= model.contains(pts)
    return pts, alive


def mc_ball(model: ModelFamily, z0, delta1: float, delta2: float, paths: int, steps: int = 32, seed: int = 0, h: float | None = None) -> McBall:
    """Random-control oracle for reach_ball.

    Controls are piecewise constant on MC_CONTROL_PIECES intervals, sampled
    uniformly from the product box; ``steps`` sets integration resolution only.
    Endpoints are binned into cells of edge ``h`` (default min(d1,d2)/8).
    """
    if paths < 1000:
        raise ConfigError("mc_ball requires paths >= 1000")
    _check_radii(delta1, delta2, h if h is not None else min(delta1, delta2) / 8.0)
    z0 = as_zarray(z0, model.dim_z)
    if h is None:
        h = min(delta1, delta2) / 8.0
    rng = np.random.default_rng(seed)
    controls = rng.uniform(-1.0, 1.0, size=(paths, MC_CONTROL_PIECES, 2))
    controls[:, :, 0] *= delta1
    controls[:, :, 1] *= delta2
    pts, alive = _integrate_paths(model, z0, controls, steps)
    endpoints = pts[alive]
    cells = LatticeSet.from_points(endpoints, h) if endpoints.size else LatticeSet.empty(h, model.dim_z)
    return McBall(
        endpoints=endpoints,
        cells=cells,
        volume=cells.measure,
        n_paths=paths,
        n_escaped=int((~alive).sum()),
    )


def slab_profile(ball: BallEstimate) -> list:
    """Pairs (t, f(t)): d-dimensional measure of the ball in each Pi-slab of width h."""
    ts = (ball.slab_bins + 0.5) * ball.h
    return list(zip(ts.tolist(), ball.slab_values.tolist()))


def _inv(e: float) -> float:
    return 0.0 if e == math.inf else 1.0 / e


def lemma_balls_report(
    model: ModelFamily,
    z0,
    delta1: float,
    delta2: float,
    q: float,
    r: float,
    h: float,
    tau: float | None = None,
    p: float | None = None,
    window: ComparabilityWindow | None = None,
    min_proj_cells: int = 10,
    return_balls: bool = False,
):
    """Empirical comparison ratios for the five ball facts.

    (i)   |B(2d1, 2d2)| / |B(d1, d2)|
    (ii)  |B| / (|pi1 B| d1)  and  |B| / (|pi2 B| d2)
    (iii) |Pi(pi2 B)| / d1
    (iv)  ||chi_{pi2 B}||_{q', r'} / (|B|^{1-1/r} d1^{1/r-1/q} d2^{1/r-1})
    (v)   [|B| / (|pi1 B|^{1/p} ||chi_{pi2 B}||_{q',r'})] /
          [|B|^{1/r-1/p} d1^{1/p+1/q-1/r} d2^{1-1/r}]

    ``p`` enters only ratio (v); it defaults to q.
    """
    if window is not None and not window.contains(delta1, delta2):
        raise ConfigError("radii are not weakly comparable for the window under test")
    if p is None:
        p = q
    b1 = reach_ball(model, z0, delta1, delta2, h, tau=tau)
    b2 = reach_ball(model, z0, 2.0 * delta1, 2.0 * delta2, h, tau=tau)
    for proj in (b1.proj1, b1.proj2):
        if proj.n_cells < min_proj_cells:
            raise ResolutionError("projected set has fewer than 10 cells")
    iq, ir, ip = _inv(q), _inv(r), _inv(p)
    qc, rc = conjugate(q), conjugate(r)
    norm = mixed_norm_indicator(b1.proj2, qc, rc)
    ratio_i = b2.volume / b1.volume
    ratio_ii_1 = b1.volume / (b1.proj1_measure * delta1)
    ratio_ii_2 = b1.volume / (b1.proj2_measure * delta2)
    ratio_iii = b1.pi_extent / delta1
    rhs_iv = b1.volume ** (1.0 - ir) * delta1 ** (ir - iq) * delta2 ** (ir - 1.0)
    ratio_iv = norm / rhs_iv
    lhs_v = b1.volume / (b1.proj1_measure ** ip * norm)
    rhs_v = b1.volume ** (ir - ip) * delta1 ** (ip + iq - ir) * delta2 ** (1.0 - ir)
    ratio_v = lhs_v / rhs_v
    report = {
        "delta1": delta1,
        "delta2": delta2,
        "h": h,
        "p": p,
        "q": q,
        "r": r,
        "volume": b1.volume,
        "volume_doubled": b2.volume,
        "proj1": b1.proj1_measure,
        "proj2": b1.proj2_measure,
        "pi_extent": b1.pi_extent,
        "norm_q_r_conj": norm,
        "truncated": b1.truncated or b2.truncated,
        "ratios": {
            "i": ratio_i,
            "ii_1": ratio_ii_1,
            "ii_2": ratio_ii_2,
            "iii": ratio_iii,
            "iv": ratio_iv,
            "v": ratio_v,
        },
    }
    if return_balls:
        return report, b1, b2
    return report
