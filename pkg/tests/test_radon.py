import math

import numpy as np
import pytest

from ccradon.ccball import reach_ball
from ccradon.errors import ConfigError, DegenerateError, ResolutionError
from ccradon.lattice import LatticeSet
from ccradon.radon import (
    apply_T,
    apply_Tstar,
    incidence_set,
    make_grid,
    necessity_union,
    pairing,
    rwt_ratio,
    superlevel_set,
    t_node_range,
)

H = 2.0 ** -7


def random_box(rng, h=H, min_side=0.25):
    lo = rng.uniform(-0.85, 0.85 - min_side, size=2)
    wid = rng.uniform(min_side, min(0.5, 0.85 - lo.max()))
    return LatticeSet.from_box(lo, lo + wid, h)


class TestTransform:
    def test_duality_random_functions(self, parabola, rng):
        f = make_grid(2, H)
        g = make_grid(2, H)
        f.values[:] = rng.random(f.values.shape)
        g.values[:] = rng.random(g.values.shape)
        lhs = float(np.sum(apply_T(parabola, f).values * g.values)) * H * H
        rhs = float(np.sum(f.values * apply_Tstar(parabola, g).values)) * H * H
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_constant_total_mass(self, parabola):
        f = make_grid(2, H)
        f.values[:] = 1.0
        Tf = apply_T(parabola, f, t_window=(-0.25, 0.25))
        nh = -Tf.origin[0]
        # deep interior points see the full t-window mass
        assert Tf.values[nh, nh] == pytest.approx(0.5, abs=1e-12)

    def test_zero_function(self, parabola):
        f = make_grid(2, H)
        assert not apply_T(parabola, f).values.any()

    def test_ball_indicator_bounded_by_root_isolation(self, parabola, rng):
        # Tf(y) <= measure of {t : y - gamma(t) in ball}, found by polynomial
        # root isolation of the boundary crossings
        rho = 0.2
        x0 = np.array([0.1, -0.1])
        f = make_grid(2, H)
        nh = -f.origin[0]
        idx = np.argwhere(np.ones_like(f.values, dtype=bool))
        centers = (idx - nh) * H
        inside = np.sum((centers - x0) ** 2, axis=1) <= rho ** 2
        f.values[tuple(idx[inside].T + np.array([[0], [0]]))] = 0.0  # no-op, keep layout
        f.values[:] = 0.0
        f.values[tuple(idx[inside].T)] = 1.0
        Tf = apply_T(parabola, f)
        for _ in range(5):
            y = rng.uniform(-0.4, 0.4, size=2)
            # |y - gamma(t) - x0|^2 - rho^2 <= 0 as a polynomial in t
            poly = np.polynomial.polynomial.Polynomial([0.0])
            t = np.polynomial.polynomial.Polynomial([0.0, 1.0])
            expr = (y[0] - t - x0[0]) ** 2 + (y[1] - t ** 2 - x0[1]) ** 2 - rho ** 2
            roots = expr.roots()
            real = sorted(r.real for r in roots if abs(r.imag) < 1e-9 and -1 <= r.real <= 1)
            length = 0.0
            pts = [-1.0] + real + [1.0]
            for a, b in zip(pts, pts[1:]):
                mid = 0.5 * (a + b)
                if expr(mid) <= 0:
                    length += b - a
            ky = tuple(np.floor(y / H + 0.5).astype(int) + nh)
            assert Tf.values[ky] <= length + 4 * H

    def test_tstar_constant(self, parabola):
        g = make_grid(2, H)
        g.values[:] = 1.0
        Ts = apply_Tstar(parabola, g, t_window=(-0.25, 0.25))
        nh = -Ts.origin[0]
        assert Ts.values[nh, nh] == pytest.approx(0.5, abs=1e-12)


class TestPairing:
    def test_full_box_mass(self, parabola):
        E = LatticeSet.from_box([-0.5, -0.5], [0.5, 0.5], H)
        F = LatticeSet.from_box([-0.95, -0.95], [0.95, 0.95], H)
        pr = pairing(parabola, E, F, t_window=(-0.25, 0.25))
        assert pr.lattice == pytest.approx(E.measure * 0.5, rel=0.1)
        assert pr.quadrature == pytest.approx(pr.lattice, rel=0.05)

    def test_quad_vs_lattice_on_random_slabs(self, parabola, rng):
        done = 0
        while done < 20:
            E = random_box(rng)
            F = random_box(rng)
            try:
                pr = pairing(parabola, E, F)
            except ResolutionError:
                continue  # sets too far apart to incide; redraw
            assert 0.9 <= pr.quadrature / pr.lattice <= 1.1
            done += 1

    def test_ball_pair_contains_ball(self, parabola):
        d = 2.0 ** -4
        ball = reach_ball(parabola, (0.0, 0.0, 0.0), d, d, d / 8)
        pr = pairing(parabola, ball.proj1, ball.proj2)
        assert pr.lattice >= ball.volume - 1e-12
        omega = incidence_set(parabola, ball.proj1, ball.proj2)
        assert ball.cells.issubset(omega)

    def test_empty_error(self, parabola):
        E = LatticeSet.from_box([0, 0], [0.25, 0.25], H)
        with pytest.raises(DegenerateError):
            pairing(parabola, E, LatticeSet.empty(H, 2))

    def test_tiny_incidence_raises_resolution(self, parabola):
        E = LatticeSet.from_box([-0.9, -0.9], [-0.65, -0.65], H)
        F = LatticeSet.from_box([0.65, 0.65], [0.9, 0.9], H)
        with pytest.raises(ResolutionError):
            pairing(parabola, E, F)

    def test_positivity_and_monotonicity(self, parabola):
        E1 = LatticeSet.from_box([0.0, 0.0], [0.25, 0.25], H)
        E2 = LatticeSet.from_box([-0.25, -0.25], [0.25, 0.25], H)
        F = LatticeSet.from_box([-0.5, -0.5], [0.5, 0.5], H)
        p1 = pairing(parabola, E1, F)
        p2 = pairing(parabola, E2, F)
        assert 0 <= p1.quadrature <= p2.quadrature
        assert p1.lattice <= p2.lattice


class TestRwt:
    def test_strong_type_1_inf_1(self, parabola):
        # <T chi_E, chi_F> / |E| <= full t-window mass
        E = LatticeSet.from_box([-0.4, -0.4], [0.4, 0.4], H)
        F = LatticeSet.from_box([-0.95, -0.95], [0.95, 0.95], H)
        ratio = rwt_ratio(parabola, E, F, p=1, q=math.inf, r=1)
        assert ratio <= 2.0 + 1e-9

    def test_relabeling_invariance(self, parabola):
        # pure function of set geometry: same sets, same value
        E = LatticeSet.from_box([0.0, 0.0], [0.25, 0.25], H)
        F = LatticeSet.from_box([0.0, 0.0], [0.5, 0.5], H)
        r1 = rwt_ratio(parabola, E, F, 1.5, 3.0, 3.0)
        r2 = rwt_ratio(parabola, LatticeSet(H, E.cells.copy()), F, 1.5, 3.0, 3.0)
        assert r1 == r2


class TestSuperlevel:
    def test_full_f_layers(self, parabola):
        F = LatticeSet.from_box([-0.95, -0.95], [0.95, 0.95], H)
        # T* chi_F ~ 2 deep inside; beta = 1.1 puts interior x in (1.1, 2.2]
        sl = superlevel_set(parabola, F, beta=1.1)
        assert not sl.is_empty
        assert np.all(sl.fiber_measures > 1.1) and np.all(sl.fiber_measures <= 2.2)

    def test_beta_above_total_mass_empty(self, parabola):
        F = LatticeSet.from_box([-0.95, -0.95], [0.95, 0.95], H)
        assert superlevel_set(parabola, F, beta=2.5).is_empty

    def test_pi_slab_fiber_width(self, parabola):
        a = 0.125
        F = LatticeSet.from_box([0.25, -0.9], [0.25 + a, 0.9], H)
        sl = superlevel_set(parabola, F, beta=a / 1.5)
        assert not sl.is_empty
        # coreregion fibers have measure exactly a (gamma_1(t) = t makes the
        # Pi constraint affine in t)
        frac = np.mean(np.abs(sl.fiber_measures - a) <= 2 * H)
        assert frac >= 0.9

    def test_beta_validation(self, parabola):
        F = LatticeSet.from_box([0, 0], [0.25, 0.25], H)
        with pytest.raises(ConfigError):
            superlevel_set(parabola, F, beta=0.0)

    def test_omega_chain_at_lattice_scale(self, parabola):
        # |Omega| / (beta |E|) in [1/4, 4] for the superlevel layer: fibers
        # carry mass in (beta, 2 beta] exactly, and Omega collects them
        beta = 0.1
        F = LatticeSet.from_box([0.1, -0.9], [0.25, 0.9], H)
        sl = superlevel_set(parabola, F, beta=beta)
        omega = incidence_set(parabola, sl.E, F)
        ratio = omega.measure / (beta * sl.E.measure)
        assert 0.25 <= ratio <= 4.0


class TestNecessity:
    def test_certificates_and_growth(self, parabola):
        p, q, r = 1.25, 1.0, math.inf
        balls = []
        for n in range(3):
            d = 2.0 ** (-3 - n)
            h = min(2 * d * d, d / 4)
            balls.append(reach_ball(parabola, (-0.8, 0.0, 0.0), d, d, h))
        records = necessity_union(parabola, balls, p, q, r)
        for rec in records:
            assert rec.disjoint
            assert rec.proj1_subadditive
            assert rec.n_translates >= 2
        assert records[2].ratio / records[0].ratio > 1.5

    def test_domain_overflow(self, parabola):
        d = 2.0 ** -3
        ball = reach_ball(parabola, (0.0, 0.0, 0.0), d, d, d / 8)
        with pytest.raises(ConfigError):
            necessity_union(parabola, [ball], 1.25, 1.0, math.inf, n_translates=1000)

    def test_union_volume_additive(self, parabola):
        d = 2.0 ** -4
        ball = reach_ball(parabola, (-0.8, 0.0, 0.0), d, d, d / 8)
        rec = necessity_union(parabola, [ball], 2.0, 1.5, 4.0, n_translates=3)[0]
        assert rec.union_volume == pytest.approx(3 * ball.volume, rel=1e-12)


def test_t_node_range_exact_window():
    nodes = t_node_range(0.125, (-0.25, 0.25))
    assert nodes.tolist() == [-2, -1, 0, 1]
