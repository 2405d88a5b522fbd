import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from boxtransport import DegenerateError, EnclosureGeometry, MovementParams, ParameterError
from boxtransport.density import (GridSpec, density_at, density_grid, density_nondim, h_nondim,
                                  median_arrival_time, passing_probability, psi_series, q_nondim,
                                  q_redistributed, reflux_rate_h, reflux_state,
                                  steady_state_cell_mass, steady_state_exact, steady_state_paper,
                                  survival_probability, x_density, x_marginal_free, y_marginal)
from boxtransport.mfpt import peclet

from oracles import cosh_over_sinh_decimal, simpson

M = MovementParams(0.5, 0.0, 2.0, 2.0)  # pv = qD = 1
G = EnclosureGeometry(10.0, 4.0, 5.0, 0.5)


def test_q_example():
    # 1 + (erf(0) - erf(20/sqrt(20)))/2
    assert q_redistributed(5.0, M, G) == pytest.approx(1 - 0.5 * math.erf(20 / math.sqrt(20)), abs=1e-15)
    assert q_redistributed(5.0, M, G) == pytest.approx(0.5, abs=1e-9)


def test_q_matches_tail_integral():
    t = 5.0
    tail = integrate.quad(lambda x: x_marginal_free(x, t, M, G.x0), G.a, np.inf, epsabs=1e-14)[0]
    assert q_redistributed(t, M, G) == pytest.approx(tail, abs=1e-12)


def test_q_limits():
    assert q_redistributed(0.0, M, G) == 0.0
    assert q_redistributed(1e-9, M, G) < 1e-12
    assert q_redistributed(1e6, M, G) == 1.0


def test_survival_complements():
    ts = np.logspace(-3, 4, 50)
    q = passing_probability(G.a, ts, M, G.x0)
    s = survival_probability(G.a, ts, M, G.x0)
    np.testing.assert_allclose(q + s, 1.0, atol=2e-16)


def test_q_nondecreasing():
    ts = np.logspace(-6, 6, 1000)
    q = q_redistributed(ts, M, G)
    assert np.all(np.diff(q) >= 0)
    t_large = 1e3 * max(G.a / M.pv, G.a ** 2 / M.qD)
    assert 1 - q_redistributed(t_large, M, G) < 1e-8


def test_free_marginal_reflects_and_normalises():
    t, x0 = 3.0, 2.0
    eps = 1e-6 * G.a
    d = (x_marginal_free(eps, t, M, x0) - x_marginal_free(-eps, t, M, x0)) / (2 * eps)
    peak = x_marginal_free(x0 + M.pv * t, t, M, x0)
    assert abs(d) < 1e-6 * peak
    mass = integrate.quad(lambda x: x_marginal_free(x, t, M, x0), 0, np.inf, epsabs=1e-13)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_free_marginal_peak_small_t():
    t = 1e-6
    c = G.x0 + M.pv * t
    assert x_marginal_free(c, t, M, G.x0) == pytest.approx((4 * math.pi * M.qD * t) ** -0.5, rel=1e-12)


@pytest.mark.parametrize("t", [0.01, 0.3, 3.0, 30.0])
def test_y_marginal_mass_and_walls(t):
    mass = integrate.quad(lambda y: y_marginal(y, t, M, G), -2, 2, epsabs=1e-12, limit=200)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)
    ys = np.linspace(-2, 2, 401)
    peak = np.max(y_marginal(ys, t, M, G))
    eps = 1e-6
    for wall in (-2.0, 2.0):
        inner = wall - math.copysign(eps, wall)
        slope = (y_marginal(wall, t, M, G) - y_marginal(inner, t, M, G)) / eps
        assert abs(slope) < 1e-3 * peak
        # the image sum is even about each wall
        sym = (y_marginal(inner, t, M, G) - y_marginal(wall - math.copysign(2 * eps, wall), t, M, G))
        assert abs(sym) < 1e-5 * peak


def test_y_marginal_uniform_at_large_t():
    t = (10 * G.b) ** 2 / (4 * M.qD)
    ys = np.linspace(-2, 2, 41)
    assert np.max(np.abs(y_marginal(ys, t, M, G) * G.b - 1)) < 1e-8


@given(st.floats(0.05, 40), st.floats(-2, 2), st.floats(-2, 2))
def test_y_forms_agree(t, y, y0):
    # the image sum and the cosine series are two spellings of one function
    from boxtransport.density import _y_cosines, _y_images
    a = _y_images(np.array(y), t, 1.0, y0, 4.0, 1e-14)
    b = _y_cosines(np.array(y), t, 1.0, y0, 4.0, 1e-14)
    assert a == pytest.approx(b, abs=1e-12)


def test_y_rejects_outside():
    with pytest.raises(ParameterError):
        y_marginal(3.0, 1.0, M, G)
    with pytest.raises(ParameterError):
        y_marginal(0.0, 0.0, M, G)


def test_h_limits():
    t_large = 1e3 * max(G.a / M.pv, G.a ** 2 / M.qD)
    assert reflux_rate_h(t_large, M) == pytest.approx(M.pv / M.qD, rel=1e-8)
    t = 1e-10
    assert reflux_rate_h(t, M) == pytest.approx(0.5 * math.sqrt(math.pi / (M.qD * t)), rel=1e-2)


def test_h_reciprocal_of_bracket():
    for t in (0.01, 0.5, 7.0, 120.0):
        pv, qD = M.pv, M.qD
        z = pv * t / math.sqrt(4 * qD * t)
        bracket = (qD / pv * math.erf(z) - pv * t / 2 * math.erfc(z)
                   + math.sqrt(qD * t / math.pi) * math.exp(-pv * pv * t / (4 * qD)))
        assert reflux_rate_h(t, M) * bracket == pytest.approx(1.0, rel=1e-12)


def test_h_decreasing():
    ts = np.logspace(-6, 4, 500)
    h = reflux_rate_h(ts, M)
    assert np.all(np.diff(h) <= 0)
    assert np.all(h >= M.pv / M.qD)
    assert np.all(np.diff(h[ts < 100]) < 0)


def test_h_without_drift():
    m = MovementParams(0.0, 0, 0, 2.0)
    assert reflux_rate_h(2.0, m) == pytest.approx(0.5 * math.sqrt(math.pi / 4.0))
    tiny = MovementParams(0.5, 0, 1e-9, 4.0)
    assert reflux_rate_h(2.0, tiny) == pytest.approx(0.5 * math.sqrt(math.pi / 4.0), rel=1e-8)


def test_reflux_state():
    r = reflux_state(3.0, M, G)
    assert 0 <= r.q_mass <= 1 and r.h > 0


@pytest.mark.parametrize("t", [0.5, 5.0, 50.0])
def test_psi_integrates_to_q(t):
    mass = integrate.quad(lambda x: psi_series(x, t, M, G), 0, G.a, epsabs=1e-13)[0]
    assert mass == pytest.approx(q_redistributed(t, M, G), abs=1e-10)


def test_psi_endpoint():
    t = 4.0
    Q, h = q_redistributed(t, M, G), reflux_rate_h(t, M)
    assert psi_series(G.a, t, M, G) == pytest.approx(Q * h / math.tanh(h * G.a), rel=1e-13)


def test_psi_overflow_safe():
    # h a = 50 against a 60-digit evaluation, then h a = 800 must stay finite
    from boxtransport.density import _fold_exponential
    for h, x, a in [(5.0, 0.0, 10.0), (5.0, 7.3, 10.0), (0.5, 3.0, 10.0)]:
        assert _fold_exponential(np.float64(x), h, a) == pytest.approx(
            cosh_over_sinh_decimal(h, x, a), rel=1e-13)
    v = _fold_exponential(np.array([0.0, 5.0, 10.0]), 80.0, 10.0)
    assert np.all(np.isfinite(v)) and v[-1] == pytest.approx(80.0)


def test_density_mass_2d():
    t = 4.0
    mass = integrate.dblquad(lambda y, x: density_at(x, y, t, M, G), 0, G.a, -2, 2,
                             epsabs=1e-9)[0]
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_density_y_symmetry():
    g = EnclosureGeometry(10.0, 4.0, 3.0, 0.0)
    xs = np.linspace(0, 10, 7)
    for y in (0.3, 1.1, 2.0):
        np.testing.assert_allclose(density_at(xs, y, 2.0, M, g), density_at(xs, -y, 2.0, M, g),
                                   rtol=1e-12)


def test_density_large_t_is_steady():
    t = 1e6 * G.a / M.pv
    xs = np.linspace(0.5 * G.a, G.a, 20)
    np.testing.assert_allclose(density_at(xs, 0.2, t, M, G), steady_state_paper(xs, 0.2, M, G),
                               rtol=1e-6)


def test_density_rejects_t0():
    with pytest.raises(ParameterError, match="point mass"):
        density_at(1.0, 0.0, 0.0, M, G)


def test_density_needs_diffusion():
    with pytest.raises(DegenerateError):
        density_at(1.0, 0.0, 1.0, MovementParams(1.0, 0, 1, 1), G)


def test_grid_single_cell():
    f = density_grid(GridSpec(1, 1), 3.0, M, G)
    assert f.values.shape == (1, 1)
    assert f.values[0, 0] == pytest.approx(density_at(G.a / 2, 0.0, 3.0, M, G), rel=1e-14)


def test_grid_mass_and_outer_product():
    f = density_grid(GridSpec(400, 100), 5.0, M, G)
    assert abs(f.mass - 1) < 1e-3
    px = x_density(f.x, 5.0, M, G)
    py = y_marginal(f.y, 5.0, M, G)
    np.testing.assert_allclose(f.values, np.outer(px, py), rtol=1e-14)
    direct = density_at(f.x[:, None], f.y[None, :], 5.0, M, G)
    np.testing.assert_allclose(f.values, direct, rtol=1e-14)


def test_grid_spec_validation():
    with pytest.raises(ParameterError):
        GridSpec(0, 3)
    g = GridSpec(4, 2)
    assert g.cell_area(G) == pytest.approx(2.5 * 2)
    assert np.all((g.x_centers(G) > 0) & (g.x_centers(G) < G.a))


def test_steady_states():
    xs = np.linspace(0, G.a, 101)
    for fn in (steady_state_paper, steady_state_exact):
        mass = integrate.quad(lambda x: fn(x, 0.0, M, G), 0, G.a, epsabs=1e-14)[0] * G.b
        assert mass == pytest.approx(1.0, abs=1e-12)
        assert fn(3.0, -1.5, M, G) == fn(3.0, 1.7, M, G)
    # exact form carries zero net flux
    k = M.pv / M.qD
    p = steady_state_exact(xs, 0.0, M, G)
    np.testing.assert_allclose(M.pv * p - M.qD * k * p, 0.0, atol=1e-15)
    assert np.all(steady_state_paper(xs, 0, M, G) >= 0)


def test_steady_forms_agree_advective():
    m = MovementParams(0.5, 0, 1.0, 1.0)
    g = EnclosureGeometry(20.0, 2.0)
    assert m.pv / m.qD * g.a >= 20
    xs = np.linspace(g.a / 2, g.a, 200)
    np.testing.assert_allclose(steady_state_paper(xs, 0, m, g), steady_state_exact(xs, 0, m, g),
                               rtol=1e-6)


def test_steady_cell_mass():
    for form in ("paper", "exact"):
        assert steady_state_cell_mass(GridSpec(3, 2), M, G, form).sum() == pytest.approx(1.0, abs=1e-12)


def test_median_examples():
    tm = median_arrival_time(M, G)
    assert tm == pytest.approx(5.0, abs=1e-3)
    assert abs(q_redistributed(tm, M, G) - 0.5) <= 1e-9
    fast = MovementParams(0.5, 0, 200.0, 0.02)
    g = EnclosureGeometry(100.0, 1.0, 0.0)
    assert peclet(fast, g, 0.0).pe >= 1e3
    assert median_arrival_time(fast, g) == pytest.approx(g.a / fast.pv, rel=1e-2)
    assert median_arrival_time(MovementParams(1.0, 0, 2.0, 1.0), g) == 50.0
    assert median_arrival_time(M, EnclosureGeometry(10.0, 1.0, 10.0)) == 0.0


density_params = st.builds(
    MovementParams,
    p=st.floats(0.05, 0.95), s=st.just(0.0),
    v=st.floats(0.01, 5), D=st.floats(0.01, 5),
)


@given(density_params, st.floats(0, 1), st.floats(-0.5, 0.5), st.floats(1e-3, 1e3),
       st.floats(0, 1), st.floats(-0.5, 0.5))
def test_density_nonnegative(m, fx, fy, t, fx0, fy0):
    g = EnclosureGeometry(5.0, 2.0, 5.0 * fx0, 2.0 * fy0)
    assert density_at(5.0 * fx, 2.0 * fy, t, m, g) >= 0


@given(density_params, st.floats(0.01, 0.99), st.floats(-0.49, 0.49), st.floats(0.01, 100))
def test_nondimensional_consistency(m, fx, fy, t):
    g = EnclosureGeometry(5.0, 2.0, 1.0, 0.3)
    L = 2 * m.qD / m.pv
    T = 4 * m.qD / m.pv ** 2
    x, y = 5.0 * fx, 2.0 * fy
    dim = density_at(x, y, t, m, g) * L * L
    nd = density_nondim(x / L, y / L, t / T, g.x0 / L, g.y0 / L, g.a / L, g.b / L)
    assert nd == pytest.approx(dim, rel=1e-10, abs=1e-14)


def test_nondim_q_keeps_small_tail():
    m = MovementParams(0.0625, 0, 0.015625, 0.015625)
    L, T = 2 * m.qD / m.pv, 4 * m.qD / m.pv ** 2
    g = EnclosureGeometry(5.0, 2.0, 1.0)
    q = q_redistributed(8.0, m, g)
    assert 0 < q < 1e-15
    assert q_nondim(8.0 / T, 1.0 / L, 5.0 / L) == pytest.approx(q, rel=1e-12)


def test_nondim_q_h():
    T = 4 * M.qD / M.pv ** 2
    L = 2 * M.qD / M.pv
    for t in (0.1, 1.0, 10.0):
        assert q_nondim(t / T, G.x0 / L, G.a / L) == pytest.approx(q_redistributed(t, M, G), rel=1e-13)
        assert h_nondim(t / T) == pytest.approx(reflux_rate_h(t, M) * L, rel=1e-13)


def test_full_reflux_mode():
    t = 6.0
    mass = integrate.quad(lambda x: x_density(x, t, M, G, "full"), 0, G.a, epsabs=1e-12)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert psi_series(G.a, t, M, G, "full") > 0
    with pytest.raises(ParameterError):
        psi_series(1.0, t, M, G, "other")


def test_simpson_oracle_sanity():
    assert simpson(lambda x: x ** 3, 0, 2, 10) == pytest.approx(4.0)
