"""Numerical kernel tests: RNG streams, matrix equations, roots, grids."""

import numpy as np
import pytest
import scipy.linalg

from quadtrack.control_math import (
    RngStream,
    chebyshev_grid,
    polynomial_roots,
    random_orthogonal,
    solve_dare,
    solve_discrete_lyapunov,
    spectral_radius,
)
from quadtrack.errors import DimensionMismatch, NotConverged


def companion(coeffs):
    """Companion matrix of an ascending monic polynomial."""
    a = np.asarray(coeffs, dtype=float)
    m = a.size - 1
    f = np.zeros((m, m))
    f[0, :] = -a[-2::-1] / a[-1]
    f[1:, :-1] = np.eye(m - 1)
    return f


def dare_rhs(p, f, g, h, j, s2):
    """Independent one-step Riccati map, written from the defining equation."""
    ry = float(h @ p @ h) + s2 * j * j
    k = (f @ p @ h + s2 * g * j) / ry
    return f @ p @ f.T + s2 * np.outer(g, g) - ry * np.outer(k, k)


def dare_gain(p, f, g, h, j, s2):
    ry = float(h @ p @ h) + s2 * j * j
    return (f @ p @ h + s2 * g * j) / ry


# ---------------------------------------------------------------- RngStream


def test_rng_stream_replays_identically():
    a = RngStream(42, 3).standard_normal(100)
    b = RngStream(42, 3).standard_normal(100)
    assert np.array_equal(a, b)


def test_rng_stream_distinct_indices_differ():
    a = RngStream(42, 0).standard_normal(100)
    b = RngStream(42, 1).standard_normal(100)
    assert not np.array_equal(a, b)


def test_rng_stream_split_is_index_offset():
    base = RngStream(7, 10)
    assert base.split(5).index == 15
    direct = RngStream(7, 15).standard_normal(8)
    assert np.array_equal(base.split(5).standard_normal(8), direct)


def test_rng_stream_uniform_respects_bounds():
    u = RngStream(0, 0).uniform(2.0, 5.0, 1000)
    assert np.all(u >= 2.0) and np.all(u < 5.0)


# ------------------------------------------------------------------ basics


def test_spectral_radius_diagonal():
    assert spectral_radius(np.diag([0.5, -0.9])) == pytest.approx(0.9, abs=1e-9)


def test_spectral_radius_double_root_companion():
    f = companion(np.polynomial.polynomial.polyfromroots([0.975, 0.975]))
    assert spectral_radius(f) == pytest.approx(0.975, abs=1e-9)


def test_spectral_radius_circle_resonance():
    f = companion([1.0, -2.0 * np.cos(np.pi / 12.0), 1.0])
    assert spectral_radius(f) == pytest.approx(1.0, abs=1e-9)


def test_spectral_radius_rejects_nonsquare():
    with pytest.raises(DimensionMismatch):
        spectral_radius(np.ones((2, 3)))


# ---------------------------------------------------------------- Lyapunov


def test_lyapunov_one_step():
    p = solve_discrete_lyapunov(np.array([[0.0]]), np.array([[1.0]]))
    assert p == pytest.approx(np.array([[1.0]]))


def test_lyapunov_geometric_series():
    p = solve_discrete_lyapunov(np.array([[0.5]]), np.array([[1.0]]))
    assert p[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-12)


def test_lyapunov_rejects_marginally_stable():
    with pytest.raises(NotConverged):
        solve_discrete_lyapunov(np.array([[1.0]]), np.array([[1.0]]))


def test_lyapunov_random_stable_models():
    """Residual, symmetry, and PSD checks against a fixed-point oracle."""
    for seed in range(8):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((4, 4))
        a *= 0.8 / spectral_radius(a)
        m = rng.standard_normal((4, 4))
        q = m @ m.T
        p = solve_discrete_lyapunov(a, q)

        res = np.linalg.norm(a @ p @ a.T + q - p, "fro")
        assert res <= 1e-10 * max(1.0, np.linalg.norm(q, "fro"), np.linalg.norm(p, "fro"))
        assert np.linalg.norm(p - p.T, "fro") <= 1e-12 * max(1.0, np.linalg.norm(p))
        assert np.min(np.linalg.eigvalsh(p)) >= -1e-10

        # plain iteration run to stagnation, no shared code with the solver
        it = np.zeros_like(q)
        for _ in range(20000):
            nxt = a @ it @ a.T + q
            if np.linalg.norm(nxt - it, "fro") <= 1e-13 * max(1.0, np.linalg.norm(nxt)):
                it = nxt
                break
            it = nxt
        assert np.allclose(p, it, rtol=1e-8, atol=1e-8)


def test_lyapunov_rejects_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        solve_discrete_lyapunov(np.eye(2) * 0.5, np.eye(3))


# -------------------------------------------------------------------- DARE


def test_dare_collapses_with_full_feedthrough():
    # F = 0 and j = 1 make the output carry the noise exactly
    p = solve_dare(np.array([[0.0]]), [1.0], [1.0], 1.0, 1.0)
    assert p == pytest.approx(np.array([[0.0]]), abs=1e-12)


def test_dare_pure_state_noise():
    for a in (0.0, 0.3, -0.9, 0.975):
        p = solve_dare(np.array([[a]]), [1.0], [1.0], 0.0, 1.0)
        assert p[0, 0] == pytest.approx(1.0, rel=1e-10)


def test_dare_stable_benchmark_model():
    """The double-pole model with feedthrough 0.2 that the presets use."""
    char = np.polynomial.polynomial.polyfromroots([0.975, 0.975])
    f = companion(char)
    g = np.ones(2)
    h = np.array([1.0, 0.0])
    p = solve_dare(f, g, h, 0.2, 1.0)

    res = np.linalg.norm(dare_rhs(p, f, g, h, 0.2, 1.0) - p, "fro")
    assert res <= 1e-10 * max(1.0, np.linalg.norm(p, "fro"))
    assert np.min(np.linalg.eigvalsh(0.5 * (p + p.T))) >= -1e-10
    k = dare_gain(p, f, g, h, 0.2, 1.0)
    assert spectral_radius(f - np.outer(k, h)) < 1.0


def test_dare_matches_scipy_dual():
    """Cross-check against the dual control-form Riccati solver."""
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(20):
        m = int(rng.integers(1, 5))
        f = rng.standard_normal((m, m))
        f *= rng.uniform(0.3, 0.9) / max(spectral_radius(f), 1e-12)
        g = rng.standard_normal(m)
        h = rng.standard_normal(m)
        j = float(rng.uniform(0.3, 2.0))
        s2 = float(rng.uniform(0.5, 2.0))
        p = solve_dare(f, g, h, j, s2)
        ref = scipy.linalg.solve_discrete_are(
            f.T, h.reshape(m, 1), s2 * np.outer(g, g), np.array([[s2 * j * j]]),
            s=(s2 * j * g).reshape(m, 1))
        assert np.allclose(p, ref, rtol=1e-8, atol=1e-8)
        checked += 1
    assert checked == 20


def test_dare_random_models_are_stabilizing():
    """Residual, PSD, and closed-loop stability over seeded random draws.

    Includes unstable F (poles on and outside the circle are what the
    benchmark's persistent-signal models look like).
    """
    rng = np.random.default_rng(5)
    for trial in range(25):
        m = int(rng.integers(1, 5))
        f = rng.standard_normal((m, m))
        if trial % 3 == 0:
            f *= rng.uniform(1.0, 1.3) / max(spectral_radius(f), 1e-12)
        else:
            f *= rng.uniform(0.3, 0.95) / max(spectral_radius(f), 1e-12)
        g = rng.standard_normal(m)
        h = rng.standard_normal(m)
        j = float(rng.uniform(0.2, 2.5))
        s2 = float(rng.uniform(0.5, 2.0))
        p = solve_dare(f, g, h, j, s2)

        res = np.linalg.norm(dare_rhs(p, f, g, h, j, s2) - p, "fro")
        assert res <= 1e-10 * max(1.0, np.linalg.norm(p, "fro"))
        assert np.min(np.linalg.eigvalsh(0.5 * (p + p.T))) >= -1e-10
        k = dare_gain(p, f, g, h, j, s2)
        assert spectral_radius(f - np.outer(k, h)) < 1.0


def test_dare_innovation_variance_matches_spectral_factor():
    """H P H^T + s2 j^2 equals s2 j^2 times the squared product of the
    model zeros outside the unit circle (the one-step prediction-error
    variance of the output process)."""
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(40):
        m = int(rng.integers(1, 5))
        f = rng.standard_normal((m, m))
        f *= rng.uniform(0.3, 0.9) / max(spectral_radius(f), 1e-12)
        g = rng.standard_normal(m)
        h = rng.standard_normal(m)
        j = float(rng.uniform(0.3, 2.0))
        s2 = float(rng.uniform(0.5, 2.0))
        # numerator of H (zI - F)^-1 G + j via the determinant identity
        num_desc = np.poly(f - np.outer(g, h)) - np.poly(f) + j * np.poly(f)
        zeros = np.roots(num_desc)
        if zeros.size and np.min(np.abs(np.abs(zeros) - 1.0)) < 1e-3:
            continue  # circle zeros make the factorization degenerate
        p = solve_dare(f, g, h, j, s2)
        innov = float(h @ p @ h) + s2 * j * j
        expected = s2 * j * j * np.prod(np.maximum(np.abs(zeros), 1.0) ** 2)
        assert innov == pytest.approx(float(expected), rel=1e-6)
        checked += 1
    assert checked >= 30


def test_dare_rejects_nonpositive_noise():
    with pytest.raises(ValueError):
        solve_dare(np.array([[0.5]]), [1.0], [1.0], 1.0, 0.0)


# ------------------------------------------------------------------- roots


def test_polynomial_roots_double_pole():
    r = polynomial_roots(np.polynomial.polynomial.polyfromroots([0.975, 0.975]))
    assert np.allclose(np.sort(r.real), [0.975, 0.975], atol=1e-7)
    assert np.allclose(r.imag, 0.0, atol=1e-7)


def test_polynomial_roots_unit_circle_pair():
    r = polynomial_roots([1.0, -2.0 * np.cos(np.pi / 12.0), 1.0])
    r = r[np.argsort(r.imag)]
    expected = np.array([np.exp(-1j * np.pi / 12.0), np.exp(1j * np.pi / 12.0)])
    assert np.allclose(r, expected, atol=1e-10)


def test_polynomial_roots_difference_of_squares():
    r = np.sort(polynomial_roots([-1.0, 0.0, 1.0]).real)
    assert np.allclose(r, [-1.0, 1.0], atol=1e-12)


def test_polynomial_roots_trims_trailing_zeros():
    r = polynomial_roots([1.0, 2.0, 0.0])
    assert r.shape == (1,)
    assert r[0] == pytest.approx(-0.5)


def test_polynomial_roots_rejects_constants():
    with pytest.raises(ValueError):
        polynomial_roots([3.0])
    with pytest.raises(ValueError):
        polynomial_roots([0.0])


def test_polynomial_roots_reconstruction():
    """Monic product of the returned roots rebuilds the input coefficients."""
    rng = np.random.default_rng(17)
    for _ in range(30):
        deg = int(rng.integers(1, 7))
        c = rng.standard_normal(deg + 1)
        c[-1] = np.sign(c[-1]) * (abs(c[-1]) + 0.5)
        roots = polynomial_roots(c)
        assert roots.size == deg
        rebuilt = c[-1] * np.polynomial.polynomial.polyfromroots(roots)
        assert np.allclose(rebuilt.real, c, rtol=1e-8, atol=1e-8 * np.max(np.abs(c)))
        assert np.max(np.abs(rebuilt.imag)) <= 1e-8 * np.max(np.abs(c))


# ------------------------------------------------------------------- grids


def test_chebyshev_grid_endpoints_and_order():
    g = chebyshev_grid(1.0, 3.3, 33)
    assert g.shape == (33,)
    assert g[0] == pytest.approx(1.0)
    assert g[-1] == pytest.approx(3.3)
    assert np.all(np.diff(g) > 0)


def test_chebyshev_grid_clusters_at_ends():
    g = chebyshev_grid(0.0, 1.0, 9)
    gaps = np.diff(g)
    assert gaps[0] < gaps[len(gaps) // 2]
    assert gaps[-1] < gaps[len(gaps) // 2]


def test_chebyshev_grid_single_point_is_midpoint():
    assert chebyshev_grid(2.0, 4.0, 1) == pytest.approx([3.0])


def test_chebyshev_grid_rejects_nonpositive_count():
    with pytest.raises(ValueError):
        chebyshev_grid(0.0, 1.0, 0)


# -------------------------------------------------------------- orthogonal


def test_random_orthogonal_residual_and_determinant():
    v = random_orthogonal(10, RngStream(123, 0))
    assert np.linalg.norm(v.T @ v - np.eye(10), "fro") <= 1e-12
    assert abs(abs(np.linalg.det(v)) - 1.0) <= 1e-9


def test_random_orthogonal_scalar_is_signed_unit():
    seen = set()
    for seed in range(20):
        v = random_orthogonal(1, RngStream(seed, 0))
        assert v.shape == (1, 1)
        assert abs(v[0, 0]) == pytest.approx(1.0, abs=1e-12)
        seen.add(np.sign(v[0, 0]))
    assert seen == {1.0, -1.0}


def test_random_orthogonal_is_reproducible():
    a = random_orthogonal(6, RngStream(9, 4))
    b = random_orthogonal(6, RngStream(9, 4))
    assert np.array_equal(a, b)


def test_random_orthogonal_rejects_zero_size():
    with pytest.raises(ValueError):
        random_orthogonal(0, RngStream(0, 0))
