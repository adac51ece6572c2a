"""Transfer-function and state-space machinery tests."""

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from quadtrack.errors import AlgebraicLoop, DimensionMismatch
from quadtrack.lti import (
    FrequencyGrid,
    StateSpaceSISO,
    TransferFunctionSISO,
    closed_loop_error_tf,
    h2_norm_sq_exact,
    h2_norm_sq_freq,
    hinf_norm,
    is_internally_stable,
    observable_canonical,
    ss_to_tf,
    tf_to_ss,
)


def random_stable_tf(rng, max_deg=6, max_radius=0.95):
    """Strictly proper transfer function with poles inside `max_radius`."""
    deg = int(rng.integers(1, max_deg + 1))
    poles = []
    for _ in range(deg // 2):
        r = rng.uniform(0.05, max_radius)
        th = rng.uniform(0.1, np.pi - 0.1)
        poles.extend([r * np.exp(1j * th), r * np.exp(-1j * th)])
    if deg % 2:
        poles.append(complex(rng.uniform(-max_radius, max_radius)))
    den = npoly.polyfromroots(np.asarray(poles, dtype=complex)).real
    num = rng.standard_normal(deg)
    return TransferFunctionSISO(num, den, cancel=False)


# ------------------------------------------------------------ construction


def test_tf_normalizes_denominator_to_monic():
    tf = TransferFunctionSISO([2.0], [4.0, 2.0])
    assert np.allclose(tf.den, [2.0, 1.0])
    assert np.allclose(tf.num, [1.0])


def test_tf_cancels_shared_roots():
    shared = [-0.5, 1.0]  # z - 0.5
    num = npoly.polymul(shared, [2.0, 1.0])
    den = npoly.polymul(shared, [-0.2, 1.0])
    tf = TransferFunctionSISO(num, den)
    assert tf.degree == 1
    assert np.allclose(tf.num, [2.0, 1.0], atol=1e-9)
    assert np.allclose(tf.den, [-0.2, 1.0], atol=1e-9)


def test_tf_rejects_improper():
    with pytest.raises(ValueError):
        TransferFunctionSISO([1.0, 0.0, 1.0], [1.0, 1.0])


def test_tf_rejects_zero_denominator():
    with pytest.raises(ValueError):
        TransferFunctionSISO([1.0], [0.0])


def test_tf_zero_numerator():
    tf = TransferFunctionSISO([0.0], [0.5, 1.0])
    assert tf.is_zero
    assert tf.is_strictly_proper
    assert tf(1.0 + 0.0j) == 0.0


def test_tf_evaluates_pointwise():
    tf = TransferFunctionSISO([1.0], [-0.5, 1.0])
    assert tf(2.0) == pytest.approx(1.0 / 1.5)


def test_tf_dict_roundtrip():
    tf = TransferFunctionSISO([0.3, 1.2], [0.1, -0.4, 1.0])
    back = TransferFunctionSISO.from_dict(tf.to_dict())
    assert np.allclose(back.num, tf.num)
    assert np.allclose(back.den, tf.den)


def test_observable_canonical_characteristic_polynomial():
    char = npoly.polyfromroots([0.3, -0.7, 0.1])
    f, h = observable_canonical(char)
    assert np.allclose(np.poly(f)[::-1], char, atol=1e-12)
    assert np.allclose(h, [1.0, 0.0, 0.0])


def test_observable_canonical_rejects_non_monic():
    with pytest.raises(ValueError):
        observable_canonical([1.0, 2.0])


def test_ss_tf_roundtrip_frequency_response():
    rng = np.random.default_rng(2)
    z = FrequencyGrid(64).points()
    for _ in range(15):
        tf = random_stable_tf(rng)
        back = ss_to_tf(tf_to_ss(tf))
        assert np.allclose(back(z), tf(z), rtol=1e-10, atol=1e-10)


def test_ss_to_tf_with_feedthrough_matches_resolvent():
    rng = np.random.default_rng(4)
    f = rng.standard_normal((3, 3)) * 0.3
    g = rng.standard_normal(3)
    h = rng.standard_normal(3)
    ss = StateSpaceSISO(f, g, h, 0.7)
    tf = ss_to_tf(ss)
    for z in (1.0 + 0.5j, -0.3 + 1.1j, 2.0 + 0.0j):
        direct = h @ np.linalg.solve(z * np.eye(3) - f, g) + 0.7
        assert tf(z) == pytest.approx(direct, rel=1e-10)


def test_tf_to_ss_rejects_feedthrough():
    with pytest.raises(ValueError):
        tf_to_ss(TransferFunctionSISO([1.0, 1.0], [0.5, 1.0]))


# ------------------------------------------------------------- closed loop


def test_error_tf_matches_direct_formula():
    rng = np.random.default_rng(7)
    z = np.exp(1j * np.linspace(0.1, 3.0, 12))
    for _ in range(10):
        h = random_stable_tf(rng, max_deg=4)
        c = random_stable_tf(rng, max_deg=3)
        lam = float(rng.uniform(0.3, 3.0))
        w = closed_loop_error_tf(h, c, lam)
        direct = -h(z) / (1.0 - lam * c(z))
        assert np.allclose(w(z), direct, rtol=1e-9, atol=1e-9)


def test_error_tf_shared_denominator_stays_exact():
    # controller reusing the model denominator: the duplicate factor is
    # cancelled symbolically, so the error denominator IS the loop polynomial
    den = npoly.polyfromroots([0.975, 0.975])
    h = TransferFunctionSISO([1.0, 1.0], den, cancel=False)
    c = TransferFunctionSISO([0.2, -0.1], den, cancel=False)
    lam = 1.7
    w = closed_loop_error_tf(h, c, lam)
    loop = npoly.polysub(den, lam * np.array([0.2, -0.1, 0.0]))
    assert np.allclose(w.den, loop / loop[-1], atol=1e-12)
    assert np.allclose(w.num, -np.array([1.0, 1.0]) / loop[-1], atol=1e-12)


def test_error_tf_requires_strictly_proper_controller():
    h = TransferFunctionSISO([1.0], [-0.5, 1.0])
    c = TransferFunctionSISO([1.0, 0.5], [0.2, 1.0])  # proper, not strictly
    with pytest.raises(AlgebraicLoop):
        closed_loop_error_tf(h, c, 1.0)
    with pytest.raises(AlgebraicLoop):
        is_internally_stable(h, c, 1.0)


def test_internal_stability_matches_matrix_assembly():
    """The polynomial route agrees with eigenvalues of F_c + lam G_c H_c.

    For a stable model the check reduces to the loop roots, and those are
    the eigenvalues of the controller realization closed through the
    constant-gain feedback.
    """
    rng = np.random.default_rng(13)
    checked = 0
    for _ in range(40):
        h = random_stable_tf(rng, max_deg=4)
        c = random_stable_tf(rng, max_deg=3, max_radius=1.2)
        lam = float(rng.uniform(0.2, 4.0))
        ss = tf_to_ss(c)
        ev = np.linalg.eigvals(ss.F + lam * np.outer(ss.G, ss.H))
        rho = float(np.max(np.abs(ev)))
        if abs(rho - 1.0) < 1e-6:
            continue  # on the margin either route could tip
        assert is_internally_stable(h, c, lam) == (rho < 1.0), (
            f"polynomial and matrix routes disagree at rho={rho}")
        checked += 1
    assert checked >= 30


def test_internal_stability_requires_persistent_pole_model():
    h = TransferFunctionSISO([1.0], [-1.0, 1.0])  # integrator signal
    good = TransferFunctionSISO([-0.5], [-1.0, 1.0])  # carries the pole at 1
    bad = TransferFunctionSISO([-0.5], [-0.5, 1.0])  # stable loop, no model
    assert is_internally_stable(h, good, 1.0)
    assert not is_internally_stable(h, bad, 1.0)


def test_internal_stability_flags_unstable_loop():
    h = TransferFunctionSISO([1.0], [-0.5, 1.0])
    c = TransferFunctionSISO([0.5], [-1.0, 1.0])
    # loop root 1 + lam * 0.5 sits outside for positive feedback
    assert not is_internally_stable(h, c, 1.0)


# ------------------------------------------------------------------- norms


def test_h2_first_order_closed_form():
    for a in (0.0, 0.5, -0.9, 0.975):
        w = TransferFunctionSISO([1.0], [-a, 1.0])
        assert h2_norm_sq_exact(w) == pytest.approx(1.0 / (1.0 - a * a), rel=1e-12)


def test_h2_with_feedthrough_closed_form():
    # z / (z - a) = 1 + a / (z - a), so the squared norm is 1/(1-a^2) too
    for a in (0.4, -0.7):
        w = TransferFunctionSISO([0.0, 1.0], [-a, 1.0])
        assert h2_norm_sq_exact(w) == pytest.approx(1.0 / (1.0 - a * a), rel=1e-12)


def test_h2_constant_and_zero():
    assert h2_norm_sq_exact(TransferFunctionSISO([3.0], [1.0])) == pytest.approx(9.0)
    assert h2_norm_sq_exact(TransferFunctionSISO([0.0], [-0.5, 1.0])) == 0.0


def test_h2_unstable_is_infinite():
    assert h2_norm_sq_exact(TransferFunctionSISO([1.0], [-1.0, 1.0])) == float("inf")
    resonant = TransferFunctionSISO([1.0], [1.0, -2.0 * np.cos(np.pi / 12.0), 1.0])
    assert h2_norm_sq_exact(resonant) == float("inf")
    assert h2_norm_sq_freq(resonant, FrequencyGrid(4096)) == float("inf")
    assert hinf_norm(resonant) == float("inf")


def test_h2_exact_matches_frequency_grid():
    rng = np.random.default_rng(23)
    grid = FrequencyGrid(2 ** 14)
    for _ in range(10):
        w = random_stable_tf(rng)
        exact = h2_norm_sq_exact(w)
        approx = h2_norm_sq_freq(w, grid)
        assert abs(exact - approx) <= 1e-6 * exact


def test_h2_exact_matches_impulse_response_sum():
    """Second independent oracle: run the realization forward and sum squares."""
    rng = np.random.default_rng(29)
    for _ in range(5):
        w = random_stable_tf(rng, max_deg=4, max_radius=0.9)
        ss = tf_to_ss(w)
        xi = ss.G.copy()
        total = 0.0
        for _ in range(4000):
            total += float(ss.H @ xi) ** 2
            xi = ss.F @ xi
        assert h2_norm_sq_exact(w) == pytest.approx(total, rel=1e-8)


def test_hinf_first_order_closed_form():
    for a in (0.5, -0.8):
        w = TransferFunctionSISO([1.0], [-a, 1.0])
        assert hinf_norm(w) == pytest.approx(1.0 / (1.0 - abs(a)), rel=1e-6)


def test_hinf_constant():
    assert hinf_norm(TransferFunctionSISO([-2.5], [1.0])) == pytest.approx(2.5)
    assert hinf_norm(TransferFunctionSISO([0.0], [1.0])) == 0.0


def test_hinf_dominates_rms():
    rng = np.random.default_rng(31)
    for _ in range(10):
        w = random_stable_tf(rng)
        assert h2_norm_sq_exact(w) <= hinf_norm(w) ** 2 * (1.0 + 1e-9)


# -------------------------------------------------------------------- grid


def test_frequency_grid_validation():
    with pytest.raises(ValueError):
        FrequencyGrid(63)
    with pytest.raises(ValueError):
        FrequencyGrid(100)
    g = FrequencyGrid(64)
    assert g.angles()[0] == pytest.approx(-np.pi)
    assert np.allclose(np.abs(g.points()), 1.0)
