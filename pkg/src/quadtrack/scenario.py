"""Time-varying quadratic tracking scenarios.

A scenario couples a random curvature matrix A = V diag(spectrum) V^T
with a scalar signal model that generates each component of the moving
minimizer c_k.  All randomness flows through named RngStream indices so
a (seed, parameters) pair pins every draw:

====================  =======================================
stream index          purpose
====================  =======================================
0                     curvature spectrum
1                     orthogonal eigenbasis
100 + r               Monte Carlo repetition r (state init, then noise)
7000 + s              controller synthesis start s
====================  =======================================
"""

from dataclasses import dataclass, field

import numpy as np

from .control_math import RngStream, random_orthogonal, spectral_radius
from .errors import DimensionMismatch, InvalidBounds, InvalidSpectrum
from .lti import StateSpaceSISO

__all__ = [
    "QuadraticScenario",
    "MinimizerTrajectory",
    "draw_spectrum",
    "build_hessian",
    "simulate_minimizer",
    "gradient",
    "make_scenario",
    "STREAM_SPECTRUM",
    "STREAM_BASIS",
    "STREAM_SIM_BASE",
    "STREAM_SYNTH_BASE",
]

STREAM_SPECTRUM = 0
STREAM_BASIS = 1
STREAM_SIM_BASE = 100
STREAM_SYNTH_BASE = 7000


def draw_spectrum(n: int, lambda_min: float, lambda_max: float,
                  rng: RngStream) -> np.ndarray:
    """n curvature eigenvalues drawn uniformly on [lambda_min, lambda_max]."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0.0 < lambda_min <= lambda_max):
        raise InvalidBounds(
            f"need 0 < lambda_min <= lambda_max, got [{lambda_min}, {lambda_max}]"
        )
    return rng.uniform(lambda_min, lambda_max, n)


def _assemble_hessian(basis: np.ndarray, spectrum: np.ndarray) -> np.ndarray:
    a = (basis * spectrum) @ basis.T
    return 0.5 * (a + a.T)


def build_hessian(spectrum, rng: RngStream) -> np.ndarray:
    """Symmetric matrix with the given eigenvalues in a Haar-random basis."""
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.ndim != 1 or spectrum.size < 1:
        raise InvalidSpectrum("spectrum must be a nonempty 1-D array")
    if np.any(spectrum <= 0.0):
        raise InvalidSpectrum("spectrum entries must be positive")
    basis = random_orthogonal(spectrum.size, rng)
    return _assemble_hessian(basis, spectrum)


@dataclass
class MinimizerTrajectory:
    """Sampled minimizer path c_k, one row per step, one column per component."""

    values: np.ndarray
    states: np.ndarray | None = None


def simulate_minimizer(model: StateSpaceSISO, n: int, horizon: int, sigma: float,
                       rng: RngStream, xi0: np.ndarray | None = None,
                       store_states: bool = False) -> MinimizerTrajectory:
    """Drive n independent copies of the signal model with white noise.

    Component i follows xi+ = F xi + G w, c = H xi + j w with its own
    i.i.d. N(0, sigma^2) scalar noise; the same draw w_k enters both the
    state update and the output, which is what makes the output
    predictable from its own past.  Initial states default to zero.
    The result is bit-reproducible for fixed arguments.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    m = model.order
    if xi0 is None:
        xi = np.zeros((m, n))
    else:
        xi = np.array(xi0, dtype=float)
        if xi.shape != (m, n):
            raise DimensionMismatch(f"xi0 must have shape ({m}, {n}), got {xi.shape}")
    noise = sigma * rng.standard_normal((horizon, n))
    values = np.empty((horizon, n))
    states = np.empty((horizon, m, n)) if store_states else None
    f, g, h, j = model.F, model.G, model.H, model.j
    for k in range(horizon):
        if store_states:
            states[k] = xi
        w = noise[k]
        values[k] = h @ xi + j * w
        xi = f @ xi + np.outer(g, w)
    return MinimizerTrajectory(values, states)


def gradient(a: np.ndarray, c: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gradient A (x - c) of the quadratic 0.5 (x-c)^T A (x-c) at x."""
    return a @ (x - c)


@dataclass
class QuadraticScenario:
    """Frozen experiment instance: curvature, eigenbasis, signal model, seed."""

    n: int
    lambda_min: float
    lambda_max: float
    spectrum: np.ndarray
    basis: np.ndarray
    hessian: np.ndarray
    model: StateSpaceSISO
    sigma: float
    seed: int

    def __post_init__(self):
        if not (0.0 < self.lambda_min <= self.lambda_max):
            raise InvalidBounds(
                f"need 0 < lambda_min <= lambda_max, got [{self.lambda_min}, {self.lambda_max}]"
            )
        if self.spectrum.shape != (self.n,):
            raise DimensionMismatch("spectrum length must equal n")
        if np.any(self.spectrum < self.lambda_min - 1e-12) or np.any(
                self.spectrum > self.lambda_max + 1e-12):
            raise InvalidSpectrum("spectrum leaves [lambda_min, lambda_max]")
        if np.linalg.norm(self.basis.T @ self.basis - np.eye(self.n)) > 1e-10:
            raise ValueError("basis is not orthogonal")
        if np.linalg.norm(self.hessian - self.hessian.T) > 1e-12:
            raise ValueError("hessian is not symmetric")

    @property
    def model_is_stable(self) -> bool:
        return spectral_radius(self.model.F) < 1.0 - 1e-9


def make_scenario(n: int, lambda_min: float, lambda_max: float,
                  model: StateSpaceSISO, sigma: float, seed: int) -> QuadraticScenario:
    """Draw the random pieces of a scenario from their dedicated streams."""
    spectrum = draw_spectrum(n, lambda_min, lambda_max, RngStream(seed, STREAM_SPECTRUM))
    basis = random_orthogonal(n, RngStream(seed, STREAM_BASIS))
    hessian = _assemble_hessian(basis, spectrum)
    return QuadraticScenario(n, lambda_min, lambda_max, spectrum, basis,
                             hessian, model, sigma, seed)
