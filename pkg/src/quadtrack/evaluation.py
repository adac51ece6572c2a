"""Closed-loop cost evaluation: analytic, worst-case, and Monte Carlo.

The analytic route sums per-eigenvalue squared H2 norms of the error
transfer function; the worst-case route sweeps a Chebyshev grid of
curvatures and takes the largest peak gain; the empirical route steps the
actual tracker recursion against simulated minimizer paths.  Infinite
cost is an in-band value, not an exception: callers render it as missing
data.

Monte Carlo reps (and the CLI's sweep points) may run on a small thread
pool capped by the TRACKER_THREADS environment variable.  Every task
owns a pre-assigned RNG stream and results are reduced in task order, so
the numbers are bit-identical for any thread count.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .control_math import RngStream, chebyshev_grid
from .errors import ConfigError, InvalidBounds
from .lti import (
    FrequencyGrid,
    StateSpaceSISO,
    TransferFunctionSISO,
    closed_loop_error_tf,
    h2_norm_sq_exact,
    hinf_norm,
    is_internally_stable,
    ss_to_tf,
)
from .scenario import QuadraticScenario, simulate_minimizer
from .trackers import UncertaintyInterval, make_kalman_tracker

__all__ = [
    "CostReport",
    "ErrorTrace",
    "analytic_cost",
    "robust_cost",
    "empirical_cost",
    "error_trace",
    "moving_average",
    "mismatch_curve",
    "per_lambda_stability",
    "thread_count",
    "parallel_map",
]


def thread_count() -> int:
    """Worker cap from TRACKER_THREADS; unset means serial execution."""
    raw = os.environ.get("TRACKER_THREADS")
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"TRACKER_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"TRACKER_THREADS must be a positive integer, got {raw!r}")
    return value


def parallel_map(fn, items):
    """Map preserving input order; thread pool only when it can help."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class CostReport:
    """Bundle of every cost figure for one tracker on one scenario.

    analytic_J is finite exactly when every entry of per_lambda_stable is
    true; robust_Jhat refers to the curvature interval, not the realized
    eigenvalues, so it can be infinite while analytic_J is finite.
    """

    analytic_J: float
    robust_Jhat: float
    empirical_J: float
    empirical_stderr: float
    per_lambda_stable: list = field(default_factory=list)


@dataclass
class ErrorTrace:
    """Per-step error norms; window records any smoothing already applied."""

    values: np.ndarray
    window: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("trace values must be 1-D")
        if np.any(self.values < 0.0):
            raise ValueError("error norms cannot be negative")
        if self.window < 1:
            raise ValueError("window must be at least 1")

    @property
    def horizon(self) -> int:
        return self.values.size


def per_lambda_stability(h: TransferFunctionSISO, c: TransferFunctionSISO,
                         lams) -> list:
    return [is_internally_stable(h, c, float(lam)) for lam in np.asarray(lams, dtype=float)]


def analytic_cost(h: TransferFunctionSISO, c: TransferFunctionSISO,
                  eigs, sigma2: float) -> float:
    """Steady-state mean-square error summed over curvature components.

    Each eigenvalue contributes sigma2 times the squared H2 norm of its
    error transfer function; a single internally unstable loop makes the
    whole sum +inf.
    """
    eigs = np.asarray(eigs, dtype=float)
    if eigs.ndim != 1 or eigs.size == 0:
        raise InvalidBounds("eigs must be a nonempty 1-D array")
    sigma2 = float(sigma2)
    if sigma2 < 0.0:
        raise InvalidBounds("sigma2 must be nonnegative")
    total = 0.0
    for lam in eigs:
        lam = float(lam)
        if not is_internally_stable(h, c, lam):
            return float("inf")
        total += h2_norm_sq_exact(closed_loop_error_tf(h, c, lam))
    return sigma2 * total


def robust_cost(h: TransferFunctionSISO, c: TransferFunctionSISO,
                interval: UncertaintyInterval, grid_n: int = 33) -> float:
    """Largest peak error gain over a Chebyshev curvature grid.

    +inf as soon as any grid point loses internal stability.  With a
    degenerate interval the grid collapses and this is a single peak
    gain.
    """
    if grid_n < 2:
        raise InvalidBounds("grid_n must be at least 2")
    lams = chebyshev_grid(interval.lambda_min, interval.lambda_max, grid_n)
    freq = FrequencyGrid(4096)
    worst = 0.0
    for lam in lams:
        lam = float(lam)
        if not is_internally_stable(h, c, lam):
            return float("inf")
        worst = max(worst, hinf_norm(closed_loop_error_tf(h, c, lam), freq))
    return worst


def _rep_mean(scenario: QuadraticScenario, ctrl, horizon: int, burnin: int,
              stream: RngStream) -> float:
    traj = simulate_minimizer(scenario.model, scenario.n, horizon,
                              scenario.sigma, stream)
    c_path = traj.values @ scenario.basis.T
    hess = scenario.hessian
    state = ctrl.initial_state(scenario.n)
    step = ctrl.step
    acc = 0.0
    for k in range(horizon):
        e = state.x - c_path[k]
        if k >= burnin:
            acc += float(e @ e)
        state = step(state, hess @ e)
    return acc / (horizon - burnin)


def empirical_cost(scenario: QuadraticScenario, ctrl, horizon: int,
                   burnin: int, reps: int, rng: RngStream) -> tuple:
    """Monte Carlo steady-state cost: (mean, stderr) across reps.

    Rep r consumes the stream rng.split(r), so reps are independent and
    the result does not depend on execution order.  Each rep runs the
    tracker recursion against a fresh minimizer path from a zero model
    state and time-averages |e_k|^2 over k in [burnin, horizon).
    """
    if not 0 <= burnin < horizon:
        raise InvalidBounds(f"need 0 <= burnin < horizon, got {burnin}, {horizon}")
    if reps < 1:
        raise InvalidBounds("reps must be at least 1")
    streams = [rng.split(r) for r in range(reps)]
    means = parallel_map(
        lambda s: _rep_mean(scenario, ctrl, horizon, burnin, s), streams)
    mean = float(np.mean(means))
    if reps == 1:
        return mean, 0.0
    stderr = float(np.std(means, ddof=1) / math.sqrt(reps))
    return mean, stderr


def error_trace(scenario: QuadraticScenario, ctrls, horizon: int,
                rng: RngStream) -> list:
    """Run every tracker against one shared minimizer realization.

    Common noise makes the traces directly comparable; each entry holds
    the raw per-step error norms (window 1).
    """
    if horizon < 1:
        raise InvalidBounds("horizon must be at least 1")
    traj = simulate_minimizer(scenario.model, scenario.n, horizon,
                              scenario.sigma, rng)
    c_path = traj.values @ scenario.basis.T
    hess = scenario.hessian
    traces = []
    for ctrl in ctrls:
        state = ctrl.initial_state(scenario.n)
        step = ctrl.step
        vals = np.empty(horizon)
        for k in range(horizon):
            e = state.x - c_path[k]
            vals[k] = math.sqrt(float(e @ e))
            state = step(state, hess @ e)
        traces.append(ErrorTrace(vals, window=1))
    return traces


def moving_average(trace: ErrorTrace, window: int) -> ErrorTrace:
    """Causal mean over the trailing `window` samples (fewer near the start)."""
    if window < 1:
        raise InvalidBounds("window must be at least 1")
    vals = trace.values
    cs = np.concatenate([[0.0], np.cumsum(vals)])
    k = np.arange(vals.size)
    lo = np.maximum(0, k - window + 1)
    out = (cs[k + 1] - cs[lo]) / (k + 1 - lo)
    return ErrorTrace(np.maximum(out, 0.0), window=window)


def mismatch_curve(model: StateSpaceSISO, sigma2: float, lam: float,
                   ratios) -> list:
    """Cost of the filter tracker tuned at mu = lam / a, per ratio a.

    Returns (a, J(a)) pairs; a = 1 is the matched design and J is +inf
    wherever the mistuned loop loses stability.
    """
    ratios = np.asarray(ratios, dtype=float)
    if ratios.ndim != 1 or ratios.size == 0:
        raise InvalidBounds("ratios must be a nonempty 1-D array")
    if np.any(ratios <= 0.0):
        raise InvalidBounds("ratios must be positive")
    h = ss_to_tf(model)
    out = []
    for a in ratios:
        ctrl = make_kalman_tracker(model, sigma2, float(lam) / float(a))
        out.append((float(a), analytic_cost(h, ctrl.tf, [float(lam)], sigma2)))
    return out
