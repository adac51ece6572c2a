"""Experiment execution behind the command line: sweeps, traces, files.

Sweep points run through `parallel_map` with all randomness keyed by
(seed, stream index), and both CSV and metadata sidecar are assembled in
memory before anything touches disk, so a rerun with the same document
and seed produces byte-identical files no matter the thread count.
"""

import hashlib
import json
import math
import os

import numpy as np

from . import __version__
from .config import ExperimentConfig, build_scenario, parse_config, validate_config
from .control_math import RngStream, chebyshev_grid
from .errors import NoStabilizingController, UnknownPreset
from .evaluation import (
    CostReport,
    analytic_cost,
    empirical_cost,
    error_trace,
    moving_average,
    parallel_map,
    per_lambda_stability,
    robust_cost,
)
from .lti import closed_loop_error_tf, h2_norm_sq_exact, hinf_norm, ss_to_tf
from .presets import PRESET_NAMES, preset_document
from .scenario import STREAM_SIM_BASE, QuadraticScenario
from .synthesis import SynthesisOptions, precompensated_synthesize
from .trackers import (
    UncertaintyInterval,
    controller_from_dict,
    controller_to_dict,
    make_gd_tracker,
    make_kalman_tracker,
    mu_star_from_eigs,
    mu_star_search,
    mu_star_uniform,
)

__all__ = ["SweepResult", "run_preset", "run_config", "synthesize_cmd",
           "evaluate_cmd"]

SWEEP_HEADER = ("param,sqrtJ_gd_analytic,sqrtJ_gd_emp,sqrtJ_hinf_analytic,"
                "sqrtJ_hinf_emp,sqrtJ_kalman_analytic,sqrtJ_kalman_emp")
TRACE_HEADER = "k,err_gd,err_hinf,err_kalman"
_COLUMN_ORDER = ("gd", "hinf", "kalman")


def _fmt(value) -> str:
    """17-significant-digit cell; missing or infinite values render empty."""
    if value is None or not math.isfinite(value):
        return ""
    return f"{value:.17g}"


def _version_string(doc: dict) -> str:
    payload = {k: v for k, v in doc.items() if k != "output"}
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha1(canon.encode("utf-8")).hexdigest()[:12]
    return f"quadtrack-{__version__}+g{digest}"


def _write_text(path: str, text: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _write_meta(csv_path: str, doc: dict, preset: str | None, seed: int) -> str:
    meta = {
        "preset": preset,
        "seed": seed,
        "version": _version_string(doc),
        "config": {k: v for k, v in doc.items() if k != "output"},
    }
    path = os.path.splitext(csv_path)[0] + ".meta.json"
    return _write_text(path, json.dumps(meta, sort_keys=True, indent=2) + "\n")


class SweepResult:
    """Sweep outcome: one row per parameter value, two columns per tracker.

    Cells hold sqrt(J) or None when that tracker was not run; +inf marks
    a diverging cost and renders as an empty CSV field, same as None.
    """

    def __init__(self, param_values, sqrt_analytic, sqrt_empirical,
                 preset=None, seed=0, version=""):
        self.param_values = list(param_values)
        self.sqrt_analytic = sqrt_analytic
        self.sqrt_empirical = sqrt_empirical
        self.preset = preset
        self.seed = seed
        self.version = version
        for table in (sqrt_analytic, sqrt_empirical):
            for name in _COLUMN_ORDER:
                if len(table[name]) != len(self.param_values):
                    raise ValueError("column lengths must match the parameter grid")

    def to_csv_text(self) -> str:
        lines = [SWEEP_HEADER]
        for i, value in enumerate(self.param_values):
            cells = [_fmt(value)]
            for name in _COLUMN_ORDER:
                cells.append(_fmt(self.sqrt_analytic[name][i]))
                cells.append(_fmt(self.sqrt_empirical[name][i]))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _kalman_mu(cfg: ExperimentConfig, scenario: QuadraticScenario) -> float:
    mode = cfg.trackers.kalman_mu
    if mode == "search":
        sigma2 = scenario.sigma ** 2 if scenario.sigma > 0.0 else 1.0
        return mu_star_search(scenario.model, sigma2, scenario.spectrum)
    if mode == "uniform":
        return mu_star_uniform(scenario.lambda_min, scenario.lambda_max)
    if mode == "eigs":
        return mu_star_from_eigs(scenario.spectrum)
    return float(mode)


def _build_trackers(cfg: ExperimentConfig, scenario: QuadraticScenario) -> dict:
    spec = cfg.trackers
    interval = UncertaintyInterval(scenario.lambda_min, scenario.lambda_max)
    sigma2 = scenario.sigma ** 2 if scenario.sigma > 0.0 else 1.0
    out = {}
    if "gd" in spec.use and scenario.model_is_stable:
        alpha = spec.gd_alpha if spec.gd_alpha is not None else 1.0 / scenario.lambda_max
        out["gd"] = make_gd_tracker(alpha)
    if "kalman" in spec.use:
        try:
            out["kalman"] = make_kalman_tracker(scenario.model, sigma2,
                                                _kalman_mu(cfg, scenario))
        except NoStabilizingController:
            # spectrum spread exceeds this structure's gain margin; the
            # tracker diverges for every tuning, so its columns stay empty
            pass
    if "hinf" in spec.use:
        opts = SynthesisOptions(order=spec.hinf_order, grid_points=spec.hinf_grid,
                                starts=spec.synthesis_starts,
                                max_evals=spec.synthesis_max_evals,
                                seed=scenario.seed)
        out["hinf"] = precompensated_synthesize(ss_to_tf(scenario.model), interval, opts)
    return out


def _sweep_point(cfg: ExperimentConfig, value: float) -> tuple:
    run = cfg.run
    scenario = build_scenario(
        cfg.scenario,
        lambda_max_override=value if run.sweep_param == "lambda_max" else None,
        j_override=value if run.sweep_param == "j" else None,
    )
    h = ss_to_tf(scenario.model)
    ctrls = _build_trackers(cfg, scenario)
    analytic = {}
    empirical = {}
    for name in _COLUMN_ORDER:
        ctrl = ctrls.get(name)
        if ctrl is None:
            analytic[name] = None
            empirical[name] = None
            continue
        cost = analytic_cost(h, ctrl.tf, scenario.spectrum, scenario.sigma ** 2)
        analytic[name] = math.sqrt(cost) if math.isfinite(cost) else float("inf")
        if math.isfinite(cost):
            mean, _ = empirical_cost(scenario, ctrl, run.horizon, run.burnin,
                                     run.reps, RngStream(scenario.seed, STREAM_SIM_BASE))
            empirical[name] = math.sqrt(mean)
        else:
            empirical[name] = None
    return analytic, empirical


def run_sweep(cfg: ExperimentConfig, preset: str | None = None) -> SweepResult:
    run = cfg.run
    values = [float(v) for v in np.linspace(run.sweep_lo, run.sweep_hi, run.sweep_points)]
    points = parallel_map(lambda v: _sweep_point(cfg, v), values)
    tables = ({name: [p[0][name] for p in points] for name in _COLUMN_ORDER},
              {name: [p[1][name] for p in points] for name in _COLUMN_ORDER})
    return SweepResult(values, tables[0], tables[1], preset=preset,
                       seed=cfg.scenario.seed, version=_version_string(cfg.raw))


def run_trace(cfg: ExperimentConfig) -> dict:
    """Smoothed error-norm trace per tracker, on one shared noise path."""
    scenario = build_scenario(cfg.scenario)
    ctrls = _build_trackers(cfg, scenario)
    names = [name for name in _COLUMN_ORDER if name in ctrls]
    traces = error_trace(scenario, [ctrls[name] for name in names],
                         cfg.run.horizon, RngStream(scenario.seed, STREAM_SIM_BASE))
    columns = {name: None for name in _COLUMN_ORDER}
    for name, trace in zip(names, traces):
        columns[name] = moving_average(trace, cfg.run.window).values
    return columns


def _trace_csv_text(cfg: ExperimentConfig, columns: dict) -> str:
    lines = [TRACE_HEADER]
    for k in range(cfg.run.horizon):
        cells = [str(k)]
        for name in _COLUMN_ORDER:
            col = columns[name]
            cells.append(_fmt(float(col[k])) if col is not None else "")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def execute_config(cfg: ExperimentConfig, preset: str | None = None) -> list:
    """Run the configured experiment and write its CSV plus metadata sidecar."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    if cfg.run.sweep_param is not None:
        name = cfg.out_name or "sweep.csv"
        text = run_sweep(cfg, preset).to_csv_text()
    else:
        name = cfg.out_name or "trace.csv"
        text = _trace_csv_text(cfg, run_trace(cfg))
    csv_path = _write_text(os.path.join(cfg.out_dir, name), text)
    meta_path = _write_meta(csv_path, cfg.raw, preset, cfg.scenario.seed)
    return [csv_path, meta_path]


def run_preset(name: str, out_dir: str, seed: int) -> list:
    """Execute one named benchmark preset; returns the written file paths."""
    if name not in PRESET_NAMES:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {list(PRESET_NAMES)}")
    doc = preset_document(name, int(seed), out_dir)
    return execute_config(validate_config(doc), preset=name)


def run_config(config_path: str) -> list:
    """Execute the experiment described by a config file."""
    return execute_config(parse_config(config_path))


def synthesize_cmd(config_path: str, out_path: str) -> str:
    """Synthesize the worst-case controller for the configured scenario.

    Writes the controller document (with its certified gamma) to out_path
    and prints the achieved level plus a grid stability summary.
    """
    cfg = parse_config(config_path)
    scenario = build_scenario(cfg.scenario)
    interval = UncertaintyInterval(scenario.lambda_min, scenario.lambda_max)
    spec = cfg.trackers
    opts = SynthesisOptions(order=spec.hinf_order, grid_points=spec.hinf_grid,
                            starts=spec.synthesis_starts,
                            max_evals=spec.synthesis_max_evals, seed=scenario.seed)
    h = ss_to_tf(scenario.model)
    ctrl = precompensated_synthesize(h, interval, opts)
    _write_text(out_path, json.dumps(controller_to_dict(ctrl), indent=2) + "\n")
    grid = chebyshev_grid(interval.lambda_min, interval.lambda_max, spec.hinf_grid)
    stable = per_lambda_stability(h, ctrl.tf, grid)
    print(f"Jhat = {ctrl.gamma:.17g}")
    print(f"stable at {sum(stable)}/{len(stable)} grid points")
    return out_path


def _load_controller(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return controller_from_dict(doc)


def evaluate_cmd(controller_path: str, config_path: str) -> list:
    """Report every cost figure for a stored controller on a scenario.

    Prints the CostReport fields and writes a per-curvature table
    (stability flag and both norms) across the interval grid.
    """
    cfg = parse_config(config_path)
    ctrl = _load_controller(controller_path)
    scenario = build_scenario(cfg.scenario)
    h = ss_to_tf(scenario.model)
    interval = UncertaintyInterval(scenario.lambda_min, scenario.lambda_max)
    sigma2 = scenario.sigma ** 2
    flags = per_lambda_stability(h, ctrl.tf, scenario.spectrum)
    analytic = analytic_cost(h, ctrl.tf, scenario.spectrum, sigma2)
    robust = robust_cost(h, ctrl.tf, interval, cfg.trackers.hinf_grid)
    if math.isfinite(analytic):
        emp_mean, emp_stderr = empirical_cost(
            scenario, ctrl, cfg.run.horizon, cfg.run.burnin, cfg.run.reps,
            RngStream(scenario.seed, STREAM_SIM_BASE))
    else:
        emp_mean, emp_stderr = float("inf"), 0.0
    report = CostReport(analytic, robust, emp_mean, emp_stderr, flags)

    def show(value):
        return f"{value:.17g}" if math.isfinite(value) else "inf"

    print(f"analytic_J = {show(report.analytic_J)}")
    print(f"robust_Jhat = {show(report.robust_Jhat)}")
    print(f"empirical_J = {show(report.empirical_J)}")
    print(f"empirical_stderr = {show(report.empirical_stderr)}")
    print(f"per_lambda_stable = {sum(report.per_lambda_stable)}/"
          f"{len(report.per_lambda_stable)}")

    grid = chebyshev_grid(interval.lambda_min, interval.lambda_max,
                          cfg.trackers.hinf_grid)
    lines = ["lambda,stable,h2_norm_sq,hinf_norm"]
    for lam in grid:
        lam = float(lam)
        if per_lambda_stability(h, ctrl.tf, [lam])[0]:
            w = closed_loop_error_tf(h, ctrl.tf, lam)
            lines.append(f"{_fmt(lam)},true,{_fmt(h2_norm_sq_exact(w))},"
                         f"{_fmt(hinf_norm(w))}")
        else:
            lines.append(f"{_fmt(lam)},false,,")
    os.makedirs(cfg.out_dir, exist_ok=True)
    table_path = _write_text(os.path.join(cfg.out_dir, "evaluation.csv"),
                             "\n".join(lines) + "\n")
    return [table_path]
