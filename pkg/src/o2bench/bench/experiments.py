"""Experiment drivers behind the CLI.

Each experiment fans out over seeded Monte Carlo runs (optionally across
processes; results are merged by run index, so the output is independent
of the degree of parallelism), aggregates per-step error series, and
returns an ExperimentReport.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..core import RngStream, rmse
from ..models import make_model, simulate
from ..mtt import (
    ScenarioConfig,
    generate_scenario,
    multisensor_track,
    ospa,
)
from ..mtt.ct import range_bearing_sensor
from ..mtt.multisensor import run_o2_tracker, run_phd_tracker
from ..mtt.phd import PhdConfig, SmcPhd, extract_estimates
from ..pofb import DEFAULT_M_VALUES, SweepGrid, pofb_sweep
from .config import ConfigError, ExperimentConfig
from .estimators import run_estimator
from .report import ExperimentReport

OSPA_CUTOFF = 100.0
OSPA_ORDER = 2.0


def _parallel_map(fn, args, jobs):
    if jobs <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, args))


# --------------------------------------------------------------------------
# scalar-model benchmarks
# --------------------------------------------------------------------------


def _bench_one_run(args):
    (model_name, model_over, names, steps, particles, seed, run_idx) = args
    model = make_model(model_name, **model_over)
    base = RngStream(seed)
    gen = base.child("truth", run_idx).generator()
    x1 = 1.0 if model.name in ("A", "B") else None
    truth, ys = simulate(model, steps, x1, gen)
    out = {}
    for name in names:
        res = run_estimator(name, model, ys, truth, base.child(name, run_idx), particles)
        out[name] = (res.estimates, res.wall_s, res.degeneracy)
    return truth, out


def _run_filter_bench(model_name, model_over, names, runs, steps, particles, seed, jobs):
    args = [(model_name, model_over, names, steps, particles, seed, i) for i in range(runs)]
    results = _parallel_map(_bench_one_run, args, jobs)
    truths = np.vstack([r[0] for r in results])
    data = {}
    for name in names:
        ests = np.vstack([r[1][name][0] for r in results])
        walls = [r[1][name][1] for r in results]
        degen = sum(r[1][name][2] for r in results)
        data[name] = {"estimates": ests, "wall_s": float(np.mean(walls)), "degeneracy": degen}
    return truths, data


def per_run_mean_abs_error(truths: np.ndarray, estimates: np.ndarray) -> np.ndarray:
    """Per-run mean RMSE (Eq. with M=1 per run, then mean over time)."""
    return np.abs(truths - estimates).mean(axis=1)


def _bench_report(config, model_name, model_over=None):
    names = config.estimator_names
    truths, data = _run_filter_bench(
        model_name, model_over or {}, names,
        config.n_runs, config.n_steps, config.n_particles, config.seed, config.jobs,
    )
    report = ExperimentReport(
        config.experiment,
        config.seed,
        "paper" if config.paper_scale else "desk",
        meta={"model": model_name, "runs": config.n_runs, "steps": config.n_steps,
              "particles": config.n_particles, **(model_over or {})},
    )
    for name in names:
        series = rmse(truths, data[name]["estimates"])
        per_run = per_run_mean_abs_error(truths, data[name]["estimates"])
        report.series[name] = {"rmse": series.tolist()}
        report.summary[name] = {
            "rmse_mean": float(series.mean()),
            "rmse_variance": float(per_run.var(ddof=1)) if len(per_run) > 1 else 0.0,
            "degeneracy_events": data[name]["degeneracy"],
            "wall_s": data[name]["wall_s"],
        }
    return report


def _sweep_report(config, model_name, grid_key, grid):
    names = config.estimator_names
    report = ExperimentReport(
        config.experiment, config.seed, "paper" if config.paper_scale else "desk",
        meta={"model": model_name, "runs": config.n_runs, "steps": config.n_steps,
              grid_key: list(grid)},
    )
    for value in grid:
        truths, data = _run_filter_bench(
            model_name, {"obs_var": float(value)}, names,
            config.n_runs, config.n_steps, config.n_particles, config.seed, config.jobs,
        )
        for name in names:
            series = rmse(truths, data[name]["estimates"])
            report.rows.append(
                {
                    "R": float(value),
                    "estimator": name,
                    "rmse_mean": float(series.mean()),
                    "degeneracy_events": data[name]["degeneracy"],
                }
            )
    return report


def _particle_sweep_report(config):
    grid = config.param("particle_grid", [20, 50, 100, 200, 500])
    names = config.estimator_names
    report = ExperimentReport(
        config.experiment, config.seed, "paper" if config.paper_scale else "desk",
        meta={"model": "ungm", "runs": config.n_runs, "steps": config.n_steps,
              "particle_grid": list(grid)},
    )
    for n in grid:
        truths, data = _run_filter_bench(
            "ungm", {}, names, config.n_runs, config.n_steps, int(n), config.seed, config.jobs,
        )
        for name in names:
            series = rmse(truths, data[name]["estimates"])
            report.rows.append(
                {
                    "particles": int(n),
                    "estimator": name,
                    "rmse_mean": float(series.mean()),
                    "wall_s": data[name]["wall_s"],
                }
            )
    return report


# --------------------------------------------------------------------------
# probability of fusion benefit
# --------------------------------------------------------------------------


def _pofb_report(config):
    which = config.experiment.rsplit("-", 1)[-1]  # x | y | min
    rule = config.param("rule", "kf")
    default_m = (0.0,) if which in ("x", "y") else DEFAULT_M_VALUES
    grid = SweepGrid(
        r_values=tuple(config.param("r_values", tuple(np.logspace(-2, 3, 11)))),
        p_values=tuple(config.param("p_values", (0.0, 0.4, 1.0, 2.0, 5.0, 10.0))),
        m_values=tuple(config.param("m_values", default_m)),
        samples=config.param("samples"),
        particles=int(config.param("fusion_particles", 100_000)),
    )
    rows = pofb_sweep(grid, which, rule, RngStream(config.seed))
    report = ExperimentReport(
        config.experiment, config.seed, "paper" if config.paper_scale else "desk",
        meta={"rule": rule, "target": which, "samples": grid.cell_samples(rule)},
        rows=rows,
    )
    return report


# --------------------------------------------------------------------------
# multi-target tracking
# --------------------------------------------------------------------------


def _phd_config(config) -> PhdConfig:
    ppt = int(config.param("particles_per_target", 1000 if config.paper_scale else 500))
    return PhdConfig(particles_per_target=ppt)


def _mtt_ct_one_run(args):
    (seed, run_idx, steps, clutter, ppt) = args
    base = RngStream(seed)
    scen_cfg = ScenarioConfig(kind="ct", steps=steps, n_sensors=1, clutter_rate=clutter)
    scenario = generate_scenario(scen_cfg, base.child("scene", run_idx))
    sensor = scenario.sensors[0]
    phd = SmcPhd(sensor, config=PhdConfig(particles_per_target=ppt),
                 rng=base.child("phd", run_idx))
    methods = ("kmeans", "meap", "o2")
    rows = []
    prev = {m: None for m in methods}
    for t in range(scenario.steps):
        info = phd.step(scenario.scans[t][0])
        truth = scenario.truth[t]
        for m in methods:
            t0 = time.perf_counter()
            est = extract_estimates(info, sensor, m, phd.gen, prev_estimates=prev[m])
            wall_ms = (time.perf_counter() - t0) * 1e3
            prev[m] = est if len(est) else prev[m]
            rows.append(
                {
                    "estimator": m,
                    "run": run_idx,
                    "step": t + 1,
                    "ospa": ospa(truth, est, OSPA_CUTOFF, OSPA_ORDER),
                    "card_true": len(truth),
                    "card_est": len(est),
                    "wall_ms": wall_ms,
                }
            )
    return rows


def _aggregate_series(report, rows, names, steps):
    for name in names:
        per_step = np.zeros(steps)
        card = np.zeros(steps)
        counts = np.zeros(steps)
        for r in rows:
            if r["estimator"] != name:
                continue
            i = r["step"] - 1
            per_step[i] += r["ospa"]
            card[i] += r["card_est"]
            counts[i] += 1
        with np.errstate(invalid="ignore"):
            report.series[name] = {
                "ospa": (per_step / np.maximum(counts, 1)).tolist(),
                "card": (card / np.maximum(counts, 1)).tolist(),
            }
    truth_card = np.zeros(steps)
    counts = np.zeros(steps)
    for r in rows:
        if r["estimator"] == names[0]:
            truth_card[r["step"] - 1] += r["card_true"]
            counts[r["step"] - 1] += 1
    report.series["truth"] = {"card": (truth_card / np.maximum(counts, 1)).tolist()}


def _summarize_mtt(report, rows, names):
    for name in names:
        sel = [r for r in rows if r["estimator"] == name]
        ospa_mean = float(np.mean([r["ospa"] for r in sel]))
        card_mae = float(np.mean([abs(r["card_est"] - r["card_true"]) for r in sel]))
        report.summary[name] = {
            "ospa_mean": ospa_mean,
            "cardinality_mae": card_mae,
            "wall_ms_mean": float(np.mean([r["wall_ms"] for r in sel])),
        }


def _mtt_ct_report(config):
    clutter = float(config.param("clutter", 10.0))
    ppt = _phd_config(config).particles_per_target
    args = [(config.seed, i, config.n_steps, clutter, ppt) for i in range(config.n_runs)]
    rows = [r for chunk in _parallel_map(_mtt_ct_one_run, args, config.jobs) for r in chunk]
    report = ExperimentReport(
        config.experiment, config.seed, "paper" if config.paper_scale else "desk",
        meta={"clutter": clutter, "runs": config.n_runs, "steps": config.n_steps,
              "particles_per_target": ppt},
        rows=rows,
    )
    names = ("kmeans", "meap", "o2")
    _aggregate_series(report, rows, names, config.n_steps)
    _summarize_mtt(report, rows, names)
    report.summary["paper_reference"] = {"kmeans": 48.101, "meap": 33.865, "o2": 35.077}
    return report


def _mtt_clutter_sweep_report(config):
    grid = config.param("clutter_grid", [0.0, 10.0, 20.0, 30.0])
    ppt = _phd_config(config).particles_per_target
    report = ExperimentReport(
        config.experiment, config.seed, "paper" if config.paper_scale else "desk",
        meta={"clutter_grid": list(grid), "runs": config.n_runs, "steps": config.n_steps},
    )
    for clutter in grid:
        args = [(config.seed, i, config.n_steps, float(clutter), ppt) for i in range(config.n_runs)]
        rows = [r for chunk in _parallel_map(_mtt_ct_one_run, args, config.jobs) for r in chunk]
        for name in ("kmeans", "meap", "o2"):
            sel = [r for r in rows if r["estimator"] == name]
            report.rows.append(
                {
                    "clutter": float(clutter),
                    "estimator": name,
                    "ospa_mean": float(np.mean([r["ospa"] for r in sel])),
                    "wall_ms_mean": float(np.mean([r["wall_ms"] for r in sel])),
                }
            )
    return report


MULTI_SIGMA_R = 20.0
MULTI_SIGMA_THETA = math.pi / 90.0


def _multisensor_one_run(args):
    (seed, run_idx, steps, clutter, n_sensors, n_list, ppt) = args
    base = RngStream(seed)
    supers = tuple(
        range_bearing_sensor(
            MULTI_SIGMA_R / math.sqrt(n), MULTI_SIGMA_THETA / math.sqrt(n), clutter,
            fused_count=n,
        )
        for n in n_list
    )
    n_std = max([n_sensors] + list(n_list))
    scen_cfg = ScenarioConfig(
        kind="ct", steps=steps, n_sensors=n_std, clutter_rate=clutter,
        sigma_r=MULTI_SIGMA_R, sigma_theta=MULTI_SIGMA_THETA, extra_sensors=supers,
    )
    scenario = generate_scenario(scen_cfg, base.child("scene", run_idx))
    phd_cfg = PhdConfig(particles_per_target=ppt)
    rows = []

    def record(name, kind, estimates, wall_ms, sensors):
        for t, est in enumerate(estimates):
            rows.append(
                {
                    "estimator": name,
                    "kind": kind,
                    "sensors": sensors,
                    "run": run_idx,
                    "step": t + 1,
                    "ospa": ospa(scenario.truth[t], est, OSPA_CUTOFF, OSPA_ORDER),
                    "card_true": len(scenario.truth[t]),
                    "card_est": len(est),
                    "wall_ms": wall_ms,
                }
            )

    # headline strategies at N = n_sensors
    idx = list(range(n_sensors))
    t0 = time.perf_counter()
    est = multisensor_track(scenario, "o2", idx, base.child("o2", run_idx))
    record("o2", "strategy", est, (time.perf_counter() - t0) * 1e3 / steps, n_sensors)
    t0 = time.perf_counter()
    est = multisensor_track(
        scenario, "oft", idx, base.child("oft", run_idx), config=phd_cfg,
        oft_sensor_index=n_std + list(n_list).index(n_sensors),
    )
    record("oft", "strategy", est, (time.perf_counter() - t0) * 1e3 / steps, n_sensors)
    t0 = time.perf_counter()
    est = multisensor_track(scenario, "t2t", idx, base.child("t2t", run_idx), config=phd_cfg)
    record("t2t", "strategy", est, (time.perf_counter() - t0) * 1e3 / steps, n_sensors)

    # sensor-count sweep for the filter-free route and the OFT tracker
    for n in n_list:
        if n == n_sensors:
            continue  # already recorded above
        sub = list(range(n))
        t0 = time.perf_counter()
        est = multisensor_track(scenario, "o2", sub, base.child("o2", run_idx, n))
        record("o2", "sweep", est, (time.perf_counter() - t0) * 1e3 / steps, n)
        t0 = time.perf_counter()
        est = multisensor_track(
            scenario, "oft", sub, base.child("oft", run_idx, n), config=phd_cfg,
            oft_sensor_index=n_std + list(n_list).index(n),
        )
        record("oft", "sweep", est, (time.perf_counter() - t0) * 1e3 / steps, n)
    return rows


def _mtt_multisensor_report(config):
    clutter = float(config.param("clutter", 10.0))
    n_sensors = int(config.param("sensors", 10))
    n_list = [int(n) for n in config.param("sensor_grid", [2, 5, 10, 20])]
    if n_sensors not in n_list:
        n_list.append(n_sensors)
        n_list.sort()
    ppt = _phd_config(config).particles_per_target
    args = [
        (config.seed, i, config.n_steps, clutter, n_sensors, tuple(n_list), ppt)
        for i in range(config.n_runs)
    ]
    rows = [r for chunk in _parallel_map(_multisensor_one_run, args, config.jobs) for r in chunk]
    report = ExperimentReport(
        config.experiment, config.seed, "paper" if config.paper_scale else "desk",
        meta={"clutter": clutter, "sensors": n_sensors, "sensor_grid": n_list,
              "runs": config.n_runs, "steps": config.n_steps, "particles_per_target": ppt},
        rows=rows,
    )
    strategy_rows = [r for r in rows if r["kind"] == "strategy"]
    _aggregate_series(report, strategy_rows, ("o2", "oft", "t2t"), config.n_steps)
    _summarize_mtt(report, strategy_rows, ("o2", "oft", "t2t"))
    for strat in ("o2", "oft"):
        for n in n_list:
            sel = [
                r for r in rows
                if r["estimator"] == strat and r["sensors"] == n
            ]
            if not sel:
                continue
            report.rows.append(
                {
                    "estimator": strat,
                    "kind": "sensor-sweep",
                    "strategy": strat,
                    "sensors": n,
                    "run": -1,
                    "step": 0,
                    "ospa": 0.0,
                    "card_true": 0,
                    "card_est": 0,
                    "wall_ms": 0.0,
                    "ospa_mean": float(np.mean([r["ospa"] for r in sel])),
                }
            )
    report.summary["paper_reference"] = {"oft": 31.5482, "t2t": 40.3143, "o2": 36.9991}
    return report


def _ghost_one_run(args):
    (seed, run_idx, steps, clutter, n_sensors) = args
    base = RngStream(seed)
    scen_cfg = ScenarioConfig(
        kind="ghost", steps=steps, n_sensors=n_sensors, clutter_rate=clutter,
    )
    scenario = generate_scenario(scen_cfg, base.child("scene", run_idx))
    t0 = time.perf_counter()
    estimates = run_o2_tracker(scenario, list(range(n_sensors)))
    wall_ms = (time.perf_counter() - t0) * 1e3 / steps
    rows = []
    for t, est in enumerate(estimates):
        rows.append(
            {
                "estimator": "o2",
                "run": run_idx,
                "step": t + 1,
                "ospa": ospa(scenario.truth[t], est, OSPA_CUTOFF, OSPA_ORDER),
                "card_true": len(scenario.truth[t]),
                "card_est": len(est),
                "wall_ms": wall_ms,
            }
        )
    return rows


def _ghost_report(config):
    clutter = float(config.param("clutter", 10.0))
    n_sensors = int(config.param("sensors", 10))
    args = [(config.seed, i, config.n_steps, clutter, n_sensors) for i in range(config.n_runs)]
    rows = [r for chunk in _parallel_map(_ghost_one_run, args, config.jobs) for r in chunk]
    report = ExperimentReport(
        config.experiment, config.seed, "paper" if config.paper_scale else "desk",
        meta={"clutter": clutter, "sensors": n_sensors,
              "runs": config.n_runs, "steps": config.n_steps},
        rows=rows,
    )
    _aggregate_series(report, rows, ("o2",), config.n_steps)
    _summarize_mtt(report, rows, ("o2",))
    report.summary["paper_reference"] = {"o2": 30.128}
    return report


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    exp = config.experiment
    if exp == "model-a":
        return _bench_report(config, "A")
    if exp == "ungm":
        return _bench_report(config, "ungm")
    if exp == "model-b-sweep":
        grid = config.param("r_grid", [1e-4, 1e-2, 1.0, 100.0])
        return _sweep_report(config, "B", "r_grid", grid)
    if exp == "ungm-noise-sweep":
        grid = config.param("r_grid", [1e-4, 1e-2, 1.0, 1e2, 1e4])
        return _sweep_report(config, "ungm", "r_grid", grid)
    if exp == "model-a-noise-sweep":
        grid = config.param("r_grid", [1e-4, 1e-2, 1.0, 100.0])
        return _sweep_report(config, "A", "r_grid", grid)
    if exp == "ungm-particle-sweep":
        return _particle_sweep_report(config)
    if exp.startswith("pofb-"):
        return _pofb_report(config)
    if exp == "mtt-ct":
        return _mtt_ct_report(config)
    if exp == "mtt-clutter-sweep":
        return _mtt_clutter_sweep_report(config)
    if exp == "mtt-multisensor":
        return _mtt_multisensor_report(config)
    if exp == "ghost":
        return _ghost_report(config)
    raise ConfigError(f"unknown experiment {exp!r}")
