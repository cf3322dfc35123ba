"""Command-line interface.

Subcommands:

* ``bench``     -- run a named experiment, write report.json + data.csv
* ``pofb``      -- probability-of-fusion-benefit sweep to CSV
* ``mtt``       -- one multi-target tracking pipeline to CSV
* ``plotdata``  -- slice a saved report into one figure's (x, series, value) CSV

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .bench.config import ConfigError, EXPERIMENTS, ExperimentConfig, load_config
from .bench.experiments import OSPA_CUTOFF, OSPA_ORDER, run_experiment
from .bench.report import ExperimentReport, FIGURE_SOURCES, emit_plotdata
from .core import RngStream
from .mtt import ScenarioConfig, generate_scenario, multisensor_track, ospa
from .mtt.multisensor import run_o2_tracker, run_phd_tracker
from .mtt.phd import PhdConfig
from .pofb import SweepGrid, pofb_sweep


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _add_bench(sub):
    p = sub.add_parser("bench", help="run a named experiment")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--particles", type=int)
    p.add_argument("--estimators", nargs="+")
    p.add_argument("--paper-scale", action="store_true", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--set", dest="sets", action="append", default=[],
                   metavar="KEY=VALUE", help="experiment parameter override")
    p.add_argument("--out", required=True, help="output directory")


def _add_pofb(sub):
    p = sub.add_parser("pofb", help="probability-of-fusion-benefit sweep")
    psub = p.add_subparsers(dest="pofb_cmd", required=True)
    s = psub.add_parser("sweep")
    s.add_argument("--target", choices=("x", "y", "min"), required=True)
    s.add_argument("--rule", choices=("kf", "particle"), default="kf")
    s.add_argument("--samples", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--m-values", nargs="+", type=float, default=None)
    s.add_argument("--out", required=True, help="CSV path")


def _add_mtt(sub):
    p = sub.add_parser("mtt", help="multi-target tracking pipeline")
    msub = p.add_subparsers(dest="mtt_cmd", required=True)
    r = msub.add_parser("run")
    r.add_argument("--scenario", choices=("ct", "ghost"), default="ct")
    r.add_argument("--sensors", type=int, default=1)
    r.add_argument("--clutter", type=float, default=10.0)
    r.add_argument("--tracker", choices=("phd", "o2"), default="phd")
    r.add_argument("--extractor", choices=("kmeans", "meap", "o2"), default="meap")
    r.add_argument("--fusion", choices=("t2t", "oft"), default=None)
    r.add_argument("--runs", type=int, default=1)
    r.add_argument("--steps", type=int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--particles-per-target", type=int, default=500)
    r.add_argument("--out", required=True, help="CSV path")


def _add_plotdata(sub):
    p = sub.add_parser("plotdata", help="emit one figure's plot data from a report")
    p.add_argument("--report", required=True, help="report.json from `bench`")
    p.add_argument("--figure", required=True, choices=sorted(FIGURE_SOURCES))
    p.add_argument("--out", required=True, help="CSV path")


def _cmd_bench(ns) -> int:
    overrides = {
        "experiment": ns.experiment,
        "seed": ns.seed,
        "runs": ns.runs,
        "steps": ns.steps,
        "particles": ns.particles,
        "estimators": tuple(ns.estimators) if ns.estimators else None,
        "paper_scale": ns.paper_scale,
        "jobs": ns.jobs,
    }
    params = {}
    for item in ns.sets:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, val = item.partition("=")
        params[key] = _parse_value(val)
    if ns.config:
        cfg = load_config(ns.config, **overrides)
        if params:
            cfg = ExperimentConfig(**{**cfg.__dict__, "params": {**cfg.params, **params}})
    else:
        if not ns.experiment:
            raise ConfigError("either --experiment or --config is required")
        clean = {k: v for k, v in overrides.items() if v is not None}
        clean.setdefault("paper_scale", False)
        clean.setdefault("jobs", 1)
        clean.setdefault("estimators", ())
        cfg = ExperimentConfig(params=params, **clean)
    report = run_experiment(cfg)
    os.makedirs(ns.out, exist_ok=True)
    report.to_json(os.path.join(ns.out, "report.json"))
    report.write_csv(os.path.join(ns.out, "data.csv"))
    for name, stats in sorted(report.summary.items()):
        print(f"{cfg.experiment} {name}: {stats}")
    return 0


def _cmd_pofb(ns) -> int:
    m_values = tuple(ns.m_values) if ns.m_values else (0.0,)
    grid = SweepGrid(m_values=m_values, samples=ns.samples)
    rows = pofb_sweep(grid, ns.target, ns.rule, RngStream(ns.seed))
    report = ExperimentReport(f"pofb-vs-{ns.target}", ns.seed, rows=rows,
                              meta={"rule": ns.rule})
    report.write_csv(ns.out)
    print(f"wrote {len(rows)} cells to {ns.out}")
    return 0


def _cmd_mtt(ns) -> int:
    if ns.tracker == "o2" and ns.sensors < 2:
        raise ConfigError("the o2 tracker needs at least 2 sensors")
    if ns.tracker == "phd" and ns.sensors > 1 and ns.fusion is None:
        raise ConfigError("multi-sensor phd tracking needs --fusion t2t|oft")
    base = RngStream(ns.seed)
    phd_cfg = PhdConfig(particles_per_target=ns.particles_per_target)
    rows = []
    for run_idx in range(ns.runs):
        if ns.scenario == "ct":
            sigma_r, sigma_theta = (20.0, math.pi / 90) if ns.sensors > 1 else (5.0, math.pi / 180)
            extra = ()
            if ns.fusion == "oft":
                from .mtt.ct import range_bearing_sensor

                extra = (
                    range_bearing_sensor(
                        sigma_r / math.sqrt(ns.sensors),
                        sigma_theta / math.sqrt(ns.sensors),
                        ns.clutter,
                        fused_count=ns.sensors,
                    ),
                )
            scen_cfg = ScenarioConfig(
                kind="ct", steps=ns.steps, n_sensors=ns.sensors, clutter_rate=ns.clutter,
                sigma_r=sigma_r, sigma_theta=sigma_theta, extra_sensors=extra,
            )
        else:
            scen_cfg = ScenarioConfig(
                kind="ghost", steps=ns.steps, n_sensors=ns.sensors, clutter_rate=ns.clutter,
            )
        scenario = generate_scenario(scen_cfg, base.child("scene", run_idx))
        t0 = time.perf_counter()
        if ns.tracker == "o2":
            estimates = run_o2_tracker(scenario, list(range(ns.sensors)))
        elif ns.sensors == 1:
            estimates, _ = run_phd_tracker(
                scenario, 0, ns.extractor, phd_cfg, rng=base.child("phd", run_idx)
            )
        else:
            estimates = multisensor_track(
                scenario, ns.fusion, list(range(ns.sensors)), base.child("phd", run_idx),
                extractor=ns.extractor, config=phd_cfg,
                oft_sensor_index=ns.sensors if ns.fusion == "oft" else None,
            )
        wall_ms = (time.perf_counter() - t0) * 1e3 / ns.steps
        for t, est in enumerate(estimates):
            rows.append(
                {
                    "run": run_idx,
                    "step": t + 1,
                    "ospa": ospa(scenario.truth[t], est, OSPA_CUTOFF, OSPA_ORDER),
                    "card_true": len(scenario.truth[t]),
                    "card_est": len(est),
                    "wall_ms": wall_ms,
                }
            )
    report = ExperimentReport("mtt-run", ns.seed, rows=rows)
    report.write_csv(ns.out)
    mean_ospa = float(np.mean([r["ospa"] for r in rows]))
    print(f"mean OSPA {mean_ospa:.3f} over {ns.runs} runs -> {ns.out}")
    return 0


def _cmd_plotdata(ns) -> int:
    report = ExperimentReport.from_json(ns.report)
    emit_plotdata(report, ns.figure, ns.out)
    print(f"wrote {ns.figure} data to {ns.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="o2bench")
    sub = parser.add_subparsers(dest="cmd", required=True)
    _add_bench(sub)
    _add_pofb(sub)
    _add_mtt(sub)
    _add_plotdata(sub)
    ns = parser.parse_args(argv)
    try:
        if ns.cmd == "bench":
            return _cmd_bench(ns)
        if ns.cmd == "pofb":
            return _cmd_pofb(ns)
        if ns.cmd == "mtt":
            return _cmd_mtt(ns)
        return _cmd_plotdata(ns)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # I/O or numerical failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
