"""Experiment reports: JSON summaries, CSV series, and per-figure plot data.

CSV files are UTF-8 with a header row and '.' decimals; float cells use
repr (shortest round-trip), so identical configs and seeds give
byte-identical files.  Wall-clock fields live in the JSON summary (and in
the tracking rows, where the interface requires them) but never drive any
assertion: absolute timings are hardware-bound.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field


@dataclass
class ExperimentReport:
    experiment: str
    seed: int
    scale: str = "desk"
    meta: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)   # name -> {column -> list}
    rows: list = field(default_factory=list)     # long-format records
    summary: dict = field(default_factory=dict)  # estimator -> stats

    def to_json(self, path: str) -> None:
        payload = {
            "experiment": self.experiment,
            "seed": self.seed,
            "scale": self.scale,
            "meta": self.meta,
            "series": self.series,
            "rows": self.rows,
            "summary": self.summary,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path: str) -> "ExperimentReport":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(**payload)

    def _row_records(self) -> tuple[list, list]:
        if self.rows:
            header = list(self.rows[0].keys())
            for r in self.rows:
                for k in r:
                    if k not in header:
                        header.append(k)
            return header, self.rows
        header = ["step", "series", "value"]
        records = []
        for name in sorted(self.series):
            for col, values in sorted(self.series[name].items()):
                label = name if col in ("rmse", "value") else f"{name}:{col}"
                for i, v in enumerate(values):
                    records.append({"step": i + 1, "series": label, "value": v})
        return header, records

    def write_csv(self, path: str) -> None:
        header, records = self._row_records()
        _write_csv(path, header, records)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _write_csv(path: str, header: list, records: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in records:
            w.writerow([_fmt(r.get(k, "")) for k in header])


# --------------------------------------------------------------------------
# figure data extraction
# --------------------------------------------------------------------------

# figure id -> experiment that produces it
FIGURE_SOURCES = {
    "fig2": "model-a",
    "fig5": "pofb-vs-x",
    "fig6": "pofb-vs-y",
    "fig8": "pofb-vs-min",
    "fig9": "pofb-vs-x",
    "fig10": "pofb-vs-x",
    "fig11": "pofb-vs-x",
    "fig12": "model-b-sweep",
    "fig15": "ungm-particle-sweep",
    "fig16": "ungm-particle-sweep",
    "fig17": "ungm-noise-sweep",
    "fig18": "model-a-noise-sweep",
    "fig21": "mtt-ct",
    "fig22": "mtt-clutter-sweep",
    "fig25": "mtt-multisensor",
    "fig26": "mtt-multisensor",
    "fig27": "mtt-multisensor",
    "fig31": "ghost",
    "fig32": "ghost",
}


def _series_rows(report, value_col):
    out = []
    for name in sorted(report.series):
        values = report.series[name].get(value_col)
        if values is None:
            continue
        for i, v in enumerate(values):
            out.append({"x": i + 1, "series": name, "value": v})
    return out


def _sweep_rows(report, x_key, value_key="rmse_mean"):
    return [
        {"x": r[x_key], "series": r["estimator"], "value": r[value_key]}
        for r in report.rows
    ]


def _pofb_rows(report):
    return [
        {"x": r["r"], "series": f"p={r['p']:g},m={r['m']:g}", "value": r["pofb"]}
        for r in report.rows
    ]


def emit_plotdata(report: ExperimentReport, figure: str, path: str) -> None:
    """Write one figure's long-format (x, series, value) CSV."""
    if figure not in FIGURE_SOURCES:
        raise ValueError(f"unknown figure id {figure!r}")
    want = FIGURE_SOURCES[figure]
    if report.experiment != want:
        raise ValueError(
            f"{figure} is produced by the {want!r} experiment, got {report.experiment!r}"
        )
    if figure == "fig2":
        rows = _series_rows(report, "rmse")
    elif figure in ("fig5", "fig6", "fig8", "fig9", "fig10", "fig11"):
        rule = report.meta.get("rule", "kf")
        if figure in ("fig10", "fig11") and rule != "particle":
            raise ValueError(f"{figure} needs the particle-rule sweep, got rule={rule!r}")
        if figure in ("fig5", "fig6", "fig9") and rule != "kf":
            raise ValueError(f"{figure} needs the kf-rule sweep, got rule={rule!r}")
        rows = _pofb_rows(report)
    elif figure == "fig12":
        rows = _sweep_rows(report, "R")
    elif figure in ("fig15", "fig16"):
        key = "rmse_mean" if figure == "fig15" else "wall_s"
        rows = _sweep_rows(report, "particles", key)
    elif figure in ("fig17", "fig18"):
        rows = _sweep_rows(report, "R")
    elif figure == "fig21":
        rows = _series_rows(report, "ospa")
    elif figure == "fig22":
        rows = _sweep_rows(report, "clutter", "ospa_mean")
    elif figure == "fig25":
        rows = _series_rows(report, "card")
    elif figure == "fig26":
        rows = _series_rows(report, "ospa")
    elif figure == "fig27":
        rows = [
            {"x": r["sensors"], "series": r["strategy"], "value": r["ospa_mean"]}
            for r in report.rows
            if r.get("kind") == "sensor-sweep"
        ]
    elif figure == "fig31":
        rows = _series_rows(report, "card")
    else:  # fig32
        rows = _series_rows(report, "ospa")
    if not rows:
        raise ValueError(f"report holds no data for {figure}")
    _write_csv(path, ["x", "series", "value"], rows)
