"""Figure specifications and the CSV inputs they reference.

The package consumes two CSV layouts produced by the evaluation CLI: metric
curves (scenario,engine,side,metric,threshold,value,stderr) and interference
CDFs (lambda_l_per_km2,interference_kind,dbm,cdf).  A FigureSpec names one
figure kind, the CSVs feeding it, and where the image goes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

FIGURE_KINDS = ("map-surface", "coverage-curves", "dst-panel", "rate-panel", "cdf-pair")

CURVE_HEADER = ["scenario", "engine", "side", "metric", "threshold", "value", "stderr"]
CDF_HEADER = ["lambda_l_per_km2", "interference_kind", "dbm", "cdf"]


class FigureError(ValueError):
    """Bad specification or malformed/missing input data."""


@dataclass
class FigureSpec:
    kind: str
    csv_paths: list[str]
    out_name: str
    side: str | None = None  # wifi | lte | None (both)
    xlim: tuple | None = None
    ylim: tuple | None = None
    title: str | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}")
        if not self.csv_paths:
            raise FigureError("at least one input CSV is required")
        if self.side not in (None, "wifi", "lte"):
            raise FigureError("side must be 'wifi', 'lte' or omitted")


def load_specs(path: str) -> list[FigureSpec]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    nodes = doc["figures"] if isinstance(doc, dict) and "figures" in doc else [doc]
    specs = []
    for node in nodes:
        specs.append(
            FigureSpec(
                kind=node.get("kind", ""),
                csv_paths=list(node.get("csv", [])),
                out_name=node.get("out", node.get("kind", "figure")),
                side=node.get("side"),
                xlim=tuple(node["xlim"]) if "xlim" in node else None,
                ylim=tuple(node["ylim"]) if "ylim" in node else None,
                title=node.get("title"),
            )
        )
    return specs


@dataclass
class CurveRow:
    scenario: str
    engine: str
    side: str
    metric: str
    threshold: float
    value: float
    stderr: float | None


def read_curve_rows(paths: list[str]) -> list[CurveRow]:
    rows: list[CurveRow] = []
    for path in paths:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CURVE_HEADER:
                raise FigureError(f"{path}: expected columns {CURVE_HEADER}, found {header}")
            for raw in reader:
                if not raw:
                    continue
                rows.append(
                    CurveRow(
                        scenario=raw[0], engine=raw[1], side=raw[2], metric=raw[3],
                        threshold=float(raw[4]), value=float(raw[5]),
                        stderr=None if raw[6] == "" else float(raw[6]),
                    )
                )
    if not rows:
        raise FigureError("no data rows found in the input CSVs")
    return rows


def read_cdf_rows(paths: list[str]):
    rows = []
    for path in paths:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CDF_HEADER:
                raise FigureError(f"{path}: expected columns {CDF_HEADER}, found {header}")
            for raw in reader:
                if not raw:
                    continue
                rows.append((float(raw[0]), raw[1], float(raw[2]), float(raw[3])))
    if not rows:
        raise FigureError("no data rows found in the input CSVs")
    return rows


def group_series(rows: list[CurveRow], metric: str, side: str | None):
    """(scenario, engine, side) -> sorted (threshold, value, stderr) lists."""
    series: dict = {}
    for row in rows:
        if row.metric != metric:
            continue
        if side is not None and row.side != side:
            continue
        series.setdefault((row.scenario, row.engine, row.side), []).append(
            (row.threshold, row.value, row.stderr)
        )
    for key in series:
        series[key].sort(key=lambda s: s[0])
    if not series:
        raise FigureError(f"no rows with metric {metric!r}" + (f" and side {side!r}" if side else ""))
    return series
