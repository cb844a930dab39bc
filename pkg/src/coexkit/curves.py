"""Metric curves and their CSV interchange format.

A curve is the universal output of both engines: one (scenario, engine,
side, metric) combination with samples over a threshold grid.  The CSV
schema is the only interface the figure tooling consumes:

    scenario,engine,side,metric,threshold,value,stderr
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

METRICS = ("map", "sinr_coverage", "dst", "rate_coverage")
SIDES = ("wifi", "lte")
CSV_HEADER = ["scenario", "engine", "side", "metric", "threshold", "value", "stderr"]

# metrics whose values are probabilities (DST is a density instead)
_PROBABILITY_METRICS = {"map", "sinr_coverage", "rate_coverage"}
_MONOTONE_METRICS = {"sinr_coverage", "dst", "rate_coverage"}


@dataclass
class MetricCurve:
    """Samples of one metric: (threshold, value, optional stderr) triples."""

    scenario: str
    engine: str
    side: str
    metric: str
    samples: list[tuple[float, float, float | None]] = field(default_factory=list)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.side not in SIDES:
            raise ValueError(f"unknown side {self.side!r}")
        self.validate()

    def validate(self):
        thresholds = [s[0] for s in self.samples]
        if thresholds != sorted(thresholds):
            raise ValueError("samples must be sorted by threshold")
        for _, value, stderr in self.samples:
            if self.metric in _PROBABILITY_METRICS and not -1e-9 <= value <= 1.0 + 1e-9:
                raise ValueError(f"{self.metric} value {value} outside [0, 1]")
            if self.metric == "dst" and value < -1e-12:
                raise ValueError("dst must be >= 0")
            if stderr is not None and stderr < 0:
                raise ValueError("stderr must be >= 0")
        if self.metric in _MONOTONE_METRICS:
            values = [s[1] for s in self.samples]
            slack = 3.0 * max(
                (s[2] for s in self.samples if s[2] is not None), default=0.0
            ) + 1e-9
            for lo, hi in zip(values[1:], values[:-1]):
                if lo > hi + slack:
                    raise ValueError(f"{self.metric} curve not non-increasing")

    @property
    def thresholds(self):
        return [s[0] for s in self.samples]

    @property
    def values(self):
        return [s[1] for s in self.samples]


def write_curves(curves: list[MetricCurve], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for curve in curves:
        for threshold, value, stderr in curve.samples:
            writer.writerow(
                [
                    curve.scenario,
                    curve.engine,
                    curve.side,
                    curve.metric,
                    repr(float(threshold)),
                    repr(float(value)),
                    "" if stderr is None else repr(float(stderr)),
                ]
            )


def curves_to_csv(curves: list[MetricCurve]) -> str:
    buf = io.StringIO()
    write_curves(curves, buf)
    return buf.getvalue()


def read_curves(stream) -> list[MetricCurve]:
    reader = csv.reader(stream)
    header = next(reader)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header: {header}")
    order: list[tuple] = []
    grouped: dict[tuple, list] = {}
    for row in reader:
        if not row:
            continue
        scenario, engine, side, metric, threshold, value, stderr = row
        key = (scenario, engine, side, metric)
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(
            (float(threshold), float(value), None if stderr == "" else float(stderr))
        )
    return [
        MetricCurve(scenario=k[0], engine=k[1], side=k[2], metric=k[3], samples=v)
        for k, v in ((key, grouped[key]) for key in order)
    ]


def curves_from_csv(text: str) -> list[MetricCurve]:
    return read_curves(io.StringIO(text))
