"""Time-series logging and run metrics.

One CSV row per control tick, fixed column order, floats written as their
shortest round-trip decimal so identical runs produce byte-identical files.
The summary is a pure function of the logged columns (plus the configured
reference values), so recomputing it from a written CSV reproduces the
in-memory result.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .controller import SaturationLimits

COLUMNS = (
    "t",
    "e_u",
    "e_v",
    "e_v2",
    "h",
    "V_r",
    "omega_r",
    "omega_alpha",
    "omega_beta",
    "alpha",
    "beta",
    "robot_x",
    "robot_y",
    "theta",
    "target_x",
    "target_y",
    "score",
    "region_scale",
    "failure_state",
)

_FAILURE_COL = COLUMNS.index("failure_state")


def _format(value: float, column_index: int) -> str:
    if column_index == _FAILURE_COL:
        return str(int(value))
    return repr(float(value))


@dataclass
class TimeSeriesLog:
    """Column-ordered per-tick records of one scenario run."""

    rows: list[list[float]] = field(default_factory=list)

    def append(self, values: Iterable[float]) -> None:
        row = [float(v) for v in values]
        if len(row) != len(COLUMNS):
            raise ValueError(f"expected {len(COLUMNS)} values per row, got {len(row)}")
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        idx = COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            for row in self.rows:
                fh.write(",".join(_format(v, i) for i, v in enumerate(row)) + "\n")

    @classmethod
    def read_csv(cls, path: str | Path) -> "TimeSeriesLog":
        log = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != COLUMNS:
                raise ValueError(f"unexpected CSV header {header}")
            for row in reader:
                log.append([float(v) for v in row])
        return log


@dataclass(frozen=True)
class RunSummary:
    """Aggregate metrics of one run.

    Settling time is the first instant after which the channel's error
    magnitude stays below the settle threshold for the rest of the run (NaN
    if it never does).  RMS values and the mean half-height deviation are
    taken over the steady-state window, the final half of the run.
    """

    settling_time_e_u: float
    settling_time_e_v: float
    settling_time_e_v2: float
    rms_e_u: float
    rms_e_v: float
    rms_e_v2: float
    mean_abs_height_error: float
    failure_episodes: int
    reacquisition_latencies: tuple[int, ...]
    saturation_duty_cycle: float

    def to_dict(self) -> dict:
        return {
            "settling_time_e_u": self.settling_time_e_u,
            "settling_time_e_v": self.settling_time_e_v,
            "settling_time_e_v2": self.settling_time_e_v2,
            "rms_e_u": self.rms_e_u,
            "rms_e_v": self.rms_e_v,
            "rms_e_v2": self.rms_e_v2,
            "mean_abs_height_error": self.mean_abs_height_error,
            "failure_episodes": self.failure_episodes,
            "reacquisition_latencies": list(self.reacquisition_latencies),
            "saturation_duty_cycle": self.saturation_duty_cycle,
        }


def _settling_time(t: np.ndarray, e: np.ndarray, threshold: float) -> float:
    """First time after which |e| stays below threshold (NaN rows never settle)."""
    below = np.abs(e) < threshold
    below &= ~np.isnan(e)
    # last index where the condition fails; settled from the next sample on
    failing = np.nonzero(~below)[0]
    if len(failing) == 0:
        return float(t[0])
    last_fail = failing[-1]
    if last_fail + 1 >= len(t):
        return math.nan
    return float(t[last_fail + 1])


def _rms(values: np.ndarray) -> float:
    values = values[~np.isnan(values)]
    if len(values) == 0:
        return math.nan
    return float(np.sqrt(np.mean(values**2)))


def summarize(
    log: TimeSeriesLog,
    target_half_height: float,
    saturation: SaturationLimits | None = None,
    settle_px: float = 5.0,
) -> RunSummary:
    """Compute run metrics from a log.

    ``target_half_height`` and ``saturation`` carry the configured reference
    values the metrics are measured against.
    """
    saturation = saturation or SaturationLimits()
    if len(log) == 0:
        return RunSummary(
            settling_time_e_u=math.nan,
            settling_time_e_v=math.nan,
            settling_time_e_v2=math.nan,
            rms_e_u=math.nan,
            rms_e_v=math.nan,
            rms_e_v2=math.nan,
            mean_abs_height_error=math.nan,
            failure_episodes=0,
            reacquisition_latencies=(),
            saturation_duty_cycle=0.0,
        )

    t = log.column("t")
    steady = slice(len(log) // 2, len(log))

    h = log.column("h")[steady]
    h = h[~np.isnan(h)]
    mean_h_err = float(np.mean(np.abs(h - target_half_height))) if len(h) else math.nan

    failure = log.column("failure_state").astype(bool)
    rising = np.nonzero(failure[1:] & ~failure[:-1])[0] + 1
    if len(failure) and failure[0]:
        rising = np.concatenate(([0], rising))
    episodes = len(rising)
    latencies = []
    for start in rising:
        rest = np.nonzero(~failure[start:])[0]
        if len(rest):
            latencies.append(int(rest[0]))

    def _saturated(col: str, limit: float) -> np.ndarray:
        return np.abs(log.column(col)) >= limit * (1.0 - 1e-12)

    any_sat = (
        _saturated("V_r", saturation.v_max)
        | _saturated("omega_r", saturation.omega_r_max)
        | _saturated("omega_alpha", saturation.omega_alpha_max)
        | _saturated("omega_beta", saturation.omega_beta_max)
    )

    return RunSummary(
        settling_time_e_u=_settling_time(t, log.column("e_u"), settle_px),
        settling_time_e_v=_settling_time(t, log.column("e_v"), settle_px),
        settling_time_e_v2=_settling_time(t, log.column("e_v2"), settle_px),
        rms_e_u=_rms(log.column("e_u")[steady]),
        rms_e_v=_rms(log.column("e_v")[steady]),
        rms_e_v2=_rms(log.column("e_v2")[steady]),
        mean_abs_height_error=mean_h_err,
        failure_episodes=episodes,
        reacquisition_latencies=tuple(latencies),
        saturation_duty_cycle=float(np.mean(any_sat)),
    )
