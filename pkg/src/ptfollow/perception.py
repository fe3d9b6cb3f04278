"""Simulated detector/tracker front end with failure recovery.

Three stages stand in for a real perception stack:

1. A detection stability gate that only hands the first box to the tracker
   once three consecutive detections agree to within a pixel tolerance.
2. A measurement channel that perturbs the ground-truth box with Gaussian
   pixel noise, scripted occlusion windows and random dropouts, and reports
   a confidence score.
3. A hysteretic failure-recovery state machine: a low score enters the
   failure state, a high score leaves it, and while failed the tracker's
   search region grows by a constant step per tick up to full-image coverage.

While failed, the pipeline keeps reporting the last confident box together
with a hold flag so the controller can stop chasing stale measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .controller import BoxMeasurement
from .geometry import CameraIntrinsics


@dataclass
class DetectionGate:
    """Stability gate over incoming detections.

    Initializes exactly when three consecutive detections drift less than
    ``pixel_tolerance`` between successive frames; any larger jump or a
    missed frame restarts the window.
    """

    pixel_tolerance: float = 10.0
    window: list[tuple[float, float]] = field(default_factory=list)

    def reset(self) -> None:
        self.window.clear()


def gate_update(
    gate: DetectionGate, detection: Optional[BoxMeasurement]
) -> Optional[BoxMeasurement]:
    """Feed one frame's detection into the gate.

    Returns the detection as the initial box once the stability criterion is
    met, else ``None``.  ``detection=None`` (missed frame) resets the window.
    """
    if detection is None:
        gate.reset()
        return None
    center = (detection.u, detection.v)
    if gate.window:
        last = gate.window[-1]
        if math.hypot(center[0] - last[0], center[1] - last[1]) >= gate.pixel_tolerance:
            gate.window.clear()
    gate.window.append(center)
    if len(gate.window) >= 3:
        gate.reset()
        return detection
    return None


@dataclass(frozen=True)
class NoiseModel:
    """Measurement-channel imperfections.

    ``occlusion_windows`` are half-open intervals ``[t_start, t_end)`` in
    seconds during which the target cannot be seen at all.
    """

    sigma_px: float = 0.0
    occlusion_windows: tuple[tuple[float, float], ...] = ()
    dropout_prob: float = 0.0
    score_visible: float = 0.95
    score_occluded: float = 0.1

    def __post_init__(self) -> None:
        if self.sigma_px < 0:
            raise ValueError("noise: sigma_px must be >= 0")
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ValueError("noise: dropout_prob must lie in [0, 1]")
        if not self.score_occluded < self.score_visible:
            raise ValueError("noise: score_occluded must be < score_visible")
        windows = sorted(self.occlusion_windows)
        for (a0, a1) in windows:
            if a1 <= a0:
                raise ValueError(f"noise: occlusion window ({a0}, {a1}) is empty")
        for (a0, a1), (b0, _) in zip(windows, windows[1:]):
            if b0 < a1:
                raise ValueError("noise: occlusion windows overlap")

    def occluded_at(self, t: float) -> bool:
        return any(t0 <= t < t1 for t0, t1 in self.occlusion_windows)


@dataclass(frozen=True)
class TrackerOutput:
    box: BoxMeasurement
    score: float


@dataclass(frozen=True)
class RecoveryState:
    """Failure-recovery state: hysteresis thresholds, growth step, and the
    current search-region multiplier (>= 1)."""

    th_low: float = 0.4
    th_high: float = 0.8
    step_s: float = 0.5
    failure_state: bool = False
    region_scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.th_low < self.th_high:
            raise ValueError("recovery: th_low must be < th_high")
        if self.step_s <= 0:
            raise ValueError("recovery: step_s must be > 0")
        if self.region_scale < 1.0:
            raise ValueError("recovery: region_scale must be >= 1")


def recovery_step(
    state: RecoveryState, score: float, scale_cap: float = math.inf
) -> RecoveryState:
    """One transition of the failure-recovery machine.

    Scores at or below ``th_low`` enter the failure state; scores at or above
    ``th_high`` leave it and reset the search region; scores in between keep
    the current state.  While failed, the region multiplier grows by
    ``step_s`` per tick, capped at ``scale_cap`` (full-image coverage).
    """
    failed = state.failure_state
    if score <= state.th_low:
        failed = True
    elif score >= state.th_high:
        failed = False
    if failed:
        scale = min(state.region_scale + state.step_s, max(scale_cap, 1.0))
    else:
        scale = 1.0
    return replace(state, failure_state=failed, region_scale=scale)


def region_half_side(last_box: BoxMeasurement, region_scale: float, dilation: float) -> float:
    """Half side of the square search region around the last box center."""
    return region_scale * dilation * last_box.half_height


def region_contains(
    last_box: BoxMeasurement,
    region_scale: float,
    center: tuple[float, float],
    dilation: float,
) -> bool:
    half = region_half_side(last_box, region_scale, dilation)
    return (
        abs(center[0] - last_box.u) <= half and abs(center[1] - last_box.v) <= half
    )


def simulated_track(
    truth: Optional[BoxMeasurement],
    last_box: BoxMeasurement,
    region_scale: float,
    noise: NoiseModel,
    t: float,
    rng: np.random.Generator,
    dilation: float = 2.0,
) -> TrackerOutput:
    """One tracker update against the synthetic measurement channel.

    Returns the stale ``last_box`` with the occluded score whenever the
    target is occluded, absent, outside the current search region, or lost to
    a random dropout; otherwise returns the (possibly noise-perturbed) truth
    with the visible score.
    """
    if truth is None or noise.occluded_at(t):
        return TrackerOutput(last_box, noise.score_occluded)
    if not region_contains(last_box, region_scale, (truth.u, truth.v), dilation):
        return TrackerOutput(last_box, noise.score_occluded)
    if noise.dropout_prob > 0.0 and rng.uniform() < noise.dropout_prob:
        return TrackerOutput(last_box, noise.score_occluded)
    box = truth
    if noise.sigma_px > 0.0:
        du, dv, dv2 = rng.normal(0.0, noise.sigma_px, size=3)
        v = truth.v + dv
        v2 = min(truth.v2 + dv2, v - 1.0)  # keep at least 1 px of half height
        box = BoxMeasurement(u=truth.u + du, v=v, v2=v2, score=truth.score)
    return TrackerOutput(box, noise.score_visible)


@dataclass(frozen=True)
class PerceptionOutput:
    """Per-tick pipeline result handed to the controller and the logger."""

    box: Optional[BoxMeasurement]
    hold: bool
    score: float
    region_scale: float
    failure_state: bool
    initialized: bool


class PerceptionPipeline:
    """Gate, tracker and recovery machine wired together for one run.

    Owns all perception state for a scenario; independent pipelines may run
    concurrently.  Detections fed to the gate are noiseless truth centers
    (detector internals are out of scope); occlusion suppresses them too.
    """

    def __init__(
        self,
        noise: NoiseModel,
        recovery: RecoveryState,
        intrinsics: CameraIntrinsics,
        gate: DetectionGate | None = None,
        search_dilation: float = 2.0,
    ) -> None:
        self.noise = noise
        self.recovery = recovery
        self.intrinsics = intrinsics
        self.gate = gate or DetectionGate()
        self.search_dilation = search_dilation
        self.initialized = False
        self._tracker_box: Optional[BoxMeasurement] = None
        self._confident_box: Optional[BoxMeasurement] = None

    def _scale_cap(self, box: BoxMeasurement) -> float:
        """Multiplier at which the search region covers the whole image."""
        nominal = self.search_dilation * box.half_height
        if nominal <= 0:
            return 1.0
        return max(1.0, max(self.intrinsics.width, self.intrinsics.height) / nominal)

    def step(
        self, truth: Optional[BoxMeasurement], t: float, rng: np.random.Generator
    ) -> PerceptionOutput:
        """Advance the pipeline by one frame."""
        if not self.initialized:
            detection = None if (truth is None or self.noise.occluded_at(t)) else truth
            initial = gate_update(self.gate, detection)
            if initial is None:
                return PerceptionOutput(
                    box=None, hold=False, score=0.0, region_scale=1.0,
                    failure_state=False, initialized=False,
                )
            self.initialized = True
            self._tracker_box = initial
            self._confident_box = initial
            return PerceptionOutput(
                box=initial, hold=False, score=self.noise.score_visible,
                region_scale=self.recovery.region_scale, failure_state=False,
                initialized=True,
            )

        assert self._tracker_box is not None and self._confident_box is not None
        out = simulated_track(
            truth, self._tracker_box, self.recovery.region_scale,
            self.noise, t, rng, self.search_dilation,
        )
        self._tracker_box = out.box
        self.recovery = recovery_step(
            self.recovery, out.score, self._scale_cap(self._tracker_box)
        )
        if out.score >= self.recovery.th_high:
            self._confident_box = out.box
        if self.recovery.failure_state:
            return PerceptionOutput(
                box=self._confident_box, hold=True, score=out.score,
                region_scale=self.recovery.region_scale, failure_state=True,
                initialized=True,
            )
        return PerceptionOutput(
            box=out.box, hold=False, score=out.score,
            region_scale=self.recovery.region_scale, failure_state=False,
            initialized=True,
        )
