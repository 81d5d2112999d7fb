"""Constant-velocity track predictor producing smoothness residuals.

The next position is extrapolated from a weighted least-squares line fit
(position against time) over a sliding window of recent detections.
"""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCalibration, InsufficientHistory, NonFiniteInput, NonMonotoneTime

DEFAULT_WINDOW = 8
MIN_WEIGHT = 1e-6


@dataclass(frozen=True)
class Detection:
    step_index: int
    time: float
    position: tuple

    @property
    def is_finite(self):
        return math.isfinite(self.time) and all(math.isfinite(c) for c in self.position)


@dataclass(frozen=True)
class PredictionResidual:
    step_index: int
    predicted: tuple
    residual_norm: float


class PredictorState:
    """Sliding-window track state owned by a single stream.

    Each stored detection carries a weight used in the line fit. Feeding the
    probability that a detection is true as its weight keeps a false
    detection from dragging the track for the next ``window`` steps.
    """

    def __init__(self, window=DEFAULT_WINDOW):
        if window < 2:
            raise ValueError(f"window must hold at least 2 detections, got {window}")
        self.window = window
        self._times = deque(maxlen=window)
        self._positions = deque(maxlen=window)
        self._weights = deque(maxlen=window)
        self.last_step = None
        self.last_time = None

    def __len__(self):
        return len(self._times)

    def velocity(self):
        return self._fit()[1]

    def _fit(self):
        if len(self._times) < 2:
            raise InsufficientHistory(
                f"prediction needs 2 detections, have {len(self._times)}"
            )
        t = np.fromiter(self._times, float)
        pos = np.array(self._positions, dtype=float)
        w = np.fromiter(self._weights, float)
        # Times relative to the newest sample keep the fit well conditioned.
        t0 = t[-1]
        t = t - t0
        wsum = w.sum()
        t_bar = (w @ t) / wsum
        p_bar = (w @ pos) / wsum
        dt = t - t_bar
        sxx = w @ (dt * dt)
        if sxx <= 0.0:
            velocity = np.zeros(2)
        else:
            velocity = (w * dt) @ (pos - p_bar) / sxx
        return t0 + t_bar, p_bar, velocity

    def predict_next(self, next_time):
        """Extrapolate the track to ``next_time``; returns a 2-vector."""
        if self.last_time is not None and next_time < self.last_time:
            raise NonMonotoneTime(f"time {next_time} precedes last time {self.last_time}")
        t_bar, p_bar, velocity = self._fit()
        return p_bar + velocity * (next_time - t_bar)

    def residual(self, d):
        """Residual of ``d`` against the current prediction, without storing it."""
        if len(self._times) < 2:
            return None
        predicted = self.predict_next(d.time)
        norm = float(np.hypot(*(predicted - np.asarray(d.position, dtype=float))))
        return PredictionResidual(d.step_index, tuple(predicted.tolist()), norm)

    def observe(self, d, weight=1.0):
        """Score ``d`` against the track, then append it to the window.

        ``weight`` is either a number or a callable mapping the computed
        residual (or ``None``) to a weight. Returns the residual, or ``None``
        while fewer than two detections have been seen.
        """
        if not d.is_finite:
            raise NonFiniteInput(f"detection {d.step_index} has non-finite values")
        if self.last_step is not None and d.step_index <= self.last_step:
            raise ValueError(
                f"step index {d.step_index} does not follow {self.last_step}"
            )
        if self.last_time is not None and d.time < self.last_time:
            raise NonMonotoneTime(f"time {d.time} precedes last time {self.last_time}")
        res = self.residual(d)
        w = weight(res) if callable(weight) else weight
        self._times.append(float(d.time))
        self._positions.append(tuple(float(c) for c in d.position))
        self._weights.append(max(float(w), MIN_WEIGHT))
        self.last_step = d.step_index
        self.last_time = d.time
        return res


def calibrate_sigma(residuals, literal_variance=False):
    """Sample standard deviation (``ddof=1``) of residual norms.

    With ``literal_variance`` the standard deviation is taken as the
    variance, so the square root of it is returned as sigma.
    """
    r = np.asarray(list(residuals), dtype=float)
    if r.size < 2:
        raise DegenerateCalibration(f"need at least 2 residuals, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise NonFiniteInput("residuals must be finite")
    sd = float(np.std(r, ddof=1))
    if sd <= 0.0:
        raise DegenerateCalibration("all residuals are identical; sigma would be 0")
    return math.sqrt(sd) if literal_variance else sd
