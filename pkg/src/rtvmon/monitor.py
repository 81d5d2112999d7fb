"""Streaming monitor for the false-positive-rate specification

    Pr(f_FP <= t_fp) >= c1

driven by the track predictor and the Markov belief estimator.
"""

import json
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

from . import belief as bel
from .errors import EmptyTrace, InvalidConfig, SinkUnavailable
from .predictor import DEFAULT_WINDOW, PredictorState, calibrate_sigma

TRACE_CAPACITY = 20


class Status(str, Enum):
    ACCEPT = "Accept"
    VIOLATION = "Violation"


class Reason(str, Enum):
    CONFIDENCE_NOT_MET = "ConfidenceNotMet"
    THRESHOLD_EXCEEDED = "ThresholdExceeded"
    INVALID_INPUT = "InvalidInput"


_REASON_ORDER = {r: i for i, r in enumerate(Reason)}


@dataclass(frozen=True)
class MonitorSpec:
    """Specification thresholds plus how truth probabilities are formed.

    ``sigma=None`` calibrates sigma from the first ``calibration_steps``
    residuals; belief updates for those steps are held back until sigma is
    known and then applied in order.
    """

    t_fp: float = 0.018
    c1: float = 0.95
    sigma: float = None
    calibration_steps: int = 20
    z_mode: bel.ZMode = bel.ZMode.UNIT_PEAK
    z_default: float = bel.Z_DEFAULT
    literal_variance: bool = False

    def __post_init__(self):
        object.__setattr__(self, "z_mode", bel.ZMode(self.z_mode))
        if not 0.0 < self.t_fp < 1.0:
            raise InvalidConfig(f"t_fp must lie in (0, 1), got {self.t_fp}")
        if not 0.0 < self.c1 < 1.0:
            raise InvalidConfig(f"c1 must lie in (0, 1), got {self.c1}")
        if self.sigma is not None and not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidConfig(f"sigma must be positive, got {self.sigma}")
        if self.sigma is None and self.calibration_steps < 2:
            raise InvalidConfig("calibration needs at least 2 residuals")
        if not 0.0 <= self.z_default <= 1.0:
            raise InvalidConfig(f"z_default must lie in [0, 1], got {self.z_default}")


@dataclass(frozen=True)
class Verdict:
    step_index: int
    confidence: float
    rate_estimate: float
    status: Status
    reasons: tuple = ()


def judge(step_index, confidence, rate_estimate, spec, invalid=False):
    """Verdict fully determined by the logged confidence and rate estimate."""
    reasons = set()
    if invalid:
        reasons.add(Reason.INVALID_INPUT)
    if confidence < spec.c1:
        reasons.add(Reason.CONFIDENCE_NOT_MET)
    if rate_estimate > spec.t_fp:
        reasons.add(Reason.THRESHOLD_EXCEEDED)
    reasons = tuple(sorted(reasons, key=_REASON_ORDER.__getitem__))
    status = Status.VIOLATION if reasons else Status.ACCEPT
    return Verdict(step_index, confidence, rate_estimate, status, reasons)


@dataclass(frozen=True)
class TraceEntry:
    detection: object
    residual: object
    z: float
    confidence: float
    verdict: Verdict

    def to_json(self):
        d = self.detection
        return {
            "step": d.step_index,
            "time": _finite_or_none(d.time),
            "pos": [_finite_or_none(c) for c in d.position],
            "residual": None if self.residual is None else self.residual.residual_norm,
            "z": self.z,
            "confidence": self.confidence,
            "rate_estimate": self.verdict.rate_estimate,
            "status": self.verdict.status.value,
        }


def _finite_or_none(v):
    return float(v) if math.isfinite(v) else None


@dataclass
class OperatorEvent:
    step_index: int
    reasons: tuple
    snapshot: tuple
    closed: bool = False
    written: bool = False

    def to_json(self, spec):
        return {
            "step": self.step_index,
            "reasons": [r.value for r in self.reasons],
            "spec": {"t_fp": spec.t_fp, "c1": spec.c1},
            "trace": [e.to_json() for e in self.snapshot],
        }


class MonitorEngine:
    """One engine per monitored stream.

    ``on_event`` is called with each new :class:`OperatorEvent` as soon as
    the stream enters a violation or the set of reasons changes. The event
    keeps tracking the trace window until the episode ends, so the record
    written by :meth:`flush_flagged` holds the last 20 steps of the episode.
    """

    def __init__(self, spec, window=DEFAULT_WINDOW, weighted_track=True, on_event=None):
        self.spec = spec
        self.predictor = PredictorState(window)
        self.weighted_track = weighted_track
        self.on_event = on_event
        self.belief = bel.belief_init()
        self.sigma = spec.sigma
        self.verdicts = []
        self.events = []
        self._trace = deque(maxlen=TRACE_CAPACITY)
        self._pending = []
        self._last_step = None

    @property
    def calibrating(self):
        return self.sigma is None

    def _z_for(self, residual):
        if residual is None:
            return self.spec.z_default
        return bel.truth_probability(
            residual.residual_norm, self.sigma, self.spec.z_mode, self.spec.z_default
        )

    def _weigh(self, residual):
        if residual is not None and self.calibrating:
            return 1.0
        z = self._z_for(residual)
        return z if self.weighted_track else 1.0

    def _finish_calibration(self):
        norms = [r.residual_norm for r in self._pending]
        self.sigma = calibrate_sigma(norms, literal_variance=self.spec.literal_variance)
        for r in self._pending:
            self.belief = bel.belief_update(self.belief, self._z_for(r))
        self._pending = []

    def monitor_step(self, d):
        if self._last_step is not None and d.step_index != self._last_step + 1:
            raise ValueError(f"expected step {self._last_step + 1}, got {d.step_index}")
        residual, z = None, None
        invalid = not d.is_finite
        if not invalid:
            residual = self.predictor.observe(d, weight=self._weigh)
            if residual is not None and self.calibrating:
                self._pending.append(residual)
                if len(self._pending) >= self.spec.calibration_steps:
                    self._finish_calibration()
                    z = self._z_for(residual)
            else:
                z = self._z_for(residual)
                self.belief = bel.belief_update(self.belief, z)
        self._last_step = d.step_index

        conf = bel.confidence(self.belief, self.spec.t_fp)
        rate = bel.posterior_mean(self.belief)
        verdict = judge(d.step_index, conf, rate, self.spec, invalid=invalid)
        self.verdicts.append(verdict)
        self._trace.append(TraceEntry(d, residual, z, conf, verdict))
        self._track_events(verdict)
        return verdict

    def _track_events(self, verdict):
        current = self.events[-1] if self.events and not self.events[-1].closed else None
        if current is not None and current.reasons != verdict.reasons:
            current.closed = True
            current = None
        if verdict.status is Status.ACCEPT:
            return
        if current is None:
            current = OperatorEvent(verdict.step_index, verdict.reasons, tuple(self._trace))
            self.events.append(current)
            if self.on_event is not None:
                self.on_event(current)
        elif not current.written:
            current.snapshot = tuple(self._trace)

    def trace_window(self):
        """Trace entries ordered oldest to newest, at most 20."""
        if not self._trace:
            raise EmptyTrace("no step has been processed yet")
        return list(self._trace)

    def flush_flagged(self, sink):
        """Write unwritten operator events as JSON lines; returns the count.

        ``sink`` is a path (appended to) or a writable text stream.
        """
        pending = [e for e in self.events if not e.written]
        if not pending:
            return 0
        lines = "".join(json.dumps(e.to_json(self.spec)) + "\n" for e in pending)
        try:
            if hasattr(sink, "write"):
                sink.write(lines)
            else:
                with open(sink, "a") as fh:
                    fh.write(lines)
        except (OSError, ValueError) as exc:
            raise SinkUnavailable(f"cannot write flagged events: {exc}") from exc
        for e in pending:
            e.written = True
        return len(pending)

    def run(self, detections):
        return [self.monitor_step(d) for d in detections]
