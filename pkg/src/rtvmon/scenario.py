"""Seeded synthetic trajectories with injected false detections."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateCalibration, InvalidConfig
from .predictor import Detection

WARMUP_STEPS = 10
CSV_COLUMNS = ("step", "time", "x", "y", "label", "clean_x", "clean_y")


@dataclass(frozen=True)
class TrajectoryConfig:
    kind: str = "spline"
    speed: float = 10.0
    noise_std: float = 0.02
    # turn-rate bound (rad/s) for arc and spline trajectories
    max_turn_rate: float = 0.001
    knot_spacing: int = 100


@dataclass(frozen=True)
class ScenarioConfig:
    n_total: int = 1000
    n_false: int = 8
    seed: int = 0
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    perturbation_magnitude: float = 50.0
    dt: float = 1.0

    def validate(self):
        if self.n_total < 1:
            raise InvalidConfig(f"n_total must be positive, got {self.n_total}")
        if not 0 <= self.n_false <= self.n_total:
            raise InvalidConfig(f"n_false must lie in [0, n_total], got {self.n_false}")
        if self.n_false > max(0, self.n_total - WARMUP_STEPS):
            raise InvalidConfig(
                f"only {self.n_total - WARMUP_STEPS} steps after warm-up for "
                f"{self.n_false} injections"
            )
        if self.trajectory.noise_std < 0:
            raise InvalidConfig("noise_std must be non-negative")
        if self.trajectory.kind not in ("line", "arc", "spline"):
            raise InvalidConfig(f"unknown trajectory kind {self.trajectory.kind!r}")
        if self.dt <= 0 or self.trajectory.speed < 0 or self.perturbation_magnitude < 0:
            raise InvalidConfig("dt must be positive; speed and magnitude non-negative")


@dataclass(frozen=True)
class LabeledStream:
    detections: list
    labels: list
    clean_positions: list

    def __post_init__(self):
        if not len(self.detections) == len(self.labels) == len(self.clean_positions):
            raise ValueError("detections, labels and clean positions differ in length")

    def __len__(self):
        return len(self.detections)

    @property
    def n_false(self):
        return sum(1 for lab in self.labels if lab is False)

    @property
    def has_ground_truth(self):
        return all(lab is not None for lab in self.labels)


def _turn_rates(cfg, rng, times):
    traj = cfg.trajectory
    if traj.kind == "line":
        return np.zeros_like(times)
    if traj.kind == "arc":
        return np.full_like(times, rng.uniform(-1.0, 1.0) * traj.max_turn_rate)
    span = times[-1] - times[0] if times.size > 1 else 1.0
    n_knots = max(4, int(math.ceil(span / (traj.knot_spacing * cfg.dt))) + 1)
    knots = np.linspace(times[0], times[0] + span, n_knots)
    values = rng.uniform(-1.0, 1.0, n_knots) * traj.max_turn_rate
    rates = CubicSpline(knots, values, bc_type="natural")(times)
    return np.clip(rates, -traj.max_turn_rate, traj.max_turn_rate)


def generate(cfg):
    """Build a labeled detection stream from ``cfg``; identical seeds give
    identical streams."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_total
    times = np.arange(n) * cfg.dt
    heading0 = rng.uniform(0.0, 2.0 * math.pi)
    heading = heading0 + np.concatenate(([0.0], np.cumsum(_turn_rates(cfg, rng, times)[:-1] * cfg.dt)))
    velocity = cfg.trajectory.speed * np.column_stack((np.cos(heading), np.sin(heading)))
    clean = np.vstack((np.zeros(2), np.cumsum(velocity[:-1] * cfg.dt, axis=0)))
    observed = clean + rng.normal(0.0, cfg.trajectory.noise_std, size=clean.shape)

    candidates = np.arange(WARMUP_STEPS, n)
    injected = np.sort(rng.choice(candidates, size=cfg.n_false, replace=False))
    angles = rng.uniform(0.0, 2.0 * math.pi, size=cfg.n_false)
    observed[injected] += cfg.perturbation_magnitude * np.column_stack((np.cos(angles), np.sin(angles)))

    labels = np.ones(n, dtype=bool)
    labels[injected] = False
    detections = [
        Detection(i + 1, float(times[i]), (float(observed[i, 0]), float(observed[i, 1])))
        for i in range(n)
    ]
    return LabeledStream(
        detections,
        [bool(v) for v in labels],
        [(float(x), float(y)) for x, y in clean],
    )


def sigma_oracle(stream, literal_variance=False):
    """Sigma from ground truth: sample std of the distance between each
    detection and its clean position.

    With ``literal_variance`` that std is read as a variance, as in the
    original calibration recipe, and its square root is returned.
    """
    if not stream.has_ground_truth:
        raise DegenerateCalibration("stream carries no ground-truth labels")
    if stream.n_false < 1:
        raise DegenerateCalibration("sigma oracle needs at least one injected perturbation")
    obs = np.array([d.position for d in stream.detections], dtype=float)
    clean = np.array(stream.clean_positions, dtype=float)
    dist = np.hypot(*(obs - clean).T)
    if dist.size < 2 or np.all(dist == dist[0]):
        raise DegenerateCalibration("all deviations are identical; sigma would be 0")
    sd = float(np.std(dist, ddof=1))
    return math.sqrt(sd) if literal_variance else sd


def _fmt(v):
    return repr(float(v))


def write_csv(stream, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for d, lab, (cx, cy) in zip(stream.detections, stream.labels, stream.clean_positions):
            writer.writerow([
                d.step_index, _fmt(d.time), _fmt(d.position[0]), _fmt(d.position[1]),
                "" if lab is None else str(lab).lower(),
                "" if cx is None else _fmt(cx), "" if cy is None else _fmt(cy),
            ])


def read_csv(path):
    """Load a stream; ``label`` and ``clean_*`` columns may be empty or absent."""
    detections, labels, clean = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"step", "time", "x", "y"} - set(reader.fieldnames or ())
        if missing:
            raise InvalidConfig(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                detections.append(Detection(
                    int(row["step"]), float(row["time"]), (float(row["x"]), float(row["y"])),
                ))
                lab = (row.get("label") or "").strip().lower()
                if lab not in ("", "true", "false", "1", "0"):
                    raise ValueError(f"bad label {lab!r}")
                labels.append(None if lab == "" else lab in ("true", "1"))
                cx, cy = row.get("clean_x") or "", row.get("clean_y") or ""
                clean.append((float(cx), float(cy)) if cx and cy else (None, None))
            except ValueError as exc:
                raise InvalidConfig(f"{path}:{lineno}: {exc}") from exc
    return LabeledStream(detections, labels, clean)
