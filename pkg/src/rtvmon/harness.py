"""Run detection streams through monitors and compare two monitor versions
side by side (shadow mode)."""

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import belief as bel
from .monitor import MonitorEngine, Status

DEFAULT_CHECKPOINTS = (100, 300, 600, 1000)
PDF_GRID = np.linspace(0.0, 0.05, 501)


def _num(v):
    return repr(float(v))


def first_stable_accept(verdicts):
    """Smallest step from which every verdict is Accept, or None."""
    first = None
    for v in reversed(verdicts):
        if v.status is not Status.ACCEPT:
            break
        first = v.step_index
    return first


@dataclass
class RunReport:
    verdicts: list
    sigma: float
    checkpoints: dict = field(default_factory=dict)
    pdf_samples: dict = field(default_factory=dict)
    flagged: str = ""

    @property
    def summary(self):
        last = self.verdicts[-1] if self.verdicts else None
        return {
            "n_steps": len(self.verdicts),
            "first_stable_accept_n": first_stable_accept(self.verdicts),
            "total_violations": sum(v.status is Status.VIOLATION for v in self.verdicts),
            "final_rate_estimate": None if last is None else last.rate_estimate,
            "final_confidence": None if last is None else last.confidence,
            "final_status": None if last is None else last.status.value,
            "sigma": self.sigma,
            "checkpoints": {str(n): c for n, c in sorted(self.checkpoints.items())},
        }

    def steps_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "confidence", "rate_estimate", "status", "reasons"])
        for v in self.verdicts:
            writer.writerow([
                v.step_index, _num(v.confidence), _num(v.rate_estimate),
                v.status.value, ";".join(r.value for r in v.reasons),
            ])
        return buf.getvalue()

    def summary_json(self):
        return json.dumps(self.summary, indent=2) + "\n"

    def posterior_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "x", "pdf"])
        for n, values in sorted(self.pdf_samples.items()):
            for x, p in zip(PDF_GRID, values):
                writer.writerow([n, _num(x), _num(p)])
        return buf.getvalue()

    def write(self, out_dir):
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "steps.csv").write_text(self.steps_csv())
        (out_dir / "summary.json").write_text(self.summary_json())
        (out_dir / "posterior.csv").write_text(self.posterior_csv())
        (out_dir / "flagged.jsonl").write_text(self.flagged)


def run_stream(detections, spec, checkpoints=DEFAULT_CHECKPOINTS, window=None):
    """Drive a fresh engine over ``detections`` and collect a report."""
    kwargs = {} if window is None else {"window": window}
    engine = MonitorEngine(spec, **kwargs)
    wanted = set(checkpoints)
    report = RunReport([], None)
    for d in detections:
        engine.monitor_step(d)
        if d.step_index in wanted:
            b = engine.belief
            report.checkpoints[d.step_index] = {
                "belief_n": b.n,
                "mean": bel.posterior_mean(b),
                "variance": bel.posterior_variance(b),
                "confidence": bel.confidence(b, spec.t_fp),
            }
            report.pdf_samples[d.step_index] = bel.posterior_pdf(b, PDF_GRID)
    report.verdicts = engine.verdicts
    report.sigma = engine.sigma
    buf = io.StringIO()
    engine.flush_flagged(buf)
    report.flagged = buf.getvalue()
    return report


@dataclass
class ShadowReport:
    report_a: RunReport
    report_b: RunReport
    divergences: list

    @property
    def summary(self):
        return {
            "n_steps": len(self.report_a.verdicts),
            "divergences": len(self.divergences),
            "first_divergence": self.divergences[0] if self.divergences else None,
            "violations_a": self.report_a.summary["total_violations"],
            "violations_b": self.report_b.summary["total_violations"],
        }

    def pairs_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "status_a", "reasons_a", "status_b", "reasons_b", "diverged"])
        diverged = set(self.divergences)
        for a, b in zip(self.report_a.verdicts, self.report_b.verdicts):
            writer.writerow([
                a.step_index,
                a.status.value, ";".join(r.value for r in a.reasons),
                b.status.value, ";".join(r.value for r in b.reasons),
                int(a.step_index in diverged),
            ])
        return buf.getvalue()

    def write(self, out_dir):
        out_dir.mkdir(parents=True, exist_ok=True)
        self.report_a.write(out_dir / "a")
        self.report_b.write(out_dir / "b")
        (out_dir / "shadow.csv").write_text(self.pairs_csv())
        (out_dir / "shadow_summary.json").write_text(json.dumps(self.summary, indent=2) + "\n")


def shadow(detections, spec_a, spec_b, checkpoints=DEFAULT_CHECKPOINTS):
    """Run the operational monitor A and the candidate B on the same stream.

    The stream is an immutable sequence and each engine owns its own state,
    so B cannot influence A. Both run concurrently and are joined before the
    verdicts are compared.
    """
    detections = tuple(detections)
    with ThreadPoolExecutor(max_workers=2) as pool:
        fut_a = pool.submit(run_stream, detections, spec_a, checkpoints)
        fut_b = pool.submit(run_stream, detections, spec_b, checkpoints)
        report_a, report_b = fut_a.result(), fut_b.result()
    divergences = [
        a.step_index
        for a, b in zip(report_a.verdicts, report_b.verdicts)
        if a.status != b.status or a.reasons != b.reasons
    ]
    return ShadowReport(report_a, report_b, divergences)
