import io
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtvmon import belief as bel
from rtvmon.errors import EmptyTrace, InvalidConfig, SinkUnavailable
from rtvmon.monitor import MonitorEngine, MonitorSpec, Reason, Status, judge
from rtvmon.predictor import Detection
from rtvmon.scenario import ScenarioConfig, generate, sigma_oracle

SPEC = MonitorSpec(t_fp=0.018, c1=0.95, sigma=1.0)
# every detection counts as certainly true, warm-up included
ALL_TRUE = MonitorSpec(t_fp=0.018, c1=0.95, sigma=1.0, z_default=1.0)
LENIENT = MonitorSpec(t_fp=0.9, c1=0.05, sigma=1.0, z_default=1.0)


def line(n, start=1):
    return [Detection(i, float(i - 1), (float(i), 2.0 * i)) for i in range(start, start + n)]


def engine_after(spec, n):
    engine = MonitorEngine(spec)
    engine.run(line(n))
    return engine


class TestSpec:
    @pytest.mark.parametrize("kw", [{"t_fp": 0.0}, {"t_fp": 1.0}, {"c1": 0.0}, {"c1": 1.2}, {"sigma": -1.0}, {"z_default": 2.0}])
    def test_rejects_out_of_range(self, kw):
        with pytest.raises(InvalidConfig):
            MonitorSpec(**kw)

    def test_z_mode_coerced(self):
        assert MonitorSpec(z_mode="literal_density").z_mode is bel.ZMode.LITERAL_DENSITY


class TestJudge:
    def test_both_met(self):
        v = judge(1, 0.96, 0.01, SPEC)
        assert v.status is Status.ACCEPT and v.reasons == ()

    def test_threshold_exceeded(self):
        v = judge(1, 0.99, 0.02, SPEC)
        assert v.status is Status.VIOLATION
        assert v.reasons == (Reason.THRESHOLD_EXCEEDED,)

    def test_confidence_not_met(self):
        assert judge(1, 0.5, 0.01, SPEC).reasons == (Reason.CONFIDENCE_NOT_MET,)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_status_iff_reasons(self, conf, rate):
        v = judge(3, conf, rate, SPEC)
        assert (v.status is Status.ACCEPT) == (not v.reasons)
        assert (Reason.CONFIDENCE_NOT_MET in v.reasons) == (conf < SPEC.c1)
        assert (Reason.THRESHOLD_EXCEEDED in v.reasons) == (rate > SPEC.t_fp)


class TestStep:
    def test_all_true_stream_first_accept(self):
        engine = engine_after(ALL_TRUE, 200)
        statuses = [v.status for v in engine.verdicts]
        assert all(s is Status.VIOLATION for s in statuses[:163])
        assert all(s is Status.ACCEPT for s in statuses[163:])
        assert all(v.reasons == (Reason.CONFIDENCE_NOT_MET,) for v in engine.verdicts[53:163])
        for v in engine.verdicts:
            n = v.step_index
            assert v.confidence == pytest.approx(1 - 0.982 ** (n + 1), abs=1e-12)
            assert v.rate_estimate == pytest.approx(1 / (n + 2), abs=1e-15)

    def test_warm_up_uses_default(self):
        engine = engine_after(SPEC, 3)
        # z = 0.5, 0.5, 1.0
        assert engine.belief.probs == pytest.approx([0.0, 0.25, 0.5, 0.25], abs=1e-15)
        zs = [e.z for e in engine.trace_window()]
        assert zs == [0.5, 0.5, 1.0]

    def test_verdicts_rederive_exactly(self):
        s = generate(ScenarioConfig(n_total=300, n_false=3, seed=5))
        engine = MonitorEngine(MonitorSpec(sigma=sigma_oracle(s)))
        for v in engine.run(s.detections):
            assert judge(v.step_index, v.confidence, v.rate_estimate, engine.spec) == v

    def test_deterministic(self):
        s = generate(ScenarioConfig(n_total=200, n_false=4, seed=1))
        spec = MonitorSpec(sigma=sigma_oracle(s))
        assert MonitorEngine(spec).run(s.detections) == MonitorEngine(spec).run(s.detections)

    def test_stream_untouched(self):
        s = generate(ScenarioConfig(n_total=50, n_false=1, seed=2))
        before = list(s.detections)
        MonitorEngine(SPEC).run(s.detections)
        assert s.detections == before

    def test_invalid_detection_quarantined(self):
        engine = MonitorEngine(ALL_TRUE)
        engine.run(line(5))
        before = engine.belief
        v = engine.monitor_step(Detection(6, 5.0, (math.nan, 1.0)))
        assert v.status is Status.VIOLATION
        assert Reason.INVALID_INPUT in v.reasons
        assert engine.belief == before
        v = engine.monitor_step(Detection(7, 6.0, (7.0, 14.0)))
        assert engine.belief.n == 6
        assert Reason.INVALID_INPUT not in v.reasons
        entry = engine.trace_window()[-2]
        assert entry.z is None and entry.to_json()["pos"] == [None, 1.0]

    def test_step_gap_rejected(self):
        engine = MonitorEngine(SPEC)
        engine.monitor_step(line(1)[0])
        with pytest.raises(ValueError):
            engine.monitor_step(line(1, start=3)[0])


class TestCalibration:
    def test_deferred_updates_replayed(self):
        s = generate(ScenarioConfig(n_total=120, n_false=2, seed=8))
        cal = MonitorEngine(MonitorSpec(sigma=None, calibration_steps=20), weighted_track=False)
        cal.run(s.detections)
        fixed = MonitorEngine(MonitorSpec(sigma=cal.sigma), weighted_track=False)
        fixed.run(s.detections)
        assert cal.belief.n == fixed.belief.n == 120
        assert cal.belief.probs == pytest.approx(fixed.belief.probs, abs=1e-14)
        assert cal.verdicts[30:] == fixed.verdicts[30:]

    def test_belief_lags_during_calibration(self):
        engine = MonitorEngine(MonitorSpec(sigma=None, calibration_steps=5))
        s = generate(ScenarioConfig(n_total=7, n_false=0, seed=0))
        engine.run(s.detections[:6])
        # two warm-up updates applied, four residuals pending
        assert engine.calibrating and engine.belief.n == 2
        engine.monitor_step(s.detections[6])
        assert not engine.calibrating and engine.belief.n == 7
        assert [e.z is None for e in engine.trace_window()] == [False, False, True, True, True, True, False]


class TestTrace:
    def test_empty(self):
        with pytest.raises(EmptyTrace):
            MonitorEngine(SPEC).trace_window()

    @pytest.mark.parametrize("steps,first,last", [(5, 1, 5), (20, 1, 20), (25, 6, 25)])
    def test_window(self, steps, first, last):
        window = engine_after(SPEC, steps).trace_window()
        assert [e.detection.step_index for e in window] == list(range(first, last + 1))

    def test_entry_fields(self):
        entry = engine_after(ALL_TRUE, 3).trace_window()[-1]
        assert list(entry.to_json()) == ["step", "time", "pos", "residual", "z", "confidence", "rate_estimate", "status"]


class TestEvents:
    def test_no_violation_no_records(self):
        engine = engine_after(LENIENT, 30)
        assert all(v.status is Status.ACCEPT for v in engine.verdicts)
        assert engine.flush_flagged(io.StringIO()) == 0

    def test_single_long_episode(self):
        engine = engine_after(ALL_TRUE, 25)
        buf = io.StringIO()
        assert engine.flush_flagged(buf) == 1
        record = json.loads(buf.getvalue())
        assert record["step"] == 1
        assert [e["step"] for e in record["trace"]] == list(range(6, 26))

    def test_flush_is_idempotent(self, tmp_path):
        engine = engine_after(ALL_TRUE, 25)
        sink = tmp_path / "flagged.jsonl"
        assert engine.flush_flagged(sink) == 1
        assert engine.flush_flagged(sink) == 0
        assert len(sink.read_text().splitlines()) == 1

    def test_reason_change_opens_new_event(self):
        engine = engine_after(ALL_TRUE, 170)
        seen = [(e.step_index, e.reasons) for e in engine.events]
        # rate 1/(n+2) drops to 0.018 at n = 54; confidence reaches 0.95 at n = 164
        assert seen == [
            (1, (Reason.CONFIDENCE_NOT_MET, Reason.THRESHOLD_EXCEEDED)),
            (54, (Reason.CONFIDENCE_NOT_MET,)),
        ]
        assert all(e.closed for e in engine.events)
        assert engine.events[0].snapshot[-1].detection.step_index == 53
        assert engine.events[1].snapshot[-1].detection.step_index == 163

    def test_operator_callback(self):
        got = []
        engine = MonitorEngine(ALL_TRUE, on_event=got.append)
        engine.run(line(60))
        assert [e.step_index for e in got] == [1, 54]
        # callback fires at the transition with the trace as it was then
        assert got[1].snapshot[-1].detection.step_index >= 54

    def test_sink_unavailable(self, tmp_path):
        engine = engine_after(ALL_TRUE, 3)
        with pytest.raises(SinkUnavailable):
            engine.flush_flagged(tmp_path)
        assert not engine.events[0].written

    def test_golden_record(self, fixtures):
        engine = engine_after(ALL_TRUE, 25)
        buf = io.StringIO()
        engine.flush_flagged(buf)
        golden = (fixtures / "flagged_all_true_25.jsonl").read_text()
        assert buf.getvalue() == golden
        record = json.loads(golden)
        assert list(record) == ["step", "reasons", "spec", "trace"]
        assert record["reasons"] == ["ConfidenceNotMet", "ThresholdExceeded"]
        assert record["spec"] == {"t_fp": 0.018, "c1": 0.95}
        for e in record["trace"]:
            n = e["step"]
            assert e["pos"] == [float(n), 2.0 * n]
            assert e["residual"] == 0.0 and e["z"] == 1.0
            assert e["confidence"] == pytest.approx(1 - 0.982 ** (n + 1), abs=1e-12)
            assert e["rate_estimate"] == pytest.approx(1 / (n + 2), abs=1e-15)
            assert e["status"] == "Violation"
