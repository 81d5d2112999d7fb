"""Declarative monitor characterization and strategy selection.

A descriptor records the monitoring goal, the reference inputs and
observed outputs, and for every specification whether it can be checked
directly, estimated through a surrogate, or only falsified. Strategy
selection walks those options in that order; a specification that admits
none of them cannot be monitored and the system must be redesigned.
"""

import json
import operator
from dataclasses import asdict, dataclass, field
from enum import Enum
from importlib import resources

from .errors import DanglingReference, NotObservable, ParseError, UnknownEstimator
from .monitor import MonitorSpec

INPUT_KINDS = ("signal", "statistic", "qos", "sla", "state", "functional")
OUTPUT_KINDS = ("physical", "qos", "computational", "external")
FP_RATE_ESTIMATOR = "fp_rate_markov"
KNOWN_ESTIMATORS = (FP_RATE_ESTIMATOR,)

_OPS = {"<=": operator.le, "<": operator.lt, ">=": operator.ge, ">": operator.gt}


class Strategy(str, Enum):
    DIRECT = "Direct"
    SURROGATE = "Surrogate"
    FALSIFICATION = "Falsification"


@dataclass(frozen=True)
class ReferenceInput:
    name: str
    kind: str
    bounds: str = ""


@dataclass(frozen=True)
class ObservedOutput:
    name: str
    kind: str


@dataclass(frozen=True)
class Surrogate:
    estimator_name: str
    inputs: tuple
    parameters: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Falsification:
    condition_text: str


@dataclass(frozen=True)
class Threshold:
    output: str
    op: str
    bound: float


@dataclass(frozen=True)
class Specification:
    name: str
    formal_text: str
    directly_observable: bool
    surrogate: Surrogate = None
    falsification: Falsification = None
    threshold: Threshold = None


@dataclass(frozen=True)
class OperatorNotify:
    enabled: bool
    channel: str = ""


@dataclass(frozen=True)
class MonitorDescriptor:
    goal: str
    reference_inputs: tuple
    observed_outputs: tuple
    specifications: tuple
    posthoc_traces: tuple = ()
    operator_notify: OperatorNotify = OperatorNotify(False)

    @property
    def signal_names(self):
        return {s.name for s in self.reference_inputs} | {s.name for s in self.observed_outputs}


@dataclass(frozen=True)
class ThresholdMonitor:
    """Generic check of a named output against a fixed bound."""

    spec_name: str
    output: str
    op: str
    bound: float

    def check(self, value):
        return _OPS[self.op](value, self.bound)


# -- parsing -----------------------------------------------------------------

def _require(obj, key, kind, path):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", field=path)
    if key not in obj:
        raise ParseError("missing required field", field=f"{path}.{key}" if path else key)
    return _typed(obj[key], kind, f"{path}.{key}" if path else key)


def _typed(value, kind, path):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise ParseError(f"expected {kind.__name__}, got {type(value).__name__}", field=path)
    return value


def _optional(obj, key, kind, path, default=None):
    if obj.get(key) is None:
        return default
    return _typed(obj[key], kind, f"{path}.{key}")


def _parse_list(obj, key, path, parse_item, required=True):
    items = _require(obj, key, list, path) if required or key in obj else []
    return tuple(parse_item(item, f"{key}[{i}]") for i, item in enumerate(items))


def _parse_input(item, path):
    kind = _require(item, "kind", str, path)
    if kind not in INPUT_KINDS:
        raise ParseError(f"unknown input kind {kind!r}; expected one of {INPUT_KINDS}", field=f"{path}.kind")
    return ReferenceInput(_require(item, "name", str, path), kind, _optional(item, "bounds", str, path, ""))


def _parse_output(item, path):
    kind = _require(item, "kind", str, path)
    if kind not in OUTPUT_KINDS:
        raise ParseError(f"unknown output kind {kind!r}; expected one of {OUTPUT_KINDS}", field=f"{path}.kind")
    return ObservedOutput(_require(item, "name", str, path), kind)


def _parse_spec(item, path):
    surrogate = falsification = threshold = None
    if item.get("surrogate") is not None:
        s = _typed(item["surrogate"], dict, f"{path}.surrogate")
        sp = f"{path}.surrogate"
        inputs = _require(s, "inputs", list, sp)
        for i, name in enumerate(inputs):
            _typed(name, str, f"{sp}.inputs[{i}]")
        surrogate = Surrogate(
            _require(s, "estimator_name", str, sp), tuple(inputs),
            dict(_optional(s, "parameters", dict, sp, {})),
        )
    if item.get("falsification") is not None:
        f = _typed(item["falsification"], dict, f"{path}.falsification")
        falsification = Falsification(_require(f, "condition_text", str, f"{path}.falsification"))
    if item.get("threshold") is not None:
        tp = f"{path}.threshold"
        t = _typed(item["threshold"], dict, tp)
        op = _require(t, "op", str, tp)
        if op not in _OPS:
            raise ParseError(f"unknown comparison {op!r}", field=f"{tp}.op")
        threshold = Threshold(_require(t, "output", str, tp), op, _require(t, "bound", float, tp))
    return Specification(
        _require(item, "name", str, path),
        _require(item, "formal_text", str, path),
        _require(item, "directly_observable", bool, path),
        surrogate, falsification, threshold,
    )


def parse_descriptor(data):
    """Build a descriptor from already-decoded JSON data."""
    if not isinstance(data, dict):
        raise ParseError("descriptor must be a JSON object")
    notify = data.get("operator_notify") or {"enabled": False}
    notify = _typed(notify, dict, "operator_notify")
    d = MonitorDescriptor(
        goal=_require(data, "goal", str, ""),
        reference_inputs=_parse_list(data, "reference_inputs", "", _parse_input),
        observed_outputs=_parse_list(data, "observed_outputs", "", _parse_output),
        specifications=_parse_list(data, "specifications", "", _parse_spec),
        posthoc_traces=tuple(
            _typed(t, str, f"posthoc_traces[{i}]")
            for i, t in enumerate(_optional(data, "posthoc_traces", list, "", []))
        ),
        operator_notify=OperatorNotify(
            _require(notify, "enabled", bool, "operator_notify"),
            _optional(notify, "channel", str, "operator_notify", ""),
        ),
    )
    if not d.specifications:
        raise ParseError("at least one specification is required", field="specifications")
    names = [s.name for s in d.specifications]
    if len(set(names)) != len(names):
        raise ParseError("specification names must be unique", field="specifications")
    _check_references(d)
    return d


def _check_references(d):
    declared = d.signal_names
    for spec in d.specifications:
        refs = list(spec.surrogate.inputs) if spec.surrogate else []
        if spec.threshold:
            refs.append(spec.threshold.output)
        for name in refs:
            if name not in declared:
                raise DanglingReference(
                    f"specification {spec.name!r} refers to undeclared signal {name!r}"
                )


def loads_descriptor(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    return parse_descriptor(data)


def load_descriptor(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read descriptor {path}: {exc.strerror or exc}") from exc
    return loads_descriptor(text)


def bundled_descriptor_path(name="detector_fp.descriptor"):
    return resources.files("rtvmon") / "data" / name


def descriptor_to_dict(d):
    def spec_dict(s):
        out = {"name": s.name, "formal_text": s.formal_text, "directly_observable": s.directly_observable}
        if s.surrogate:
            out["surrogate"] = {
                "estimator_name": s.surrogate.estimator_name,
                "inputs": list(s.surrogate.inputs),
                "parameters": dict(s.surrogate.parameters),
            }
        if s.falsification:
            out["falsification"] = asdict(s.falsification)
        if s.threshold:
            out["threshold"] = asdict(s.threshold)
        return out

    return {
        "goal": d.goal,
        "reference_inputs": [asdict(r) for r in d.reference_inputs],
        "observed_outputs": [asdict(o) for o in d.observed_outputs],
        "specifications": [spec_dict(s) for s in d.specifications],
        "posthoc_traces": list(d.posthoc_traces),
        "operator_notify": asdict(d.operator_notify),
    }


def dumps_descriptor(d):
    return json.dumps(descriptor_to_dict(d), indent=2) + "\n"


# -- strategy selection and binding --------------------------------------------

def select_strategy(spec):
    if spec.directly_observable:
        return Strategy.DIRECT
    if spec.surrogate is not None:
        return Strategy.SURROGATE
    if spec.falsification is not None:
        return Strategy.FALSIFICATION
    raise NotObservable(spec.name)


def validate_descriptor(d):
    """Map every specification name to its monitoring strategy.

    Raises :class:`NotObservable` for a specification with no applicable
    strategy and :class:`DanglingReference` for undeclared signals.
    """
    _check_references(d)
    return {spec.name: select_strategy(spec) for spec in d.specifications}


_SPEC_PARAMS = ("t_fp", "c1", "sigma", "calibration_steps", "z_mode", "z_default", "literal_variance")


def bind_monitor(d, assignment):
    """Turn each assigned specification into an engine configuration.

    Surrogates using the Markov false-positive-rate estimator become a
    :class:`MonitorSpec`; everything else becomes a :class:`ThresholdMonitor`
    over the specification's named output.
    """
    specs = {s.name: s for s in d.specifications}
    bound = {}
    for name, strategy in assignment.items():
        spec = specs[name]
        if strategy is Strategy.SURROGATE:
            est = spec.surrogate.estimator_name
            if est not in KNOWN_ESTIMATORS:
                raise UnknownEstimator(f"specification {name!r} uses unknown estimator {est!r}")
            params = {k: v for k, v in spec.surrogate.parameters.items() if k in _SPEC_PARAMS}
            bound[name] = MonitorSpec(**params)
        else:
            if spec.threshold is None:
                raise ParseError(
                    f"{strategy.value} specification needs a threshold to bind",
                    field=f"{name}.threshold",
                )
            t = spec.threshold
            bound[name] = ThresholdMonitor(name, t.output, t.op, t.bound)
    return bound


def fp_rate_spec(d):
    """Validate ``d`` and return the single false-positive-rate monitor spec."""
    bound = bind_monitor(d, validate_descriptor(d))
    specs = [b for b in bound.values() if isinstance(b, MonitorSpec)]
    if not specs:
        raise UnknownEstimator(f"descriptor has no {FP_RATE_ESTIMATOR!r} surrogate")
    return specs[0]
