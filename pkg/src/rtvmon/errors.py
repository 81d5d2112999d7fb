"""Exception hierarchy shared by every module of the package."""


class MonitorError(Exception):
    """Base class for all errors raised by rtvmon."""


class InsufficientHistory(MonitorError):
    pass


class NonMonotoneTime(MonitorError, ValueError):
    pass


class DegenerateCalibration(MonitorError, ValueError):
    pass


class NonFiniteInput(MonitorError, ValueError):
    pass


class NonConvergence(MonitorError, ArithmeticError):
    pass


class EmptyTrace(MonitorError):
    pass


class SinkUnavailable(MonitorError, OSError):
    pass


class InvalidConfig(MonitorError, ValueError):
    pass


class DescriptorError(MonitorError):
    """Anything wrong with a monitor descriptor."""


class ParseError(DescriptorError, ValueError):
    def __init__(self, message, *, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class DanglingReference(DescriptorError, ValueError):
    pass


class NotObservable(DescriptorError):
    """No monitoring strategy applies; the system needs a redesign."""

    def __init__(self, spec_name):
        self.spec_name = spec_name
        super().__init__(
            f"specification {spec_name!r} is neither observable, estimable by a "
            "surrogate, nor falsifiable; redesign the system to expose more signals"
        )


class UnknownEstimator(DescriptorError, KeyError):
    def __str__(self):
        return Exception.__str__(self)
