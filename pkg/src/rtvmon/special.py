"""Beta-function helpers: log-Beta, log-factorials and the regularized
incomplete Beta function."""

import math

import numpy as np

from .errors import NonConvergence

MAX_ITER = 500
_EPS = 1e-16
_TINY = 1e-300


def log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


_logfact = np.zeros(1)


def log_factorials(n):
    """Return ``log(k!)`` for ``k = 0..n`` as an array (cached, grown on demand)."""
    global _logfact
    if n >= _logfact.size:
        size = max(n + 1, 2 * _logfact.size)
        table = np.zeros(size)
        table[1:] = np.cumsum(np.log(np.arange(1, size, dtype=float)))
        _logfact = table
    return _logfact[: n + 1]


def _continued_fraction(a, b, x):
    # Modified Lentz evaluation of the incomplete Beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NonConvergence(
        f"incomplete Beta continued fraction did not converge in {MAX_ITER} "
        f"iterations (a={a}, b={b}, x={x})"
    )


def regularized_incomplete_beta(a, b, x):
    """Regularized incomplete Beta function ``I_x(a, b)``.

    This is the CDF of a Beta(a, b) variable evaluated at ``x``. The
    continued fraction converges fast for ``x < (a + 1) / (a + b + 2)``;
    on the other side the reflection ``I_x(a, b) = 1 - I_{1-x}(b, a)`` is
    used instead.

    Parameters
    ----------
    a, b : float
        Shape parameters, both strictly positive.
    x : float
        Evaluation point in ``[0, 1]``.

    Raises
    ------
    ValueError
        If the arguments are outside the domain.
    NonConvergence
        If the continued fraction needs more than 500 iterations.
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        value = math.exp(log_front) * _continued_fraction(a, b, x) / a
    else:
        value = 1.0 - math.exp(log_front) * _continued_fraction(b, a, 1.0 - x) / b
    return min(1.0, max(0.0, value))
