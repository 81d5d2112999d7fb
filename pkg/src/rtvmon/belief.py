"""Markov belief over the number of true detections and the resulting
posterior of the false-positive rate.

After ``n`` detections the detector is in one of the states ``(n, k)``,
``k = 0..n``, where ``k`` counts true detections. Each new detection is
true with probability ``z`` and moves the chain to ``(n + 1, k + 1)``,
otherwise to ``(n + 1, k)``. Conditioned on ``k``, the false-positive
rate ``x`` has density ``(1 - x)**k * x**(n - k) / B(1 + n - k, 1 + k)``,
i.e. Beta(1 + n - k, 1 + k); the posterior is the mixture of these
components weighted by the belief.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import xlogy

from .errors import NonFiniteInput
from .special import log_factorials, regularized_incomplete_beta

Z_DEFAULT = 0.5


class ZMode(str, Enum):
    UNIT_PEAK = "unit_peak"
    LITERAL_DENSITY = "literal_density"


def truth_probability(residual_norm, sigma, mode=ZMode.UNIT_PEAK, z_default=Z_DEFAULT):
    """Probability that a detection is true given its prediction residual.

    ``unit_peak`` returns ``exp(-d**2 / (2 sigma**2))``. ``literal_density``
    returns the normalised Gaussian density at ``d``, clamped to ``[0, 1]``;
    it is only a probability when ``sigma >= 1/sqrt(2 pi)``. A missing
    residual (no prediction yet) maps to ``z_default``.
    """
    mode = ZMode(mode)
    if not (math.isfinite(sigma) and sigma > 0):
        raise NonFiniteInput(f"sigma must be finite and positive, got {sigma}")
    if residual_norm is None:
        return z_default
    if not math.isfinite(residual_norm):
        raise NonFiniteInput(f"residual must be finite, got {residual_norm}")
    z = math.exp(-(residual_norm**2) / (2.0 * sigma**2))
    if mode is ZMode.LITERAL_DENSITY:
        z = min(1.0, z / (sigma * math.sqrt(2.0 * math.pi)))
    return z


@dataclass(frozen=True, eq=False)
class BeliefState:
    n: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if probs.shape != (self.n + 1,):
            raise ValueError(f"belief over n={self.n} needs {self.n + 1} entries")

    def __eq__(self, other):
        if not isinstance(other, BeliefState):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.probs, other.probs)

    __hash__ = None


def belief_init():
    return BeliefState(0, np.ones(1))


def belief_update(b, z):
    """Advance the belief by one detection that is true with probability ``z``."""
    p = b.probs
    new = np.empty(b.n + 2)
    new[0] = (1.0 - z) * p[0]
    new[1:-1] = z * p[:-1] + (1.0 - z) * p[1:]
    new[-1] = z * p[-1]
    return BeliefState(b.n + 1, new)


def _component_params(b):
    k = np.arange(b.n + 1)
    # Beta(a, c) with a = 1 + (false count), c = 1 + (true count)
    return (b.n - k + 1).astype(float), (k + 1).astype(float)


def posterior_pdf(b, x):
    """Mixture density of the false-positive rate at ``x`` (scalar or array).

    Components are evaluated in log space so that ``n`` in the thousands
    does not underflow.
    """
    x = np.asarray(x, dtype=float)
    n = b.n
    k = np.arange(n + 1)
    lf = log_factorials(n + 1)
    log_norm = lf[n + 1] - lf[n - k] - lf[k]
    xs = x[..., None]
    log_comp = xlogy(k, 1.0 - xs) + xlogy(n - k, xs) + log_norm
    out = np.exp(log_comp) @ b.probs
    return float(out) if out.ndim == 0 else out


def _binomial_upper_tails(m, t):
    # tails[j] = P(Binomial(m, t) >= j), j = 0..m, summed from the top
    j = np.arange(m + 1)
    lf = log_factorials(m)
    log_pmf = lf[m] - lf[j] - lf[m - j] + j * math.log(t) + (m - j) * math.log1p(-t)
    return np.cumsum(np.exp(log_pmf)[::-1])[::-1]


def confidence(b, t_fp, method="tail"):
    """Posterior probability that the false-positive rate is at most ``t_fp``.

    Each Beta(1 + n - k, 1 + k) component contributes its CDF at ``t_fp``.
    The default ``"tail"`` method gets all ``n + 1`` CDF values at once from
    the identity ``I_t(a, c) = P(Binomial(a + c - 1, t) >= a)``; ``"cf"``
    calls the continued-fraction incomplete Beta for every component and is
    kept as a slow cross-check.
    """
    if not 0.0 <= t_fp <= 1.0:
        raise ValueError(f"t_fp must lie in [0, 1], got {t_fp}")
    if t_fp == 0.0:
        return 0.0
    if t_fp == 1.0:
        return 1.0
    if method == "tail":
        tails = _binomial_upper_tails(b.n + 1, t_fp)
        cdfs = tails[1:][::-1]
    elif method == "cf":
        a, c = _component_params(b)
        cdfs = np.array([regularized_incomplete_beta(ai, ci, t_fp) for ai, ci in zip(a, c)])
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(min(1.0, max(0.0, cdfs @ b.probs)))


def posterior_mean(b):
    a, _ = _component_params(b)
    return float(b.probs @ a) / (b.n + 2)


def posterior_variance(b):
    a, _ = _component_params(b)
    s = b.n + 2
    second = float(b.probs @ (a * (a + 1.0))) / (s * (s + 1))
    return max(0.0, second - posterior_mean(b) ** 2)
