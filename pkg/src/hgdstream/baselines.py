"""Comparison learners compatible with strict one-pass streaming.

All baselines reduce to weighted gradient steps: plain descent (weight 1),
class-dependent cost multipliers, and Poisson-resampling wrappers that apply
a drawn number of plain steps per instance.  Method identifiers accepted by
the benchmark config: ogd, csogd-cost, csogd-sum, our, oor, ohr, hgd,
hgd-dynamic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import apply_step
from .exceptions import ConfigError

METHOD_IDS = ("ogd", "csogd-cost", "csogd-sum", "our", "oor", "ohr", "hgd", "hgd-dynamic")

AUTO = "auto"


@dataclass(frozen=True)
class FixedCosts:
    """Constant per-class cost multipliers; c_p + c_n = 1.

    Multipliers are scaled by 2 so the symmetric scheme (0.5, 0.5) reduces
    exactly to plain descent.
    """

    c_p: float = 0.95
    c_n: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.c_p < 1.0 and 0.0 < self.c_n < 1.0):
            raise ConfigError("fixed costs must lie in (0, 1)")
        if abs(self.c_p + self.c_n - 1.0) > 1e-12:
            raise ConfigError("fixed costs must sum to 1")

    def multiplier(self, label, counts):
        return 2.0 * self.c_p if label > 0 else 2.0 * self.c_n


@dataclass(frozen=True)
class SumCosts:
    """Frequency-inverse cost multipliers n_c / pi_c with running fractions."""

    n_p: float = 0.5
    n_n: float = 0.5

    def __post_init__(self):
        if self.n_p <= 0.0 or self.n_n <= 0.0:
            raise ConfigError("sum costs must be positive")

    def multiplier(self, label, counts):
        n_neg, n_pos = counts
        total = n_neg + n_pos
        if n_neg == 0 or n_pos == 0:
            return 1.0  # warm-up fallback
        if label > 0:
            return self.n_p * total / n_pos
        return self.n_n * total / n_neg


@dataclass(frozen=True)
class ResampleScheme:
    """Poisson resampling rates; "auto" derives a rate from the running IR.

    Under: majority instances are kept with Poisson(rate_major) repeats
    (rate < 1 drops most); Over: minority instances repeat Poisson(rate_minor)
    times.  A class without a rate gets exactly one plain step.  Note that a
    rate of 1.0 is not the identity: Poisson(1) draws 0, 2, 3, ... repeats
    with nonzero probability.
    """

    rate_major: object = None  # None, "auto", or a positive float
    rate_minor: object = None

    def __post_init__(self):
        for r in (self.rate_major, self.rate_minor):
            if r is None or r == AUTO:
                continue
            if not isinstance(r, (int, float)) or r <= 0.0:
                raise ConfigError(f"resampling rate must be positive or 'auto', got {r!r}")

    def rate_for(self, label, counts):
        """Poisson rate for this instance, or None for a single plain step."""
        n_neg, n_pos = counts
        if label > 0:
            r = self.rate_minor
            if r == AUTO:
                if n_neg == 0 or n_pos == 0:
                    return None  # warm-up: behave like plain descent
                return n_neg / n_pos
        else:
            r = self.rate_major
            if r == AUTO:
                if n_neg == 0 or n_pos == 0:
                    return None
                return n_pos / n_neg
        return r


def under_scheme(rate=AUTO):
    return ResampleScheme(rate_major=rate)


def over_scheme(rate=AUTO):
    return ResampleScheme(rate_minor=rate)


def hybrid_scheme(rate_major=AUTO, rate_minor=AUTO):
    return ResampleScheme(rate_major=rate_major, rate_minor=rate_minor)


def ogd_step(learner, instance, eta, loss_kind):
    """Plain online gradient descent: a weight-1 step, skipped at zero loss."""
    return apply_step(learner, instance, eta, 1.0, loss_kind)


def csogd_step(learner, instance, eta, loss_kind, scheme, counts=(0, 0)):
    """Cost-sensitive step: the scheme's class multiplier plays the weight."""
    alpha = scheme.multiplier(instance.label, counts)
    return apply_step(learner, instance, eta, alpha, loss_kind)


def poisson_repeat_count(rate, rng):
    """Number of repeats for one instance, drawn Poisson(rate)."""
    if rate <= 0.0:
        raise ConfigError(f"poisson rate must be positive, got {rate}")
    return int(rng.poisson(rate))


def resample_step(learner, instance, eta, loss_kind, scheme, counts, rng):
    """Poisson-resampled plain steps: k draws of the same instance.

    Returns (learner, k).  counts are the (negative, positive) instance
    counts seen so far, consulted by auto rates.
    """
    rate = scheme.rate_for(instance.label, counts)
    k = 1 if rate is None else poisson_repeat_count(rate, rng)
    for _ in range(k):
        apply_step(learner, instance, eta, 1.0, loss_kind)
    return learner, k
