"""Population functionals of a Pmf, computed by direct summation over the support.

Everything here is a pure function of an explicit finite distribution:
Shannon entropy, the variance of the log-probability, absolute central
moments of the linearization variable ``T = -ln p(X) - H``, exponential
moments of ``|T|/sigma``, Lindeberg truncation residuals, the
Berry-Esseen bound shape, the moderate-deviation summability value, and
the Hoeffding tail bound.  Sums use exact (Shewchuk) float summation;
the moderate-deviation value is evaluated in log space.

Unknown absolute constants in the bound shapes are fixed to 1: the
Monte Carlo layer only ever checks shapes (ratio boundedness and
monotone trends), never constants.  All entropies are in nats.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .alphabet import Pmf

# Variance this close to zero is rounding noise from a constant log-probability;
# clamp to exactly 0 and treat the distribution as degenerate.
_DEGENERATE_SIGMA2_TOL = 1e-14


class DegenerateVarianceError(ValueError):
    """An operation that divides by sigma was given a zero-variance Pmf."""


def _fsum(values: np.ndarray) -> float:
    return math.fsum(values.tolist())


@dataclass(frozen=True)
class PopulationSummary:
    """Exact entropy and log-probability variance of a Pmf (nats / nats^2)."""

    entropy: float
    sigma2: float
    sigma: float
    size: int

    @property
    def degenerate(self) -> bool:
        return self.sigma2 == 0.0


@dataclass(frozen=True)
class MdpSchedule:
    """Moderate-deviation scale ``b_n = n^rho`` plus the event parameters.

    ``0 < rho < 1/2`` keeps ``b_n -> infinity`` while ``b_n/sqrt(n) -> 0``.
    ``r = 0`` is allowed as the trivial boundary (exceedance probability 1).
    """

    rho: float
    epsilon: float
    r: float

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 0.5:
            raise ValueError(f"rho must lie in (0, 1/2), got {self.rho}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.r < 0.0:
            raise ValueError(f"threshold r must be >= 0, got {self.r}")

    def scale(self, n: int) -> float:
        """The deviation scale b_n evaluated at sample size n."""
        return float(n) ** self.rho


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    return delta


def _require_positive(name: str, value: float) -> None:
    if not value > 0.0:
        raise ValueError(f"{name} must be > 0, got {value}")


def entropy(pmf: Pmf) -> float:
    """Shannon entropy ``-sum p ln p`` in nats."""
    p = pmf.probs
    return -_fsum(p * np.log(p))


def population_summary(pmf: Pmf) -> PopulationSummary:
    """Entropy plus the variance of ``ln p(X)``.

    The variance is evaluated in centered form ``sum p (ln p + H)^2``,
    algebraically equal to ``sum p ln^2 p - (sum p ln p)^2`` but free of
    the cancellation that makes the raw form noisy near zero; values
    below 1e-14 are rounding residue of a constant log-probability and
    clamp to exactly 0 (degenerate).
    """
    p = pmf.probs
    logp = np.log(p)
    h = -_fsum(p * logp)
    centered = logp + h
    sigma2 = _fsum(p * centered * centered)
    if sigma2 < _DEGENERATE_SIGMA2_TOL:
        sigma2 = 0.0
    return PopulationSummary(entropy=h, sigma2=sigma2, sigma=math.sqrt(sigma2), size=pmf.size)


def _require_sigma(pmf: Pmf) -> PopulationSummary:
    pop = population_summary(pmf)
    if pop.degenerate:
        raise DegenerateVarianceError(
            "degenerate variance: ln p(X) is constant (uniform distribution)"
        )
    return pop


def abs_central_moment(pmf: Pmf, delta: float) -> float:
    """``E|T|^{2+delta}`` where ``T = -ln p(X) - H`` (exact law of T).

    ``T`` takes the value ``-ln p_i - H`` with probability ``p_i``, so the
    moment is a direct sum over the support.  ``delta = 0`` recovers the
    variance ``sigma^2`` exactly.
    """
    delta = _check_delta(delta)
    p = pmf.probs
    logp = np.log(p)
    h = -_fsum(p * logp)
    t = np.abs(logp + h)
    return _fsum(p * t ** (2.0 + delta))


def split_moment_bound(pmf: Pmf, delta: float) -> float:
    """Two-term moment bound ``sum p |ln p|^{2+delta} + H^{2+delta}``.

    Obtained from the split ``|T| <= |ln p(X)| + H`` with both pieces'
    constants set to 1.  The power-mean inequality gives the explicit
    sandwich ``abs_central_moment <= 2^{1+delta} * split_moment_bound``.
    """
    delta = _check_delta(delta)
    p = pmf.probs
    logp = np.log(p)
    h = -_fsum(p * logp)
    return _fsum(p * np.abs(logp) ** (2.0 + delta)) + h ** (2.0 + delta)


def exp_moment(pmf: Pmf, delta: float) -> float:
    """Exact exponential moment ``E exp(delta |T| / sigma)``.

    Requires ``sigma > 0``; may overflow to ``inf`` for large ``delta``.
    """
    _require_positive("delta", delta)
    pop = _require_sigma(pmf)
    p = pmf.probs
    t = np.abs(np.log(p) + pop.entropy)
    with np.errstate(over="ignore"):
        return _fsum(p * np.exp(delta * t / pop.sigma))


def exp_moment_envelope(pmf: Pmf, delta: float) -> float:
    """Closed-form envelope ``[sum p^{1 - delta/sigma}] * exp(delta H / sigma)``.

    Always >= :func:`exp_moment` (triangle inequality on ``|T|``).  When
    ``delta/sigma >= 1`` the power sum has a nonpositive exponent and can
    blow up with the alphabet; a warning is issued but the finite-K value
    is still returned.
    """
    _require_positive("delta", delta)
    pop = _require_sigma(pmf)
    ratio = delta / pop.sigma
    if ratio >= 1.0:
        warnings.warn(
            f"delta/sigma = {ratio:.6g} >= 1: the power sum is not controlled "
            "uniformly in the alphabet size",
            RuntimeWarning,
            stacklevel=2,
        )
    p = pmf.probs
    with np.errstate(over="ignore"):
        power_sum = _fsum(p ** (1.0 - ratio))
        return power_sum * math.exp(ratio * pop.entropy)


def lindeberg_residual(pmf: Pmf, n: int, epsilon: float) -> float:
    """Truncated second-moment ratio ``sigma^-2 E[T^2; |T| > eps sqrt(n) sigma]``.

    Lies in [0, 1]; nonincreasing in n (the truncation set shrinks); equals
    1 at threshold 0 and 0 once no symbol exceeds the threshold.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    pop = _require_sigma(pmf)
    p = pmf.probs
    centered = np.log(p) + pop.entropy
    threshold = epsilon * math.sqrt(n) * pop.sigma
    mask = np.abs(centered) > threshold
    if not np.any(mask):
        return 0.0
    # Same expression shape as the sigma2 sum, so a full mask gives exactly 1.
    tail = _fsum(p[mask] * centered[mask] * centered[mask])
    return tail / pop.sigma2


def berry_esseen_shape(pmf: Pmf, n: int, delta: float) -> float:
    """Constant-free normal-approximation bound shape.

    ``E|T|^{2+delta} / (n^{delta/2} sigma^{2+delta}) + sqrt(K / (sqrt(n) sigma))``
    with the unknown absolute constant set to 1.  Strictly decreasing in n
    for a fixed Pmf (for ``delta = 0`` the first term is identically 1).
    """
    delta = _check_delta(delta)
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    pop = _require_sigma(pmf)
    moment = abs_central_moment(pmf, delta)
    term_clt = moment / (float(n) ** (delta / 2.0) * pop.sigma ** (2.0 + delta))
    term_alphabet = math.sqrt(pmf.size / (math.sqrt(n) * pop.sigma))
    return term_clt + term_alphabet


def mdp_condition(pmf: Pmf, n: int, schedule: MdpSchedule) -> float:
    """Summability value ``b_n^-2 ln sum_i exp(-2 eps sqrt(n) b_n sigma p_i^2)``.

    Evaluated by log-sum-exp so alphabet-size 10^6 and exponents down to
    -10^6 neither overflow nor underflow.  Callers check divergence to
    -infinity along an n-grid; a single value carries no information.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    pop = _require_sigma(pmf)
    b = schedule.scale(n)
    exponents = -2.0 * schedule.epsilon * math.sqrt(n) * b * pop.sigma * pmf.probs**2
    peak = float(exponents.max())
    log_sum = peak + math.log(_fsum(np.exp(exponents - peak)))
    return log_sum / b**2


def hoeffding_tail(n: int, r: float, range_sq_sum: float) -> float:
    """Two-sided bounded-difference tail bound ``2 exp(-2 n^2 r^2 / sum (b_i-a_i)^2)``.

    For n indicator variables the squared ranges sum to n, giving
    ``2 exp(-2 n r^2)``.  Vacuous (>= 1) whenever the exponent is small.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    _require_positive("r", r)
    _require_positive("range_sq_sum", range_sq_sum)
    return 2.0 * math.exp(-2.0 * n * n * r * r / range_sq_sum)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))
