"""Reproducible multinomial count sampling with two independent samplers.

The randomness core is a counter-mode splitmix64 stream: output ``i`` of a
stream is a pure avalanche function of ``(stream_seed, i)``, so batched
(numpy) and scalar (Python int) draws produce bit-identical values, any
replicate can be regenerated in isolation, and per-replicate streams are
derived from ``(master_seed, stream_index)`` without shared state.  The
generator is specified by its algorithm here rather than taken from a
library so results are stable across platforms and numpy versions.

Two samplers produce multinomial count vectors and cross-validate each
other:

* categorical — n i.i.d. symbol draws through a Vose alias table
  (O(K) build, O(1) per draw);
* multinomial — the conditional-binomial chain, cell i given the earlier
  cells is Binomial(remaining_n, p_i / remaining_mass), O(K) per
  replicate independent of n.

The binomial sampler inside the chain uses CDF inversion for
``n*p <= 30`` and Hormann's BTRS transformed rejection above; both are
exact samplers, not approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np

from .alphabet import Pmf

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
# Odd multiplier keeps stream-index mixing injective, so derived stream
# seeds are collision-free across all indices for a fixed master seed.
_STREAM_MULT = 0xD1342543DE82EF95
_STREAM_SALT = 0x632BE59BD9B4E019

# Counts are held in int64; capping n below 2^62 keeps n^2 terms downstream
# of the estimator inside float64/int64 range.
MAX_TOTAL = 1 << 62

_INVERSION_CUTOFF = 30.0

_U64_11 = np.uint64(11)
_U64_27 = np.uint64(27)
_U64_30 = np.uint64(30)
_U64_31 = np.uint64(31)
_TWO_NEG_53 = 2.0**-53


class SamplingError(RuntimeError):
    """Raised when a sampler cannot proceed; failures are never silent."""


def _mix64(z: int) -> int:
    """Scalar splitmix64 finalizer (avalanche bijection on 64-bit words)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized twin of :func:`_mix64` on uint64 arrays (wrapping arithmetic)."""
    z = (z ^ (z >> _U64_30)) * np.uint64(_MIX_A)
    z = (z ^ (z >> _U64_27)) * np.uint64(_MIX_B)
    return z ^ (z >> _U64_31)


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus a stream index; the derived stream seed is a pure function of both."""

    master_seed: int
    stream_index: int

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")


def derive_stream_seed(spec: SeedSpec) -> int:
    """Avalanche-mix (master_seed, stream_index) into a 64-bit stream seed.

    Distinct stream indices give distinct seeds for a fixed master seed:
    every step (odd-multiplier index scramble, xor, splitmix finalizer)
    is a bijection on 64-bit words.
    """
    h_master = _mix64((spec.master_seed + _GOLDEN) & _MASK64)
    h_index = _mix64((spec.stream_index * _STREAM_MULT + _STREAM_SALT) & _MASK64)
    return _mix64(h_master ^ h_index)


def derive_stream_seeds(master_seed: int, start: int, count: int) -> np.ndarray:
    """Batched :func:`derive_stream_seed` for indices ``start .. start+count-1``."""
    SeedSpec(master_seed, start)
    idx = np.arange(start, start + count, dtype=np.uint64)
    h_master = np.uint64(_mix64((master_seed + _GOLDEN) & _MASK64))
    h_index = _mix64_array(idx * np.uint64(_STREAM_MULT) + np.uint64(_STREAM_SALT))
    return _mix64_array(h_master ^ h_index)


class CounterRng:
    """Counter-mode splitmix64 uniform stream.

    Output ``i`` equals ``mix64(seed + (i+1) * golden)``; the scalar and
    batched paths advance the same counter and agree bit for bit.
    """

    __slots__ = ("_key", "_counter")

    def __init__(self, stream_seed: int):
        if not 0 <= stream_seed <= _MASK64:
            raise ValueError("stream_seed must be a 64-bit unsigned integer")
        self._key = int(stream_seed)
        self._counter = 0

    def uniform(self) -> float:
        """One double in [0, 1) with 53 random bits."""
        self._counter += 1
        z = _mix64(self._key + self._counter * _GOLDEN)
        return (z >> 11) * _TWO_NEG_53

    def uniforms(self, count: int) -> np.ndarray:
        """A batch of doubles in [0, 1)."""
        idx = np.arange(self._counter + 1, self._counter + count + 1, dtype=np.uint64)
        self._counter += count
        z = _mix64_array(np.uint64(self._key) + idx * np.uint64(_GOLDEN))
        return (z >> _U64_11).astype(np.float64) * _TWO_NEG_53


@dataclass(frozen=True, eq=False)
class CountVector:
    """Multinomial counts from n samples: the sufficient statistic for the estimator."""

    counts: np.ndarray
    total: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-d integer vector")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if not 1 <= self.total <= MAX_TOTAL:
            raise ValueError(f"total must lie in [1, 2^62], got {self.total}")
        if int(counts.sum()) != self.total:
            raise ValueError("counts must sum to the stated total")
        counts = counts.copy()
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def size(self) -> int:
        return int(self.counts.size)


class AliasTable:
    """Vose alias structure over a Pmf: O(K) construction, O(1) per draw."""

    def __init__(self, probs: np.ndarray):
        k = int(probs.size)
        scaled = np.asarray(probs, dtype=np.float64) * k
        self.size = k
        self._threshold = np.ones(k, dtype=np.float64)
        self._alias = np.arange(k, dtype=np.int64)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            self._threshold[s] = scaled[s]
            self._alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            if scaled[g] < 1.0:
                small.append(g)
            else:
                large.append(g)
        # Leftovers (either list) carry threshold 1 = always themselves.

    def draw(self, rng: CounterRng, count: int) -> np.ndarray:
        """Sample ``count`` symbol indices (two uniforms per draw)."""
        u_cell = rng.uniforms(count)
        u_flip = rng.uniforms(count)
        idx = np.minimum((u_cell * self.size).astype(np.int64), self.size - 1)
        return np.where(u_flip < self._threshold[idx], idx, self._alias[idx])


_ALIAS_CACHE: "WeakKeyDictionary[Pmf, AliasTable]" = WeakKeyDictionary()
_SUFFIX_CACHE: "WeakKeyDictionary[Pmf, np.ndarray]" = WeakKeyDictionary()
_DRAW_BATCH = 1 << 20


def _alias_table(pmf: Pmf) -> AliasTable:
    table = _ALIAS_CACHE.get(pmf)
    if table is None:
        table = AliasTable(pmf.probs)
        _ALIAS_CACHE[pmf] = table
    return table


def _suffix_mass(pmf: Pmf) -> np.ndarray:
    suffix = _SUFFIX_CACHE.get(pmf)
    if suffix is None:
        suffix = np.cumsum(pmf.probs[::-1])[::-1]
        suffix.flags.writeable = False
        _SUFFIX_CACHE[pmf] = suffix
    return suffix


def _check_total(n: int) -> None:
    if not 1 <= n <= MAX_TOTAL:
        raise ValueError(f"sample size must lie in [1, 2^62], got {n}")


def sample_counts_categorical(pmf: Pmf, n: int, seed: int) -> CountVector:
    """Count vector from n i.i.d. symbol draws through an alias table.

    The alias table is built once per Pmf and cached; sampling is O(1)
    per draw.  Deterministic given ``seed``.
    """
    _check_total(n)
    table = _alias_table(pmf)
    rng = CounterRng(seed)
    counts = np.zeros(pmf.size, dtype=np.int64)
    remaining = n
    while remaining > 0:
        batch = min(remaining, _DRAW_BATCH)
        counts += np.bincount(table.draw(rng, batch), minlength=pmf.size)
        remaining -= batch
    return CountVector(counts, n)


def sample_counts_multinomial(pmf: Pmf, n: int, seed: int) -> CountVector:
    """Count vector via the conditional-binomial chain, O(K) per replicate.

    Cell i given the earlier cells is Binomial(remaining_n, p_i / tail_i)
    where tail_i is the precomputed suffix mass.  Deterministic given
    ``seed``; raises :class:`SamplingError` if the remaining mass ever
    underflows while draws are still owed (never silently).
    """
    _check_total(n)
    probs = pmf.probs
    suffix = _suffix_mass(pmf)
    rng = CounterRng(seed)
    k = pmf.size
    counts = np.zeros(k, dtype=np.int64)
    remaining = n
    for i in range(k - 1):
        if remaining == 0:
            break
        tail = float(suffix[i])
        if tail <= 0.0:
            raise SamplingError(
                f"remaining mass underflowed to {tail!r} at cell {i} with "
                f"{remaining} draws outstanding"
            )
        p_cond = float(probs[i]) / tail
        if p_cond >= 1.0:
            counts[i] = remaining
            remaining = 0
        else:
            c = _binomial(remaining, p_cond, rng)
            counts[i] = c
            remaining -= c
    else:
        counts[k - 1] = remaining
        remaining = 0
    if remaining != 0:
        # for-else above assigns the last cell; reaching here means an early
        # break with remaining == 0, so nothing is outstanding.
        raise SamplingError("conditional-binomial chain left draws unassigned")
    return CountVector(counts, n)


def _binomial(n: int, p: float, rng: CounterRng) -> int:
    """Exact Binomial(n, p) draw: inversion for n*p <= 30, BTRS above."""
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    flipped = p > 0.5
    p_eff = 1.0 - p if flipped else p
    if n * p_eff <= _INVERSION_CUTOFF:
        x = _binomial_inversion(n, p_eff, rng.uniform())
    else:
        x = _binomial_btrs(n, p_eff, rng)
    return n - x if flipped else x


def _binomial_inversion(n: int, p: float, u: float) -> int:
    """CDF inversion by the stable two-term recurrence; needs n*p small."""
    q = 1.0 - p
    s = p / q
    a = (n + 1) * s
    prob = q**n
    cdf = prob
    x = 0
    while u > cdf and x < n:
        x += 1
        prob *= a / x - s
        cdf += prob
    return x


def _binomial_btrs(n: int, p: float, rng: CounterRng) -> int:
    """Hormann's BTRS transformed-rejection binomial sampler.

    Valid for p <= 1/2 and n*p >= 10 (callers switch to inversion well
    before that).  The squeeze step accepts ~86% of proposals without
    evaluating logs.
    """
    q = 1.0 - p
    spq = math.sqrt(n * p * q)
    b = 1.15 + 2.53 * spq
    a = -0.0873 + 0.0248 * b + 0.01 * p
    c = n * p + 0.5
    v_r = 0.92 - 4.2 / b
    alpha = (2.83 + 5.1 / b) * spq
    lpq = math.log(p / q)
    m = math.floor((n + 1) * p)
    h = math.lgamma(m + 1) + math.lgamma(n - m + 1)
    while True:
        u = rng.uniform() - 0.5
        v = rng.uniform()
        us = 0.5 - abs(u)
        if us <= 0.0:
            continue
        k = math.floor((2.0 * a / us + b) * u + c)
        if k < 0 or k > n:
            continue
        if us >= 0.07 and v <= v_r:
            return int(k)
        log_accept = h - math.lgamma(k + 1) - math.lgamma(n - k + 1) + (k - m) * lpq
        if v <= 0.0:
            return int(k)
        if math.log(v * alpha / (a / (us * us) + b)) <= log_accept:
            return int(k)
