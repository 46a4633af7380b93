"""Finite-alphabet probability vectors and the parametric families used throughout.

A :class:`Pmf` is a strictly positive probability vector over symbols
``1..K`` (full support; zero-probability symbols are rejected).  Three
heavy-to-light parametric families are provided, each defined by raw
weights that are normalized by their recorded sum:

* harmonic        ``w_i = 1/i``            for ``i = 1..K``
* expgeom         ``w_i = e^{-i}``         for ``i = 1..K``
* logharmonic     ``w_i = 1/(i ln i)``     for ``i = 2..K+1``

plus ``uniform`` and ``custom`` (externally supplied vectors).  The
logharmonic family is indexed internally from ``i = 2`` (the weight is
undefined at ``i = 1``) but exposed as positions ``1..K`` so that count
vectors keep a uniform contract across families.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

HARMONIC = "harmonic"
EXP_GEOMETRIC = "expgeom"
LOG_HARMONIC = "logharmonic"
UNIFORM = "uniform"
CUSTOM = "custom"

FAMILY_KINDS = (HARMONIC, EXP_GEOMETRIC, LOG_HARMONIC, UNIFORM, CUSTOM)

# Construction keeps the vector this close to a true simplex point; external
# inputs may drift up to _INPUT_SUM_TOL before renormalization.
_CONSTRUCTED_SUM_TOL = 1e-12
_INPUT_SUM_TOL = 1e-9


class PmfError(ValueError):
    """A probability vector violates the full-support/normalization contract."""


def _fsum(values: np.ndarray) -> float:
    """Exact (Shewchuk) summation of a float64 array."""
    return math.fsum(values.tolist())


@dataclass(frozen=True, eq=False)
class Pmf:
    """Strictly positive probability vector over symbols ``1..K``.

    Attributes
    ----------
    probs : np.ndarray
        Read-only float64 vector; every entry > 0, summing to 1 within
        1e-12 absolute.
    normalizer : float or None
        Sum of the raw family weights when built from a parametric
        family, absent (None) for externally supplied vectors.
    """

    probs: np.ndarray
    normalizer: float | None = None

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise PmfError("probability vector must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(probs)):
            raise PmfError("probability vector contains non-finite entries")
        if np.any(probs <= 0.0):
            raise PmfError("full support required: every probability must be > 0")
        total = _fsum(probs)
        if abs(total - 1.0) > _CONSTRUCTED_SUM_TOL:
            raise PmfError(
                f"probabilities sum to {total!r}, outside 1 +/- {_CONSTRUCTED_SUM_TOL}"
            )
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class FamilySpec:
    """A family kind plus its alphabet size (and, for custom, the vector itself)."""

    kind: str
    size: int = 0
    custom_probs: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise PmfError(f"unknown family kind {self.kind!r}; expected one of {FAMILY_KINDS}")
        if self.kind == CUSTOM:
            if not self.custom_probs:
                raise PmfError("custom family requires custom_probs")
            if self.size == 0:
                object.__setattr__(self, "size", len(self.custom_probs))
            elif self.size != len(self.custom_probs):
                raise PmfError("custom family size disagrees with custom_probs length")
        else:
            if self.custom_probs is not None:
                raise PmfError(f"{self.kind} family does not take custom_probs")
            if self.size < 1:
                raise PmfError(f"alphabet size must be >= 1, got {self.size}")
            if self.kind == LOG_HARMONIC and self.size < 2:
                raise PmfError("logharmonic family requires size >= 2")


def family_weights(kind: str, size: int) -> np.ndarray:
    """Raw (unnormalized) weights of a parametric family."""
    if kind == HARMONIC:
        return 1.0 / np.arange(1, size + 1, dtype=np.float64)
    if kind == EXP_GEOMETRIC:
        return np.exp(-np.arange(1, size + 1, dtype=np.float64))
    if kind == LOG_HARMONIC:
        # Exposed positions 1..K map to internal indices 2..K+1.
        idx = np.arange(2, size + 2, dtype=np.float64)
        return 1.0 / (idx * np.log(idx))
    if kind == UNIFORM:
        return np.ones(size, dtype=np.float64)
    raise PmfError(f"family {kind!r} has no closed-form weights")


def build_family(spec: FamilySpec) -> Pmf:
    """Construct the Pmf of a family, recording its weight normalizer.

    Raises
    ------
    PmfError
        On invalid sizes, on custom vectors violating the Pmf contract,
        and when family weights underflow to exactly zero (expgeom does
        past size ~745; such entries are rejected rather than zeroed).
    """
    if spec.kind == CUSTOM:
        return validate_pmf(spec.custom_probs)
    weights = family_weights(spec.kind, spec.size)
    if np.any(weights == 0.0):
        first = int(np.argmax(weights == 0.0)) + 1
        raise PmfError(
            f"{spec.kind} weights underflow to zero at position {first}; "
            f"reduce the alphabet size (full support is required)"
        )
    normalizer = _fsum(weights)
    return Pmf(weights / normalizer, normalizer=normalizer)


def validate_pmf(probs: Sequence[float] | Iterable[float]) -> Pmf:
    """Validate an externally supplied vector and renormalize it exactly.

    Entries must all be > 0 and sum to 1 within 1e-9; the vector is then
    divided by its exact sum so the stored Pmf meets the 1e-12 contract.
    """
    arr = np.asarray(list(probs), dtype=np.float64)
    if arr.size == 0:
        raise PmfError("empty probability vector")
    if not np.all(np.isfinite(arr)):
        raise PmfError("probability vector contains non-finite entries")
    if np.any(arr <= 0.0):
        raise PmfError("full support required: every probability must be > 0")
    total = _fsum(arr)
    if abs(total - 1.0) > _INPUT_SUM_TOL:
        raise PmfError(f"probabilities sum to {total!r}, outside 1 +/- {_INPUT_SUM_TOL}")
    return Pmf(arr / total)


def pmf_from_text(path: str | Path) -> Pmf:
    """Load a custom distribution from a one-probability-per-line text file."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    values = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        try:
            values.append(float(text))
        except ValueError as exc:
            raise PmfError(f"{path}:{lineno}: not a number: {text!r}") from exc
    return validate_pmf(values)


def pmf_from_json(path: str | Path) -> Pmf:
    """Load a custom distribution from a JSON array of probabilities."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise PmfError(f"{path}: expected a JSON array of probabilities")
    return validate_pmf(data)


def load_custom_pmf(path: str | Path) -> Pmf:
    """Dispatch on file suffix: .json -> JSON array, anything else -> text lines."""
    p = Path(path)
    if p.suffix.lower() == ".json":
        return pmf_from_json(p)
    return pmf_from_text(p)


def parse_family(text: str) -> FamilySpec:
    """Parse a CLI family string such as ``harmonic:1000`` or ``custom:probs.json``."""
    kind, sep, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind not in FAMILY_KINDS:
        raise PmfError(f"unknown family kind {kind!r}; expected one of {FAMILY_KINDS}")
    if not sep or not arg:
        raise PmfError(f"family spec {text!r} must look like 'kind:K' (or 'custom:path')")
    if kind == CUSTOM:
        pmf = load_custom_pmf(arg.strip())
        return FamilySpec(CUSTOM, size=pmf.size, custom_probs=tuple(pmf.probs.tolist()))
    try:
        size = int(arg)
    except ValueError as exc:
        raise PmfError(f"family spec {text!r}: alphabet size must be an integer") from exc
    return FamilySpec(kind, size=size)
