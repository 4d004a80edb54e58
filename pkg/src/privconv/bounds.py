"""Computable optimality yardsticks for private convolution.

The central quantity is a spectral lower bound on the achievable MSE of
any (epsilon, delta)-private convolution: rank the Fourier magnitudes
of the filter in decreasing order, then

    spec_lb(h) = max_K K^2 |h_hat|_(K-1)^2 / (N log^2 N),   log base 2.

Any private mechanism must incur MSE on the order of
spec_lb(h) * ln(1/delta) / eps^2, and the per-coefficient mechanism's
closed-form MSE exceeds it by at most a polylog(N) factor; the ratio is
computable and reported by ``optimality_ratio``.

Degenerate logarithms (N = 1, support size 1) are floored at 1 so every
ratio stays finite; this only loosens bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .mechanisms import (
    MECHANISM_NAMES,
    PrivacyParams,
    _support_mask,
    mechanism_theoretical_mse,
)
from .transforms import BooleanCube, Cyclic, RealSequence, Spectrum, _fwht, dft

__all__ = [
    "SpectralProfile",
    "HarmonicBoundReport",
    "CompressibilityReport",
    "spec_lb",
    "harmonic_bound_check",
    "optimality_ratio",
    "compressibility_bounds",
    "theoretical_mse",
]


@dataclass(frozen=True)
class SpectralProfile:
    """Fourier magnitudes of a filter, sorted descending."""

    sorted_magnitudes: np.ndarray
    n: int
    support_size: int

    def __post_init__(self):
        mags = np.asarray(self.sorted_magnitudes, dtype=np.float64)
        if mags.ndim != 1 or mags.size != self.n or self.n < 1:
            raise ValueError("sorted_magnitudes must be a vector of length n >= 1")
        if np.any(mags < 0) or not np.all(np.isfinite(mags)):
            raise ValueError("magnitudes must be finite and nonnegative")
        if np.any(np.diff(mags) > 0):
            raise ValueError("magnitudes must be nonincreasing")
        if not 0 <= self.support_size <= self.n:
            raise ValueError("support_size out of range")
        object.__setattr__(self, "sorted_magnitudes", mags)

    @classmethod
    def from_sequence(cls, h: RealSequence) -> "SpectralProfile":
        group = h.group
        if isinstance(group, Cyclic):
            mags = dft(h).magnitudes
        else:
            mags = np.abs(_fwht(h.values)) / np.sqrt(group.n)
        mags = np.sort(mags)[::-1].copy()
        return cls(mags, group.n, int(np.count_nonzero(_support_mask(mags))))

    @property
    def l1(self) -> float:
        """l1 norm of the Fourier coefficients over the support."""
        return float(self.sorted_magnitudes[: self.support_size].sum())


def _profile(h: Union[RealSequence, SpectralProfile]) -> SpectralProfile:
    if isinstance(h, SpectralProfile):
        return h
    return SpectralProfile.from_sequence(h)


def _log2_floored(m: int) -> float:
    return max(math.log2(m), 1.0) if m >= 1 else 1.0


def spec_lb(h: Union[RealSequence, SpectralProfile]) -> float:
    """max_K K^2 |h_hat|_(K-1)^2 / (N log^2 N), the spectral MSE lower bound.

    Scales as the squared filter (spec_lb(a*h) = a^2 spec_lb(h)) and
    depends only on the multiset of Fourier magnitudes.
    """
    prof = _profile(h)
    mags = prof.sorted_magnitudes
    n = prof.n
    k = np.arange(1, n + 1, dtype=np.float64)
    return float(np.max(k**2 * mags**2) / (n * _log2_floored(n) ** 2))


def _harmonic_number(m: int) -> float:
    return float(np.sum(1.0 / np.arange(1, m + 1)))


@dataclass(frozen=True)
class HarmonicBoundReport:
    """Both sides of ||h_hat||_1 <= H_|I| sqrt(N) log N sqrt(spec_lb(h))."""

    l1_fourier: float
    bound: float
    ratio: float
    holds: bool
    support_size: int
    spec_lb: float


def harmonic_bound_check(h: Union[RealSequence, SpectralProfile]) -> HarmonicBoundReport:
    """Check the harmonic-number bound tying the l1 Fourier norm to spec_lb.

    Writing m = |I| and H_m for the m-th harmonic number, every filter
    satisfies ||h_hat||_1 <= H_m sqrt(N) log N sqrt(spec_lb(h)): rank r
    contributes |h_hat|_(r) <= sqrt(N log^2 N spec_lb) / (r + 1), and
    summing gives the harmonic factor.
    """
    prof = _profile(h)
    lb = spec_lb(prof)
    lhs = prof.l1
    rhs = _harmonic_number(prof.support_size) * math.sqrt(prof.n) * _log2_floored(prof.n) * math.sqrt(lb)
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0 else math.inf
    # the derivation is exact, so only float roundoff can push lhs past rhs
    holds = lhs <= rhs * (1 + 1e-12)
    return HarmonicBoundReport(lhs, rhs, ratio, holds, prof.support_size, lb)


def optimality_ratio(h: Union[RealSequence, SpectralProfile], privacy: PrivacyParams) -> float:
    """Per-coefficient mechanism MSE over the lower bound's polylog envelope.

    Returns [4 ln(1/delta) ||h_hat||_1^2 / (eps^2 N)] divided by
    [spec_lb(h) log^2 N log^2 |I| ln(1/delta) / eps^2]; the privacy
    factors cancel, and the harmonic bound caps the result at
    4 H_|I|^2 / log^2 |I|, which is bounded for all filter lengths.
    """
    prof = _profile(h)
    if prof.support_size == 0:
        raise ValueError("optimality ratio undefined for the zero filter")
    lb = spec_lb(prof)
    numerator = 4.0 * privacy.ln_inv_delta * prof.l1**2 / (privacy.epsilon**2 * prof.n)
    denominator = (
        lb
        * _log2_floored(prof.n) ** 2
        * _log2_floored(prof.support_size) ** 2
        * privacy.ln_inv_delta
        / privacy.epsilon**2
    )
    return numerator / denominator


@dataclass(frozen=True)
class CompressibilityReport:
    """Decay check |h_hat|_(i)^2 <= c/(i+1)^p plus the l1 norm bounds it implies.

    ``l1_bound`` carries sqrt(c), the scale the decay predicate actually
    implies; ``stated_l1_bound`` repeats the computation with factor c in
    place of sqrt(c), a commonly quoted variant reported for comparison
    (it can fail for c < 1).  A filter passing
    ``predicate_holds`` and ``l1_bound_holds`` admits the per-coefficient
    mechanism MSE cap ``fourier_mse_cap``.
    """

    n: int
    c: float
    p: float
    predicate_holds: bool
    first_violation: Optional[int]
    l1_fourier: float
    l1_bound: float
    l1_bound_holds: bool
    stated_l1_bound: float
    stated_l1_bound_holds: bool

    def fourier_mse_cap(self, privacy: PrivacyParams) -> float:
        """4 ln(1/delta) l1_bound^2 / (eps^2 N), the MSE the decay guarantees."""
        return 4.0 * privacy.ln_inv_delta * self.l1_bound**2 / (privacy.epsilon**2 * self.n)


def _l1_decay_bound(root: float, p: float, n: int) -> float:
    """Bound sum_{i<N} root/(i+1)^{p/2} by 1 + integral of t^{-p/2}."""
    if p == 2.0:
        return root * (1.0 + math.log(n))
    if p > 2.0:
        return root * p / (p - 2.0)
    return root * (1.0 + (n ** (1.0 - p / 2.0) - 1.0) / (1.0 - p / 2.0))


def compressibility_bounds(h: Union[RealSequence, SpectralProfile], c: float, p: float) -> CompressibilityReport:
    """Check (c, p) spectral decay and the l1 norm bound it implies.

    The predicate compares sorted squared magnitudes against c/(i+1)^p
    with 1e-9 relative slack so constructions meeting the envelope with
    equality pass.  For p > 2 the l1 bound is N-free; p = 2 picks up a
    log factor; 1 < p < 2 keeps the truncated integral.
    """
    c = float(c)
    p = float(p)
    if not (math.isfinite(c) and c > 0):
        raise ValueError("c must be positive")
    if not (math.isfinite(p) and p > 1):
        raise ValueError("p must exceed 1")
    prof = _profile(h)
    mags = prof.sorted_magnitudes
    n = prof.n
    envelope = c / np.arange(1, n + 1, dtype=np.float64) ** p
    violations = np.flatnonzero(mags**2 > envelope * (1 + 1e-9))
    first = int(violations[0]) if violations.size else None
    l1 = float(mags.sum())
    bound = _l1_decay_bound(math.sqrt(c), p, n)
    stated = _l1_decay_bound(c, p, n)
    return CompressibilityReport(
        n=n,
        c=c,
        p=p,
        predicate_holds=first is None,
        first_violation=first,
        l1_fourier=l1,
        l1_bound=bound,
        l1_bound_holds=l1 <= bound * (1 + 1e-9),
        stated_l1_bound=stated,
        stated_l1_bound_holds=l1 <= stated * (1 + 1e-9),
    )


def theoretical_mse(mechanism_name: str, h: RealSequence, privacy: PrivacyParams, neighbor_p: int = 1) -> float:
    """Closed-form MSE dispatcher; agrees exactly with MechanismResult.theoretical_mse."""
    if mechanism_name not in MECHANISM_NAMES:
        raise ValueError(f"unknown mechanism {mechanism_name!r}; expected one of {MECHANISM_NAMES}")
    return mechanism_theoretical_mse(mechanism_name, h, privacy, neighbor_p=neighbor_p)
