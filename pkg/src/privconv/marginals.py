"""Generalized marginal queries as convolution over the boolean cube.

A database of n binary strings in {0,1}^d becomes a histogram x of
length 2^d.  For a disjunction of conjunctions f (a w-DNF, w = widest
clause), the cube convolution (x * f)(a) counts, for every shift a at
once, the rows c such that f(a XOR c) = 1.  With f a single all-negated
clause on attribute set S, entry a is the number of rows agreeing with
a on S: the full table of |S|-way marginals.

Privatizing the convolution reuses the cyclic machinery with the
Walsh-Hadamard transform in place of the DFT.  The WHT is real, so each
coefficient takes a single real Laplace draw and the idealized
per-coefficient accounting is exact here.

Attribute i (1-based) maps to bit i-1 of the cube index, so attribute 1
is the least significant bit; a row string "011" means attribute 1 is
'0', attribute 2 is '1', attribute 3 is '1' and lands at index 6.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .mechanisms import MechanismResult, PrivacyParams, _single
from .noise import Seed
from .transforms import BooleanCube, RealSequence, _fwht

__all__ = [
    "WDnf",
    "CubeHistogram",
    "MAX_DEFAULT_DIMENSION",
    "wdnf_to_sequence",
    "marginal_query",
    "private_marginals",
    "spectral_tail",
]

# 2^24 float64 values is ~128 MB; anything larger needs an explicit opt-in.
MAX_DEFAULT_DIMENSION = 24


@dataclass(frozen=True)
class WDnf:
    """A DNF formula over d binary attributes.

    ``clauses`` is a tuple of clauses; each clause is a tuple of
    (attribute, negated) literals with attributes numbered 1..d.  The
    width w is the largest clause length.
    """

    d: int
    clauses: tuple

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise ValueError("d must be a positive integer")
        clauses = tuple(tuple((int(v), bool(neg)) for v, neg in clause) for clause in self.clauses)
        if not clauses:
            raise ValueError("DNF needs at least one clause")
        for clause in clauses:
            if not clause:
                raise ValueError("clauses must be nonempty")
            attrs = [v for v, _ in clause]
            if len(set(attrs)) != len(attrs):
                raise ValueError("duplicate attribute within a clause")
            for v in attrs:
                if not 1 <= v <= self.d:
                    raise ValueError(f"attribute {v} outside [1, {self.d}]")
        object.__setattr__(self, "clauses", clauses)

    @property
    def width(self) -> int:
        return max(len(clause) for clause in self.clauses)

    @classmethod
    def from_json_dict(cls, data: dict) -> "WDnf":
        if not isinstance(data, dict) or "d" not in data or "clauses" not in data:
            raise ValueError('w-DNF JSON must carry "d" and "clauses"')
        clauses = []
        for clause in data["clauses"]:
            lits = []
            for lit in clause:
                if not isinstance(lit, dict) or "var" not in lit:
                    raise ValueError('each literal must be an object with "var" (and optional "neg")')
                lits.append((int(lit["var"]), bool(lit.get("neg", False))))
            clauses.append(tuple(lits))
        return cls(d=int(data["d"]), clauses=tuple(clauses))

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "clauses": [[{"var": v, "neg": neg} for v, neg in clause] for clause in self.clauses],
        }


@dataclass(frozen=True)
class CubeHistogram:
    """Counts of binary rows, indexed by the little-endian cube encoding."""

    counts: RealSequence

    def __post_init__(self):
        if not isinstance(self.counts.group, BooleanCube):
            raise ValueError("histogram counts must live on a boolean cube")
        if np.any(self.counts.values < 0):
            raise ValueError("histogram counts must be nonnegative")

    @property
    def d(self) -> int:
        return self.counts.group.d

    @property
    def database_size(self) -> float:
        return float(self.counts.values.sum())

    @classmethod
    def from_dense(cls, values, d: int) -> "CubeHistogram":
        arr = np.asarray(values, dtype=np.float64)
        if arr.size != 2**d:
            raise ValueError(f"dense histogram for d={d} needs 2^{d} entries, got {arr.size}")
        return cls(RealSequence.cube(arr))

    @classmethod
    def from_pairs(cls, pairs: Sequence, d: int) -> "CubeHistogram":
        """Build from (bitstring, count) pairs; string position i holds attribute i+1."""
        values = np.zeros(2**d)
        for bits, count in pairs:
            if len(bits) != d or any(ch not in "01" for ch in bits):
                raise ValueError(f"bitstring {bits!r} is not a length-{d} binary string")
            index = sum(1 << i for i, ch in enumerate(bits) if ch == "1")
            values[index] += float(count)
        return cls(RealSequence.cube(values))


def wdnf_to_sequence(f: WDnf, max_d: int = MAX_DEFAULT_DIMENSION) -> RealSequence:
    """Evaluate the DNF at all 2^d points, as a 0/1 cube sequence."""
    if not isinstance(f, WDnf):
        raise ValueError("f must be a WDnf")
    if f.d > max_d:
        raise ValueError(f"d={f.d} exceeds the limit {max_d}; raise max_d to allow 2^{f.d} points")
    points = np.arange(2**f.d, dtype=np.int64)
    hit = np.zeros(points.size, dtype=bool)
    for clause in f.clauses:
        sat = np.ones(points.size, dtype=bool)
        for var, neg in clause:
            bit = (points >> (var - 1)) & 1
            sat &= (bit == 0) if neg else (bit == 1)
        hit |= sat
    return RealSequence.cube(hit.astype(np.float64))


def marginal_query(attributes, d: int) -> WDnf:
    """The filter whose convolution with a histogram lists all |S|-way marginals.

    ``attributes`` is the queried set S (1-based); the filter is the
    single clause conjoining the negation of every attribute in S, i.e.
    the indicator of "zero on S".  Then (x * h)(a) counts rows agreeing
    with a on S.
    """
    attrs = sorted(set(int(a) for a in attributes))
    if not attrs:
        raise ValueError("attribute set must be nonempty")
    return WDnf(d=d, clauses=(tuple((a, True) for a in attrs),))


def private_marginals(
    x: CubeHistogram, f: WDnf, privacy: PrivacyParams, seed: Seed, plan=None
) -> MechanismResult:
    """Per-coefficient Laplace noise on the WHT of the generalized marginal.

    Exact MSE 4 ln(1/delta) ||h_hat||_1^2 / (eps^2 2^d); the all-zero
    noise plan reproduces the exact integer convolution (the transform
    uses only additions and a power-of-two division).
    """
    if f.d != x.d:
        raise ValueError(f"formula dimension {f.d} does not match histogram dimension {x.d}")
    h = wdnf_to_sequence(f)
    return _single("fourier", x.counts, h, privacy, seed, plan=plan)


def spectral_tail(f: WDnf, k: int) -> float:
    """Energy outside the top 2^(d-k) WHT coefficients by magnitude.

    A width-w DNF concentrates its spectrum; a single width-w clause has
    exactly 2^w nonzero coefficients, so the tail vanishes as soon as
    2^(d-k) >= 2^w.
    """
    if not 0 <= k <= f.d:
        raise ValueError("k must lie in [0, d]")
    h = wdnf_to_sequence(f)
    coeffs = _fwht(h.values) / np.sqrt(h.values.size)
    sq = np.sort(coeffs**2)[::-1]
    keep = 2 ** (f.d - k)
    return float(sq[keep:].sum())
