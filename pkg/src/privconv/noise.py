"""Seeded Laplace sampling and the reproducibility contract.

Every draw is a pure function of (seed, lane, round, counter), computed
by a counter-based 64-bit generator (the SplitMix64 output permutation
over a keyed counter).  Vector element i always uses counter i, and
Monte Carlo trial t uses substream ``seed.stream ^ t``, so coordinates
and trials get independent streams without any sequential state.  Equal
seeds give bit-identical samples across runs.

Laplace variables come from the inverse CDF,

    z = -b * sgn(u) * ln(1 - 2|u|),   u uniform on the open (-1/2, 1/2),

which is branch-free and exact.  A drawn endpoint (u = +-1/2, i.e. a
raw uniform of exactly 0) is rejected and redrawn on a bumped round
counter; the event has probability 2^-53 per draw.

Not cryptographically secure, and no attempt is made to harden the
floating-point Laplace sampler against precision side channels; this is
the textbook sampler with those documented limitations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Seed", "LaplaceScale", "laplace_sample", "laplace_vector", "uniform_vector"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_LANE_C = 0xD1B54A32D192ED03
_ROUND_C = 0x8CB92BA72F3D8DD7
_INV_2_53 = 1.0 / (1 << 53)


def _mix64(z: int) -> int:
    # SplitMix64 finalizer on python ints (mask emulates u64 wraparound).
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # Same finalizer on uint64 arrays; array ops wrap silently.
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class Seed:
    """Root of a deterministic sample stream.

    ``base`` selects the experiment, ``stream`` the substream within
    it; identical (base, stream) pairs give identical samples.
    """

    base: int = 0
    stream: int = 0

    def __post_init__(self):
        for name in ("base", "stream"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v <= _MASK:
                raise ValueError(f"seed {name} must be an unsigned 64-bit integer")

    def substream(self, index: int) -> "Seed":
        """The stream used for Monte Carlo trial ``index``."""
        if not isinstance(index, int) or index < 0:
            raise ValueError("substream index must be a nonnegative integer")
        return Seed(self.base, self.stream ^ (index & _MASK))


@dataclass(frozen=True)
class LaplaceScale:
    """Scale b of Lap(0, b); b = 0 is the point mass at zero."""

    b: float

    def __post_init__(self):
        b = float(self.b)
        if not np.isfinite(b) or b < 0:
            raise ValueError("Laplace scale must be finite and nonnegative")
        object.__setattr__(self, "b", b)


def _derive_key(base: int, stream: int, lane: int, rnd: int) -> int:
    k = _mix64(base ^ _GOLDEN)
    k = _mix64(k ^ stream)
    k = _mix64(k ^ ((lane * _LANE_C) & _MASK))
    return _mix64(k ^ ((rnd * _ROUND_C) & _MASK))


def _derive_keys(base: int, streams: np.ndarray, lane: int, rnd: int) -> np.ndarray:
    # Vector version of _derive_key over a uint64 stream array; must stay
    # step-for-step identical to the scalar chain.
    k0 = _mix64(base ^ _GOLDEN)
    k = _mix64_array(np.uint64(k0) ^ streams.astype(np.uint64))
    k = _mix64_array(k ^ np.uint64((lane * _LANE_C) & _MASK))
    return _mix64_array(k ^ np.uint64((rnd * _ROUND_C) & _MASK))


def _raw_uniform(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Uniforms in [0, 1) from the top 53 bits of the counter hash."""
    state = keys + counters * np.uint64(_GOLDEN)
    return (_mix64_array(state) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def _open_uniform(seed: Seed, lane: int, counters: np.ndarray, streams: np.ndarray | None = None) -> np.ndarray:
    """Uniforms on the open (0, 1); exact zeros are redrawn on a new round."""
    if streams is None:
        keys = np.uint64(_derive_key(seed.base, seed.stream, lane, 0))
    else:
        keys = _derive_keys(seed.base, streams, lane, 0)[:, None]
    v = _raw_uniform(keys, counters)
    rnd = 0
    while True:
        zero = v == 0.0
        if not zero.any():
            return v
        rnd += 1
        if rnd > 128:  # p = 2^-53 per draw; unreachable in practice
            raise RuntimeError("endpoint rejection failed to terminate")
        if streams is None:
            keys = np.uint64(_derive_key(seed.base, seed.stream, lane, rnd))
        else:
            keys = _derive_keys(seed.base, streams, lane, rnd)[:, None]
        v = np.where(zero, _raw_uniform(keys, counters), v)


def _scale_array(scales) -> np.ndarray:
    if isinstance(scales, np.ndarray) and scales.dtype == np.float64:
        arr = scales
    else:
        if isinstance(scales, LaplaceScale):
            scales = [scales]
        arr = np.asarray(
            [s.b if isinstance(s, LaplaceScale) else float(s) for s in np.atleast_1d(scales)],
            dtype=np.float64,
        )
    if arr.ndim != 1:
        raise ValueError("scales must form a vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("Laplace scales must be finite and nonnegative")
    return arr


def _laplace_from_uniform(b: np.ndarray, v: np.ndarray) -> np.ndarray:
    u = v - 0.5
    z = -b * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    # force exact zeros for degenerate scales (avoid -0.0 artifacts)
    return np.where(b > 0.0, z, 0.0)


def uniform_vector(seed: Seed, n: int, lane: int = 0) -> np.ndarray:
    """n independent uniforms on the open (0, 1), element i from substream i."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _open_uniform(seed, lane, np.arange(n, dtype=np.uint64))


def laplace_vector(scales, seed: Seed, lane: int = 0) -> np.ndarray:
    """Independent Laplace draws, element i with scale b_i from substream i.

    Deterministic given (scales, seed, lane).  ``lane`` separates noise
    roles that share one seed (e.g. real and imaginary parts).
    """
    b = _scale_array(scales)
    v = _open_uniform(seed, lane, np.arange(b.size, dtype=np.uint64))
    return _laplace_from_uniform(b, v)


def laplace_sample(scale, seed: Seed) -> float:
    """One draw from Lap(0, b); equals laplace_vector([b], seed)[0]."""
    return float(laplace_vector([scale], seed)[0])


def _laplace_matrix(scales, seed: Seed, trials: int, lane: int = 0) -> np.ndarray:
    """(trials, len(scales)) matrix; row t equals laplace_vector(scales, seed.substream(t), lane).

    The whole grid is hashed in one vectorized pass, which is what makes
    10^5-trial Monte Carlo runs cheap.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    b = _scale_array(scales)
    streams = np.uint64(seed.stream) ^ np.arange(trials, dtype=np.uint64)
    v = _open_uniform(seed, lane, np.arange(b.size, dtype=np.uint64), streams=streams)
    return _laplace_from_uniform(b[None, :], v)


def _uniform_matrix(seed: Seed, trials: int, n: int, lane: int = 0) -> np.ndarray:
    """(trials, n) grid; row t equals uniform_vector(seed.substream(t), n, lane)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n < 0:
        raise ValueError("n must be nonnegative")
    streams = np.uint64(seed.stream) ^ np.arange(trials, dtype=np.uint64)
    return _open_uniform(seed, lane, np.arange(n, dtype=np.uint64), streams=streams)
