"""Unitary transforms and exact convolution over Z/NZ and (Z/2Z)^d.

The cyclic case uses the normalized discrete Fourier transform with
entries exp(-2*pi*j*m*n/N)/sqrt(N).  The boolean-cube case uses the
Walsh-Hadamard transform with characters chi_S(a) = (-1)^(|S & a|) /
2^(d/2), where sets and points share one little-endian bit encoding
(attribute 1 is the least significant bit).  Both transforms are
unitary, so Parseval holds and frequency-domain convolution uses the
diagonal factor sqrt(N) * h_hat (resp. 2^(d/2) * h_hat).

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Cyclic",
    "BooleanCube",
    "Group",
    "RealSequence",
    "Spectrum",
    "dft",
    "idft",
    "wht",
    "iwht",
    "convolve_fast",
    "convolve_direct",
]


@dataclass(frozen=True)
class Cyclic:
    """The index group Z/NZ."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError("cyclic group size must be a positive integer")


@dataclass(frozen=True)
class BooleanCube:
    """The index group (Z/2Z)^d; point a maps to integer sum(a_i * 2^(i-1))."""

    d: int

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 0:
            raise ValueError("cube dimension must be a nonnegative integer")

    @property
    def n(self) -> int:
        return 1 << self.d


Group = Union[Cyclic, BooleanCube]


def _as_float_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("sequence values must be one-dimensional")
    if arr.size < 1:
        raise ValueError("sequence must have length >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sequence values must be finite (no NaN/Inf)")
    return arr


@dataclass(frozen=True)
class RealSequence:
    """A real vector indexed by a finite abelian group.

    Holds either the private input x, the public filter h, or an output
    y.  For ``BooleanCube(d)`` the length is exactly 2^d.
    """

    values: np.ndarray
    group: Group

    def __post_init__(self):
        arr = _as_float_vector(self.values)
        if isinstance(self.group, BooleanCube):
            if arr.size != self.group.n:
                raise ValueError(
                    f"cube sequence must have length 2^{self.group.d} = {self.group.n}, got {arr.size}"
                )
        elif isinstance(self.group, Cyclic):
            if arr.size != self.group.n:
                raise ValueError(f"cyclic sequence must have length {self.group.n}, got {arr.size}")
        else:
            raise ValueError(f"unknown group {self.group!r}")
        object.__setattr__(self, "values", arr)

    @classmethod
    def cyclic(cls, values) -> "RealSequence":
        arr = _as_float_vector(values)
        return cls(arr, Cyclic(arr.size))

    @classmethod
    def cube(cls, values) -> "RealSequence":
        arr = _as_float_vector(values)
        d = int(arr.size).bit_length() - 1
        if arr.size != (1 << d):
            raise ValueError("cube sequence length must be a power of two")
        return cls(arr, BooleanCube(d))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Spectrum:
    """Transform coefficients of a sequence, under the unitary convention.

    ``coeffs`` is complex for ``Cyclic`` and real for ``BooleanCube``
    (Walsh-Hadamard characters are real).  Unitarity means the l2 norm
    of ``coeffs`` equals the l2 norm of the originating sequence, and a
    real cyclic input satisfies coeffs[k] == conj(coeffs[N-k mod N]).
    """

    coeffs: np.ndarray
    group: Group
    normalization: str = "unitary"

    def __post_init__(self):
        want = complex if isinstance(self.group, Cyclic) else float
        dtype = np.complex128 if want is complex else np.float64
        arr = np.asarray(self.coeffs, dtype=dtype)
        if arr.ndim != 1 or arr.size != self.group.n:
            raise ValueError("coefficient vector does not match the group size")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        if self.normalization != "unitary":
            raise ValueError("only the unitary normalization is supported")
        object.__setattr__(self, "coeffs", arr)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.coeffs)

    def __len__(self) -> int:
        return self.coeffs.size


def _coerce_cyclic(x) -> tuple[np.ndarray, Cyclic]:
    """Accept a RealSequence, or any real/complex vector, as cyclic input."""
    if isinstance(x, RealSequence):
        if not isinstance(x.group, Cyclic):
            raise ValueError("dft requires a cyclic sequence; use wht for the boolean cube")
        return x.values, x.group
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("input must be a nonempty vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("input values must be finite (no NaN/Inf)")
    return arr, Cyclic(arr.size)


def dft(x) -> Spectrum:
    """Normalized discrete Fourier transform, O(N log N).

    coeffs[m] = (1/sqrt(N)) * sum_n x_n exp(-2*pi*j*m*n/N).
    """
    values, group = _coerce_cyclic(x)
    return Spectrum(np.fft.fft(values, norm="ortho"), group)


def idft(s: Spectrum, imag_tol: float = 1e-9) -> RealSequence:
    """Inverse of :func:`dft`, returning a real sequence.

    The inverse transform of a conjugate-symmetric spectrum is real up
    to rounding; any imaginary residue is checked against ``imag_tol``
    (relative to the output scale) and stripped.
    """
    if not isinstance(s.group, Cyclic):
        raise ValueError("idft requires a cyclic spectrum")
    values = np.fft.ifft(s.coeffs, norm="ortho")
    scale = max(1.0, float(np.max(np.abs(values.real), initial=0.0)))
    residue = float(np.max(np.abs(values.imag), initial=0.0))
    if residue > imag_tol * scale:
        raise ValueError(f"imaginary residue {residue:.3e} exceeds tolerance; spectrum is not conjugate symmetric")
    return RealSequence(values.real, s.group)


def _fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis.

    Butterfly stages only add and subtract, so integer-valued inputs
    stay exactly representable; mechanisms rely on this for an exact
    noiseless path.
    """
    a = np.array(values, dtype=np.float64, copy=True)
    n = a.shape[-1]
    if n & (n - 1):
        raise ValueError("Walsh-Hadamard transform length must be a power of two")
    h = 1
    while h < n:
        shape = a.shape
        a = a.reshape(shape[:-1] + (n // (2 * h), 2, h))
        a = np.stack((a[..., 0, :] + a[..., 1, :], a[..., 0, :] - a[..., 1, :]), axis=-2)
        a = a.reshape(shape)
        h *= 2
    return a


def wht(x) -> Spectrum:
    """Walsh-Hadamard transform over the boolean cube, O(d 2^d).

    coeffs[S] = sum_a x(a) chi_S(a) with chi_S(a) = (-1)^(|S & a|)/2^(d/2).
    Self-inverse: wht(wht(x)) recovers x.
    """
    if isinstance(x, RealSequence):
        if not isinstance(x.group, BooleanCube):
            raise ValueError("wht requires a boolean-cube sequence; use dft for cyclic groups")
        values, group = x.values, x.group
    else:
        seq = RealSequence.cube(x)
        values, group = seq.values, seq.group
    return Spectrum(_fwht(values) / np.sqrt(group.n), group)


def iwht(s: Spectrum) -> RealSequence:
    """Inverse Walsh-Hadamard transform (the transform is an involution)."""
    if not isinstance(s.group, BooleanCube):
        raise ValueError("iwht requires a boolean-cube spectrum")
    return RealSequence(_fwht(s.coeffs) / np.sqrt(s.group.n), s.group)


def _require_same_group(h: RealSequence, x: RealSequence) -> Group:
    if not isinstance(h, RealSequence) or not isinstance(x, RealSequence):
        raise ValueError("convolution operands must be RealSequence instances")
    if h.group != x.group:
        raise ValueError(f"group mismatch: {h.group!r} vs {x.group!r}")
    return h.group


def convolve_fast(h: RealSequence, x: RealSequence) -> RealSequence:
    """Circular (or cube) convolution via the diagonalizing transform.

    Cyclic: idft(sqrt(N) * h_hat * x_hat).  Cube: the same with the
    Walsh-Hadamard transform and diagonal factor 2^(d/2); evaluated as
    W(Wh * Wx)/2^d on the unnormalized butterflies so integer inputs
    convolve exactly.
    """
    group = _require_same_group(h, x)
    if isinstance(group, Cyclic):
        n = group.n
        hh = np.fft.fft(h.values, norm="ortho")
        xh = np.fft.fft(x.values, norm="ortho")
        y = np.fft.ifft(np.sqrt(n) * hh * xh, norm="ortho")
        return RealSequence(y.real, group)
    carrier = _fwht(h.values) * _fwht(x.values)
    return RealSequence(_fwht(carrier) / group.n, group)


def convolve_direct(h: RealSequence, x: RealSequence) -> RealSequence:
    """Brute-force convolution, the O(N^2) correctness oracle.

    Cyclic: y_k = sum_n x_n h_((k - n) mod N).
    Cube:   y_a = sum_b x_b h_(a XOR b).
    """
    group = _require_same_group(h, x)
    n = group.n
    hv, xv = h.values, x.values
    y = np.empty(n)
    idx = np.arange(n)
    if isinstance(group, Cyclic):
        for k in range(n):
            y[k] = xv @ hv[(k - idx) % n]
    else:
        for a in range(n):
            y[a] = xv @ hv[a ^ idx]
    return RealSequence(y, group)
