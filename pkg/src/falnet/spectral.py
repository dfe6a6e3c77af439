"""Discrete Fourier transform and low-pass residual denoising.

The transform is hand-rolled: an iterative radix-2 Cooley-Tukey path for
power-of-two lengths and Bluestein's chirp-z algorithm for everything else,
so arbitrary series lengths are handled exactly, not by padding tricks.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import NonRealSignal

__all__ = ["Spectrum", "fft_forward", "fft_inverse", "denoise_residual"]


@dataclass
class Spectrum:
    """Complex frequency bins of a length-n real series.

    bins[k] carries the amplitude and phase of normalized frequency k/n;
    for real input bins[k] == conj(bins[n-k]).
    """

    bins: np.ndarray
    n: int

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        if self.bins.ndim != 1:
            raise ValueError("spectrum bins must be 1-D")
        if len(self.bins) != self.n:
            raise ValueError(f"bin count {len(self.bins)} != declared length {self.n}")


@lru_cache(maxsize=64)
def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    rev.setflags(write=False)
    return rev


def _fft_pow2(values: np.ndarray, sign: float) -> np.ndarray:
    """Unscaled radix-2 transform; sign=-1 forward, sign=+1 inverse kernel."""
    n = len(values)
    out = values[_bit_reverse_indices(n)].astype(np.complex128)
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(-1, size)
        upper = blocks[:, :half].copy()
        lower = blocks[:, half:] * twiddle
        blocks[:, :half] = upper + lower
        blocks[:, half:] = upper - lower
        size *= 2
    return out


@lru_cache(maxsize=32)
def _bluestein_tables(n: int, sign: float):
    # chirp exponents use k^2 mod 2n so the phase argument stays small
    k = np.arange(n, dtype=np.int64)
    chirp = np.exp(sign * 1j * np.pi * ((k * k) % (2 * n)) / n)
    m = 1 << (2 * n - 1).bit_length()
    kernel = np.zeros(m, dtype=np.complex128)
    kernel[:n] = np.conj(chirp)
    kernel[m - n + 1:] = np.conj(chirp[1:][::-1])
    kernel_hat = _fft_pow2(kernel, -1.0)
    chirp.setflags(write=False)
    kernel_hat.setflags(write=False)
    return chirp, kernel_hat, m


def _dft_core(values: np.ndarray, sign: float) -> np.ndarray:
    """Unscaled DFT sum for any length: sum_n x_n e^{sign 2πi kn/N}."""
    n = len(values)
    if n == 1:
        return values.astype(np.complex128)
    if n & (n - 1) == 0:
        return _fft_pow2(values, sign)
    chirp, kernel_hat, m = _bluestein_tables(n, sign)
    padded = np.zeros(m, dtype=np.complex128)
    padded[:n] = values * chirp
    conv = _fft_pow2(_fft_pow2(padded, -1.0) * kernel_hat, 1.0) / m
    return conv[:n] * chirp


def fft_forward(series: np.ndarray) -> Spectrum:
    """X_k = sum_n x_n e^{-2πi kn/N}."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("fft_forward expects a non-empty 1-D real series")
    if not np.isfinite(x).all():
        raise ValueError("fft_forward input contains non-finite values")
    return Spectrum(_dft_core(x.astype(np.complex128), -1.0), len(x))


def fft_inverse(spectrum: Spectrum) -> np.ndarray:
    """x_t = (1/N) sum_k X_k e^{+2πi kt/N}, returned as a real series.

    The spectrum must be conjugate-symmetric (within 1e-6, scaled by the
    spectrum magnitude) so the time-domain signal is real.
    """
    bins = spectrum.bins
    n = spectrum.n
    tol = 1e-6 * max(1.0, float(np.max(np.abs(bins))) if n else 1.0)
    mirrored = np.conj(bins[(-np.arange(n)) % n])
    if np.max(np.abs(bins - mirrored)) > tol:
        raise NonRealSignal("spectrum is not conjugate-symmetric; inverse is not real")
    out = _dft_core(bins, 1.0) / n
    residue = float(np.max(np.abs(out.imag))) if n else 0.0
    if residue > 1e-9 * max(1.0, float(np.max(np.abs(out)))):
        raise NonRealSignal(f"inverse transform left imaginary residue {residue:g}")
    return out.real.copy()


def denoise_residual(residual: np.ndarray, cutoff: float = 0.1) -> np.ndarray:
    """Zero every bin whose normalized frequency min(k, N-k)/N exceeds cutoff.

    cutoff is in cycles per sample, 0 < cutoff <= 0.5 (Nyquist). Both halves
    of each symmetric bin pair are zeroed together, so the output is real.
    """
    if not 0.0 < cutoff <= 0.5:
        raise ValueError(f"cutoff must lie in (0, 0.5], got {cutoff}")
    x = np.asarray(residual, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("denoise_residual expects a non-empty 1-D series")
    spectrum = fft_forward(x)
    n = spectrum.n
    k = np.arange(n)
    freq = np.minimum(k, n - k) / n
    filtered = np.where(freq <= cutoff, spectrum.bins, 0.0)
    return fft_inverse(Spectrum(filtered, n))
