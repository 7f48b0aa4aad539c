"""Wander-to-intensity mapping and OAM crosstalk.

Maps centroid offsets to received intensity through the Gaussian
short-term beam profile, provides the memoryless power-law fading
baseline p(I) = gamma I^(gamma-1) on [0, 1] with its maximum-likelihood
estimator, and computes the OAM mode spectrum produced by a lateral
displacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class FadingTrace:
    """Normalized received-intensity time series."""

    intensities: np.ndarray
    sample_period: float = 1.0
    gamma: float | None = None


@dataclass
class OamSpectrum:
    """Mode weights C_l for l = -l_max..l_max; symmetric in l, each in
    [0, 1], and summing to 1 in the untruncated limit."""

    l_max: int
    weights: np.ndarray

    def weight(self, l: int) -> float:
        if abs(l) > self.l_max:
            raise IndexError(f"mode {l} outside +-{self.l_max}")
        return float(self.weights[l + self.l_max])


@dataclass
class CrosstalkTrace:
    """Per-sample OAM spectra plus the normalized wander radii r_c/omega_st."""

    spectra: list[OamSpectrum]
    r_norm: np.ndarray
    sample_period: float = 1.0

    def mode_series(self, l: int) -> np.ndarray:
        return np.array([s.weight(l) for s in self.spectra])


def intensity_from_offsets(beta_x, beta_y, omega_st: float, i0=1.0):
    """Received intensity i0 * exp(-2 (bx^2 + by^2) / omega_st^2).

    Accepts scalars or arrays; rotationally symmetric in the offsets.
    """
    if not omega_st > 0:
        raise ValueError("omega_st must be positive")
    bx = np.asarray(beta_x, dtype=float)
    by = np.asarray(beta_y, dtype=float)
    out = i0 * np.exp(-2.0 * (bx**2 + by**2) / omega_st**2)
    return float(out) if out.ndim == 0 else out


def fading_trace(xs, ys, omega_st: float, i0_series=None,
                 sample_period: float = 1.0) -> FadingTrace:
    """Elementwise intensity mapping of a wander trace.

    i0_series is the scintillation hook: caller-supplied per-sample on-axis
    intensities that multiply the wander attenuation. This function never
    generates scintillation samples itself; without the hook I0 = 1.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size:
        raise ValueError("xs and ys must have equal length")
    if i0_series is None:
        i0 = 1.0
    else:
        i0 = np.asarray(i0_series, dtype=float)
        if i0.size != x.size:
            raise ValueError("i0_series length must match the trace")
    return FadingTrace(intensities=intensity_from_offsets(x, y, omega_st, i0),
                       sample_period=sample_period)


def memoryless_sample(gamma: float, n: int, seed: int,
                      sample_period: float = 1.0) -> FadingTrace:
    """n i.i.d. draws from p(I) = gamma I^(gamma-1) on [0, 1] by inverse
    CDF (I = U^(1/gamma)), from a seeded PCG64 stream."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, n)
    return FadingTrace(intensities=u ** (1.0 / gamma),
                       sample_period=sample_period, gamma=gamma)


def estimate_gamma(intensities) -> float:
    """Closed-form MLE gamma_hat = -n / sum(ln I_i) for samples in (0, 1]."""
    x = np.asarray(intensities, dtype=float)
    if x.size < 10:
        raise ValueError("need at least 10 samples")
    if np.any(x <= 0) or np.any(x > 1):
        raise ValueError("all intensities must lie in (0, 1]")
    s = float(np.sum(np.log(x)))
    if s == 0.0:
        raise ValueError("all intensities equal 1; gamma estimate diverges")
    return -x.size / s


def bessel_i(order: int, x: float) -> float:
    """Modified Bessel function of the first kind I_n(x), x >= 0, n >= 0.

    Ascending power series for x <= 15; Miller backward recurrence
    normalized by the generating-function identity
    exp(x) = I_0 + 2 sum_{k>=1} I_k for larger x. At least 1e-12 relative
    accuracy for x <= 50 and order <= 64.
    """
    if order < 0:
        raise ValueError("order must be a non-negative integer")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0.0:
        return 1.0 if order == 0 else 0.0
    if x <= 15.0:
        # term_k = (x/2)^(2k+n) / (k! (k+n)!)
        half = 0.5 * x
        term = half**order / math.factorial(order)
        total = term
        for k in range(1, 200):
            term *= half * half / (k * (k + order))
            total += term
            if term < 1e-17 * total:
                break
        return total
    start = int(max(order, x)) + 40
    if start % 2:
        start += 1
    i_hi, i_lo = 0.0, 1e-300
    norm = 0.0
    target = 0.0
    for k in range(start, 0, -1):
        i_cur = i_hi + (2.0 * k / x) * i_lo
        i_hi, i_lo = i_lo, i_cur
        if k - 1 == order:
            target = i_cur
        if k - 1 > 0:
            norm += 2.0 * i_cur
        # rescale to dodge overflow during the downward sweep
        if i_lo > 1e250:
            i_hi /= 1e250
            i_lo /= 1e250
            norm /= 1e250
            target /= 1e250
    norm += i_lo  # k=0 term counted once
    if order == 0:
        target = i_lo
    return target * math.exp(x) / norm


def oam_spectrum(r_c: float, omega_st: float, l_max: int) -> OamSpectrum:
    """Detected OAM spectrum for a lateral displacement r_c:
    C_l = exp(-r^2/w^2) I_|l|(r^2/w^2)."""
    if not omega_st > 0:
        raise ValueError("omega_st must be positive")
    if r_c < 0:
        raise ValueError("r_c must be >= 0")
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    arg = (r_c / omega_st) ** 2
    damp = math.exp(-arg)
    weights = np.empty(2 * l_max + 1)
    for l in range(l_max + 1):
        w = damp * bessel_i(l, arg)
        weights[l_max + l] = w
        weights[l_max - l] = w
    return OamSpectrum(l_max=l_max, weights=weights)


def crosstalk_trace(xs, ys, omega_st: float, l_max: int,
                    sample_period: float = 1.0) -> CrosstalkTrace:
    """Per-sample OAM spectra along a wander trace, with
    r_{c,t}^2 = bx_t^2 + by_t^2, plus the normalized radius series."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size:
        raise ValueError("xs and ys must have equal length")
    r = np.sqrt(x**2 + y**2)
    spectra = [oam_spectrum(float(ri), omega_st, l_max) for ri in r]
    return CrosstalkTrace(spectra=spectra, r_norm=r / omega_st,
                          sample_period=sample_period)
