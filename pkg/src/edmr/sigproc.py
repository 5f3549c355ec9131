"""Boxcar charge integration, FFT peak extraction and field-swept line synthesis."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import NoPeakError, ParameterError, RangeError
from .recombination import TransientTrace
from .spinsys import gyromagnetic

__all__ = [
    "BoxcarWindow",
    "FrequencySpectrum",
    "SpectrumLine",
    "boxcar_charge",
    "fft_of_Q",
    "peak_frequency",
    "parabolic_vertex",
    "line_shape",
    "donor_lines",
    "defect_lines",
    "synth_field_spectrum",
    "find_extrema",
]


@dataclass(frozen=True)
class BoxcarWindow:
    t1: float = 7e-6
    t2: float = 23e-6

    def __post_init__(self):
        if not 0 <= self.t1 < self.t2:
            raise ParameterError(f"boxcar window needs 0 <= t1 < t2, got [{self.t1}, {self.t2}]")


@dataclass
class FrequencySpectrum:
    freqs: np.ndarray
    magnitude: np.ndarray
    bin_width: float
    window: str = "hann"
    noise_floor: float = 0.0


@dataclass(frozen=True)
class SpectrumLine:
    """One absorption line; ``shift`` (mT) offsets the g-value resonance field."""

    g: float
    weight: float = 1.0
    fwhm: float = 0.45
    shape: str = "gaussian"
    shift: float = 0.0

    def __post_init__(self):
        if self.weight <= 0 or self.fwhm <= 0:
            raise ParameterError("line weight and fwhm must be > 0")
        if self.shape not in ("gaussian", "lorentzian"):
            raise ParameterError(f"unknown line shape {self.shape!r}")


def boxcar_charge(trace: TransientTrace, w: BoxcarWindow = BoxcarWindow()):
    """Trapezoidal integral of dI over [t1, t2] (A s).

    Window edges falling between samples are handled by linear
    interpolation. Trailing sample axes are integrated independently.
    """
    t = trace.times
    eps = 1e-9 * trace.dt
    if w.t1 < t[0] - eps or w.t2 > t[-1] + eps:
        raise RangeError(
            f"window [{w.t1:.3e}, {w.t2:.3e}] s outside trace support [{t[0]:.3e}, {t[-1]:.3e}] s"
        )
    y = trace.samples
    inner = (t > w.t1 + eps) & (t < w.t2 - eps)

    def at(tq):
        x = (tq - t[0]) / trace.dt
        k = min(int(math.floor(x)), len(t) - 2)
        frac = x - k
        return np.asarray((1 - frac) * y[k] + frac * y[k + 1])

    tt = np.concatenate(([w.t1], t[inner], [w.t2]))
    yy = np.concatenate((at(w.t1)[None], y[inner], at(w.t2)[None]))
    return trapezoid(yy, tt, axis=0)


def fft_of_Q(q_series, dtau, zero_pad: int = 8, window: str = "hann",
             normalize: str | None = "peak", detrend: bool = True,
             scale: float | None = None) -> FrequencySpectrum:
    """Magnitude spectrum of a Q(tau) record sampled every ``dtau`` seconds.

    ``dtau`` may be the grid itself, in which case its uniformity is checked.
    The record is mean-subtracted, windowed ('hann' or 'rect') and
    zero-padded to ``zero_pad`` times its length. ``normalize='peak'``
    scales the largest non-DC bin to one.

    ``scale`` is the natural magnitude of the quantity (1 for a probability).
    It sets the roundoff floor below which :func:`peak_frequency` reports no
    peak; by default the record's own maximum is used.
    """
    q = np.asarray(q_series, dtype=float)
    if q.ndim != 1 or q.size < 8:
        raise ParameterError("FFT needs a 1-D record of at least 8 samples")
    step = np.asarray(dtau, dtype=float)
    if step.ndim == 1:
        if step.size != q.size:
            raise ParameterError("tau grid and Q record lengths differ")
        d = np.diff(step)
        if np.any(d <= 0) or np.abs(d - d.mean()).max() > 1e-6 * d.mean():
            raise ParameterError("Q(tau) must be sampled on a uniform grid")
        step = d.mean()
    step = float(step)
    if step <= 0:
        raise ParameterError("sample step must be > 0")
    if zero_pad < 1:
        raise ParameterError("zero_pad must be >= 1")
    x = q - q.mean() if detrend else q.copy()
    if window == "hann":
        x = x * np.hanning(q.size)
    elif window != "rect":
        raise ParameterError(f"unknown window {window!r}")
    n = q.size * zero_pad
    mag = np.abs(np.fft.rfft(x, n))
    freqs = np.fft.rfftfreq(n, step)
    ref = np.abs(q).max() if scale is None else max(float(scale), np.abs(q).max())
    floor = 64 * np.finfo(float).eps * q.size * max(ref, np.finfo(float).tiny)
    if normalize == "peak":
        top = mag[1:].max() if mag.size > 1 else 0.0
        if top > floor:
            mag = mag / top
            floor = floor / top
    elif normalize is not None:
        raise ParameterError(f"unknown normalization {normalize!r}")
    return FrequencySpectrum(freqs, mag, 1.0 / (n * step), window, floor)


def parabolic_vertex(y, k: int) -> tuple[float, float]:
    """Vertex (fractional index, value) of the parabola through y[k-1..k+1]."""
    a, b, c = y[k - 1], y[k], y[k + 1]
    denom = a - 2 * b + c
    if denom == 0:
        return float(k), float(b)
    p = 0.5 * (a - c) / denom
    return k + p, b - 0.25 * (a - c) * p


def peak_frequency(spec: FrequencySpectrum, fmin: float = 0.0) -> float:
    """Frequency (Hz) of the strongest non-DC bin, refined parabolically.

    Ties resolve to the lowest frequency. Bins below ``fmin`` are ignored.
    """
    mag = np.asarray(spec.magnitude)
    if mag.size < 2:
        raise NoPeakError("spectrum is empty")
    lo = max(1, int(np.searchsorted(spec.freqs, fmin)))
    if lo >= mag.size:
        raise NoPeakError("no bins above fmin")
    k = lo + int(np.argmax(mag[lo:]))
    if mag[k] <= spec.noise_floor:
        raise NoPeakError("spectrum has no peak above the numerical floor")
    if 1 <= k - 1 and k + 1 < mag.size:
        x, _ = parabolic_vertex(mag, k)
    else:
        x = float(k)
    return x * spec.bin_width


def line_shape(B, center, fwhm, shape="gaussian"):
    """Unit-height line profile at ``center`` (all in mT)."""
    x = np.asarray(B, dtype=float) - center
    if shape == "gaussian":
        return np.exp(-4 * math.log(2) * (x / fwhm) ** 2)
    if shape == "lorentzian":
        return 1.0 / (1.0 + (2 * x / fwhm) ** 2)
    raise ParameterError(f"unknown line shape {shape!r}")


def donor_lines(g=1.9985, hyperfine=4.2, weight=1.0, fwhm=0.45, shape="gaussian"):
    """The two hyperfine components of the donor, equal weight, split by ``hyperfine`` mT."""
    return [SpectrumLine(g, weight / 2, fwhm, shape, shift=s)
            for s in (-hyperfine / 2, hyperfine / 2)]


def defect_lines(gs=(2.0039, 2.0081), weights=(0.5, 0.5), fwhm=1.0, shape="gaussian"):
    return [SpectrumLine(g, w, fwhm, shape) for g, w in zip(gs, weights)]


def synth_field_spectrum(lines, mw_freq: float, B) -> np.ndarray:
    """Sum of line profiles at their resonance fields for ``mw_freq`` (Hz) on grid ``B`` (mT)."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 1 or np.any(np.diff(B) <= 0):
        raise ParameterError("field grid must be ascending")
    out = np.zeros_like(B)
    omega = 2 * math.pi * mw_freq
    for ln in lines:
        center = omega / gyromagnetic(ln.g) * 1e3 + ln.shift
        out += ln.weight * line_shape(B, center, ln.fwhm, ln.shape)
    return out


def find_extrema(x, y, *, kind="max", min_prominence=0.05):
    """Local extrema of ``y`` refined parabolically; returns [(x, y), ...].

    Only extrema whose height exceeds ``min_prominence`` times the global
    extreme value are kept. ``kind='abs'`` searches |y|.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = {"max": y, "min": -y, "abs": np.abs(y)}[kind]
    top = s.max()
    if top <= 0:
        return []
    out = []
    for k in range(1, len(s) - 1):
        if s[k] > s[k - 1] and s[k] >= s[k + 1] and s[k] >= min_prominence * top:
            xv, sv = parabolic_vertex(s, k)
            xi = np.interp(xv, np.arange(len(x)), x)
            yv = sv if kind == "max" else (-sv if kind == "min" else math.copysign(sv, y[k]))
            out.append((float(xi), float(yv)))
    return out
