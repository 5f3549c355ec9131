"""
Experiment drivers: field sweeps, Rabi series, detuning maps, transients.

Every driver follows the same per-pair pipeline

    steady state -> rectangular pulse -> post-pulse transient -> observable

and averages the observable (never the density matrix) over an ensemble of
nuclear manifolds, defect g-values and B1 amplitudes. Observables are linear
in the pulse-induced state change, so this average is exact.
"""
from __future__ import annotations

import datetime as _dt
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dynamics import PulseSpec, apply_pulse, nutation_trace, pulse_propagator, rabi_frequency
from .errors import ConfigurationError, ParameterError
from .recombination import (
    RecombinationRates,
    TransientTrace,
    current_scale,
    steady_state,
    transient_kernel,
)
from .sigproc import BoxcarWindow, boxcar_charge, fft_of_Q, find_extrema, peak_frequency
from .spinsys import (
    SpinPairConfig,
    build_rotating_hamiltonian,
    donor_resonance_field,
    gyromagnetic,
    resonance_field,
)

log = logging.getLogger(__name__)

__all__ = [
    "EnsembleSpec",
    "EnsembleMember",
    "SweepResult",
    "TransientGrid",
    "RabiSeries",
    "DetuningMap",
    "ensemble_average",
    "b1_from_power",
    "member_charge",
    "member_transient",
    "run_transient",
    "run_nutation",
    "run_field_sweep",
    "run_rabi_series",
    "run_detuning_map",
    "gaussian_envelope",
    "resonant_config",
    "DELTA_ENSEMBLE",
]


@dataclass(frozen=True)
class EnsembleMember:
    nuclear_mI: float
    g_b: float
    b1_scale: float
    weight: float


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble over which observables are averaged.

    ``nuclear`` and ``defect_g`` are ``(value, weight)`` pairs. The B1
    distribution is 'delta' or 'gaussian' with relative width
    ``b1_rel_sigma``; gaussian members come from Gauss-Hermite quadrature
    (``samples`` nodes) or, with ``sampling='monte-carlo'``, from ``samples``
    seeded draws. ``species`` limits the microwave drive to one partner.
    """

    nuclear: tuple = ((0.5, 0.5), (-0.5, 0.5))
    defect_g: tuple = ((2.0039, 0.5), (2.0081, 0.5))
    b1_distribution: str = "delta"
    b1_rel_sigma: float = 0.0
    sampling: str = "quadrature"
    samples: int = 15
    seed: int = 0
    species: str = "both"

    def __post_init__(self):
        for name in ("nuclear", "defect_g"):
            pairs = getattr(self, name)
            if not pairs:
                raise ParameterError(f"ensemble {name} list is empty")
            total = sum(w for _, w in pairs)
            if total <= 0:
                raise ParameterError(f"ensemble {name} weights sum to zero")
            if any(w < 0 for _, w in pairs):
                raise ParameterError(f"ensemble {name} weights must be >= 0")
            if abs(total - 1.0) > 1e-12:
                raise ParameterError(f"ensemble {name} weights sum to {total}, expected 1")
        if self.b1_distribution not in ("delta", "gaussian"):
            raise ParameterError(f"unknown B1 distribution {self.b1_distribution!r}")
        if self.b1_rel_sigma < 0:
            raise ParameterError("b1_rel_sigma must be >= 0")
        if self.sampling not in ("quadrature", "monte-carlo"):
            raise ParameterError(f"unknown sampling {self.sampling!r}")
        if self.samples < 1:
            raise ParameterError("sample count must be >= 1")
        if self.species not in ("both", "donor", "defect"):
            raise ParameterError(f"unknown species selection {self.species!r}")

    def b1_nodes(self):
        """(relative B1, weight) pairs."""
        if self.b1_distribution == "delta" or self.b1_rel_sigma == 0:
            return [(1.0, 1.0)]
        s = self.b1_rel_sigma
        if self.sampling == "quadrature":
            x, w = np.polynomial.hermite.hermgauss(self.samples)
            return [(abs(1.0 + math.sqrt(2) * s * xi), wi / math.sqrt(math.pi))
                    for xi, wi in zip(x, w)]
        rng = np.random.default_rng(self.seed)
        draws = np.abs(rng.normal(1.0, s, self.samples))
        return [(float(d), 1.0 / self.samples) for d in draws]

    def members(self) -> list[EnsembleMember]:
        out = []
        for mI, wn in self.nuclear:
            for g, wg in self.defect_g:
                for scale, wb in self.b1_nodes():
                    w = wn * wg * wb
                    if w > 0:
                        out.append(EnsembleMember(mI, g, scale, w))
        return out

    def as_dict(self) -> dict:
        return {
            "nuclear": [list(p) for p in self.nuclear],
            "defect_g": [list(p) for p in self.defect_g],
            "b1_distribution": self.b1_distribution,
            "b1_rel_sigma": self.b1_rel_sigma,
            "sampling": self.sampling,
            "samples": self.samples,
            "seed": self.seed,
            "species": self.species,
        }


DELTA_ENSEMBLE = EnsembleSpec(nuclear=((-0.5, 1.0),), defect_g=((2.0039, 1.0),))


@dataclass(frozen=True)
class TransientGrid:
    """Detection grid: starts at the amplifier dead time ``t0`` (s)."""

    t0: float = 3e-6
    dt: float = 50e-9
    t_end: float = 30e-6

    def __post_init__(self):
        if self.t0 < 0 or self.dt <= 0 or self.t_end <= self.t0:
            raise ParameterError("transient grid needs 0 <= t0 < t_end and dt > 0")

    @property
    def times(self) -> np.ndarray:
        n = int(round((self.t_end - self.t0) / self.dt)) + 1
        return self.t0 + self.dt * np.arange(n)


@dataclass
class SweepResult:
    """Tabular result of one experiment.

    ``values`` is 1-D (one observable per axis point) or 2-D with the axis
    along the first dimension. ``columns`` holds further per-axis-point
    arrays. ``timestamp`` is informational and never written to data files.
    """

    axis_name: str
    axis: np.ndarray
    observable_name: str
    values: np.ndarray
    columns: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int = 0
    meta: dict = field(default_factory=dict)
    timestamp: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat()
    )

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != self.axis.shape[0]:
            raise ParameterError("axis and observable lengths disagree")
        for name, col in self.columns.items():
            if len(col) != len(self.axis):
                raise ParameterError(f"column {name!r} length disagrees with axis")


@dataclass
class RabiSeries:
    taus: np.ndarray
    b1: np.ndarray
    powers: np.ndarray
    charges: list
    spectra: list
    peak_freqs: np.ndarray
    fit: dict
    results: list


@dataclass
class DetuningMap:
    result: SweepResult
    freqs: np.ndarray
    ridge: np.ndarray
    predicted: np.ndarray
    bin_width: float
    line_field: float


def _pool_map(fn, items, threads: int):
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def ensemble_average(spec: EnsembleSpec, member_fn, *, threads: int = 1):
    """Weighted average of ``member_fn(member)`` over the ensemble.

    ``member_fn`` returns an array (or a ``SweepResult``, whose ``values`` and
    ``columns`` are averaged). Summation order is fixed by the member list,
    so results are reproducible for any ``threads``.
    """
    members = spec.members()
    total = sum(m.weight for m in members)
    if not members or total <= 0:
        raise ParameterError("ensemble has zero total weight")
    outs = _pool_map(member_fn, members, threads)
    if isinstance(outs[0], SweepResult):
        first = outs[0]
        values = sum(m.weight * o.values for m, o in zip(members, outs)) / total
        cols = {k: sum(m.weight * np.asarray(o.columns[k]) for m, o in zip(members, outs)) / total
                for k in first.columns}
        return SweepResult(first.axis_name, first.axis, first.observable_name, values, cols,
                           first.config, first.seed, dict(first.meta))
    return sum(m.weight * np.asarray(o) for m, o in zip(members, outs)) / total


def b1_from_power(power, b1_ref: float, p_ref: float = 1.0):
    """B1 (mT) for microwave power ``power`` given B1 = ``b1_ref`` at ``p_ref``."""
    p = np.asarray(power, dtype=float)
    if np.any(p < 0) or p_ref <= 0 or b1_ref < 0:
        raise ParameterError("powers and calibration must be non-negative")
    return b1_ref * np.sqrt(p / p_ref)


# -- per-pair pipeline ------------------------------------------------------


@lru_cache(maxsize=8192)
def _reference(cfg: SpinPairConfig, nuclear_mI: float, mw_freq: float, initial_state: str):
    """Cached (drive-free H, pre-pulse state, current scale) for one pair."""
    H0 = build_rotating_hamiltonian(cfg, 0.0, nuclear_mI, mw_freq=mw_freq)
    rho_ss = steady_state(cfg, nuclear_mI, mw_freq=mw_freq)
    kappa = current_scale(cfg, rho_ss)
    if initial_state == "low-temperature":
        rho_ref = steady_state(cfg, nuclear_mI, mode="low-temperature", mw_freq=mw_freq)
    else:
        rho_ref = rho_ss
    return H0, rho_ref, kappa


@lru_cache(maxsize=8192)
def _kernel(cfg: SpinPairConfig, nuclear_mI: float, mw_freq: float, t0: float, dt: float, n: int):
    H0, _, _ = _reference(cfg, nuclear_mI, mw_freq, "steady")
    return transient_kernel(H0, RecombinationRates.from_config(cfg), t0 + dt * np.arange(n))


def _member_cfg(cfg: SpinPairConfig, member: EnsembleMember | None) -> SpinPairConfig:
    return cfg if member is None else cfg.replace(g_b=member.g_b)


def _delta_rho(cfg, member, B1, taus, *, mw_freq, phase, drive, initial_state):
    """State change produced by pulses of lengths ``taus`` (stack)."""
    mI = -0.5 if member is None else member.nuclear_mI
    scale = 1.0 if member is None else member.b1_scale
    _, rho_ref, kappa = _reference(cfg, mI, mw_freq, initial_state)
    H = build_rotating_hamiltonian(cfg, B1 * scale, mI, phase=phase, mw_freq=mw_freq, drive=drive)
    U = pulse_propagator(H, np.atleast_1d(taus))
    return apply_pulse(rho_ref, U) - rho_ref, kappa


def member_transient(cfg, member, B1, taus, times, *, mw_freq=None, phase=0.0,
                     drive="both", initial_state="steady") -> TransientTrace:
    """dI(t) for one ensemble member; samples have shape (len(times), len(taus))."""
    mw = cfg.mw_freq if mw_freq is None else mw_freq
    mcfg = _member_cfg(cfg, member)
    mI = -0.5 if member is None else member.nuclear_mI
    times = np.asarray(times, dtype=float)
    dt = (times[-1] - times[0]) / (times.size - 1)
    rows = _kernel(mcfg, mI, mw, float(times[0]), float(dt), int(times.size))
    delta, kappa = _delta_rho(mcfg, member, B1, taus, mw_freq=mw, phase=phase, drive=drive,
                              initial_state=initial_state)
    samples = -kappa * (rows @ delta.reshape(-1, 16).T).real
    return TransientTrace(float(times[0]), float(dt), samples)


def member_charge(cfg, member, B1, taus, *, window=BoxcarWindow(), grid=TransientGrid(),
                  mw_freq=None, phase=0.0, drive="both", initial_state="steady") -> np.ndarray:
    """Boxcar charge Q(tau) (A s) for one ensemble member."""
    trace = member_transient(cfg, member, B1, taus, grid.times, mw_freq=mw_freq, phase=phase,
                             drive=drive, initial_state=initial_state)
    return np.atleast_1d(boxcar_charge(trace, window))


def _snapshot(cfg: SpinPairConfig, **extra) -> dict:
    snap = {"spin": cfg.as_dict()}
    for k, v in extra.items():
        snap[k] = v.as_dict() if hasattr(v, "as_dict") else v
    return snap


def _pulse_dict(pulse: PulseSpec) -> dict:
    return {"length": pulse.length, "B1": pulse.B1, "mw_freq": pulse.mw_freq, "phase": pulse.phase}


# -- experiments -------------------------------------------------------------


def run_transient(cfg: SpinPairConfig, pulse: PulseSpec = PulseSpec(), times=None, *,
                  ensemble: EnsembleSpec | None = None, initial_state: str = "steady",
                  threads: int = 1) -> SweepResult:
    """Ensemble-averaged post-pulse current change dI(t)."""
    ensemble = ensemble or EnsembleSpec()
    times = TransientGrid(0.0, 0.1e-6, 400e-6).times if times is None else np.asarray(times)

    def one(m):
        tr = member_transient(cfg, m, pulse.B1, [pulse.length], times, mw_freq=pulse.mw_freq,
                              phase=pulse.phase, drive=ensemble.species,
                              initial_state=initial_state)
        return tr.samples[:, 0]

    dI = ensemble_average(ensemble, one, threads=threads)
    return SweepResult("t_s", times, "dI_A", dI,
                       config=_snapshot(cfg, pulse=_pulse_dict(pulse), ensemble=ensemble),
                       seed=ensemble.seed)


def run_nutation(cfg: SpinPairConfig, taus, B1: float = 0.1, *, nuclear_mI: float = -0.5,
                 initial_state: str = "low-temperature", mw_freq=None, phase: float = 0.0,
                 observable: str = "singlet", drive: str = "both") -> SweepResult:
    """Singlet content (or a triplet population) right after each pulse length."""
    mw = cfg.mw_freq if mw_freq is None else mw_freq
    _, rho0, _ = _reference(cfg, nuclear_mI, mw, initial_state)
    vals = nutation_trace(cfg, taus, rho0, B1=B1, nuclear_mI=nuclear_mI, phase=phase,
                          mw_freq=mw, observable=observable, drive=drive)
    return SweepResult("tau_s", taus, observable, vals,
                       config=_snapshot(cfg, B1=B1, nuclear_mI=nuclear_mI,
                                        initial_state=initial_state, drive=drive))


def _charge_scale(cfg: SpinPairConfig, window: BoxcarWindow) -> float:
    # offset current times gate length bounds |Q|; it anchors the FFT roundoff floor
    return cfg.offset_current * (window.t2 - window.t1)


def _excitation_width(cfg: SpinPairConfig, pulse: PulseSpec) -> float:
    """Approximate field width (mT) of the pulse excitation profile."""
    gam = gyromagnetic(min(cfg.g_a, cfg.g_b))
    by_length = 2 * math.pi / (gam * pulse.length) * 1e3 if pulse.length > 0 else np.inf
    return max(min(by_length, 1.0), pulse.B1, 1e-3)


def _gaussian_kernel(step: float, fwhm: float) -> np.ndarray:
    sigma = fwhm / (2 * math.sqrt(2 * math.log(2)))
    half = int(math.ceil(5 * sigma / step))
    x = step * np.arange(-half, half + 1)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def run_field_sweep(cfg: SpinPairConfig, pulse: PulseSpec = PulseSpec(), B_grid=None,
                    slice_time: float = 15.5e-6, *, ensemble: EnsembleSpec | None = None,
                    linewidths=(0.45, 1.0), contour_times=None, threads: int = 1) -> SweepResult:
    """Transient current at ``slice_time`` versus static field B0 (mT).

    The sweep is assembled from two species components, one with only the
    donor driven and one with only the defect driven; each is computed for
    a single spin packet on a grid fine enough to resolve the pulse
    excitation profile, convolved with a gaussian inhomogeneous line of
    FWHM ``linewidths`` (donor, defect) in mT, and resampled onto
    ``B_grid``. The split is exact as long as no pair has both partners
    inside the excitation bandwidth, which holds for the g-values and
    hyperfine splitting here.

    ``contour_times`` adds a (B0, t) matrix of dI for plotting; it is
    computed on ``B_grid`` directly without line broadening.
    """
    ensemble = ensemble or EnsembleSpec()
    B = np.arange(343.0, 353.0 + 1e-9, 0.02) if B_grid is None else np.asarray(B_grid, float)
    if B.ndim != 1 or B.size < 3 or np.any(np.diff(B) <= 0):
        raise ParameterError("field grid must be ascending with at least 3 points")
    mw = cfg.mw_freq if pulse.mw_freq is None else pulse.mw_freq
    snap = _snapshot(cfg, pulse=_pulse_dict(pulse), ensemble=ensemble, slice_time=slice_time,
                     linewidths=list(linewidths))
    if pulse.length == 0 or pulse.B1 == 0:
        warnings.warn("zero pulse area: field sweep is identically zero", stacklevel=2)
        zeros = np.zeros_like(B)
        return SweepResult("B0_mT", B, "dI_A", zeros,
                           {"dI_donor_A": zeros, "dI_defect_A": zeros},
                           snap, ensemble.seed, {"peaks": []})

    fwhm_a, fwhm_b = (float(linewidths[0]), float(linewidths[1]))
    step_user = float(np.min(np.diff(B)))
    step = min(step_user, _excitation_width(cfg, pulse) / 8)
    pad = 3 * max(fwhm_a, fwhm_b)
    fine = np.arange(B[0] - pad, B[-1] + pad + step / 2, step)
    times = np.array([slice_time, slice_time + 1e-9])

    def point(args):
        B0, drive = args
        pcfg = cfg.replace(B0=float(B0))

        def one(m):
            tr = member_transient(pcfg, m, pulse.B1, [pulse.length], times, mw_freq=mw,
                                  phase=pulse.phase, drive=drive)
            return tr.samples[0, 0]

        return float(ensemble_average(ensemble, one))

    species = [s for s in ("donor", "defect") if ensemble.species in ("both", s)]
    comps = {}
    for s in species:
        raw = np.array(_pool_map(point, [(b, s) for b in fine], threads))
        width = fwhm_a if s == "donor" else fwhm_b
        if width > 0:
            raw = np.convolve(raw, _gaussian_kernel(step, width), mode="same")
        comps[s] = np.interp(B, fine, raw)
    donor = comps.get("donor", np.zeros_like(B))
    defect = comps.get("defect", np.zeros_like(B))
    total = donor + defect

    meta = {
        "peaks": [{"B0_mT": b, "dI_A": v} for b, v in find_extrema(B, total, kind="abs")],
        "donor_peaks": [{"B0_mT": b, "dI_A": v} for b, v in find_extrema(B, donor, kind="abs")],
        "defect_peaks": [{"B0_mT": b, "dI_A": v} for b, v in find_extrema(B, defect, kind="abs")],
        "fine_step_mT": step,
    }
    cols = {"dI_donor_A": donor, "dI_defect_A": defect}
    res = SweepResult("B0_mT", B, "dI_A", total, cols, snap, ensemble.seed, meta)
    if contour_times is not None:
        ct = np.asarray(contour_times, dtype=float)

        def column(B0):
            pcfg = cfg.replace(B0=float(B0))

            def one(m):
                return member_transient(pcfg, m, pulse.B1, [pulse.length], ct, mw_freq=mw,
                                        phase=pulse.phase, drive=ensemble.species).samples[:, 0]

            return ensemble_average(ensemble, one)

        res.meta["contour_times_s"] = ct
        res.meta["contour"] = np.array(_pool_map(column, B, threads))
    return res


def _check_nyquist(cfg, taus, b1_max, detuning_max=0.0):
    d = np.diff(taus)
    if taus.ndim != 1 or taus.size < 8 or np.any(d <= 0) or np.ptp(d) > 1e-6 * d.mean():
        raise ConfigurationError("pulse-length grid must be uniform with >= 8 points")
    f_nyq = 0.5 / d.mean()
    gam = gyromagnetic(cfg.g_a)
    f_max = math.hypot(gam * b1_max * 1e-3, detuning_max) / (2 * math.pi)
    if f_max >= f_nyq:
        raise ConfigurationError(
            f"pulse-length step {d.mean():.3e} s cannot resolve nutation at {f_max:.4g} Hz "
            f"(Nyquist {f_nyq:.4g} Hz)"
        )


def _check_quadrature(ensemble: EnsembleSpec, gamma: float, b1: float, taus) -> None:
    # discrete Gauss-Hermite nodes rephase once the phase spread outgrows them
    if ensemble.b1_distribution != "gaussian" or ensemble.sampling != "quadrature":
        return
    spread = math.sqrt(2) * gamma * ensemble.b1_rel_sigma * b1 * 1e-3 * float(np.max(taus))
    if spread > 0.4 * ensemble.samples:
        warnings.warn(
            f"{ensemble.samples} quadrature nodes under-resolve the B1 spread over this "
            f"pulse-length range (phase spread {spread:.1f} rad); raise ensemble samples",
            stacklevel=3,
        )


def run_rabi_series(cfg: SpinPairConfig, taus, powers=None, b1_ref: float = 0.1,
                    p_ref: float = 1.0, *, b1_values=None, window=BoxcarWindow(),
                    grid=TransientGrid(), ensemble: EnsembleSpec | None = None,
                    zero_pad: int = 8, fft_window: str = "hann", mw_freq=None,
                    initial_state: str = "steady", threads: int = 1) -> RabiSeries:
    """Q(tau) for several microwave powers, their FFTs and the Omega-vs-B1 fit.

    B1 follows B1 = b1_ref sqrt(P / p_ref); alternatively pass ``b1_values``
    (mT) directly. The fit reports the slope of the peak nutation frequency
    against B1 divided by gamma of the donor.

    Sign convention: Q integrates dI = -kappa (R - R_ss), and with the
    default window the fast singlet term dominates, so singlet maxima after
    the pulse appear as extrema (minima) of Q.
    """
    ensemble = ensemble or EnsembleSpec()
    taus = np.asarray(taus, dtype=float)
    if b1_values is None:
        if powers is None:
            raise ParameterError("give either powers or b1_values")
        powers = np.asarray(powers, dtype=float)
        b1 = b1_from_power(powers, b1_ref, p_ref)
    else:
        b1 = np.asarray(b1_values, dtype=float)
        powers = p_ref * (b1 / b1_ref) ** 2 if b1_ref > 0 else np.full_like(b1, np.nan)
    mw = cfg.mw_freq if mw_freq is None else mw_freq
    b1_max = float(b1.max()) * max(s for s, _ in ensemble.b1_nodes())
    _check_nyquist(cfg, taus, b1_max)
    _check_quadrature(ensemble, gyromagnetic(cfg.g_a), float(b1.max()), taus)

    def charge_for(B1):
        def one(m):
            return member_charge(cfg, m, B1, taus, window=window, grid=grid, mw_freq=mw,
                                 drive=ensemble.species, initial_state=initial_state)

        return ensemble_average(ensemble, one, threads=threads)

    charges, spectra, peaks, results = [], [], [], []
    gam_hz = gyromagnetic(cfg.g_a) / (2 * math.pi) * 1e-3  # Hz per mT
    for k, B1 in enumerate(b1):
        q = charge_for(float(B1))
        spec = fft_of_Q(q, taus, zero_pad=zero_pad, window=fft_window,
                        scale=_charge_scale(cfg, window))
        f = peak_frequency(spec)
        charges.append(q)
        spectra.append(spec)
        peaks.append(f)
        results.append(SweepResult(
            "tau_s", taus, "Q_C", q,
            config=_snapshot(cfg, ensemble=ensemble, B1_mT=float(B1), power_W=float(powers[k]),
                             window=[window.t1, window.t2]),
            seed=ensemble.seed,
            meta={"peak_Hz": f, "B1_mT": float(B1), "power_W": float(powers[k])},
        ))
    peaks = np.array(peaks)
    if np.unique(b1).size >= 2:
        slope, intercept = np.polyfit(b1, peaks, 1)
        pred = slope * b1 + intercept
        ss_res = float(np.sum((peaks - pred) ** 2))
        ss_tot = float(np.sum((peaks - peaks.mean()) ** 2))
    else:
        # a single amplitude gives no line; report NaN rather than a fake fit
        slope = intercept = math.nan
        ss_res, ss_tot = math.nan, 0.0
    fit = {
        "slope_Hz_per_mT": float(slope),
        "intercept_Hz": float(intercept),
        "gamma_Hz_per_mT": gam_hz,
        "slope_over_gamma": float(slope / gam_hz),
        "r_squared": 1.0 - ss_res / ss_tot if ss_tot > 0 else math.nan,
        "bin_width_Hz": float(spectra[0].bin_width),
    }
    return RabiSeries(taus, b1, np.asarray(powers), charges, spectra, peaks, fit, results)


def run_detuning_map(cfg: SpinPairConfig, taus, B_grid, B1: float = 0.1, *,
                     nuclear_mI: float = -0.5, window=BoxcarWindow(), grid=TransientGrid(),
                     ensemble: EnsembleSpec | None = None, zero_pad: int = 8,
                     fft_window: str = "hann", mw_freq=None, threads: int = 1) -> DetuningMap:
    """FFT magnitude of Q(tau) versus B0 around one donor hyperfine line.

    Returns the peak-normalized magnitude grid (B0 x frequency), the ridge
    (peak frequency per field) and the uncoupled-spin prediction
    sqrt((gamma B1)^2 + (omega - omega_L)^2) for the chosen line.
    """
    ensemble = ensemble or EnsembleSpec()
    taus = np.asarray(taus, dtype=float)
    B = np.asarray(B_grid, dtype=float)
    mw = cfg.mw_freq if mw_freq is None else mw_freq
    gam = gyromagnetic(cfg.g_a)
    omega = 2 * math.pi * mw
    line = resonance_field(cfg.g_a, mw) - nuclear_mI * cfg.hyperfine_A
    det_max = gam * float(np.max(np.abs(B - line))) * 1e-3
    b1_max = B1 * max(s for s, _ in ensemble.b1_nodes())
    _check_nyquist(cfg, taus, b1_max, det_max)
    _check_quadrature(ensemble, gam, B1, taus)

    def column(B0):
        pcfg = cfg.replace(B0=float(B0))

        def one(m):
            return member_charge(pcfg, m, B1, taus, window=window, grid=grid, mw_freq=mw,
                                 drive=ensemble.species)

        q = ensemble_average(ensemble, one)
        spec = fft_of_Q(q, taus, zero_pad=zero_pad, window=fft_window,
                        scale=_charge_scale(cfg, window))
        return spec, peak_frequency(spec)

    cols = _pool_map(column, B, threads)
    mags = np.array([c[0].magnitude for c in cols])
    ridge = np.array([c[1] for c in cols])
    omega_L = gam * (B + nuclear_mI * cfg.hyperfine_A) * 1e-3
    predicted = rabi_frequency(gam, B1, omega, omega_L) / (2 * math.pi)
    freqs = cols[0][0].freqs
    result = SweepResult(
        "B0_mT", B, "fft_magnitude", mags,
        {"ridge_Hz": ridge, "predicted_Hz": predicted},
        _snapshot(cfg, ensemble=ensemble, B1_mT=B1, nuclear_mI=nuclear_mI),
        ensemble.seed,
        {"freqs_Hz": freqs, "line_mT": line},
    )
    return DetuningMap(result, freqs, ridge, predicted, float(cols[0][0].bin_width), line)


def gaussian_envelope(taus, gamma: float, b1_sigma: float) -> np.ndarray:
    """Closed-form damping exp(-(gamma sigma tau)^2 / 2) of a gaussian-B1 ensemble.

    ``gamma`` in rad/(s T), ``b1_sigma`` in mT.
    """
    return np.exp(-0.5 * (gamma * b1_sigma * 1e-3 * np.asarray(taus)) ** 2)


def resonant_config(cfg: SpinPairConfig, nuclear_mI: float = -0.5) -> SpinPairConfig:
    """Copy of ``cfg`` with B0 placed exactly on the chosen donor line."""
    return cfg.replace(B0=donor_resonance_field(cfg, nuclear_mI))

