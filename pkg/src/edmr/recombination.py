"""
Spin-dependent recombination of donor/defect pairs.

The pair density matrix obeys

    d rho/dt = -i [H, rho] - r_S/2 {P_S, rho} - r_T/2 {P_T, rho} - d rho + G rho_gen

(Haberkorn form). Superoperators act on row-major vectorized matrices, so
``vec(A rho B) = kron(A, B.T) @ vec(rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .dynamics import PROJECTORS, ket, pure_state
from .errors import ConfigurationError, ParameterError, SteadyStateError
from .spinsys import (
    CONSTANTS,
    PairHamiltonian,
    SpinPairConfig,
    build_rotating_hamiltonian,
)

__all__ = [
    "RecombinationRates",
    "TransientTrace",
    "generation_state",
    "liouvillian",
    "liouville_step",
    "steady_state",
    "recombination_rate",
    "current_scale",
    "transient_kernel",
    "transient_current",
]

_I4 = np.eye(4, dtype=complex)


@dataclass(frozen=True)
class RecombinationRates:
    r_S: float = 2.0e5
    r_T: float = 3.0e4
    d: float = 0.0
    G: float = 1.0e4

    def __post_init__(self):
        for name in ("r_S", "r_T", "d", "G"):
            if getattr(self, name) < 0:
                raise ParameterError(f"rate {name} must be >= 0")

    @classmethod
    def from_config(cls, cfg: SpinPairConfig) -> "RecombinationRates":
        return cls(cfg.rate_singlet, cfg.rate_triplet, cfg.dissociation, cfg.generation)


@dataclass
class TransientTrace:
    """Post-pulse current change sampled at ``t0 + k dt`` (s); ``samples`` in A.

    ``samples`` may carry trailing axes (one column per pulse length).
    """

    t0: float
    dt: float
    samples: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("transient sample step must be > 0")
        self.samples = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(self.samples)):
            raise ParameterError("transient samples must be finite")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.shape[0])


def _hmat(H) -> np.ndarray:
    if H is None:
        return np.zeros((4, 4), dtype=complex)
    return H.matrix if isinstance(H, PairHamiltonian) else np.asarray(H, dtype=complex)


def generation_state(cfg: SpinPairConfig) -> np.ndarray:
    """Unit-trace state in which new pairs are created.

    'unpolarized' gives identity/4; 'thermal' uses Boltzmann Zeeman
    populations of both spins at ``cfg.temperature`` and ``cfg.B0``.
    """
    if cfg.generation_mode == "unpolarized":
        return _I4 / 4
    b = cfg.B0 * 1e-3
    pops = []
    for g in (cfg.g_a, cfg.g_b):
        x = g * CONSTANTS.mu_B * b / (2 * CONSTANTS.k_B * cfg.temperature)
        # spin-up is the upper Zeeman level for an electron
        pops.append(np.array([math.exp(-x), math.exp(x)]) / (2 * math.cosh(x)))
    return np.diag(np.kron(pops[0], pops[1])).astype(complex)


def liouvillian(H, rates: RecombinationRates) -> np.ndarray:
    """16x16 homogeneous generator (coherent part + recombination + dissociation)."""
    h = _hmat(H)
    ps, pt = PROJECTORS.P_S, PROJECTORS.P_T
    L = -1j * (np.kron(h, _I4) - np.kron(_I4, h.T))
    L -= 0.5 * rates.r_S * (np.kron(ps, _I4) + np.kron(_I4, ps.T))
    L -= 0.5 * rates.r_T * (np.kron(pt, _I4) + np.kron(_I4, pt.T))
    L -= rates.d * np.eye(16)
    return L


def liouville_step(rho, H, rates: RecombinationRates, dt: float, rho_gen=None) -> np.ndarray:
    """Advance ``rho`` by ``dt`` under the full equation of motion.

    The step is exact (augmented matrix exponential including the constant
    generation source), but ``dt`` must stay below 0.05 divided by the
    largest rate or Hamiltonian entry so that callers sample the dynamics
    finely.
    """
    if not dt > 0:
        raise ConfigurationError("liouville_step needs dt > 0")
    h = _hmat(H)
    scale = max(rates.r_S, rates.r_T, rates.d, np.abs(h).max())
    if dt * scale >= 0.05:
        raise ConfigurationError(
            f"step dt={dt:.3e} s too large: dt*max(rate, |H|)={dt * scale:.3g} >= 0.05"
        )
    gen = _I4 / 4 if rho_gen is None else np.asarray(rho_gen, dtype=complex)
    aug = np.zeros((17, 17), dtype=complex)
    aug[:16, :16] = liouvillian(h, rates)
    aug[:16, 16] = rates.G * gen.ravel()
    vec = np.append(np.asarray(rho, dtype=complex).ravel(), 1.0)
    out = expm(aug * dt) @ vec
    rho_new = out[:16].reshape(4, 4)
    return 0.5 * (rho_new + rho_new.conj().T)


def steady_state(
    cfg: SpinPairConfig,
    nuclear_mI: float = -0.5,
    *,
    mode: str = "recombination",
    mw_freq: float | None = None,
) -> np.ndarray:
    """Stationary pair state with the microwave off.

    ``mode='recombination'`` solves L vec(rho) = -G vec(rho_gen) directly; the
    fast singlet channel depletes the mixed-symmetry states, leaving a
    T+/T- rich ensemble. ``mode='low-temperature'`` returns the fully
    polarized ``|dd>`` state carrying the same pair density. The two modes
    encode different preparation assumptions and are not reconciled here.
    """
    rates = RecombinationRates.from_config(cfg)
    if rates.G <= 0 or rates.r_S <= 0:
        raise ParameterError("steady state needs generation > 0 and rate_singlet > 0")
    if mode not in ("recombination", "low-temperature"):
        raise ParameterError(f"unknown steady-state mode {mode!r}")
    H0 = build_rotating_hamiltonian(cfg, 0.0, nuclear_mI, mw_freq=mw_freq)
    L = liouvillian(H0, rates)
    src = -rates.G * generation_state(cfg).ravel()
    cond = np.linalg.cond(L)
    if not np.isfinite(cond) or cond > 1e13:
        raise SteadyStateError(
            f"no stationary state: generator condition number {cond:.3e} "
            f"(rates r_S={rates.r_S}, r_T={rates.r_T}, d={rates.d})"
        )
    rho = np.linalg.solve(L, src).reshape(4, 4)
    rho = 0.5 * (rho + rho.conj().T)
    residual = np.linalg.norm(L @ rho.ravel() - src) / max(np.linalg.norm(src), 1e-300)
    if residual > 1e-8:
        raise SteadyStateError(f"steady-state residual {residual:.3e} above 1e-8")
    if mode == "low-temperature":
        return pure_state(ket("dd"), np.trace(rho).real)
    return rho


def _rate_operator(rates: RecombinationRates) -> np.ndarray:
    return rates.r_S * PROJECTORS.P_S + rates.r_T * PROJECTORS.P_T


def recombination_rate(rho, rates: RecombinationRates):
    """R = r_S Tr(P_S rho) + r_T Tr(P_T rho); works on stacks."""
    return np.einsum("ij,...ji->...", _rate_operator(rates), rho).real


def current_scale(cfg: SpinPairConfig, rho_ss=None, nuclear_mI: float = -0.5) -> float:
    """Current per unit recombination-rate change (A s).

    Unless ``cfg.current_scale`` is set, one elementary charge per event is
    assumed with the pair count fixed so that the stationary recombination
    current equals ``cfg.offset_current``; this reduces to
    ``offset_current / R_ss``.
    """
    if cfg.current_scale is not None:
        return cfg.current_scale
    if rho_ss is None:
        rho_ss = steady_state(cfg, nuclear_mI)
    r_ss = recombination_rate(rho_ss, RecombinationRates.from_config(cfg))
    return cfg.offset_current / r_ss


def _uniform_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ParameterError("time grid must be 1-D with at least two samples")
    dt = (t[-1] - t[0]) / (t.size - 1)
    if dt <= 0 or np.abs(np.diff(t) - dt).max() > 1e-9 * max(abs(t[-1]), dt):
        raise ParameterError("time grid must be uniform and increasing")
    if t[0] < 0:
        raise ParameterError("time grid must start at t0 >= 0")
    return t[0], dt, t.size


def transient_kernel(H, rates: RecombinationRates, t_grid) -> np.ndarray:
    """Rows k of shape (N, 16) with R(t_k) = row_k . vec(delta_rho(0)).

    ``delta_rho`` evolves under the homogeneous generator only (generation
    cancels in the difference), which keeps the current linear in the
    state perturbation.
    """
    t0, dt, n = _uniform_grid(t_grid)
    L = liouvillian(H, rates)
    step = expm(L * dt)
    row = _rate_operator(rates).T.ravel() @ expm(L * t0)
    rows = np.empty((n, 16), dtype=complex)
    for k in range(n):
        rows[k] = row
        row = row @ step
    return rows


def transient_current(
    rho_after,
    rho_ss,
    rates: RecombinationRates,
    t_grid,
    *,
    H=None,
    kappa: float = 1.0,
    metadata: dict | None = None,
) -> TransientTrace:
    """Photocurrent change dI(t) = -kappa [R(t) - R_ref(t)] after a pulse.

    ``rho_ss`` is the reference (unpulsed) state propagated alongside; for a
    stationary reference R_ref is constant. ``rho_after`` may be a stack of
    shape ``(M, 4, 4)``, giving samples of shape ``(N, M)``. ``H`` is the
    drive-free Hamiltonian acting after the pulse (zero if omitted).
    """
    t0, dt, _ = _uniform_grid(t_grid)
    rows = transient_kernel(H, rates, t_grid)
    delta = np.asarray(rho_after) - np.asarray(rho_ss)
    flat = delta.reshape(delta.shape[:-2] + (16,))
    samples = -kappa * (rows @ flat.T).real
    return TransientTrace(t0=t0, dt=dt, samples=samples, metadata=dict(metadata or {}))
