"""Coherent pulse propagation of the pair density matrix.

Density matrices are plain ``(4, 4)`` complex arrays in the product basis
(stacks of shape ``(..., 4, 4)`` are accepted wherever noted). Their trace is
the surviving pair density, so it need not equal one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DegenerateStateError, ParameterError
from .spinsys import PairHamiltonian, SpinPairConfig, build_rotating_hamiltonian

__all__ = [
    "PulseSpec",
    "PairProjectors",
    "PROJECTORS",
    "ket",
    "SINGLET",
    "TRIPLET_ZERO",
    "pure_state",
    "check_density_matrix",
    "pulse_propagator",
    "apply_pulse",
    "singlet_content",
    "population",
    "rabi_frequency",
    "nutation_trace",
    "rk4_propagate",
]

_INDEX = {"uu": 0, "ud": 1, "du": 2, "dd": 3}


def ket(label: str) -> np.ndarray:
    """Product-basis vector, e.g. ``ket('dd')`` for both spins down."""
    v = np.zeros(4, dtype=complex)
    v[_INDEX[label]] = 1.0
    return v


SINGLET = (ket("ud") - ket("du")) / math.sqrt(2)
TRIPLET_ZERO = (ket("ud") + ket("du")) / math.sqrt(2)


def pure_state(vec, density: float = 1.0) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return density * np.outer(v, v.conj())


@dataclass(frozen=True)
class PulseSpec:
    """Rectangular microwave pulse: ``length`` in s, ``B1`` in mT, ``phase`` in rad.

    ``mw_freq`` (Hz) falls back to the pair configuration when None.
    """

    length: float = 480e-9
    B1: float = 0.0372
    mw_freq: float | None = None
    phase: float = 0.0

    def __post_init__(self):
        if self.length < 0:
            raise ParameterError(f"pulse length must be >= 0, got {self.length}")
        if self.B1 < 0:
            raise ParameterError(f"B1 must be >= 0, got {self.B1}")
        if self.mw_freq is not None and self.mw_freq <= 0:
            raise ParameterError("pulse mw_freq must be > 0")


@dataclass(frozen=True)
class PairProjectors:
    P_S: np.ndarray
    P_T0: np.ndarray
    P_Tplus: np.ndarray
    P_Tminus: np.ndarray

    @property
    def P_T(self) -> np.ndarray:
        return self.P_T0 + self.P_Tplus + self.P_Tminus


PROJECTORS = PairProjectors(
    P_S=pure_state(SINGLET),
    P_T0=pure_state(TRIPLET_ZERO),
    P_Tplus=pure_state(ket("uu")),
    P_Tminus=pure_state(ket("dd")),
)


def check_density_matrix(rho, *, herm_tol=1e-10, pos_tol=1e-9, trace_max=1.0 + 1e-9):
    """Raise ``ParameterError`` unless ``rho`` is a valid pair density matrix."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ParameterError(f"density matrix must be 4x4, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > herm_tol:
        raise ParameterError("density matrix is not Hermitian")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if evals.min() < -pos_tol:
        raise ParameterError(f"density matrix has negative eigenvalue {evals.min():.3e}")
    tr = np.trace(rho).real
    if not -pos_tol <= tr <= trace_max:
        raise ParameterError(f"density matrix trace {tr} outside [0, 1]")
    return rho


def _hamiltonian_matrix(H) -> np.ndarray:
    m = H.matrix if isinstance(H, PairHamiltonian) else np.asarray(H, dtype=complex)
    scale = max(np.linalg.norm(m), 1.0)
    if np.linalg.norm(m - m.conj().T) > 1e-10 * scale:
        raise ConsistencyError("propagator requested for a non-Hermitian Hamiltonian")
    return m


def pulse_propagator(H, tau):
    """U = exp(-i H tau) for H/hbar in rad/s.

    ``tau`` may be a scalar or a 1-D array of pulse lengths; in the latter case
    a stack of shape ``(len(tau), 4, 4)`` is returned. The exponential is taken
    through the eigendecomposition of the Hermitian matrix.
    """
    m = _hamiltonian_matrix(H)
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise ParameterError("pulse length must be >= 0")
    evals, evecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    phases = np.exp(-1j * np.multiply.outer(tau_arr, evals))
    return np.einsum("ij,...j,kj->...ik", evecs, phases, evecs.conj())


def apply_pulse(rho, U):
    """rho -> U rho U^dagger (``U`` may be a stack)."""
    return U @ rho @ np.swapaxes(U.conj(), -1, -2)


def population(rho, projector) -> np.ndarray:
    """Tr(P rho) for one state or a stack, returned as real values."""
    return np.einsum("ij,...ji->...", projector, rho).real


def singlet_content(rho):
    """Tr(P_S rho) / Tr(rho); works on stacks."""
    tr = np.einsum("...ii->...", rho).real
    if np.any(np.abs(tr) <= 0):
        raise DegenerateStateError("singlet content undefined for zero-trace state")
    return population(rho, PROJECTORS.P_S) / tr


def rabi_frequency(gamma: float, B1: float, omega: float, omega_L: float) -> float:
    """Generalized nutation frequency sqrt((gamma B1)^2 + (omega - omega_L)^2), rad/s.

    ``gamma`` in rad/(s T), ``B1`` in mT, both frequencies in rad/s.
    """
    if np.any(np.asarray(B1) < 0):
        raise ParameterError("B1 must be >= 0")
    return np.hypot(gamma * np.asarray(B1) * 1e-3, np.asarray(omega) - np.asarray(omega_L))


def nutation_trace(
    cfg: SpinPairConfig,
    taus,
    rho0=None,
    *,
    B1: float = 0.1,
    nuclear_mI: float = -0.5,
    phase: float = 0.0,
    mw_freq: float | None = None,
    observable: str = "singlet",
    drive: str = "both",
) -> np.ndarray:
    """Observable right after a pulse of each length in ``taus``.

    ``observable`` is 'singlet' (singlet content) or one of 'T0', 'Tplus',
    'Tminus' (normalized population). Starting from ``|dd>`` with J = 0 and
    resonant drive, the singlet content follows 1/2 sin^2(gamma B1 tau / 2):
    one flipped spin leaves a product state that is half singlet, so the
    nutation saturates at 1/2, not 1. That closed form is exact for
    ``drive='donor'``; driving both spins adds a small off-resonant defect term.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or np.any(np.diff(taus) < 0):
        raise ParameterError("pulse-length grid must be 1-D and monotone")
    if rho0 is None:
        rho0 = pure_state(ket("dd"))
    H = build_rotating_hamiltonian(cfg, B1, nuclear_mI, phase=phase, mw_freq=mw_freq, drive=drive)
    rhos = apply_pulse(rho0, pulse_propagator(H, taus))
    if observable == "singlet":
        return singlet_content(rhos)
    proj = {"T0": PROJECTORS.P_T0, "Tplus": PROJECTORS.P_Tplus, "Tminus": PROJECTORS.P_Tminus}
    if observable not in proj:
        raise ParameterError(f"unknown observable {observable!r}")
    tr = np.einsum("...ii->...", rhos).real
    return population(rhos, proj[observable]) / tr


def rk4_propagate(H, rho0, tau: float, dt: float | None = None) -> np.ndarray:
    """Fixed-step RK4 integration of d rho/dt = -i [H, rho].

    Independent of the eigendecomposition route; used as a cross-check.
    Default step is 1/(1000 f_max), f_max being the largest |eigenvalue| / 2 pi.
    """
    m = _hamiltonian_matrix(H)
    if dt is None:
        fmax = max(np.abs(np.linalg.eigvalsh(m)).max() / (2 * math.pi), 1.0)
        dt = 1.0 / (1000 * fmax)
    n = max(int(math.ceil(tau / dt)), 1)
    h = tau / n
    rho = np.array(rho0, dtype=complex)

    def f(r):
        return -1j * (m @ r - r @ m)

    for _ in range(n):
        k1 = f(rho)
        k2 = f(rho + 0.5 * h * k1)
        k3 = f(rho + 0.5 * h * k2)
        k4 = f(rho + h * k3)
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho

