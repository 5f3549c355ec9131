"""
Physical constants, pair parameters and the rotating-frame pair Hamiltonian.

Spin a is the 31P donor electron, spin b the P_b0 interface defect. Product
basis ordering is ``|uu>, |ud>, |du>, |dd>`` with the donor written first.
All Hamiltonians are stored as H/hbar in rad/s; magnetic fields cross the
API in mT and are converted to tesla internally.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import ParameterError

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "SpinPairConfig",
    "PairHamiltonian",
    "BASIS",
    "gyromagnetic",
    "larmor",
    "resonance_field",
    "donor_resonance_field",
    "detunings",
    "build_rotating_hamiltonian",
    "spin_operator",
]


@dataclass(frozen=True)
class PhysicalConstants:
    mu_B: float = 9.2740100783e-24  # J/T
    hbar: float = 1.054571817e-34  # J s
    h: float = 6.62607015e-34  # J s
    k_B: float = 1.380649e-23  # J/K
    e: float = 1.602176634e-19  # C


CONSTANTS = PhysicalConstants()

BASIS = ("uu", "ud", "du", "dd")

_SX = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
_SY = np.array([[0, -0.5j], [0.5j, 0]], dtype=complex)
_SZ = np.array([[0.5, 0], [0, -0.5]], dtype=complex)
_ONE = np.eye(2, dtype=complex)


def spin_operator(spin: str, axis: str) -> np.ndarray:
    """4x4 single-spin operator for ``spin`` in {'a', 'b'} and ``axis`` in {'x','y','z'}."""
    single = {"x": _SX, "y": _SY, "z": _SZ}[axis]
    factors = (single, _ONE) if spin == "a" else (_ONE, single)
    return reduce(np.kron, factors)


_SA = [spin_operator("a", ax) for ax in "xyz"]
_SB = [spin_operator("b", ax) for ax in "xyz"]
_SASB = sum(a @ b for a, b in zip(_SA, _SB))


@dataclass(frozen=True)
class SpinPairConfig:
    """All physical parameters of one donor/defect pair.

    Units: ``hyperfine_A`` and ``B0`` in mT, ``J_coupling`` in rad/s,
    ``mw_freq`` in Hz, rates in 1/s, ``temperature`` in K and
    ``offset_current`` in A. ``current_scale`` (A per unit recombination
    rate change) overrides the default calibration when given.
    """

    g_a: float = 1.9985
    g_b: float = 2.0039
    hyperfine_A: float = 4.2
    J_coupling: float = 0.0
    B0: float = 350.3
    mw_freq: float = 9.7411e9
    rate_singlet: float = 2.0e5
    rate_triplet: float = 3.0e4
    generation: float = 1.0e4
    dissociation: float = 0.0
    temperature: float = 5.0
    offset_current: float = 50e-6
    current_scale: float | None = None
    generation_mode: str = "unpolarized"

    def __post_init__(self):
        for name in ("g_a", "g_b"):
            g = getattr(self, name)
            if not 0.0 < g < 5.0:
                raise ParameterError(f"{name}={g} outside (0, 5)")
        for name in ("rate_singlet", "rate_triplet", "generation", "dissociation"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.B0 <= 0:
            raise ParameterError(f"B0 must be > 0, got {self.B0}")
        if self.mw_freq <= 0:
            raise ParameterError(f"mw_freq must be > 0, got {self.mw_freq}")
        if self.hyperfine_A < 0:
            raise ParameterError("hyperfine_A must be >= 0")
        if self.temperature <= 0:
            raise ParameterError("temperature must be > 0")
        if self.current_scale is not None and self.current_scale <= 0:
            raise ParameterError("current_scale must be > 0 when given")
        if self.generation_mode not in ("unpolarized", "thermal"):
            raise ParameterError(f"unknown generation_mode {self.generation_mode!r}")
        if self.rate_singlet < self.rate_triplet:
            warnings.warn(
                "rate_singlet < rate_triplet: singlet channel is not the fast one",
                stacklevel=2,
            )

    def replace(self, **changes) -> "SpinPairConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class PairHamiltonian:
    matrix: np.ndarray = field(repr=False)
    frame: str = "rotating"
    basis: tuple = BASIS

    def __post_init__(self):
        m = self.matrix
        scale = max(np.linalg.norm(m), 1.0)
        if np.linalg.norm(m - m.conj().T) > 1e-12 * scale:
            raise ParameterError("pair Hamiltonian is not Hermitian")


def gyromagnetic(g: float) -> float:
    """gamma = g mu_B / hbar in rad s^-1 T^-1."""
    if not g > 0:
        raise ParameterError(f"g must be positive, got {g}")
    return g * CONSTANTS.mu_B / CONSTANTS.hbar


def larmor(g: float, B: float) -> float:
    """Larmor angular frequency (rad/s) for field ``B`` in mT."""
    if not B > 0:
        raise ParameterError(f"field must be positive, got {B} mT")
    return gyromagnetic(g) * B * 1e-3


def resonance_field(g: float, mw_freq: float, shift: float = 0.0) -> float:
    """Field (mT) where a spin with ``g`` is resonant with ``mw_freq`` (Hz), plus ``shift`` mT."""
    return 2 * math.pi * mw_freq / gyromagnetic(g) * 1e3 + shift


def donor_resonance_field(cfg: SpinPairConfig, nuclear_mI: float = -0.5) -> float:
    """Field (mT) of the donor line belonging to nuclear projection ``nuclear_mI``.

    The hyperfine field adds ``m_I * A`` to the donor's local field, so the
    m_I = -1/2 line sits on the high-field side.
    """
    return resonance_field(cfg.g_a, cfg.mw_freq) - nuclear_mI * cfg.hyperfine_A


def detunings(cfg: SpinPairConfig, nuclear_mI: float, mw_freq: float | None = None):
    """(delta_a, delta_b) in rad/s for the rotating frame at ``mw_freq``."""
    omega = 2 * math.pi * (cfg.mw_freq if mw_freq is None else mw_freq)
    delta_a = gyromagnetic(cfg.g_a) * (cfg.B0 + nuclear_mI * cfg.hyperfine_A) * 1e-3 - omega
    delta_b = gyromagnetic(cfg.g_b) * cfg.B0 * 1e-3 - omega
    return delta_a, delta_b


def build_rotating_hamiltonian(
    cfg: SpinPairConfig,
    B1: float,
    nuclear_mI: float = -0.5,
    *,
    phase: float = 0.0,
    mw_freq: float | None = None,
    drive: str = "both",
) -> PairHamiltonian:
    """Rotating-wave pair Hamiltonian H/hbar (rad/s).

    H = da Sz_a + db Sz_b + B1 (gamma_a S_phi_a + gamma_b S_phi_b) + J S_a.S_b

    ``drive`` restricts the microwave term to one partner ('donor' or
    'defect'); this is used to split a spectrum into species components.
    """
    if B1 < 0:
        raise ParameterError(f"B1 must be >= 0, got {B1}")
    if nuclear_mI not in (0.5, -0.5):
        raise ParameterError(f"nuclear_mI must be +-1/2, got {nuclear_mI}")
    if drive not in ("both", "donor", "defect"):
        raise ParameterError(f"unknown drive selection {drive!r}")
    da, db = detunings(cfg, nuclear_mI, mw_freq)
    b1 = B1 * 1e-3
    c, s = math.cos(phase), math.sin(phase)
    h = da * _SA[2] + db * _SB[2] + cfg.J_coupling * _SASB
    if drive in ("both", "donor"):
        h = h + gyromagnetic(cfg.g_a) * b1 * (c * _SA[0] + s * _SA[1])
    if drive in ("both", "defect"):
        h = h + gyromagnetic(cfg.g_b) * b1 * (c * _SB[0] + s * _SB[1])
    h = 0.5 * (h + h.conj().T)
    return PairHamiltonian(matrix=h)
