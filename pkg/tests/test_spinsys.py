import math

import numpy as np
import pytest

from edmr.errors import ParameterError
from edmr.spinsys import (
    CONSTANTS,
    SpinPairConfig,
    build_rotating_hamiltonian,
    detunings,
    donor_resonance_field,
    gyromagnetic,
    larmor,
    resonance_field,
    spin_operator,
)

# Frozen from plain arithmetic g * mu_B / hbar with CODATA-2018 constants
GAMMA_G2 = 175882001183.80368
GAMMA_DONOR = 175750089682.91583


def test_constants_consistent():
    assert CONSTANTS.h == pytest.approx(2 * math.pi * CONSTANTS.hbar, rel=1e-12)
    assert CONSTANTS.mu_B == 9.2740100783e-24


@pytest.mark.parametrize("g, expected", [(2.0, GAMMA_G2), (1.9985, GAMMA_DONOR)])
def test_gyromagnetic_values(g, expected):
    assert gyromagnetic(g) == pytest.approx(expected, rel=1e-12)
    assert gyromagnetic(g) == pytest.approx(float(f"{expected:.5e}"), rel=1e-5)


@pytest.mark.parametrize("g", [0.0, -1.0])
def test_gyromagnetic_rejects_nonpositive(g):
    with pytest.raises(ParameterError):
        gyromagnetic(g)


@pytest.mark.parametrize("g, B", [(1.9985, 348.25), (2.0039, 347.31)])
def test_larmor_at_line_centres(g, B):
    assert larmor(g, B) / (2 * math.pi) == pytest.approx(9.7411e9, rel=2e-5)


def test_larmor_linear():
    assert larmor(2.0, 700.0) == pytest.approx(2 * larmor(2.0, 350.0), rel=1e-14)
    assert larmor(4.0, 350.0) == pytest.approx(2 * larmor(2.0, 350.0), rel=1e-14)


def test_resonance_field_positions():
    # inversion of the resonance condition, computed independently
    assert resonance_field(1.9985, 9.7411e9) == pytest.approx(348.2509539892237, rel=1e-12)
    cfg = SpinPairConfig()
    assert donor_resonance_field(cfg, -0.5) == pytest.approx(350.35095398922374, rel=1e-12)
    assert donor_resonance_field(cfg, +0.5) == pytest.approx(346.1509539892237, rel=1e-12)


def test_config_validation():
    with pytest.raises(ParameterError):
        SpinPairConfig(g_a=0.0)
    with pytest.raises(ParameterError):
        SpinPairConfig(g_b=5.0)
    with pytest.raises(ParameterError):
        SpinPairConfig(rate_singlet=-1.0)
    with pytest.raises(ParameterError):
        SpinPairConfig(B0=0.0)
    with pytest.raises(ParameterError):
        SpinPairConfig(mw_freq=-1.0)
    with pytest.warns(UserWarning):
        SpinPairConfig(rate_singlet=1e3, rate_triplet=1e4)


def test_undriven_resonant_uncoupled_is_zero():
    cfg = SpinPairConfig(g_b=1.9985, hyperfine_A=0.0)
    cfg = cfg.replace(B0=resonance_field(1.9985, cfg.mw_freq))
    H = build_rotating_hamiltonian(cfg, 0.0)
    assert np.abs(H.matrix).max() < 1e-6 * gyromagnetic(2.0) * 1e-3


def test_kronecker_sum_structure_and_eigenvalues():
    cfg = SpinPairConfig(B0=350.0)
    B1 = 0.1
    H = build_rotating_hamiltonian(cfg, B1).matrix
    da, db = detunings(cfg, -0.5)
    sx = np.array([[0, 0.5], [0.5, 0]])
    sz = np.diag([0.5, -0.5])
    ha = da * sz + gyromagnetic(cfg.g_a) * B1 * 1e-3 * sx
    hb = db * sz + gyromagnetic(cfg.g_b) * B1 * 1e-3 * sx
    expected = np.kron(ha, np.eye(2)) + np.kron(np.eye(2), hb)
    assert np.abs(H - expected).max() <= 1e-12 * np.abs(expected).max()
    wa = 0.5 * math.hypot(da, gyromagnetic(cfg.g_a) * B1 * 1e-3)
    wb = 0.5 * math.hypot(db, gyromagnetic(cfg.g_b) * B1 * 1e-3)
    ev = np.sort(np.linalg.eigvalsh(H))
    ref = np.sort([sa * wa + sb * wb for sa in (1, -1) for sb in (1, -1)])
    assert np.allclose(ev, ref, rtol=1e-12, atol=1e-3)


def test_high_field_line_is_resonant():
    cfg = SpinPairConfig(B0=350.3)
    da, _ = detunings(cfg, -0.5)
    # within 0.06 mT of resonance, i.e. small next to the hyperfine splitting
    assert abs(da) < gyromagnetic(cfg.g_a) * 0.06e-3
    exact = cfg.replace(B0=donor_resonance_field(cfg, -0.5))
    assert abs(detunings(exact, -0.5)[0]) < 1e-3


def test_nuclear_flip_shifts_donor_only():
    cfg = SpinPairConfig()
    da_m, db_m = detunings(cfg, -0.5)
    da_p, db_p = detunings(cfg, 0.5)
    assert da_p - da_m == pytest.approx(gyromagnetic(cfg.g_a) * cfg.hyperfine_A * 1e-3, rel=1e-12)
    assert db_p == db_m


def test_hamiltonian_hermitian_with_phase_and_exchange():
    cfg = SpinPairConfig(J_coupling=2 * math.pi * 50e6)
    H = build_rotating_hamiltonian(cfg, 0.2, phase=0.7).matrix
    assert np.linalg.norm(H - H.conj().T) <= 1e-12 * np.linalg.norm(H)


def test_drive_selection():
    cfg = SpinPairConfig()
    full = build_rotating_hamiltonian(cfg, 0.1).matrix
    a = build_rotating_hamiltonian(cfg, 0.1, drive="donor").matrix
    b = build_rotating_hamiltonian(cfg, 0.1, drive="defect").matrix
    zero = build_rotating_hamiltonian(cfg, 0.0).matrix
    assert np.allclose(a + b - zero, full, rtol=0, atol=1e-3)
    with pytest.raises(ParameterError):
        build_rotating_hamiltonian(cfg, 0.1, drive="nuclear")
    with pytest.raises(ParameterError):
        build_rotating_hamiltonian(cfg, 0.1, nuclear_mI=1.0)


def test_spin_operators_commute_across_spins():
    for ax in "xyz":
        for bx in "xyz":
            a, b = spin_operator("a", ax), spin_operator("b", bx)
            assert np.allclose(a @ b, b @ a)
