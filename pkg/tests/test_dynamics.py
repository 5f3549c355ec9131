import math

import numpy as np
import pytest

from edmr.dynamics import (
    PROJECTORS,
    PulseSpec,
    SINGLET,
    apply_pulse,
    check_density_matrix,
    ket,
    nutation_trace,
    pulse_propagator,
    pure_state,
    rabi_frequency,
    rk4_propagate,
    singlet_content,
)
from edmr.errors import ConsistencyError, DegenerateStateError, ParameterError
from edmr.experiments import resonant_config, run_nutation
from edmr.sigproc import fft_of_Q, peak_frequency
from edmr.spinsys import (
    SpinPairConfig,
    build_rotating_hamiltonian,
    donor_resonance_field,
    gyromagnetic,
)

GAMMA_DONOR = 175750089682.91583


def resonant(**kw):
    cfg = SpinPairConfig(**kw)
    return cfg.replace(B0=donor_resonance_field(cfg, -0.5))


def test_projectors_complete_and_orthogonal():
    P = [PROJECTORS.P_S, PROJECTORS.P_T0, PROJECTORS.P_Tplus, PROJECTORS.P_Tminus]
    assert np.abs(sum(P) - np.eye(4)).max() < 1e-12
    for i, a in enumerate(P):
        assert np.abs(a @ a - a).max() < 1e-12
        for b in P[i + 1:]:
            assert np.abs(a @ b).max() < 1e-12


def test_singlet_vector():
    assert np.allclose(SINGLET, np.array([0, 1, -1, 0]) / math.sqrt(2))


def test_singlet_content_examples():
    assert singlet_content(PROJECTORS.P_S) == pytest.approx(1.0)
    assert singlet_content(pure_state(ket("dd"))) == pytest.approx(0.0)
    assert singlet_content(pure_state(ket("ud"))) == pytest.approx(0.5)
    with pytest.raises(DegenerateStateError):
        singlet_content(np.zeros((4, 4)))


def test_propagator_trivial_cases():
    H = build_rotating_hamiltonian(SpinPairConfig(), 0.1)
    assert np.allclose(pulse_propagator(H, 0.0), np.eye(4), atol=1e-14)
    assert np.allclose(pulse_propagator(np.zeros((4, 4)), 1e-6), np.eye(4), atol=1e-14)
    with pytest.raises(ConsistencyError):
        pulse_propagator(np.triu(np.ones((4, 4))), 1e-9)
    with pytest.raises(ParameterError):
        pulse_propagator(H, -1e-9)


def test_pi_pulse_flips_donor():
    cfg = resonant()
    B1 = 0.1
    H = build_rotating_hamiltonian(cfg, B1, drive="donor")
    tau = math.pi / (gyromagnetic(cfg.g_a) * B1 * 1e-3)
    U = pulse_propagator(H, tau)
    psi = U @ ket("dd")
    assert abs(abs(np.vdot(ket("ud"), psi)) - 1) < 1e-12
    rho = apply_pulse(pure_state(ket("dd")), U)
    assert np.allclose(rho, pure_state(ket("ud")), atol=1e-12)


def test_identity_pulse_and_trace():
    rho = np.diag([0.1, 0.2, 0.3, 0.15]).astype(complex)
    assert np.allclose(apply_pulse(rho, np.eye(4)), rho)
    U = pulse_propagator(build_rotating_hamiltonian(SpinPairConfig(), 0.3, phase=1.1), 3e-7)
    assert np.trace(apply_pulse(rho, U)).real == pytest.approx(0.75, abs=1e-14)


def test_rabi_frequency_examples():
    g = GAMMA_DONOR
    assert rabi_frequency(g, 0.1, 1.0, 1.0) == pytest.approx(g * 1e-4)
    assert rabi_frequency(g, 0.1, g * 1e-4, 0.0) == pytest.approx(math.sqrt(2) * g * 1e-4)
    # frozen: gamma(1.9985) * 0.1 mT / 2 pi
    assert rabi_frequency(g, 0.1, 0, 0) / (2 * math.pi) == pytest.approx(2797149.552188, rel=1e-9)
    with pytest.raises(ParameterError):
        rabi_frequency(g, -0.1, 0, 0)


def test_nutation_analytic_oracle():
    cfg = resonant()
    B1 = 0.1
    w = gyromagnetic(cfg.g_a) * B1 * 1e-3
    taus = np.linspace(0, 3 * 2 * math.pi / w, 2001)
    got = nutation_trace(cfg, taus, B1=B1, drive="donor")
    assert np.abs(got - 0.5 * np.sin(w * taus / 2) ** 2).max() < 1e-6


def test_defect_drive_is_a_small_correction():
    cfg = resonant()
    taus = np.linspace(0, 1e-6, 400)
    both = nutation_trace(cfg, taus, B1=0.1)
    donor = nutation_trace(cfg, taus, B1=0.1, drive="donor")
    # defect sits ~3 mT off resonance: a percent-level admixture at most
    assert np.abs(both - donor).max() < 2e-2


def test_nutation_pi_and_2pi():
    cfg = resonant()
    w = gyromagnetic(cfg.g_a) * 0.1e-3
    vals = nutation_trace(cfg, [math.pi / w, 2 * math.pi / w], B1=0.1)
    assert vals[0] == pytest.approx(0.5, abs=2e-3)
    assert vals[1] == pytest.approx(0.0, abs=2e-3)


def test_nutation_fft_peak_on_resonance():
    cfg = resonant()
    w = gyromagnetic(cfg.g_a) * 0.1e-3
    taus = 4e-9 * np.arange(1000)
    s = nutation_trace(cfg, taus, B1=0.1)
    spec = fft_of_Q(s, taus)
    assert abs(peak_frequency(spec) - w / (2 * math.pi)) < spec.bin_width


@pytest.mark.parametrize("offset_mT", [-0.3, 0.1, 0.25])
def test_nutation_fft_peak_off_resonance(offset_mT):
    base = resonant()
    cfg = base.replace(B0=base.B0 + offset_mT)
    gam = gyromagnetic(cfg.g_a)
    taus = 2e-9 * np.arange(2000)
    s = nutation_trace(cfg, taus, B1=0.1)
    spec = fft_of_Q(s, taus)
    expected = rabi_frequency(gam, 0.1, 0.0, gam * offset_mT * 1e-3) / (2 * math.pi)
    assert abs(peak_frequency(spec) - expected) < spec.bin_width


def test_rk4_matches_expm():
    cfg = resonant(J_coupling=2 * math.pi * 3e6)
    H = build_rotating_hamiltonian(cfg, 0.15, phase=0.3)
    rho0 = pure_state(ket("dd"))
    tau = 700e-9
    a = rk4_propagate(H, rho0, tau)
    U = pulse_propagator(H, tau)
    b = apply_pulse(rho0, U)
    assert np.linalg.norm(a - b) < 1e-8


def test_propagator_composition():
    H = build_rotating_hamiltonian(resonant(J_coupling=1e7), 0.2, phase=0.4)
    U1, U2, U12 = pulse_propagator(H, [1.3e-7, 2.1e-7, 3.4e-7])
    assert np.abs(U2 @ U1 - U12).max() < 1e-9


def test_check_density_matrix():
    check_density_matrix(pure_state(ket("ud")))
    with pytest.raises(ParameterError):
        check_density_matrix(np.diag([1.0, -0.1, 0, 0]))
    with pytest.raises(ParameterError):
        check_density_matrix(np.diag([1.0, 0.5, 0, 0]))
    with pytest.raises(ParameterError):
        check_density_matrix(np.triu(np.ones((4, 4))) * 0.1)


def test_pulse_spec_validation():
    assert PulseSpec().length == 480e-9
    with pytest.raises(ParameterError):
        PulseSpec(length=-1.0)
    with pytest.raises(ParameterError):
        PulseSpec(B1=-0.1)


def test_triplet_observables_sum():
    cfg = resonant(J_coupling=1e6)
    taus = np.linspace(0, 1e-6, 50)
    tot = sum(nutation_trace(cfg, taus, B1=0.1, observable=o)
              for o in ("singlet", "T0", "Tplus", "Tminus"))
    assert np.allclose(tot, 1.0, atol=1e-12)
    with pytest.raises(ParameterError):
        nutation_trace(cfg, taus, observable="quintet")


def test_strongly_coupled_pair_nutates_at_integer_multiples():
    # equal g, both spins resonant, J >> gamma B1: P_S is conserved and the
    # triplet manifold rotates as a spin-1 at gamma B1 (populations at 1x and 2x)
    cfg = resonant_config(SpinPairConfig(g_a=1.9985, g_b=1.9985, hyperfine_A=0.0,
                                         J_coupling=2 * math.pi * 50e6))
    gb1 = gyromagnetic(1.9985) * 1e-4 / (2 * math.pi)
    taus = 1e-9 * np.arange(4000)
    s = run_nutation(cfg, taus, 0.1).values
    assert np.ptp(s) < 1e-12
    t0 = run_nutation(cfg, taus, 0.1, observable="T0").values
    tm = run_nutation(cfg, taus, 0.1, observable="Tminus").values
    assert peak_frequency(fft_of_Q(t0, taus, scale=1.0)) / gb1 == pytest.approx(2.0, abs=0.01)
    assert peak_frequency(fft_of_Q(tm, taus, scale=1.0)) / gb1 == pytest.approx(1.0, abs=0.01)
