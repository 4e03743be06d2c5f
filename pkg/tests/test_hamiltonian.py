"""Hamiltonian builders: drive conventions, dressing, gradient, comb shifts."""

import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from dressedion.core import basis_state, dressed_transform, population, tensor_with_fock, destroy
from dressedion.hamiltonian import (
    CombSpec,
    DriveField,
    IonLevels,
    TrapMode,
    build_mqg,
    build_sqg_interaction,
    build_time_dependent,
    comb_stark_shifts,
    floquet_shifts,
    fock_overflow_warning,
    gradient_operator,
    motional_operator,
    polaron_transform,
    sideband_effective,
)

TAU = 2 * np.pi
SQ2 = np.sqrt(2.0)
LEVELS = IonLevels(omega0=TAU * 12.64e9, lambda0=TAU * 14.0e6)
OMEGA = TAU * 36.5e3


from conftest import evolve_reference as _evolve


def test_validation_of_static_inputs():
    with pytest.raises(ValueError):
        IonLevels(omega0=0.0, lambda0=1.0)
    with pytest.raises(ValueError):
        IonLevels(omega0=1.0, lambda0=-1.0)
    with pytest.raises(ValueError):
        DriveField("0<->0'", 1.0)
    with pytest.raises(ValueError):
        DriveField("-1<->0", -1.0)
    with pytest.raises(ValueError):
        TrapMode(nu=TAU * 200e3, lambda_grad=0.0, n_fock=1)


def test_trap_mode_eta_roundtrip():
    mode = TrapMode.from_eta(nu=TAU * 200e3, eta=0.05, n_fock=8)
    assert mode.eta == pytest.approx(0.05)
    assert mode.lambda_grad == pytest.approx(0.05 * TAU * 200e3)


def test_sqg_spectrum():
    omega_g = OMEGA / 100
    vals = np.sort(np.linalg.eigvalsh(build_sqg_interaction(OMEGA, omega_g)))
    expected = np.sort([OMEGA / SQ2, -OMEGA / SQ2, SQ2 * omega_g, -SQ2 * omega_g])
    np.testing.assert_allclose(vals, expected, rtol=1e-12)


def test_sqg_protected_column_without_gate():
    h = build_sqg_interaction(OMEGA, 0.0)
    frame = dressed_transform(0.0)
    np.testing.assert_allclose(h @ frame.column("D"), np.zeros(4), atol=1e-12)
    np.testing.assert_allclose(h @ frame.column("u"),
                               (OMEGA / SQ2) * frame.column("u"), atol=1e-9)


def test_sqg_gate_flop_is_exact():
    # from |0'> the gate block gives P_D(t) = sin^2(sqrt(2) omega_g t)
    omega_g = TAU * 1e3
    h = build_sqg_interaction(OMEGA, omega_g)
    frame = dressed_transform(0.0)
    psi0 = basis_state("0'")
    for t in (0.1e-3, 0.25e-3, np.pi / (2 * SQ2 * omega_g)):
        psi = expm(-1j * h * t) @ psi0
        assert population(psi, "D", frame) == pytest.approx(
            np.sin(SQ2 * omega_g * t) ** 2, abs=1e-12)
        assert population(psi, "0") == pytest.approx(0.0, abs=1e-24)


def test_dressing_pair_reduces_to_sqg():
    drives = [DriveField("-1<->0", OMEGA), DriveField("+1<->0", OMEGA)]
    hfun = build_time_dependent(LEVELS, drives)
    for t in (0.0, 1.7e-6, 3.1e-4):
        np.testing.assert_allclose(hfun(t), build_sqg_interaction(OMEGA, 0.0), atol=1e-9)


def test_full_drive_set_reduces_to_sqg():
    # resonant dressing pair plus rf pair with phases (0, pi): protected gate
    w = TAU * 2e3
    drives = [
        DriveField("-1<->0", OMEGA),
        DriveField("+1<->0", OMEGA),
        DriveField("-1<->0'", w),
        DriveField("+1<->0'", w, phase=np.pi),
    ]
    hfun = build_time_dependent(LEVELS, drives)
    np.testing.assert_allclose(hfun(0.37e-3), build_sqg_interaction(OMEGA, w / 2),
                               atol=1e-9)


def test_full_drive_set_at_pi_dressing_phase():
    # dressing phases (0, pi) with rf phases (0, 0) protect the symmetric state
    w = TAU * 2e3
    drives = [
        DriveField("-1<->0", OMEGA),
        DriveField("+1<->0", OMEGA, phase=np.pi),
        DriveField("-1<->0'", w),
        DriveField("+1<->0'", w),
    ]
    hfun = build_time_dependent(LEVELS, drives)
    np.testing.assert_allclose(
        hfun(0.11e-3), build_sqg_interaction(OMEGA, w / 2, relative_phase=np.pi),
        atol=1e-9)


@settings(max_examples=50)
@given(st.floats(min_value=-3.1, max_value=3.1))
def test_rf_phase_rule_tracks_dressing_phase(p):
    # rf |+1>-tone phase = dressing |+1>-tone phase + pi selects the
    # protected column; drive phases (0, p) realize the frame at -p
    w = TAU * 2e3
    drives = [
        DriveField("-1<->0", OMEGA),
        DriveField("+1<->0", OMEGA, phase=p),
        DriveField("-1<->0'", w),
        DriveField("+1<->0'", w, phase=p + np.pi),
    ]
    h = build_time_dependent(LEVELS, drives)(0.123e-3)
    np.testing.assert_allclose(h, build_sqg_interaction(OMEGA, w / 2, -p),
                               atol=1e-9 * OMEGA)


def test_rf_equal_phases_couple_unprotected_partner():
    w = TAU * 2e3
    drives = [
        DriveField("-1<->0", OMEGA),
        DriveField("+1<->0", OMEGA),
        DriveField("-1<->0'", w),
        DriveField("+1<->0'", w),
    ]
    h = build_time_dependent(LEVELS, drives)(0.0)
    frame = dressed_transform(0.0)
    zp = frame.column("0'")
    assert abs(frame.column("D").conj() @ h @ zp) < 1e-12
    assert frame.column("B").conj() @ h @ zp == pytest.approx(w / SQ2, rel=1e-12)


def test_drive_element_phase_evolution():
    delta, phase = TAU * 5e3, 0.7
    hfun = build_time_dependent(LEVELS, [DriveField("-1<->0", OMEGA, delta, phase)])
    t = 2.3e-5
    expected = 0.5 * OMEGA * np.exp(-1j * (delta * t + phase))
    assert hfun(t)[2, 0] == pytest.approx(expected, rel=1e-12)
    assert hfun(t)[0, 2] == pytest.approx(np.conj(expected), rel=1e-12)


def test_envelope_is_applied():
    env = lambda t: np.sin(t) ** 2
    hfun = build_time_dependent(LEVELS, [DriveField("-1<->0", OMEGA, envelope=env)])
    assert hfun(0.3)[2, 0] == pytest.approx(0.5 * OMEGA * np.sin(0.3) ** 2, rel=1e-12)
    assert np.all(hfun(0.0) == 0)


@settings(max_examples=50)
@given(st.floats(-1e6, 1e6), st.floats(-3.1, 3.1), st.floats(0.0, 1e-3))
def test_hamiltonian_hermitian_at_all_times(delta, phase, t):
    drives = [DriveField("-1<->0", OMEGA, delta, phase),
              DriveField("+1<->0'", OMEGA / 3, -delta, phase / 2)]
    for frame in ("multiRotatingRWA", "singleRotatingFull"):
        h = build_time_dependent(LEVELS, drives, frame)(t)
        np.testing.assert_array_equal(h, h.conj().T)


def test_unknown_frame_rejected():
    with pytest.raises(ValueError):
        build_time_dependent(LEVELS, [], frame="labFrame")
    with pytest.raises(ValueError):
        build_time_dependent(IonLevels(1.0, 0.0), [], frame="singleRotatingFull")


def test_single_rotating_cross_term():
    # a -1<->0 tone touches +1<->0 off-resonantly at 2*lambda0
    hfun = build_time_dependent(LEVELS, [DriveField("-1<->0", OMEGA)],
                                frame="singleRotatingFull")
    assert hfun(0.0)[3, 0] == pytest.approx(0.5 * OMEGA, rel=1e-12)
    t_half = np.pi / (2 * LEVELS.lambda0)
    assert hfun(t_half)[3, 0] == pytest.approx(-0.5 * OMEGA, rel=1e-9)
    rwa = build_time_dependent(LEVELS, [DriveField("-1<->0", OMEGA)])
    assert rwa(0.0)[3, 0] == 0


def test_rwa_matches_full_frame_dynamics():
    # full half flop |0> -> |B>: endpoint populations agree below 1e-4 (the
    # instantaneous micromotion, ~Omega/2lambda0 in amplitude, shows up only
    # away from population extrema)
    drives = [DriveField("-1<->0", OMEGA), DriveField("+1<->0", OMEGA)]
    hfun = build_time_dependent(LEVELS, drives, frame="singleRotatingFull")
    g = OMEGA / SQ2
    frame = dressed_transform(0.0)
    psi = _evolve(hfun, basis_state("0"), 0.0, np.pi / (2 * g), dt=1e-9)
    assert population(psi, "0") == pytest.approx(0.0, abs=1e-4)
    assert population(psi, "B", frame) == pytest.approx(1.0, abs=1e-4)
    assert population(psi, "0'") == pytest.approx(0.0, abs=1e-20)


def test_gradient_operator_elements():
    mode = TrapMode(nu=TAU * 200e3, lambda_grad=TAU * 10e3, n_fock=3)
    g = gradient_operator(mode)
    n = mode.n_fock
    lam = mode.lambda_grad
    assert g[3 * n + 1, 3 * n + 0] == pytest.approx(lam)   # +1 block, <1|x|0>
    assert g[2 * n + 1, 2 * n + 0] == pytest.approx(-lam)  # -1 block
    assert np.all(g[: 2 * n, : 2 * n] == 0)                # clock states untouched
    np.testing.assert_array_equal(g, g.conj().T)


def test_motional_operator_diagonal():
    mode = TrapMode(nu=TAU * 200e3, lambda_grad=0.0, n_fock=4)
    expected = np.tile([0, 1, 2, 3], 4) * mode.nu
    np.testing.assert_allclose(np.diag(motional_operator(mode)).real, expected)


def test_mqg_factorizes_without_gradient():
    mode = TrapMode(nu=TAU * 200e3, lambda_grad=0.0, n_fock=4)
    rf = [DriveField("-1<->0'", TAU * 2e3, detuning=TAU * 197e3),
          DriveField("+1<->0'", TAU * 2e3, detuning=TAU * 197e3)]
    hfun = build_mqg(LEVELS, mode, rf, dressing_rabi=OMEGA)
    drives = [DriveField("-1<->0", OMEGA), DriveField("+1<->0", OMEGA)] + rf
    internal = build_time_dependent(LEVELS, drives)
    for t in (0.0, 0.4e-6, 2.9e-6):
        np.testing.assert_allclose(
            hfun(t), motional_operator(mode) + tensor_with_fock(internal(t), 4),
            atol=1e-9)


def test_mqg_static_spectrum_without_gradient():
    mode = TrapMode(nu=TAU * 200e3, lambda_grad=0.0, n_fock=6)
    rf = [DriveField("-1<->0'", 0.0), DriveField("+1<->0'", 0.0)]
    hfun = build_mqg(LEVELS, mode, rf, dressing_rabi=OMEGA)
    vals = np.sort(np.linalg.eigvalsh(hfun(0.0)))
    ladder = mode.nu * np.arange(6)
    expected = np.sort(np.concatenate([
        ladder + OMEGA / SQ2, ladder - OMEGA / SQ2, ladder, ladder]))
    np.testing.assert_allclose(vals, expected, atol=1e-6)


def test_mqg_rejects_non_rf_pair():
    mode = TrapMode(nu=TAU * 200e3, lambda_grad=TAU * 10e3, n_fock=4)
    with pytest.raises(ValueError):
        build_mqg(LEVELS, mode, [DriveField("-1<->0", 1.0), DriveField("+1<->0'", 1.0)],
                  dressing_rabi=OMEGA)


def test_displaced_oscillator_ground_states():
    # gradient displaces the |+-1> wells: E_0 = -nu*eta^2, <x> = -/+ 2*eta
    nu = TAU * 200e3
    mode = TrapMode.from_eta(nu=nu, eta=0.1, n_fock=40)
    rf = [DriveField("-1<->0'", 0.0), DriveField("+1<->0'", 0.0)]
    h = build_mqg(LEVELS, mode, rf, dressing_rabi=0.0)(0.0)
    n = mode.n_fock
    x = destroy(n)
    x = x + x.conj().T
    for block, sign in ((slice(3 * n, 4 * n), +1), (slice(2 * n, 3 * n), -1)):
        vals, vecs = np.linalg.eigh(h[block, block])
        np.testing.assert_allclose(vals[0], -nu * mode.eta**2, atol=1e-8 * nu)
        mean_x = np.real(vecs[:, 0].conj() @ x @ vecs[:, 0])
        np.testing.assert_allclose(mean_x, -sign * 2 * mode.eta, atol=1e-9)


def test_polaron_transform_is_unitary():
    mode = TrapMode.from_eta(nu=TAU * 200e3, eta=0.05, n_fock=30)
    u = polaron_transform(mode)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4 * 30), atol=1e-12)


def _interior(op, n_fock, keep):
    """Restrict a composite operator to Fock levels below `keep`."""
    mask = np.concatenate([np.arange(level * n_fock, level * n_fock + keep)
                           for level in range(4)])
    return op[np.ix_(mask, mask)]


def test_polaron_displacement_identities():
    mode = TrapMode.from_eta(nu=TAU * 200e3, eta=0.05, n_fock=30)
    n, eta = mode.n_fock, mode.eta
    u = polaron_transform(mode)
    b = destroy(n)
    x4 = np.kron(np.eye(4), b + b.conj().T)
    plus = slice(3 * n, 4 * n)
    fwd = (u @ x4 @ u.conj().T)[plus, plus][:20, :20]
    rev = (u.conj().T @ x4 @ u)[plus, plus][:20, :20]
    x = (b + b.conj().T)[:20, :20]
    np.testing.assert_allclose(fwd, x - 2 * eta * np.eye(20), atol=1e-8)
    np.testing.assert_allclose(rev, x + 2 * eta * np.eye(20), atol=1e-8)


def test_polaron_transforms_full_gate_hamiltonian():
    # U H(t) U+ = nu b+b - nu eta^2 P_pm + drives dressed by displacements
    nu = TAU * 200e3
    mode = TrapMode.from_eta(nu=nu, eta=0.05, n_fock=24)
    n, eta = mode.n_fock, mode.eta
    w = TAU * 2e3
    delta = TAU * 197e3
    rf = [DriveField("-1<->0'", w, detuning=delta),
          DriveField("+1<->0'", w, detuning=delta)]
    hfun = build_mqg(LEVELS, mode, rf, dressing_rabi=OMEGA)
    u = polaron_transform(mode)
    b = destroy(n)
    disp_plus = expm(eta * (b.conj().T - b))
    disp_minus = disp_plus.conj().T
    pm = np.diag([0.0, 0.0, 1.0, 1.0])
    static = motional_operator(mode) - nu * eta**2 * np.kron(pm, np.eye(n))

    def elem(upper, lower):
        m = np.zeros((4, 4))
        m[upper, lower] = 1.0
        return m

    for t in (0.0, 1.3e-6, 7.7e-6):
        lhs = u @ hfun(t) @ u.conj().T
        c_mw = 0.5 * OMEGA
        c_rf = 0.5 * w * np.exp(-1j * delta * t)
        rhs = static.astype(complex)
        half = (c_mw * np.kron(elem(2, 0), disp_minus)
                + c_mw * np.kron(elem(3, 0), disp_plus)
                + c_rf * np.kron(elem(2, 1), disp_minus)
                + c_rf * np.kron(elem(3, 1), disp_plus))
        rhs = rhs + half + half.conj().T
        np.testing.assert_allclose(_interior(lhs, n, 16), _interior(rhs, n, 16),
                                   atol=1e-6 * nu)


def test_polaron_frame_sideband_element_matches_effective_model():
    # <D,1| U H(0) U+ |0',0> = -sqrt(2) eta omega_g to O(eta^2)
    nu = TAU * 200e3
    mode = TrapMode.from_eta(nu=nu, eta=0.05, n_fock=24)
    n, eta = mode.n_fock, mode.eta
    w = TAU * 2e3
    rf = [DriveField("-1<->0'", w), DriveField("+1<->0'", w)]
    hfun = build_mqg(LEVELS, mode, rf, dressing_rabi=OMEGA)
    u = polaron_transform(mode)
    transformed = u @ hfun(0.0) @ u.conj().T
    frame = dressed_transform(0.0)
    bra = np.kron(frame.column("D"), np.eye(n)[1]).conj()
    ket = np.kron(frame.column("0'"), np.eye(n)[0])
    kappa = SQ2 * eta * (w / 2)
    assert bra @ transformed @ ket == pytest.approx(-kappa, rel=5e-3)
    heff = sideband_effective(mode, omega_g=w / 2, delta=0.0)
    assert bra @ heff(0.0) @ ket == pytest.approx(-kappa, rel=1e-12)


def test_sideband_effective_zero_eta_is_free_oscillator():
    mode = TrapMode(nu=TAU * 200e3, lambda_grad=0.0, n_fock=6)
    hfun = sideband_effective(mode, omega_g=TAU * 2e3, delta=0.0)
    for t in (0.0, 1e-6, 1e-3):
        np.testing.assert_allclose(hfun(t), motional_operator(mode), atol=1e-12)


def test_sideband_effective_static_ladder():
    # coupling off: |+-1> manifold at nu*n - nu*eta^2, clock states at nu*n
    nu = TAU * 200e3
    mode = TrapMode.from_eta(nu=nu, eta=0.05, n_fock=5)
    h = sideband_effective(mode, omega_g=0.0, delta=0.0)(0.0)
    ladder = nu * np.arange(5)
    diag = np.concatenate([ladder, ladder,
                           ladder - nu * mode.eta**2, ladder - nu * mode.eta**2])
    np.testing.assert_allclose(np.diag(h).real, diag, atol=1e-9)
    # matches the exact displaced-well energies of the full static model
    rf = [DriveField("-1<->0'", 0.0), DriveField("+1<->0'", 0.0)]
    full = build_mqg(LEVELS, TrapMode.from_eta(nu=nu, eta=0.05, n_fock=40),
                     rf, dressing_rabi=0.0)(0.0)
    vals = np.linalg.eigvalsh(full[3 * 40: 4 * 40, 3 * 40: 4 * 40])
    np.testing.assert_allclose(vals[:5], ladder - nu * mode.eta**2, atol=1e-6 * nu)


def test_sideband_blue_flop_oracle():
    # from |0', n=1> at delta = 0: P_D(t) = sin^2(sqrt(2) kappa t)
    nu = TAU * 200e3
    mode = TrapMode.from_eta(nu=nu, eta=0.05, n_fock=8)
    omega_g = TAU * 8e3
    kappa = SQ2 * mode.eta * omega_g
    hfun = sideband_effective(mode, omega_g=omega_g, delta=0.0)
    frame = dressed_transform(0.0)
    t_pi = np.pi / (2 * SQ2 * kappa)
    psi0 = basis_state("0'", n_fock=8, fock=1)
    psi_half = _evolve(hfun, psi0, 0.0, t_pi / 2, dt=2.5e-8)
    psi_full = _evolve(hfun, psi_half, t_pi / 2, t_pi, dt=2.5e-8)
    assert population(psi_half, "D", frame) == pytest.approx(0.5, abs=5e-3)
    assert population(psi_full, "D", frame) == pytest.approx(1.0, abs=5e-3)
    # protected block never leaks into the dressed +-Omega/sqrt(2) states
    assert population(psi_full, "u", frame) == pytest.approx(0.0, abs=1e-20)
    assert population(psi_full, "d", frame) == pytest.approx(0.0, abs=1e-20)


def test_floquet_shifts_two_level_oracle():
    h, delta = 300.0, 6000.0
    amp = np.zeros((2, 2), dtype=complex)
    amp[1, 0] = h
    shifts = floquet_shifts(np.array([0.0, 0.0]), amp, delta)
    np.testing.assert_allclose(shifts, [h**2 / delta, -h**2 / delta], rtol=1e-12)
    # exact quasi-energy of the same problem from the rotating-frame statics
    exact = -delta / 2 + np.sqrt(delta**2 / 4 + h**2)
    assert shifts[0] == pytest.approx(exact, rel=3 * h**2 / delta**2)


def test_floquet_resonance_raises():
    amp = np.zeros((2, 2), dtype=complex)
    amp[1, 0] = 1.0
    with pytest.raises(ValueError):
        floquet_shifts(np.array([0.0, 5000.0]), amp, 5000.0)


def test_comb_single_line_oracle():
    delta = TAU * 1e6
    w = TAU * 20e3
    comb = CombSpec(ion_count=3, zeeman_step=delta, lines=((delta, w, 0.0),))
    res = comb_stark_shifts(comb, OMEGA)
    h_line = w / SQ2
    assert res["bare"]["B"] == pytest.approx(-h_line**2 / delta, rel=1e-12)
    assert res["bare"]["0"] == pytest.approx(h_line**2 / delta, rel=1e-12)
    gap2 = SQ2 * OMEGA
    expected_u = (h_line**2 / 4) * (1 / (gap2 + delta) + 1 / (gap2 - delta))
    assert res["dressed"]["u"] == pytest.approx(expected_u, rel=1e-12)
    assert res["dressed"]["d"] == pytest.approx(-expected_u, rel=1e-12)
    assert res["dressed"]["D"] == 0.0
    assert res["dressed"]["0'"] == 0.0
    assert res["differential_D_0prime"] == 0.0
    assert len(res["per_line"]) == 1


def test_comb_symmetric_pair_cancels_bare_shift():
    delta = TAU * 1e6
    w = TAU * 20e3
    comb = CombSpec(ion_count=3, zeeman_step=delta,
                    lines=((delta, w, 0.0), (-delta, w, 0.0)))
    res = comb_stark_shifts(comb, OMEGA)
    assert res["bare"]["B"] == 0.0
    assert res["bare"]["0"] == 0.0
    # dressed u/d shifts are even in detuning: the pair doubles them
    single = comb_stark_shifts(
        CombSpec(ion_count=3, zeeman_step=delta, lines=((delta, w, 0.0),)), OMEGA)
    assert res["dressed"]["u"] == pytest.approx(2 * single["dressed"]["u"], rel=1e-12)
    assert res["differential_D_0prime"] == 0.0


def test_comb_resonant_line_raises():
    comb = CombSpec(ion_count=2, zeeman_step=TAU * 1e6,
                    lines=((SQ2 * OMEGA, TAU * 1e3, 0.0),))
    with pytest.raises(ValueError):
        comb_stark_shifts(comb, OMEGA)


def test_comb_validation():
    with pytest.raises(ValueError):
        CombSpec(ion_count=0, zeeman_step=1.0)
    with pytest.raises(ValueError):
        CombSpec(ion_count=2, zeeman_step=1.0, lines=((0.0, 1.0, 0.0),))
    with pytest.raises(ValueError):
        CombSpec(ion_count=2, zeeman_step=1.0, lines=((1.0, -1.0, 0.0),))


def test_fock_overflow_warning():
    mode = TrapMode(nu=TAU * 200e3, lambda_grad=0.0, n_fock=3)
    with pytest.warns(RuntimeWarning):
        fock_overflow_warning(mode, basis_state("0", n_fock=3, fock=2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        top = fock_overflow_warning(mode, basis_state("0", n_fock=3, fock=0))
    assert top == 0.0
