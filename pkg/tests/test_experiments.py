"""Experiment drivers: protocol physics, the branching engine, and readout."""

import math

import numpy as np
import pytest

from dressedion.experiments import (
    FockTruncationError,
    Spam,
    _apply_readout,
    _mqg_channels,
    _stream_rng,
    calibrated_noise,
    default_scan_points,
    run_comb,
    run_lifetime,
    run_rabi,
    run_ramsey,
    run_sideband_gate,
    scan_stirap,
    transfer_fidelity,
)
from dressedion.hamiltonian import IonLevels, TrapMode, build_mqg
from dressedion.noise import OUNoise
from dressedion.schedule import DriveField

TAU = 2.0 * math.pi
LEVELS = IonLevels(omega0=TAU * 12.64e9, lambda0=TAU * 14e6)


def test_lifetime_noise_free_is_flat():
    res = run_lifetime(holds=np.array([0.001, 0.004, 0.008]), noise=None,
                       fit=False)
    # only the fixed transfer loss remains; no decay without field noise
    assert np.all(res.y > 0.998)
    assert np.ptp(res.y) < 2e-3
    assert np.all(res.y_stderr == 0.0)
    assert res.meta["n_traj"] == 1
    assert res.fit is None
    assert len(res.x) == len(res.y) == len(res.y_stderr)


def test_lifetime_hold_dt_override():
    res = run_lifetime(holds=np.array([0.001]), noise=None, fit=False,
                       hold_dt=2e-6)
    assert res.meta["hold_dt"] == 2e-6


def test_lifetime_decays_under_strong_noise():
    noise = OUNoise(amplitude=6000.0, correlation_time=1e-4, seed=0)
    res = run_lifetime(holds=np.array([0.001, 0.010, 0.020]), noise=noise,
                       n_traj=40, fit=False)
    assert res.y[0] > res.y[-1] + 0.15
    assert np.all(res.y_stderr[1:] > 0.0)


def test_rabi_frequency_is_root_two_collective():
    rf_rabi = TAU * 500.0
    res = run_rabi(rf_rabi=rf_rabi, noise=None,
                   durations=np.linspace(1e-4, 4.3e-3, 14))
    want = math.sqrt(2.0) * rf_rabi / TAU
    assert res.fit is not None and res.fit.converged
    assert res.fit.params["frequency"] == pytest.approx(want, rel=1e-3)
    assert res.fit.params["amplitude"] == pytest.approx(0.5, abs=0.02)
    assert res.fit.params["offset"] == pytest.approx(0.5, abs=0.02)


def test_ramsey_fringe_at_programmed_detuning():
    detuning = TAU * 144.4
    res = run_ramsey(rf_detuning=detuning, noise=None,
                     gaps=np.linspace(0.0, 0.02, 14))
    assert res.fit is not None
    assert res.fit.params["frequency"] == pytest.approx(144.4, rel=1e-3)


def test_branch_tail_matches_direct_compile():
    # the second mark's branch (recorded trunk + re-phased tail) must equal
    # running that duration as the only mark
    t1, t2 = 0.9e-3, 2.7e-3
    pair = run_rabi(rf_rabi=TAU * 500.0, durations=np.array([t1, t2]),
                    noise=None, fit=False)
    single = run_rabi(rf_rabi=TAU * 500.0, durations=np.array([t2]),
                      noise=None, fit=False)
    assert abs(pair.y[1] - single.y[0]) < 1e-12


def test_worker_count_invariance():
    noise = OUNoise(amplitude=600.0, correlation_time=1e-4, seed=0)
    kw = dict(holds=np.array([0.002, 0.005]), noise=noise, n_traj=6,
              fit=False)
    seq = run_lifetime(workers=1, **kw)
    par = run_lifetime(workers=2, **kw)
    assert np.array_equal(seq.y, par.y)
    assert np.array_equal(seq.y_stderr, par.y_stderr)


def test_spam_expected_value_formula():
    spam = Spam(prep_error=0.02, dark_misread=0.05, bright_misread=0.0)
    p = 0.9997
    good = p * 0.95
    depol = 0.25 * 0.95
    want = 0.98 * good + 0.02 * depol
    assert spam.apply(p) == pytest.approx(want, rel=1e-12)
    assert spam.apply(p) == pytest.approx(0.9355, abs=5e-4)
    assert spam.contrast_scale() == pytest.approx(0.98 * 0.95, rel=1e-12)
    assert Spam().apply(0.73) == 0.73
    arr = spam.apply(np.array([0.0, 1.0]))
    assert arr.shape == (2,)
    with pytest.raises(ValueError):
        Spam(prep_error=1.5)


def test_shot_sampling_reproducible():
    p = np.array([0.2, 0.8, 0.97])
    err = np.zeros(3)
    a = _apply_readout(p, err, None, 400, _stream_rng(11, 5))
    b = _apply_readout(p, err, None, 400, _stream_rng(11, 5))
    c = _apply_readout(p, err, None, 400, _stream_rng(12, 5))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[2], b[2])
    assert not np.array_equal(a[2], c[2])
    # binomial counts and the matching standard error
    assert np.all(a[2] <= 400) and np.all(a[2] >= 0)
    assert np.allclose(a[1], np.sqrt(a[0] * (1 - a[0]) / 400.0))


def test_scan_plateau_and_degraded_corners():
    res = scan_stirap([
        {"width_cycles": 4, "sep_cycles": 6},
        {"width_cycles": 2, "sep_cycles": 6},
        {"width_cycles": 5, "sep_cycles": 0},
    ])
    assert res.y[0] > 0.995
    assert res.y[1] < 0.05
    assert res.y[2] < 0.5
    for col in ("width_cycles", "sep_cycles", "substeps", "detuning_split",
                "fidelity"):
        assert col in res.series


def test_scan_rejects_unknown_keys():
    with pytest.raises(ValueError):
        scan_stirap([{"width_cycles": 4, "ramp_shape": "linear"}])


def test_scan_detuning_asymmetry_tolerated():
    omega = TAU * 36.5e3
    res = scan_stirap([{"width_cycles": 10, "sep_cycles": 15,
                        "detuning_split": 0.05 * omega}])
    assert res.y[0] > 0.99


def test_transfer_substep_convergence():
    coarse = transfer_fidelity(width_cycles=10, sep_cycles=12, substeps=10)
    fine = transfer_fidelity(width_cycles=10, sep_cycles=12, substeps=40)
    assert abs(coarse - fine) < 1e-4


def test_default_scan_points_are_valid():
    pts = default_scan_points()
    assert len(pts) >= 10
    allowed = {"width_cycles", "sep_cycles", "substeps", "detuning_split"}
    for p in pts:
        assert set(p) <= allowed
    res = scan_stirap(pts[:1])
    assert res.y[0] > 0.99


def test_full_gate_channels_match_reference_builder():
    mode = TrapMode.from_eta(nu=TAU * 200e3, eta=0.05, n_fock=4)
    dressing = TAU * 20e3
    rf_rabi = TAU * 2e3
    det = TAU * 199.5e3
    rf_pair = (DriveField("-1<->0'", rf_rabi, detuning=det),
               DriveField("+1<->0'", rf_rabi, detuning=det))
    href = build_mqg(LEVELS, mode, rf_pair, dressing)
    static, channels = _mqg_channels(mode, dressing, rf_rabi, det)
    scale = float(np.abs(static).max())
    for t in (0.0, 3.7e-7, 2.9e-6, 1.234e-5):
        h = static.astype(complex).copy()
        for mat, amp, chan_det, phase in channels:
            term = amp * np.exp(-1j * (chan_det * t + phase)) * mat
            h += term + term.conj().T
        np.testing.assert_allclose(h, href(t), atol=1e-9 * scale)


def test_sideband_full_tracks_effective():
    res = run_sideband_gate(omega_g=TAU * 2e3, n_fock=6, n_steps_full=6000,
                            record_every=30)
    assert res.meta["max_abs_difference"] < 0.05
    assert res.meta["max_bright_population"] < res.meta["carrier_leakage_bound"]
    assert res.y[-1] > 0.9
    assert res.series["effective"][-1] > 0.98
    assert res.meta["top_fock_population"] < 1e-6


def test_sideband_truncation_abort():
    # two motional levels cannot hold a blue-sideband pi flop
    with pytest.raises(FockTruncationError):
        run_sideband_gate(omega_g=TAU * 2e3, n_fock=3, n_steps_full=4000,
                          record_every=20)


def test_comb_pair_cancels_single_does_not():
    res = run_comb()
    ref = res["reference_shift"]
    assert ref == pytest.approx(res["peak_rabi"] ** 2 / (2 * res["big_delta"]),
                                rel=1e-12)
    assert abs(res["pair_differential_D_0prime"]) < 1e-9 * ref
    assert abs(res["pair_bare_B"]) < 1e-9 * ref
    assert res["single_bare_0"] == pytest.approx(ref, rel=1e-9)
    assert res["single_bare_B"] == pytest.approx(-ref, rel=1e-9)
    assert abs(res["pair_dressed"]["D"]) < 1e-9 * ref
    assert abs(res["pair_dressed"]["0'"]) < 1e-9 * ref
    assert res["pair_dressed"]["u"] == pytest.approx(-res["pair_dressed"]["d"],
                                                     rel=1e-9)


def test_calibrated_noise_matches_frozen_value():
    noise = calibrated_noise()
    assert noise.amplitude == pytest.approx(748.700385, rel=1e-6)
    assert noise.correlation_time == 1e-4
