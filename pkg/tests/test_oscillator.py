import json

import numpy as np
import pytest

from casimir_trench.electrostatics import sphere_plate_series
from casimir_trench.errors import FitError, ParseError, SimulationError, ValidationError
from casimir_trench.oscillator import (DistanceModel, MeasurementSeries, NoiseModel, OscillatorParams, calibrate,
                                       derive_seeds, find_residual_voltage, fit_parabola_vertex, frequency_shift,
                                       invert_to_gradient, read_series, simulate_sweep, write_series)
from casimir_trench.pipeline import calibration_sweeps, residual_voltage_scan

NM = 1e-9
P = OscillatorParams()
DVS = np.linspace(0.245, 0.300, 6)


def const_force(value):
    return lambda z: np.full_like(z, value)


def test_frequency_shift_value_and_linearity():
    assert frequency_shift(P, 1e-6) == pytest.approx(6.28e-4, rel=1e-14)
    g = np.array([1e-6, 2e-6, -3e-6])
    assert np.allclose(frequency_shift(P, g), 628.0 * g, rtol=1e-15)
    assert frequency_shift(P, 0.0) == 0.0


def test_params_validation():
    with pytest.raises(ValidationError):
        OscillatorParams(C=-1.0)
    with pytest.raises(ValidationError):
        NoiseModel(0.0)


def test_noise_power_law():
    n = NoiseModel(1e-6, 300 * NM, exponent=-2.0)
    assert n.gradient_sigma(150 * NM) == pytest.approx(4e-6)
    assert NoiseModel().gradient_sigma(1e-6) == 0.64e-6


def test_constant_force_at_residual_voltage():
    zp = np.linspace(0, 500 * NM, 8)
    s = simulate_sweep(P, DistanceModel(1e-6), const_force(2e-6), [-0.43], zp, residual_voltage=-0.43)
    assert np.allclose(s.delta_f, 628.0 * 2e-6, rtol=1e-15)


def test_noiseless_sweep_matches_series():
    zp = np.linspace(0, 500 * NM, 8)
    s = simulate_sweep(P, DistanceModel(1e-6, theta=1e-4), None, [0.3], zp)
    z = 1e-6 - zp - P.b * 1e-4
    assert np.allclose(s.delta_f, 628.0 * sphere_plate_series(P.R, z, 0.3)[1], rtol=1e-14)


def test_seed_reproducibility():
    zp = np.linspace(0, 500 * NM, 20)
    args = (P, DistanceModel(1e-6), None, [0.2, 0.3], zp, NoiseModel())
    a, b = simulate_sweep(*args, seed=5), simulate_sweep(*args, seed=5)
    c = simulate_sweep(*args, seed=6)
    assert np.array_equal(a.delta_f, b.delta_f)
    assert not np.array_equal(a.delta_f, c.delta_f)
    assert derive_seeds(3, 4) == derive_seeds(3, 4) and len(set(derive_seeds(3, 4))) == 4


def test_noise_amplitude():
    zp = np.linspace(0, 700 * NM, 50)
    devs = []
    for seed in range(100):
        s = simulate_sweep(P, DistanceModel(1e-6), None, [0.0], zp, NoiseModel(), seed=seed)
        devs.append(s.delta_f / P.C)  # V = V0: pure noise
    assert np.std(devs) == pytest.approx(0.64e-6, rel=0.15)


def test_separation_underflow_names_step():
    zp = np.linspace(0, 2e-6, 5)
    with pytest.raises(SimulationError, match="step 2") as ei:
        simulate_sweep(P, DistanceModel(1e-6), None, [0.3], zp)
    assert ei.value.diagnostics["step"] == 2


def test_unsorted_piezo_steps_rejected():
    with pytest.raises(ValidationError):
        simulate_sweep(P, DistanceModel(1e-6), None, [0.3], [2e-7, 1e-7])


# -- residual voltage ---------------------------------------------------------

def test_parabola_vertex_exact():
    V = np.linspace(-0.6, -0.2, 7)
    v, s, _ = fit_parabola_vertex(V, 3.0 * (V + 0.43) ** 2 + 1.0)
    assert v == pytest.approx(-0.43, abs=1e-12)
    v3, _, _ = fit_parabola_vertex([-0.53, -0.43, -0.33], [1.0, 0.0, 1.0])
    assert v3 == pytest.approx(-0.43, abs=1e-12)


def test_parabola_errors():
    with pytest.raises(FitError):
        fit_parabola_vertex([0.1, 0.2, 0.1], [1.0, 2.0, 1.0])
    with pytest.raises(FitError):
        fit_parabola_vertex([-1.0, 0.0, 1.0], [-1.0, 0.0, -1.0])


def test_noisy_residual_voltage(calibration_theory):
    for seed in range(5):
        scan = residual_voltage_scan(P, 1e-6, 300 * NM, -0.43, 0.15, 11, calibration_theory, NoiseModel(), seed)
        v, s = find_residual_voltage(scan)
        assert abs(v + 0.43) < 3e-3
        assert 0 < s < 3e-3


def test_residual_voltage_needs_position():
    s = calibration_sweeps(P, 1e-6, -0.43, DVS, 150 * NM, 1000 * NM, 5)
    with pytest.raises(FitError):
        find_residual_voltage(s)
    v, _ = find_residual_voltage(s, z_piezo=s.z_piezo[-1])
    assert v == pytest.approx(-0.43, abs=1e-9)


# -- calibration ----------------------------------------------------------------

def test_noiseless_calibration_recovers_truth(calibration_theory):
    s = calibration_sweeps(P, 1e-6, -0.43, DVS, 150 * NM, 1000 * NM, 60, calibration_theory)
    r = calibrate(s, -0.43, casimir_gradient=calibration_theory)
    assert r.C == pytest.approx(628.0, rel=1e-6)
    assert r.z0 == pytest.approx(1e-6, rel=1e-6)
    assert len(r.per_voltage) == 6 and r.C_spread < 1e-6


def test_omitting_casimir_biases_c(calibration_theory):
    s = calibration_sweeps(P, 1e-6, -0.43, DVS, 150 * NM, 1000 * NM, 60, calibration_theory)
    bias = abs(calibrate(s, -0.43).C / 628.0 - 1)
    assert 1e-3 < bias <= 0.04


def test_noisy_calibration_uncertainty_is_honest(calibration_theory):
    noise = NoiseModel()
    c, sig = [], []
    for seed in derive_seeds(11, 30):
        s = calibration_sweeps(P, 1e-6, -0.43, DVS, 150 * NM, 1000 * NM, 60, calibration_theory, noise, seed)
        r = calibrate(s, -0.43, casimir_gradient=calibration_theory)
        c.append(r.C)
        sig.append(r.C_sigma)
    c = np.array(c)
    assert abs(c.mean() - 628.0) < 3 * np.mean(sig)
    # the reported sigma tracks the run-to-run scatter
    assert 0.5 < np.std(c, ddof=1) / np.mean(sig) < 2.0


def test_residual_voltage_error_enters_c_sigma(calibration_theory):
    noise = NoiseModel()
    c, sig, sig_sweep = [], [], []
    for seed in derive_seeds(12, 30):
        s_scan, s_sweep = derive_seeds(seed, 2)
        scan = residual_voltage_scan(P, 1e-6, 300 * NM, -0.43, 0.15, 11, calibration_theory, noise, s_scan)
        v0, v0_sig = find_residual_voltage(scan)
        s = calibration_sweeps(P, 1e-6, -0.43, DVS, 150 * NM, 1000 * NM, 60, calibration_theory, noise, s_sweep)
        r = calibrate(s, v0, casimir_gradient=calibration_theory, residual_voltage_sigma=v0_sig)
        c.append(r.C)
        sig.append(r.C_sigma)
        sig_sweep.append(calibrate(s, v0, casimir_gradient=calibration_theory).C_sigma)
    assert np.mean(sig) > 2 * np.mean(sig_sweep)
    assert 0.5 < np.std(c, ddof=1) / np.mean(sig) < 2.0


def test_calibration_fit_errors():
    s = calibration_sweeps(P, 1e-6, -0.43, DVS, 150 * NM, 1000 * NM, 2)
    with pytest.raises(FitError, match="fewer than 3"):
        calibrate(s, -0.43)
    flat = simulate_sweep(P, DistanceModel(1e-6), None, [-0.43], np.linspace(0, 5e-7, 10), residual_voltage=-0.43)
    with pytest.raises(FitError):
        calibrate(flat, -0.43)


# -- inversion and files ---------------------------------------------------------

def test_inversion_round_trip(calibration_theory):
    zp = np.linspace(0, 850 * NM, 30)
    dist = DistanceModel(1e-6)
    s = simulate_sweep(P, dist, calibration_theory, [-0.43], zp, residual_voltage=-0.43)
    g = invert_to_gradient(s, 628.0, dist)
    assert np.all(np.diff(g.z) > 0) and g.kind == "sphere_gradient"
    assert np.allclose(g.value, calibration_theory(g.z), rtol=1e-9)


def test_inverted_noise_coverage(calibration_theory):
    zp = np.linspace(0, 850 * NM, 200)
    dist = DistanceModel(1e-6)
    s = simulate_sweep(P, dist, calibration_theory, [-0.43], zp, NoiseModel(), seed=3, residual_voltage=-0.43)
    g = invert_to_gradient(s, 628.0, dist)
    pull = np.abs(g.value - calibration_theory(g.z)) / g.sigma
    assert np.mean(pull < 1) == pytest.approx(0.683, abs=0.08)
    assert np.mean(pull < 2) >= 0.9


def test_inversion_validation():
    s = calibration_sweeps(P, 1e-6, -0.43, DVS, 150 * NM, 1000 * NM, 5)
    with pytest.raises(ValidationError):
        invert_to_gradient(s, 628.0, DistanceModel(1e-6))
    with pytest.raises(ValidationError):
        invert_to_gradient(s, 0.0, DistanceModel(1e-6), voltage=s.V[0])


def test_series_csv_round_trip(tmp_path):
    s = calibration_sweeps(P, 1e-6, -0.43, DVS, 150 * NM, 1000 * NM, 7, noise=NoiseModel(), seed=9)
    path = tmp_path / "series.csv"
    write_series(s, path)
    back = read_series(path)
    for name in ("z_piezo", "V", "delta_f", "sigma"):
        assert np.array_equal(getattr(back, name), getattr(s, name))
    assert back.params == s.params and back.seed == 9
    assert json.loads((tmp_path / "series.csv.json").read_text())["meta"]["z0_m"] == 1e-6


def test_series_parse_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("z,V\n")
    with pytest.raises(ParseError):
        read_series(p)
    p.write_text("z_piezo_m,V_volt,delta_f_hz,sigma_hz\n0,1,2\n")
    with pytest.raises(ParseError) as ei:
        read_series(p)
    assert ei.value.line == 2


def test_series_validation():
    with pytest.raises(ValidationError):
        MeasurementSeries([0, 1], [0, 0], [1, 1], [1], P)
    with pytest.raises(ValidationError):
        MeasurementSeries([0, 1], [0, 0], [1, 1], [1, 0], P)
    with pytest.raises(ValidationError):
        MeasurementSeries([1, 0], [0, 0], [1, 1], [1, 1], P)
