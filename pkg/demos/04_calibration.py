"""Oscillator calibration on synthetic data.

Simulates a residual-voltage scan and electrostatic sweeps with noise,
recovers V0 and the transduction constant C, and repeats the procedure
over independent seeds to show the spread of C.

    python demos/04_calibration.py
"""
import numpy as np

from casimir_trench.dielectric import doped_silicon_model, gold_model
from casimir_trench.oscillator import NoiseModel, OscillatorParams, calibrate, derive_seeds, find_residual_voltage
from casimir_trench.pipeline import calibration_sweeps, flat_casimir_theory, residual_voltage_scan
from casimir_trench.roughness import RoughnessSpec

NM = 1e-9
params = OscillatorParams()  # C = 628 m/(N s)
noise = NoiseModel(0.64e-6, 300 * NM)
v0_true, z0 = -0.43, 1e-6
dvs = np.linspace(0.245, 0.300, 6)

theory = flat_casimir_theory(params.R, gold_model(), doped_silicon_model(), 75 * NM, 1500 * NM,
                             RoughnessSpec(4e-9, 0.6e-9), max_workers=4)

scan = residual_voltage_scan(params, z0, 300 * NM, v0_true, 0.15, 11, theory, noise, seed=1)
v0, v0_sigma = find_residual_voltage(scan)
print(f"residual voltage: {v0 * 1e3:.2f} +- {v0_sigma * 1e3:.2f} mV (true {v0_true * 1e3:.0f} mV)")

sweeps = calibration_sweeps(params, z0, v0_true, dvs, 150 * NM, 1000 * NM, 60, theory, noise, seed=2)
res = calibrate(sweeps, v0, casimir_gradient=theory)
print(f"C = {res.C:.2f} +- {res.C_sigma:.2f} m/(N s) from the sweep noise alone")
res = calibrate(sweeps, v0, casimir_gradient=theory, residual_voltage_sigma=v0_sigma)
print(f"C = {res.C:.2f} +- {res.C_sigma:.2f} m/(N s) including the V0 error, z0 = {res.z0 / NM:.2f} +- {res.z0_sigma / NM:.2f} nm")
for f in res.per_voltage:
    print(f"  V = {f['V']:+.3f} V  C = {f['C']:.2f}  z0 = {f['z0'] / NM:.2f} nm  chi2/n = {f['chi2'] / f['n']:.2f}")

biased = calibrate(sweeps, v0)
print(f"ignoring the Casimir gradient in the fit gives C = {biased.C:.2f}")

cs = []
for seed in derive_seeds(7, 40):
    s_scan, s_sweep = derive_seeds(seed, 2)
    v = find_residual_voltage(residual_voltage_scan(params, z0, 300 * NM, v0_true, 0.15, 11, theory, noise,
                                                    s_scan))[0]
    s = calibration_sweeps(params, z0, v0_true, dvs, 150 * NM, 1000 * NM, 60, theory, noise, s_sweep)
    cs.append(calibrate(s, v, casimir_gradient=theory).C)
cs = np.array(cs)
print(f"\n40 repeats: mean C = {cs.mean():.2f}, std = {cs.std(ddof=1):.2f}, "
      f"within +-5: {np.mean(np.abs(cs - 628) <= 5):.0%}")
