"""Composite workflows: theory curve for the flat sample, synthetic
measurements, and the data behind the electrostatic and Casimir figures."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .curves import ForceCurve
from .errors import DomainError, ExtrapolationError
from .electrostatics.fem import corrugated_gradient
from .electrostatics.mesh import DEFAULT_REFINEMENT
from .electrostatics.series import sphere_plate_series
from .lifshitz import interaction_curves, pfa_sphere
from .oscillator import (DistanceModel, MeasurementSeries, NoiseModel, OscillatorParams, derive_seeds,
                         invert_to_gradient, simulate_sweep)
from .roughness import RoughnessSpec, apply_roughness
from .trench_analysis import paa_and_rho


@dataclass(frozen=True)
class TheoryCurve:
    """Sphere-plate Casimir gradient on a dense log grid, with interpolation."""

    dense: ForceCurve

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        spline = CubicSpline(np.log(self.dense.z), np.log(self.dense.value))
        if np.any(z < self.dense.z[0]) or np.any(z > self.dense.z[-1]):
            raise ExtrapolationError(
                f"theory curve covers [{self.dense.z[0]:g}, {self.dense.z[-1]:g}] m; asked for "
                f"[{z.min():g}, {z.max():g}] m")
        return np.exp(spline(np.log(z)))

    def on(self, z_grid, provenance=None):
        z_grid = np.asarray(z_grid, dtype=float)
        return ForceCurve(z_grid, self(z_grid), kind="sphere_gradient",
                          provenance=provenance or self.dense.provenance)


def flat_casimir_theory(R, sphere, plate, z_min, z_max, roughness: RoughnessSpec | None = None,
                        points_per_decade=40, rtol=1e-6, max_workers=None) -> TheoryCurve:
    """Lifshitz pressure, roughness-averaged, converted to a sphere gradient by PFA.

    The Lifshitz grid is padded by the largest roughness offset on each
    side so the roughness average never extrapolates; the returned curve
    covers exactly ``[z_min, z_max]``.
    """
    if roughness is not None:
        h, w = roughness.nodes()
        pad = float(np.abs(h[w > 0]).max()) if h.size else 0.0
    else:
        pad = 0.0
    # two extra points beyond the largest offset keep the spline ends clean
    step = 10 ** (1.0 / points_per_decade)
    lo, hi = (z_min - pad) / step**2, (z_max + pad) * step**2
    if not lo > 0:
        raise DomainError("roughness offsets exceed the smallest separation")
    n = max(8, int(math.ceil(math.log10(hi / lo) * points_per_decade)) + 1)
    grid = np.geomspace(lo, hi, n)
    energy, pressure = interaction_curves(sphere, plate, grid, rtol=rtol, max_workers=max_workers)
    if roughness is not None:
        n_in = max(8, int(math.ceil(math.log10(z_max / z_min) * points_per_decade)) + 1)
        z_in = np.geomspace(z_min, z_max, n_in)
        pressure = apply_roughness(pressure, roughness, z_out=z_in)
        energy = apply_roughness(energy.scaled(-1.0), roughness, z_out=z_in).scaled(-1.0)
    _, gradient = pfa_sphere(R, energy, pressure)
    return TheoryCurve(gradient)


def synthetic_gradient_measurement(model, z_grid, params: OscillatorParams, noise: NoiseModel | None,
                                   seed, z0=None, residual_voltage=0.0) -> ForceCurve:
    """Simulate a Casimir sweep at ``V = V0`` and invert it to a gradient curve.

    ``model`` maps separations to the true gradient. The piezo positions
    are chosen so the separations hit ``z_grid`` exactly.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    z0 = float(z_grid.max() + 500e-9) if z0 is None else z0
    dist = DistanceModel(z0)
    zp = np.sort(z0 - z_grid)
    series = simulate_sweep(params, dist, model, [residual_voltage], zp, noise, seed, residual_voltage)
    curve = invert_to_gradient(series, params.C, dist)
    return curve.replace(z=z_grid, provenance=f"synthetic measurement seed={seed}")


def calibration_sweeps(params: OscillatorParams, z0, residual_voltage, voltages_above_v0, z_min, z_max,
                       n_points, casimir=None, noise=None, seed=0) -> MeasurementSeries:
    """Electrostatic calibration sweeps at ``V0 + dV`` for each ``dV``."""
    zp = np.linspace(z0 - z_max, z0 - z_min, n_points)
    volts = residual_voltage + np.asarray(voltages_above_v0, dtype=float)
    return simulate_sweep(params, DistanceModel(z0), casimir, volts, zp, noise, seed, residual_voltage)


def residual_voltage_scan(params: OscillatorParams, z0, z, residual_voltage, half_span=0.15, n=11,
                          casimir=None, noise=None, seed=0) -> MeasurementSeries:
    """Voltage scan around ``V0`` at a single separation ``z``."""
    zp = np.array([z0 - z])
    dist = DistanceModel(z0)
    volts = residual_voltage + np.linspace(-half_span, half_span, n)
    seeds = derive_seeds(seed, n)
    parts = [simulate_sweep(params, dist, casimir, [v], zp, noise, s, residual_voltage) for v, s in zip(volts, seeds)]
    return MeasurementSeries(np.concatenate([p.z_piezo for p in parts]), np.concatenate([p.V for p in parts]),
                             np.concatenate([p.delta_f for p in parts]), np.concatenate([p.sigma for p in parts]),
                             params, seed, parts[0].meta)


def electrostatic_figure(R, profiles, dv, z_grid, refinement=DEFAULT_REFINEMENT, max_workers=None):
    """Series gradient for the flat plate plus FEM gradients for each profile."""
    z_grid = np.asarray(z_grid, dtype=float)
    _, g = sphere_plate_series(R, z_grid, dv, 0.0)
    out = {"flat": ForceCurve(z_grid, g, kind="sphere_gradient",
                              provenance=f"sphere-plate series R={R:g} m, V-V0={dv:g} V")}
    for p in profiles:
        out[p.label] = corrugated_gradient(R, p, dv, 0.0, z_grid, refinement=refinement,
                                           max_workers=max_workers)
    return out


def casimir_figure(theory: TheoryCurve, samples, z_grid, params, noise, seed, assumed_rho=None,
                   residual_voltage=0.0):
    """Synthetic flat and trench measurements with their rho ratios.

    ``samples`` maps label to :class:`TrenchProfile`. The synthetic trench
    gradient is ``assumed_rho[label] * p * F'_flat(theory)``; the default
    ``assumed_rho`` of 1 reproduces PAA.
    """
    assumed_rho = assumed_rho or {}
    seeds = derive_seeds(seed, 1 + len(samples))
    flat = synthetic_gradient_measurement(theory, z_grid, params, noise, seeds[0],
                                          residual_voltage=residual_voltage)
    out = {"theory": theory.on(z_grid), "flat": flat}
    for (label, prof), s in zip(samples.items(), seeds[1:]):
        factor = assumed_rho.get(label, 1.0) * prof.duty_cycle
        measured = synthetic_gradient_measurement(lambda z, f=factor: f * theory(z), z_grid, params,
                                                  noise, s, residual_voltage=residual_voltage)
        paa, rho = paa_and_rho(flat, measured, prof.duty_cycle)
        out[label] = measured
        out[f"paa_{label}"] = paa
        out[f"rho_{label}"] = rho
    return out
