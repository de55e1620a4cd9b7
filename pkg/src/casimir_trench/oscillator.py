"""Torsional-oscillator measurement: forward simulation, calibration, inversion.

The resonance shift is linear in the force gradient, ``delta_f = C F'(z)``,
with separation ``z = z0 - z_piezo - b theta``. The physical constant
``C = -b^2 / (8 pi^2 f0 I)`` is negative for a softening attractive
gradient; this module works with the magnitude convention used for the
calibrated value (``C = 628 m N^-1 s^-1``) and positive gradient
magnitudes, so both ``C`` and ``delta_f`` are positive here.

Randomness: every function takes an explicit integer ``seed``. Ensembles
derive per-run seeds with :func:`derive_seeds` (``SeedSequence.spawn``), so
run ``i`` is reproducible on its own.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .curves import ForceCurve
from .electrostatics.series import sphere_plate_series
from .errors import FitError, ParseError, SimulationError, ValidationError

CSV_HEADER = "z_piezo_m,V_volt,delta_f_hz,sigma_hz"

FIT_XTOL = 1e-8
FIT_MAX_ITER = 200


@dataclass(frozen=True)
class OscillatorParams:
    f0: float = 1783.0
    Q: float = 32000.0
    b: float = 210e-6
    R: float = 50e-6
    C: float = 628.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"oscillator parameter {k} must be > 0, got {v!r}")


@dataclass(frozen=True)
class DistanceModel:
    z0: float
    theta: float = 0.0

    def separation(self, z_piezo, b):
        return self.z0 - np.asarray(z_piezo, dtype=float) - b * self.theta


@dataclass(frozen=True)
class NoiseModel:
    """Gradient noise ``ref * (z / reference_z) ** exponent`` in N/m."""

    gradient_noise_ref: float = 0.64e-6
    reference_z: float = 300e-9
    exponent: float = 0.0

    def __post_init__(self):
        if not self.gradient_noise_ref > 0 or not self.reference_z > 0:
            raise ValidationError("noise amplitude and reference distance must be > 0")

    def gradient_sigma(self, z):
        return self.gradient_noise_ref * (np.asarray(z, dtype=float) / self.reference_z) ** self.exponent


@dataclass(frozen=True, eq=False)
class MeasurementSeries:
    z_piezo: np.ndarray
    V: np.ndarray
    delta_f: np.ndarray
    sigma: np.ndarray
    params: OscillatorParams
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arrs = [np.array(a, dtype=float).reshape(-1) for a in (self.z_piezo, self.V, self.delta_f, self.sigma)]
        if len({a.size for a in arrs}) != 1:
            raise ValidationError("measurement columns differ in length")
        if np.any(arrs[3] <= 0):
            raise ValidationError("sigma must be > 0")
        for name, a in zip(("z_piezo", "V", "delta_f", "sigma"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        for v in np.unique(arrs[1]):
            if np.any(np.diff(arrs[0][arrs[1] == v]) < 0):
                raise ValidationError("z_piezo must be non-decreasing within a sweep")

    def __len__(self):
        return self.z_piezo.size

    @property
    def voltages(self):
        return np.unique(self.V)

    def select(self, mask) -> "MeasurementSeries":
        return MeasurementSeries(self.z_piezo[mask], self.V[mask], self.delta_f[mask], self.sigma[mask],
                                 self.params, self.seed, dict(self.meta))


def derive_seeds(seed, n):
    """``n`` independent integer seeds split from ``seed``."""
    return [int(s.generate_state(1, dtype=np.uint32)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def frequency_shift(params: OscillatorParams, gradient):
    """``delta_f = C F'`` (Hz) for a gradient magnitude ``F'`` in N/m."""
    return params.C * np.asarray(gradient, dtype=float) if np.ndim(gradient) else params.C * float(gradient)


def electrostatic_gradient(R, z, V, V0):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return sphere_plate_series(R, z, V, V0)[1]


def simulate_sweep(params: OscillatorParams, dist: DistanceModel, force_model, voltages, piezo_steps,
                   noise: NoiseModel | None = None, seed=0, residual_voltage=0.0) -> MeasurementSeries:
    """Synthetic frequency-shift sweeps, one per voltage.

    ``force_model`` maps separations (array, m) to the non-electrostatic
    gradient (e.g. Casimir) in N/m, or is ``None``. The electrostatic part
    uses the sphere-plate series with ``V - residual_voltage``. Noise is
    gaussian on ``delta_f`` with ``sigma = C * noise.gradient_sigma(z)``;
    without a noise model a nominal sigma of ``1e-12 * max|delta_f|`` is
    recorded and no noise is drawn.
    """
    zp = np.asarray(piezo_steps, dtype=float)
    if np.any(np.diff(zp) < 0):
        raise ValidationError("piezo_steps must be non-decreasing")
    z = dist.separation(zp, params.b)
    if np.any(z <= 0):
        bad = int(np.argmax(z <= 0))
        raise SimulationError(f"separation underflow at piezo step {bad} (z_piezo = {zp[bad]:g} m)",
                              {"step": bad, "z_piezo": float(zp[bad]), "z": float(z[bad])})
    rng = np.random.default_rng(seed)
    casimir = np.zeros_like(z) if force_model is None else np.asarray(force_model(z), dtype=float)
    rows_zp, rows_v, rows_df, rows_s = [], [], [], []
    for V in np.atleast_1d(np.asarray(voltages, dtype=float)):
        es = electrostatic_gradient(params.R, z, V, residual_voltage)
        df = frequency_shift(params, es + casimir)
        if noise is None:
            sig = np.full_like(df, max(1e-12 * np.abs(df).max(), 1e-300))
        else:
            sig = params.C * noise.gradient_sigma(z)
            df = df + rng.normal(0.0, 1.0, df.size) * sig
        rows_zp.append(zp)
        rows_v.append(np.full_like(zp, V))
        rows_df.append(df)
        rows_s.append(sig)
    meta = {"z0_m": dist.z0, "theta_rad": dist.theta, "residual_voltage_V": residual_voltage,
            "noise": None if noise is None else asdict(noise)}
    return MeasurementSeries(np.concatenate(rows_zp), np.concatenate(rows_v), np.concatenate(rows_df),
                             np.concatenate(rows_s), params, seed, meta)


def fit_parabola_vertex(V, delta_f, sigma=None):
    """Weighted quadratic fit; returns ``(vertex, sigma_vertex, coeffs)``."""
    V = np.asarray(V, dtype=float)
    y = np.asarray(delta_f, dtype=float)
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    if np.unique(V).size < 3:
        raise FitError("need at least 3 distinct voltages for a parabola")
    # centre and scale V for conditioning
    vc, vs = V.mean(), np.ptp(V) or 1.0
    x = (V - vc) / vs
    A = np.column_stack([x**2, x, np.ones_like(x)]) * w[:, None]
    coef, *_ = np.linalg.lstsq(A, y * w, rcond=None)
    a, b, _ = coef
    if not a > 0:
        raise FitError("frequency shift is not convex in V (no minimum)", {"curvature": float(a)})
    cov = np.linalg.pinv(A.T @ A)
    xv = -b / (2 * a)
    jac = np.array([b / (2 * a**2), -1 / (2 * a), 0.0])
    sx = math.sqrt(max(jac @ cov @ jac, 0.0))
    return vc + vs * xv, vs * sx, coef


def find_residual_voltage(series: MeasurementSeries, z_piezo=None):
    """Voltage of minimum frequency shift at one piezo position.

    ``z_piezo`` selects the records (nearest recorded position); by default
    the series must contain a single position.
    """
    positions = np.unique(series.z_piezo)
    if z_piezo is None:
        if positions.size != 1:
            raise FitError("series spans several piezo positions; pass z_piezo")
        mask = np.ones(len(series), dtype=bool)
    else:
        target = positions[np.argmin(np.abs(positions - z_piezo))]
        mask = series.z_piezo == target
    v0, s, _ = fit_parabola_vertex(series.V[mask], series.delta_f[mask], series.sigma[mask])
    return v0, s


@dataclass(frozen=True)
class CalibrationResult:
    C: float
    z0: float
    covariance: np.ndarray
    C_spread: float
    z0_spread: float
    per_voltage: list

    @property
    def C_sigma(self):
        return math.sqrt(self.covariance[0, 0])

    @property
    def z0_sigma(self):
        return math.sqrt(self.covariance[1, 1])


def _initial_guess(R, zp, df, dv):
    # small-gap limit: delta_f ~ C pi eps0 R dv^2 / (z0 - zp)^2  =>  1/sqrt(df) linear in zp
    from .constants import EPS0
    ok = df > 0
    if ok.sum() < 2:
        raise FitError("not enough positive frequency shifts for a starting guess")
    slope, icpt = np.polyfit(zp[ok], 1 / np.sqrt(df[ok]), 1)
    if slope >= 0:
        raise FitError("frequency shift does not grow as the gap closes")
    kappa = math.pi * EPS0 * R * dv**2
    return 1.0 / (slope**2 * kappa), -icpt / slope


def _fit_one(params, zp, df, sig, V, V0, b_theta, casimir_gradient, x0):
    R = params.R
    scale = np.array([x0[0], 1e-6])

    def model(p):
        C, z0 = p * scale
        z = z0 - zp - b_theta
        if np.any(z <= 0):
            return np.full_like(zp, 1e30)
        g = electrostatic_gradient(R, z, V, V0)
        if casimir_gradient is not None:
            g = g + np.asarray(casimir_gradient(z), dtype=float)
        return C * g

    def resid(p):
        return (model(p) - df) / sig

    res = least_squares(resid, np.asarray(x0) / scale, method="lm", xtol=FIT_XTOL,
                        ftol=1e-15, gtol=1e-15, max_nfev=FIT_MAX_ITER * 3)
    if not res.success or res.status <= 0:
        raise FitError("calibration fit did not converge",
                       {"voltage": V, "message": res.message, "cost": float(res.cost)})
    # invert in the scaled space; physical J^T J spans ~20 decades
    cov = np.linalg.pinv(res.jac.T @ res.jac) * np.outer(scale, scale)
    C, z0 = res.x * scale
    return C, z0, cov, float(np.sum(res.fun**2))


def calibrate(series: MeasurementSeries, residual_voltage, voltages=None, casimir_gradient=None,
              theta=0.0, initial=None, residual_voltage_sigma=0.0) -> CalibrationResult:
    """Fit ``C`` and ``z0`` from electrostatic sweeps, one fit per voltage.

    Each sweep is fitted with ``delta_f = C [F'_es(z; V, V0) + F'_cas(z)]``,
    ``z = z0 - z_piezo - b theta``; passing ``casimir_gradient`` removes the
    Casimir contribution self-consistently, omitting it leaves it in the
    fit. The reported values are averages over voltages; ``covariance`` is
    the covariance of that average and ``*_spread`` the sample standard
    deviation across voltages. A non-zero ``residual_voltage_sigma`` adds
    the shift of the averages under ``V0 + sigma`` to the covariance; the
    V0 error is common to all sweeps and does not average down.
    """
    volts = series.voltages if voltages is None else np.asarray(voltages, dtype=float)
    b_theta = series.params.b * theta
    fits = []
    for V in volts:
        m = series.V == V
        if m.sum() < 3:
            raise FitError(f"sweep at V = {V:g} V has fewer than 3 points")
        zp, df, sig = series.z_piezo[m], series.delta_f[m], series.sigma[m]
        x0 = initial or _initial_guess(series.params.R, zp, df, V - residual_voltage)
        C, z0, cov, chi2 = _fit_one(series.params, zp, df, sig, V, residual_voltage, b_theta,
                                    casimir_gradient, x0)
        fits.append({"V": float(V), "C": C, "z0": z0, "cov": cov, "chi2": chi2, "n": int(m.sum())})
    Cs = np.array([f["C"] for f in fits])
    z0s = np.array([f["z0"] for f in fits])
    cov = sum(f["cov"] for f in fits) / len(fits) ** 2
    if residual_voltage_sigma > 0:
        shifted = []
        for f in fits:
            m = series.V == f["V"]
            C, z0, _, _ = _fit_one(series.params, series.z_piezo[m], series.delta_f[m], series.sigma[m], f["V"],
                                   residual_voltage + residual_voltage_sigma, b_theta, casimir_gradient,
                                   (f["C"], f["z0"]))
            shifted.append((C, z0))
        d = np.mean(shifted, axis=0) - np.array([Cs.mean(), z0s.mean()])
        cov = cov + np.outer(d, d)
    spread = (lambda a: float(a.std(ddof=1)) if a.size > 1 else 0.0)
    return CalibrationResult(float(Cs.mean()), float(z0s.mean()), cov, spread(Cs), spread(z0s), fits)


def invert_to_gradient(series: MeasurementSeries, C, dist: DistanceModel, voltage=None) -> ForceCurve:
    """``F' = delta_f / C`` with ``sigma_F' = sigma / |C|`` on the separations
    of ``dist``. A series with several voltages needs ``voltage``."""
    if C == 0:
        raise ValidationError("C must be non-zero")
    if voltage is None:
        if series.voltages.size != 1:
            raise ValidationError("series has several voltages; pass voltage")
        m = np.ones(len(series), dtype=bool)
    else:
        m = series.V == voltage
    z = dist.separation(series.z_piezo[m], series.params.b)
    order = np.argsort(z)
    return ForceCurve(z[order], series.delta_f[m][order] / C, series.sigma[m][order] / abs(C),
                      kind="sphere_gradient", provenance=f"inverted measurement seed={series.seed}")


# -- file I/O ----------------------------------------------------------------

def write_series(series: MeasurementSeries, path):
    """CSV with one row per record plus ``<path>.json`` carrying params and seed."""
    path = Path(path)
    lines = [CSV_HEADER]
    for row in zip(series.z_piezo.tolist(), series.V.tolist(), series.delta_f.tolist(), series.sigma.tolist()):
        lines.append(",".join(repr(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar = {"params": asdict(series.params), "seed": series.seed, "meta": series.meta}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_series(path) -> MeasurementSeries:
    path = Path(path)
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != CSV_HEADER:
            raise ParseError(f"expected header {CSV_HEADER!r}", 1)
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip() or raw.startswith("#"):
                continue
            try:
                rows.append([float(v) for v in raw.split(",")])
            except ValueError:
                raise ParseError(f"bad row {raw.strip()!r}", lineno) from None
            if len(rows[-1]) != 4:
                raise ParseError("expected 4 columns", lineno)
    arr = np.array(rows).reshape(-1, 4)
    side = Path(str(path) + ".json")
    params, seed, meta = OscillatorParams(), None, {}
    if side.exists():
        d = json.loads(side.read_text(encoding="utf-8"))
        params = OscillatorParams(**d["params"])
        seed, meta = d.get("seed"), d.get("meta", {})
    return MeasurementSeries(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], params, seed, meta)
