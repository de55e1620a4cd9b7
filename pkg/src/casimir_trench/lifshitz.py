"""Zero-temperature Lifshitz interaction between two half-spaces, and PFA.

Energy per area and pressure between plates at separation ``z``::

    E/A = hbar/(4 pi^2) int_0^inf dxi int_0^inf k dk  sum_p ln(1 - r1_p r2_p exp(-2 kappa z))
    P   = dE/dz

with ``kappa = sqrt(k^2 + xi^2/c^2)``. The integrals are done in polar
coordinates ``k = kappa cos(phi)``, ``xi/c = kappa sin(phi)``, ``x = 2 kappa z``:

    E/A = hbar c / (32 pi^2 z^3) int_0^{pi/2} cos(phi) dphi int_0^inf x^2 sum_p ln(1 - R_p e^-x) dx
    P   = hbar c / (32 pi^2 z^4) int_0^{pi/2} cos(phi) dphi int_0^inf x^3 sum_p R_p e^-x / (1 - R_p e^-x) dx

where ``R_p = r1_p r2_p`` depends on ``phi`` and ``xi = c x sin(phi) / (2 z)``.
In these variables the integrand is O(1) and the reflection coefficients
depend only on ``eps`` and ``sin(phi)``.

Sign convention: ``energy_per_area`` is negative (binding); ``pressure`` is
the attractive magnitude, positive. Sphere forces and gradients from PFA are
positive magnitudes as well.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, HBAR
from .curves import ForceCurve
from .dielectric import DielectricModel
from .errors import DomainError, ValidationError
from .quadrature import integrate

X_BREAKS = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 100.0)
PHI_BREAKS = (0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2)


@dataclass(frozen=True)
class PlatePair:
    material_1: DielectricModel
    material_2: DielectricModel
    separation: float

    def __post_init__(self):
        if not self.separation > 0:
            raise ValidationError("separation must be > 0")


def ideal_pressure(z):
    """Perfect-conductor Casimir pressure ``pi^2 hbar c / (240 z^4)`` in Pa."""
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("separation must be > 0")
    out = math.pi**2 * HBAR * C_LIGHT / (240.0 * z**4)
    return out if out.ndim else float(out)


def ideal_energy_per_area(z):
    """``-pi^2 hbar c / (720 z^3)`` in J/m^2."""
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("separation must be > 0")
    out = -math.pi**2 * HBAR * C_LIGHT / (720.0 * z**3)
    return out if out.ndim else float(out)


def fresnel_coefficients(eps, xi, k_t):
    """TE and TM reflection coefficients at imaginary frequency.

    ``r_TE = (kappa - kappa1)/(kappa + kappa1)``,
    ``r_TM = (eps kappa - kappa1)/(eps kappa + kappa1)`` with
    ``kappa = sqrt(k_t^2 + xi^2/c^2)`` and ``kappa1 = sqrt(k_t^2 + eps xi^2/c^2)``.
    ``eps = inf`` gives the perfect-conductor values ``(-1, 1)``.
    """
    eps, xi, k_t = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (eps, xi, k_t)))
    if np.any(eps < 1) or np.any(xi <= 0) or np.any(k_t < 0):
        raise DomainError("need eps >= 1, xi > 0, k_t >= 0")
    q2 = (xi / C_LIGHT) ** 2
    kappa = np.sqrt(k_t**2 + q2)
    pc = np.isinf(eps)
    e = np.where(pc, 1.0, eps)
    kappa1 = np.sqrt(k_t**2 + e * q2)
    r_te = np.where(pc, -1.0, (kappa - kappa1) / (kappa + kappa1))
    r_tm = np.where(pc, 1.0, (e * kappa - kappa1) / (e * kappa + kappa1))
    if r_te.ndim == 0:
        return float(r_te), float(r_tm)
    return r_te, r_tm


def _reflection(model, xi, sin2):
    """``(r_TE, r_TM)`` in polar variables; shapes follow ``xi``."""
    if model.is_perfect_conductor:
        return np.full(xi.shape, -1.0), np.full(xi.shape, 1.0)
    eps = model.fast_eps(xi)
    s = np.sqrt(1.0 + (eps - 1.0) * sin2)
    return (1.0 - s) / (1.0 + s), (eps - s) / (eps + s)


def _products(pair, x, phi):
    sinp = np.sin(phi)
    xi = C_LIGHT * x * sinp / (2.0 * pair.separation)
    sin2 = np.broadcast_to(sinp**2, xi.shape)
    te1, tm1 = _reflection(pair.material_1, xi, sin2)
    te2, tm2 = _reflection(pair.material_2, xi, sin2)
    return te1 * te2, tm1 * tm2


def _double_integral(pair, inner, rtol, order):
    def over_phi(phi):
        def over_x(x):
            return inner(pair, x[:, None], phi[None, :])

        vals = integrate(over_x, X_BREAKS, rtol=rtol * 0.1, order=order)
        return np.cos(phi) * vals

    return float(integrate(over_phi, PHI_BREAKS, rtol=rtol, order=order))


def _energy_kernel(pair, x, phi):
    x, phi = np.broadcast_arrays(x, phi)
    a, b = _products(pair, x, phi)
    ex = np.exp(-x)
    return x**2 * (np.log1p(-a * ex) + np.log1p(-b * ex))


def _pressure_kernel(pair, x, phi):
    x, phi = np.broadcast_arrays(x, phi)
    a, b = _products(pair, x, phi)
    ex = np.exp(-x)
    return x**3 * (a * ex / (1.0 - a * ex) + b * ex / (1.0 - b * ex))


def plate_interaction(p: PlatePair, rtol=1e-6, order=16):
    """Return ``(pressure [Pa, attractive > 0], energy_per_area [J/m^2, < 0])``.

    Raises NumericalError if the adaptive quadrature cannot reach ``rtol``.
    """
    z = p.separation
    pref = HBAR * C_LIGHT / (32.0 * math.pi**2)
    energy = pref / z**3 * _double_integral(p, _energy_kernel, rtol, order)
    pressure = pref / z**4 * _double_integral(p, _pressure_kernel, rtol, order)
    return pressure, energy


def interaction_curves(material_1, material_2, z_grid, rtol=1e-6, order=16, max_workers=None):
    """Energy and pressure curves over ``z_grid``; separations are independent
    and may be evaluated concurrently with ``max_workers`` threads."""
    z_grid = np.asarray(z_grid, dtype=float)

    def one(z):
        return plate_interaction(PlatePair(material_1, material_2, float(z)), rtol, order)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as ex:
            results = list(ex.map(one, z_grid))
    else:
        results = [one(z) for z in z_grid]
    pressure = np.array([r[0] for r in results])
    energy = np.array([r[1] for r in results])
    tag = f"lifshitz T=0 {material_1.name or material_1.kind}|{material_2.name or material_2.kind}"
    return (ForceCurve(z_grid, energy, kind="energy_per_area", provenance=tag),
            ForceCurve(z_grid, pressure, kind="pressure", provenance=tag))


def reduction_factor(material_1, material_2, z_grid, **kw):
    """``eta(z) = P_real / P_ideal`` on ``z_grid``."""
    _, pressure = interaction_curves(material_1, material_2, z_grid, **kw)
    return pressure.value / ideal_pressure(pressure.z)


def pfa_sphere(R, energy_curve: ForceCurve, pressure_curve: ForceCurve):
    """Sphere-plate force ``2 pi R |E/A|`` and gradient ``2 pi R P``.

    Warns when ``R < 20 max(z)``, where PFA corrections become noticeable.
    """
    if not R > 0:
        raise DomainError("sphere radius must be > 0")
    if energy_curve.kind != "energy_per_area" or pressure_curve.kind != "pressure":
        raise ValidationError("expected an energy_per_area and a pressure curve")
    if not energy_curve.same_grid(pressure_curve):
        raise ValidationError("energy and pressure curves must share a z grid")
    if R < 20 * energy_curve.z.max():
        warnings.warn(f"R = {R:g} m is not >> z_max = {energy_curve.z.max():g} m; PFA may be inaccurate",
                      stacklevel=2)
    k = 2 * math.pi * R
    tag = f"PFA R={R:g} m; {pressure_curve.provenance}"
    force = ForceCurve(energy_curve.z, k * np.abs(energy_curve.value), k * energy_curve.sigma,
                       kind="sphere_force", provenance=tag)
    gradient = ForceCurve(pressure_curve.z, k * pressure_curve.value, k * pressure_curve.sigma,
                          kind="sphere_gradient", provenance=tag)
    return force, gradient
