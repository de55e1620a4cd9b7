"""Exact sphere-plate electrostatic force from the image-charge series.

    F = 2 pi eps0 (V - V0)^2 sum_{n>=1} [coth(a) - n coth(n a)] / sinh(n a),
    cosh(a) = 1 + z/R

Every term is <= 0, so the attractive magnitude is ``-F``. The printed form
of this series omits the square on ``V - V0``; it is required by units and
by the parabolic dependence of the frequency shift on ``V``.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from ..constants import EPS0
from ..errors import DomainError, NumericalError

TERM_RTOL = 1e-12
MAX_TERMS = 5_000_000


def _terms(alpha, n):
    """Series terms and their alpha-derivatives; alpha (m,1), n (1,k)."""
    na = n * alpha
    coth_a = 1.0 / np.tanh(alpha)
    sinh_na = np.sinh(na)
    coth_na = 1.0 / np.tanh(na)
    g = (coth_a - n * coth_na) / sinh_na
    dg = ((-1.0 / np.sinh(alpha) ** 2 + n**2 / sinh_na**2) / sinh_na
          - (coth_a - n * coth_na) * n * coth_na / sinh_na)
    return g, dg


def series_sum(alpha, extra_terms=0):
    """``(S, dS/dalpha, n_terms)`` for scalar or array ``alpha``.

    Terms are added until the last one is below ``TERM_RTOL`` relative to
    the partial sum, for every alpha.
    """
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    if np.any(~(a > 0)):
        raise DomainError("alpha must be > 0")
    amin = a.min()
    # terms decay like n exp(-n alpha)
    n_terms = int(math.ceil((math.log(1.0 / TERM_RTOL) + 2 * math.log(1.0 / amin + 2)) / amin)) + 10
    while True:
        if n_terms > MAX_TERMS:
            raise NumericalError("electrostatic series did not converge", {"alpha_min": float(amin)})
        n = np.arange(1, n_terms + 1 + extra_terms, dtype=float)[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            g, dg = _terms(a[:, None], n)
        g = np.nan_to_num(g, nan=0.0)
        dg = np.nan_to_num(dg, nan=0.0)
        s = g.sum(axis=1)
        tail = np.abs(g[:, n_terms - 1])
        if np.all((s == 0.0) | (tail <= TERM_RTOL * np.abs(s))):
            ds = dg.sum(axis=1)
            if np.ndim(alpha) == 0:
                return float(s[0]), float(ds[0]), n_terms + extra_terms
            return s, ds, n_terms + extra_terms
        n_terms *= 2


def sphere_plate_series(R, z, V, V0=0.0, extra_terms=0):
    """Electrostatic force (N) and gradient (N/m) between sphere and plane.

    Both are reported as positive magnitudes: ``force = |F|`` and
    ``gradient = -d|F|/dz``. ``z`` may be an array.
    """
    z_arr = np.asarray(z, dtype=float)
    if not R > 0 or np.any(~(z_arr > 0)):
        raise DomainError("R and z must be > 0")
    if np.any(z_arr / R > 1):
        warnings.warn(f"z/R = {np.max(z_arr) / R:g} > 1: series converges slowly", stacklevel=2)
    dv2 = (V - V0) ** 2
    if dv2 == 0.0:
        zero = np.zeros_like(z_arr)
        return (0.0, 0.0) if zero.ndim == 0 else (zero, zero.copy())
    alpha = np.arccosh(1.0 + z_arr / R)
    s, ds, _ = series_sum(alpha, extra_terms)
    pref = 2.0 * math.pi * EPS0 * dv2
    dalpha_dz = 1.0 / (R * np.sinh(alpha))
    force = -pref * s
    gradient = pref * ds * dalpha_dz
    if np.ndim(force) == 0:
        return float(force), float(gradient)
    return force, gradient


def pfa_force(R, z, V, V0=0.0):
    """Leading small-gap asymptote ``pi eps0 R (V - V0)^2 / z``."""
    return math.pi * EPS0 * R * (V - V0) ** 2 / z


def pfa_gradient(R, z, V, V0=0.0):
    return math.pi * EPS0 * R * (V - V0) ** 2 / z**2
