"""Analytic Drude-Lorentz oscillator models behind the bundled tables.

Each model is ``(drude, oscillators)`` with energies in eV:
``drude = (plasma, damping)`` or ``None``, and ``oscillators`` a list of
``(strength, resonance, damping)`` where ``strength`` multiplies
``resonance**2`` (so the static contribution of an oscillator equals its
strength).
"""
import math

import numpy as np

from .constants import ev_to_rad_s

_WP_AU = 9.03
GOLD_RAKIC = (
    (math.sqrt(0.760) * _WP_AU, 0.053),
    [(f * _WP_AU**2 / w**2, w, g) for f, g, w in [
        (0.024, 0.241, 0.415),
        (0.010, 0.345, 0.830),
        (0.071, 0.870, 2.969),
        (0.601, 2.494, 4.304),
        (4.384, 2.214, 13.32),
    ]],
)

SILICON_LORENTZ = (
    None,
    [(2.3, 3.45, 0.4), (7.2, 4.3, 1.0), (1.16, 9.0, 4.0)],
)


def oscillator_eps(model, energy_ev):
    """Complex permittivity at real photon energy (eV)."""
    drude, osc = model
    e = np.asarray(energy_ev, dtype=float)
    eps = np.ones_like(e, dtype=complex)
    if drude is not None:
        wp, g = drude
        eps -= wp**2 / (e * (e + 1j * g))
    for s, w, g in osc:
        eps += s * w**2 / (w**2 - e**2 - 1j * g * e)
    return eps


def oscillator_eps_imag_axis(model, xi):
    """Exact ``eps(i xi)`` for ``xi`` in rad/s."""
    drude, osc = model
    x = np.asarray(xi, dtype=float)
    eps = np.ones_like(x)
    if drude is not None:
        wp, g = (ev_to_rad_s(v) for v in drude)
        eps += wp**2 / (x * (x + g))
    for s, w, g in osc:
        w, g = ev_to_rad_s(w), ev_to_rad_s(g)
        eps += s * w**2 / (w**2 + x**2 + g * x)
    return eps
