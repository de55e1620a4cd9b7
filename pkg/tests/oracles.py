"""Independent reference computations used by the tests.

Each oracle avoids the code path it checks: different integration
variables, brute-force rules, or sampling instead of quadrature.
"""
import math

import numpy as np
from scipy import constants as sc

HBAR, C, EPS0 = sc.hbar, sc.c, sc.epsilon_0


def kk_trapezoid(energy_ev, n, k, xi):
    """eps(i xi) by plain trapezoid over the raw table rows (no tails)."""
    w = np.asarray(energy_ev) * sc.e / sc.hbar
    eps2 = 2.0 * np.asarray(n) * np.asarray(k)
    xi = np.atleast_1d(xi)[:, None]
    integrand = w * eps2 / (w**2 + xi**2)
    return 1.0 + 2.0 / math.pi * np.trapezoid(integrand, w, axis=1)


def plasma_frequency(n_cm3, m_ratio):
    """omega_p from N (cm^-3) and m*/m_e, evaluated by hand."""
    n = n_cm3 * 1e6
    return math.sqrt(n * sc.e**2 / (sc.epsilon_0 * m_ratio * sc.m_e))


def lifshitz_pressure_trapezoid(eps1, eps2, z, n=200):
    """Zero-temperature Lifshitz pressure on an n x n trapezoid grid.

    Variables ``q = sqrt(k^2 + xi^2/c^2)`` and ``s = xi / (c q)``, so
    ``P = hbar c / (2 pi^2) int_0^inf q^3 dq int_0^1 ds sum_pol r r e / (1 - r r e)``
    with ``e = exp(-2 q z)``. ``eps1``/``eps2`` map xi (array) to eps(i xi);
    ``np.inf`` marks a perfect conductor.
    """
    q = np.linspace(0.0, 40.0 / (2 * z), n)
    s = np.linspace(0.0, 1.0, n)
    Q, S = np.meshgrid(q, s, indexing="ij")
    # xi = 0 lies on the grid edge; a tiny positive value stands in for it
    xi = np.maximum(C * Q * S, 1.0)
    rr_te = np.ones_like(Q)
    rr_tm = np.ones_like(Q)
    for eps in (eps1, eps2):
        e = eps(xi.ravel()).reshape(xi.shape)
        if np.all(np.isinf(e)):
            rr_te = -rr_te
            continue
        km = np.sqrt(Q**2 + (e - 1.0) * (xi / C) ** 2)
        with np.errstate(invalid="ignore"):
            rr_te = rr_te * np.where(Q + km > 0, (Q - km) / (Q + km), 0.0)
            rr_tm = rr_tm * np.where(Q + km > 0, (e * Q - km) / (e * Q + km), 0.0)
    ex = np.exp(-2 * Q * z)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = Q**3 * (rr_te * ex / (1 - rr_te * ex) + rr_tm * ex / (1 - rr_tm * ex))
    f[0] = 0.0  # q -> 0 limit of q^3 / (1 - e^{-2qz}) is 0
    total = np.trapezoid(np.trapezoid(f, s, axis=1), q)
    return HBAR * C / (2 * math.pi**2) * total


def roughness_monte_carlo(func, z, rms_1, rms_2, n=100_000, seed=12345):
    """<func(z + h1 + h2)> with independent gaussian heights per surface."""
    rng = np.random.default_rng(seed)
    h = rng.normal(0.0, rms_1, n) + rng.normal(0.0, rms_2, n)
    return float(np.mean(func(z + h)))


def image_series_mp(R, z, dv, terms=None):
    """Sphere-plate force magnitude with mpmath summation (high precision)."""
    import mpmath as mp
    mp.mp.dps = 30
    a = mp.acosh(1 + mp.mpf(z) / mp.mpf(R))

    def term(n):
        return (mp.coth(a) - n * mp.coth(n * a)) / mp.sinh(n * a)

    s = mp.nsum(term, [1, mp.inf]) if terms is None else mp.fsum(term(n) for n in range(1, terms + 1))
    return float(-2 * mp.pi * EPS0 * dv**2 * s)


def parallel_plate_energy(d, v):
    return EPS0 * v**2 / (2 * d)
