"""Physical constants (CODATA 2018, via scipy) and unit conversions.

All internal quantities are SI: rad/s, m, kg, V, N.
"""
from scipy import constants as _sc

HBAR = _sc.hbar
C_LIGHT = _sc.c
EPS0 = _sc.epsilon_0
E_CHARGE = _sc.e
M_ELECTRON = _sc.m_e

NM = 1e-9
UM = 1e-6

# photon energy (eV) -> angular frequency (rad/s)
EV_TO_RAD_S = _sc.e / _sc.hbar


def ev_to_rad_s(energy_ev):
    return energy_ev * EV_TO_RAD_S


def rad_s_to_ev(omega):
    return omega / EV_TO_RAD_S


def per_cm3_to_per_m3(n):
    return n * 1e6


def ohm_cm_to_ohm_m(rho):
    return rho * 1e-2
