"""Permittivity on the imaginary frequency axis for gold and doped silicon.

Prints the Drude parameters derived from the silicon transport data,
eps(i xi) for both materials at a few frequencies, and the optical skin
depths at 300 nm.

    python demos/01_dielectric.py
"""
import numpy as np

from casimir_trench.constants import ev_to_rad_s
from casimir_trench.dielectric import (CarrierParams, doped_silicon_model, drude_params_from_transport,
                                       eps_imag_axis, gold_model, skin_depth)

carriers = CarrierParams(carrier_density_cm3=2e18, dc_resistivity_ohm_cm=0.028, effective_mass_ratio=0.26)
wp, gamma = drude_params_from_transport(carriers)
print(f"doped Si Drude term: wp = {wp:.4e} rad/s ({wp / ev_to_rad_s(1.0):.4f} eV), gamma = {gamma:.4e} rad/s")

gold = gold_model()
silicon = doped_silicon_model(carriers)

print("\n   xi (rad/s)    eps_Au(i xi)    eps_Si(i xi)")
for xi in np.geomspace(1e12, 1e18, 7):
    print(f"  {xi:10.2e}  {eps_imag_axis(gold, xi):14.5g}  {eps_imag_axis(silicon, xi):14.5g}")

# the carrier term only matters well below the silicon band gap
core = doped_silicon_model(CarrierParams(1e10, 1e6, 0.26))
for xi in (1e13, 1e15):
    ratio = eps_imag_axis(silicon, xi) / eps_imag_axis(core, xi)
    print(f"carrier enhancement at xi = {xi:.0e}: x{ratio:.3f}")

print(f"\nskin depth at 300 nm: gold {skin_depth(gold, 300e-9) * 1e9:.1f} nm, "
      f"doped Si {skin_depth(silicon, 300e-9) * 1e9:.1f} nm")
