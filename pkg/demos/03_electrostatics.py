"""Electrostatic force gradient for a sphere over flat and trenched plates.

The flat plate uses the exact image-charge series. Trench arrays are
solved by finite elements on one period of the grating and converted to
a sphere gradient with the proximity force approximation. The flat FEM
result is checked against the series first.

    python demos/03_electrostatics.py
"""
import numpy as np

from casimir_trench.electrostatics import (SAMPLE_A, SAMPLE_B, TrenchProfile, build_unit_cell_mesh,
                                           corrugated_gradient, energy_at, parallel_plate_energy,
                                           sphere_plate_series)

NM = 1e-9
R = 50e-6
DV = 0.3  # V - V0

for prof in (SAMPLE_A, SAMPLE_B):
    m = build_unit_cell_mesh(prof, 200 * NM)
    print(f"sample {prof.label}: period {prof.period / NM:.0f} nm, depth {prof.depth / NM:.0f} nm, "
          f"p = {prof.duty_cycle}, mesh at 200 nm: {m.n_triangles} triangles")

e = energy_at(TrenchProfile.flat(), 100 * NM, 1.0)
print(f"\nflat strip at 100 nm, 1 V: {e:.5e} J/m^2 (capacitor {parallel_plate_energy(100 * NM, 1.0):.5e})")

z = np.linspace(150, 400, 6) * NM
_, series = sphere_plate_series(R, z, DV)
flat = corrugated_gradient(R, TrenchProfile.flat(), DV, 0.0, z, max_workers=4)
grads = {p.label: corrugated_gradient(R, p, DV, 0.0, z, max_workers=4) for p in (SAMPLE_A, SAMPLE_B)}

print(f"\ngradient at V - V0 = {DV} V (N/m):")
print("   z (nm)    series      FEM flat    sample A    sample B    A/flat  B/flat")
for i, zi in enumerate(z):
    a, b = grads["A"].value[i], grads["B"].value[i]
    print(f"  {zi / NM:6.0f}  {series[i]:.4e}  {flat.value[i]:.4e}  {a:.4e}  {b:.4e}  "
          f"{a / series[i]:.3f}   {b / series[i]:.3f}")
