"""Casimir pressure between gold and doped silicon, and the sphere gradient.

Checks the perfect-conductor limit, prints the finite-conductivity
reduction factor, then builds the sphere-plate gradient used for the
flat sample with and without surface roughness.

    python demos/02_lifshitz.py
"""
import numpy as np

from casimir_trench.dielectric import doped_silicon_model, gold_model, perfect_conductor
from casimir_trench.lifshitz import ideal_pressure, interaction_curves, reduction_factor
from casimir_trench.pipeline import flat_casimir_theory
from casimir_trench.roughness import RoughnessSpec

NM = 1e-9
R = 50e-6

z = np.array([100, 150, 200, 300, 500, 1000]) * NM
pc = perfect_conductor()
_, p_pc = interaction_curves(pc, pc, z)
print("perfect conductors, Lifshitz vs closed form:")
for zi, p in zip(z, p_pc.value):
    print(f"  z = {zi / NM:6.0f} nm  P = {p:.5e} Pa  rel. err = {p / ideal_pressure(zi) - 1:+.1e}")

gold, silicon = gold_model(), doped_silicon_model()
eta = reduction_factor(gold, silicon, z, max_workers=4)
print("\nAu / doped Si reduction factor eta = P / P_ideal:")
for zi, e in zip(z, eta):
    print(f"  z = {zi / NM:6.0f} nm  eta = {e:.3f}")

smooth = flat_casimir_theory(R, gold, silicon, 150 * NM, 500 * NM, max_workers=4)
rough = flat_casimir_theory(R, gold, silicon, 150 * NM, 500 * NM, RoughnessSpec(4e-9, 0.6e-9), max_workers=4)
grid = np.linspace(150, 500, 8) * NM
print("\nsphere-plate gradient (R = 50 um):")
print("   z (nm)   smooth (N/m)   rough (N/m)   roughness gain")
for zi, a, b in zip(grid, smooth(grid), rough(grid)):
    print(f"  {zi / NM:6.0f}   {a:.4e}     {b:.4e}     {b / a - 1:+.2%}")
