"""Electrostatic calibration: exact sphere-plate series and FEM for trench gratings."""
from .fem import FieldSolution, corrugated_gradient, energy_at, parallel_plate_energy, solve_energy_per_area
from .mesh import SAMPLE_A, SAMPLE_B, Mesh2D, TrenchProfile, build_unit_cell_mesh, export_mesh_csv
from .series import pfa_force, pfa_gradient, series_sum, sphere_plate_series

__all__ = [
    "FieldSolution", "corrugated_gradient", "energy_at", "parallel_plate_energy", "solve_energy_per_area",
    "SAMPLE_A", "SAMPLE_B", "Mesh2D", "TrenchProfile", "build_unit_cell_mesh", "export_mesh_csv",
    "pfa_force", "pfa_gradient", "series_sum", "sphere_plate_series",
]
