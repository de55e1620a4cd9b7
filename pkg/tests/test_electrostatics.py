import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casimir_trench.electrostatics import (SAMPLE_A, SAMPLE_B, Mesh2D, TrenchProfile, build_unit_cell_mesh,
                                           corrugated_gradient, energy_at, export_mesh_csv, parallel_plate_energy,
                                           pfa_force, pfa_gradient, series_sum, solve_energy_per_area,
                                           sphere_plate_series)
from casimir_trench.electrostatics.fem import export_solution_csv
from casimir_trench.electrostatics.mesh import LEFT, RIGHT, TAGS, TOP, TRENCH
from casimir_trench.errors import AssemblyError, DomainError, MeshError, ValidationError

from oracles import image_series_mp
from oracles import parallel_plate_energy as pp_oracle

NM = 1e-9
R = 50e-6


# -- image-charge series -----------------------------------------------------

def test_zero_voltage_difference():
    assert sphere_plate_series(R, 100 * NM, -0.43, -0.43) == (0.0, 0.0)


def test_small_gap_asymptote():
    f, _ = sphere_plate_series(R, 100 * NM, 0.3, 0.0)
    asym = math.pi * 8.8541878128e-12 * R * 0.09 / 100e-9
    assert asym == pytest.approx(1.25e-9, rel=2e-3)
    assert f == pytest.approx(pfa_force(R, 100 * NM, 0.3), rel=1e-2)


def test_against_high_precision_sum():
    for z in (20 * NM, 300 * NM, 5e-6, 40e-6):
        f, _ = sphere_plate_series(R, z, 0.3, 0.0)
        assert f == pytest.approx(image_series_mp(R, z, 0.3), rel=1e-10)


def test_quadratic_voltage_law():
    z = np.array([80, 200, 700]) * NM
    f1, g1 = sphere_plate_series(R, z, 0.25, 0.0)
    f2, g2 = sphere_plate_series(R, z, 0.5, 0.0)
    assert np.array_equal(f2, 4 * f1) and np.array_equal(g2, 4 * g1)
    f3, _ = sphere_plate_series(R, z, 0.1, -0.2)
    f4, _ = sphere_plate_series(R, z, -0.5, -0.2)
    f5, _ = sphere_plate_series(R, z, -1.1, -0.2)
    assert np.allclose(f4, f3, rtol=1e-12)
    assert np.allclose(f5, 9 * f3, rtol=1e-12)


def test_gradient_is_minus_force_derivative():
    z, h = 150 * NM, 1e-12
    fp, _ = sphere_plate_series(R, z + h, 0.3)
    fm, _ = sphere_plate_series(R, z - h, 0.3)
    _, g = sphere_plate_series(R, z, 0.3)
    assert g == pytest.approx(-(fp - fm) / (2 * h), rel=1e-6)
    assert g == pytest.approx(pfa_gradient(R, z, 0.3), rel=1e-2)


def test_series_scalar_and_array_agree():
    z = np.array([90, 400]) * NM
    fa, ga = sphere_plate_series(R, z, 0.3)
    for i, zi in enumerate(z):
        f, g = sphere_plate_series(R, zi, 0.3)
        assert isinstance(f, float)
        assert f == pytest.approx(fa[i], rel=1e-13) and g == pytest.approx(ga[i], rel=1e-13)


def test_truncation_tail():
    a = np.arccosh(1 + np.array([10, 100, 1000]) * NM / R)
    s, _, n = series_sum(a)
    s2, _, _ = series_sum(a, extra_terms=10)
    assert np.all(np.abs(s2 / s - 1) < 1e-10)
    assert n > 10


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-4, 1e-2), st.floats(0.05, 1.0))
def test_force_decreases_with_gap(z_over_r, dv):
    z = np.array([1.0, 1.5]) * z_over_r * R
    f, g = sphere_plate_series(R, z, dv)
    assert f[1] < f[0] and np.all(g > 0)


def test_series_errors_and_warning():
    with pytest.raises(DomainError):
        sphere_plate_series(R, 0.0, 1.0)
    with pytest.raises(DomainError):
        sphere_plate_series(-R, 1e-7, 1.0)
    with pytest.raises(DomainError):
        series_sum(0.0)
    with pytest.warns(UserWarning):
        sphere_plate_series(R, 2 * R, 1.0)


# -- mesh ----------------------------------------------------------------------

def test_flat_profile_gives_structured_strip():
    m = build_unit_cell_mesh(TrenchProfile.flat(), 100 * NM)
    assert np.allclose(m.nodes[:, 1].min(), 0.0) and np.allclose(m.nodes[:, 1].max(), 100 * NM)
    assert m.n_triangles > 10_000
    ys = np.unique(m.nodes[:, 1])
    assert np.allclose(np.diff(ys), ys[1] - ys[0])


@pytest.mark.parametrize("prof", [SAMPLE_A, SAMPLE_B])
def test_trench_mesh_invariants(prof):
    m = build_unit_cell_mesh(prof, 200 * NM)
    assert m.n_triangles > 10_000
    m.validate()
    assert set(m.boundary_tags.values()) == set(TAGS)
    assert np.all(m.areas() > 0)
    assert m.nodes[:, 1].min() == pytest.approx(-prof.depth)
    left, right = m.tagged(LEFT), m.tagged(RIGHT)
    assert np.allclose(m.nodes[left, 0], 0.0) and np.allclose(m.nodes[right, 0], prof.period)
    total = m.areas().sum()
    slot = (1 - prof.duty_cycle) * prof.period * prof.depth
    assert total == pytest.approx(prof.period * 200 * NM + slot, rel=1e-12)


def test_refinement_quadruples_triangles():
    a = build_unit_cell_mesh(SAMPLE_B, 200 * NM, refinement=1)
    b = build_unit_cell_mesh(SAMPLE_B, 200 * NM, refinement=2)
    assert b.n_triangles / a.n_triangles == pytest.approx(4.0, rel=0.1)
    assert set(a.boundary_tags.values()) == set(b.boundary_tags.values()) == set(TAGS)


def test_density_doubles_triangles():
    a = build_unit_cell_mesh(SAMPLE_A, 150 * NM)
    b = build_unit_cell_mesh(SAMPLE_A, 150 * NM, density=math.sqrt(2))
    assert b.n_triangles / a.n_triangles == pytest.approx(2.0, rel=0.1)


def test_profile_validation():
    with pytest.raises(ValidationError, match="duty_cycle"):
        TrenchProfile(1e-6, 1e-6, 1.3)
    with pytest.raises(ValidationError):
        TrenchProfile(-1e-6, 1e-6, 0.5)
    with pytest.raises(ValidationError):
        TrenchProfile(1e-6, -1e-6, 0.5)
    assert SAMPLE_B.period == 400e-9 and SAMPLE_B.depth == 1.07e-6 and SAMPLE_B.duty_cycle == 0.510
    assert SAMPLE_A.lambda_over_a == pytest.approx(1.0e-6 / 0.49e-6)
    assert SAMPLE_B.lambda_over_a == pytest.approx(400 / 535)


def test_mesh_errors():
    with pytest.raises(MeshError):
        build_unit_cell_mesh(SAMPLE_A, 0.0)
    with pytest.raises(MeshError):
        build_unit_cell_mesh(SAMPLE_A, 1e-15)
    with pytest.raises(MeshError):
        build_unit_cell_mesh(TrenchProfile(1e-6, 1e-6, 0.999999), 200 * NM)
    with pytest.raises(MeshError):
        build_unit_cell_mesh(SAMPLE_A, 1e-7, refinement=-1)


def test_validate_catches_broken_meshes():
    m = build_unit_cell_mesh(SAMPLE_B, 200 * NM, refinement=0)
    flipped = Mesh2D(m.nodes, m.triangles[:, [0, 2, 1]], m.boundary_tags, m.period, m.gap, m.profile,
                     m.periodic_pairs)
    with pytest.raises(MeshError):
        flipped.validate()
    tags = dict(m.boundary_tags)
    tags.pop(next(iter(tags)))
    with pytest.raises(MeshError):
        Mesh2D(m.nodes, m.triangles, tags, m.period, m.gap, m.profile, m.periodic_pairs).validate()


def test_mesh_export(tmp_path):
    m = build_unit_cell_mesh(SAMPLE_B, 200 * NM, refinement=0)
    export_mesh_csv(m, tmp_path / "n.csv", tmp_path / "t.csv")
    nodes = (tmp_path / "n.csv").read_text().splitlines()
    tris = (tmp_path / "t.csv").read_text().splitlines()
    assert nodes[0] == "node,x_m,y_m,tag" and len(nodes) == m.n_nodes + 1
    assert tris[0] == "triangle,n0,n1,n2" and len(tris) == m.n_triangles + 1
    x, y = (float(v) for v in nodes[5].split(",")[1:3])
    assert (x, y) == tuple(m.nodes[4])


# -- FEM -------------------------------------------------------------------------

def test_parallel_plate_energy():
    assert parallel_plate_energy(100 * NM, 1.0) == pytest.approx(4.427e-5, rel=1e-3)
    e = energy_at(TrenchProfile.flat(), 100 * NM, 1.0)
    assert e == pytest.approx(pp_oracle(100 * NM, 1.0), rel=5e-3)


def test_zero_voltage_zero_energy():
    sol = solve_energy_per_area(build_unit_cell_mesh(SAMPLE_B, 200 * NM, refinement=0), 0.0)
    assert sol.energy_per_area == 0.0 and np.all(sol.potential == 0)


@pytest.mark.parametrize("prof", [SAMPLE_A, SAMPLE_B])
def test_trench_energy_bounded_by_flat_capacitors(prof):
    z = 200 * NM
    e = energy_at(prof, z, 1.0)
    assert pp_oracle(z + prof.depth, 1.0) < e < pp_oracle(z, 1.0)


def test_potential_obeys_maximum_principle():
    m = build_unit_cell_mesh(SAMPLE_A, 150 * NM, refinement=1)
    sol = solve_energy_per_area(m, 2.0)
    assert sol.potential.min() >= -1e-12 and sol.potential.max() <= 2.0 + 1e-12
    assert np.all(sol.potential[m.tagged(TOP)] == 2.0)
    assert np.all(sol.potential[m.tagged(TRENCH)] == 0.0)
    pairs = m.periodic_pairs
    assert np.array_equal(sol.potential[pairs[:, 0]], sol.potential[pairs[:, 1]])


def test_energy_scales_with_voltage_squared():
    m = build_unit_cell_mesh(SAMPLE_B, 200 * NM, refinement=1)
    e1 = solve_energy_per_area(m, 1.0).energy_per_area
    e3 = solve_energy_per_area(m, 3.0).energy_per_area
    assert e3 == pytest.approx(9 * e1, rel=1e-9)


@pytest.mark.parametrize("prof", [SAMPLE_A, SAMPLE_B])
def test_depth_insensitive(prof):
    # the trench floor sits deep enough that a 10 % deeper trench barely matters
    deeper = TrenchProfile(prof.period, 1.1 * prof.depth, prof.duty_cycle)
    e = energy_at(prof, 200 * NM, 1.0)
    assert energy_at(deeper, 200 * NM, 1.0) == pytest.approx(e, rel=1e-4)


def test_missing_electrode_is_assembly_error():
    m = build_unit_cell_mesh(SAMPLE_B, 200 * NM, refinement=0)
    tags = {k: v for k, v in m.boundary_tags.items() if v != TOP}
    broken = Mesh2D(m.nodes, m.triangles, tags, m.period, m.gap, m.profile, m.periodic_pairs)
    with pytest.raises(AssemblyError):
        solve_energy_per_area(broken, 1.0)


def test_solution_export(tmp_path):
    m = build_unit_cell_mesh(SAMPLE_B, 200 * NM, refinement=0)
    sol = solve_energy_per_area(m, 1.0)
    export_solution_csv(sol, tmp_path / "phi.csv")
    lines = (tmp_path / "phi.csv").read_text().splitlines()
    assert lines[0] == "node,x_m,y_m,potential_V" and len(lines) == m.n_nodes + 1


@pytest.mark.slow
def test_flat_gradient_matches_series():
    z = np.array([200 * NM])
    fem = corrugated_gradient(R, TrenchProfile.flat(), 0.3, 0.0, z)
    _, series = sphere_plate_series(R, z, 0.3, 0.0)
    assert fem.value[0] == pytest.approx(series[0], rel=1e-2)


@pytest.mark.slow
def test_trench_gradient_between_flat_bounds():
    z = np.array([200 * NM])
    g = corrugated_gradient(R, SAMPLE_B, 0.3, 0.0, z).value[0]
    # gradients of flat capacitors at gaps z and z + t
    _, upper = sphere_plate_series(R, z, 0.3)
    _, lower = sphere_plate_series(R, z + SAMPLE_B.depth, 0.3)
    assert lower[0] < g < upper[0]


def test_gradient_zero_voltage_and_validation():
    z = np.array([150 * NM, 200 * NM])
    c = corrugated_gradient(R, SAMPLE_B, -0.43, -0.43, z)
    assert np.all(c.value == 0) and c.kind == "sphere_gradient"
    with pytest.raises(ValidationError):
        corrugated_gradient(R, SAMPLE_B, 1.0, 0.0, z[::-1])
    with pytest.raises(ValidationError):
        corrugated_gradient(R, SAMPLE_B, 1.0, 0.0, z, step=10 * NM)


@pytest.mark.slow
def test_gradient_threaded_equals_serial():
    z = np.array([150 * NM, 250 * NM])
    a = corrugated_gradient(R, SAMPLE_A, 0.3, 0.0, z, refinement=1)
    b = corrugated_gradient(R, SAMPLE_A, 0.3, 0.0, z, refinement=1, max_workers=2)
    assert np.array_equal(a.value, b.value)
