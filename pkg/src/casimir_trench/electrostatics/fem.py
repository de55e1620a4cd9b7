"""P1 finite-element Laplace solve on the unit cell and the PFA gradient pipeline."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..constants import EPS0
from ..curves import ForceCurve
from ..errors import AssemblyError, NumericalError, ValidationError
from .mesh import DEFAULT_REFINEMENT, TOP, TRENCH, Mesh2D, TrenchProfile, build_unit_cell_mesh

CG_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class FieldSolution:
    potential: np.ndarray
    mesh: Mesh2D
    energy_per_area: float
    voltage: float


def _gradients(mesh):
    """Barycentric gradients (n_tri, 3, 2) and triangle areas."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grads = np.stack([b, c], axis=2) / (2.0 * area[:, None, None])
    return grads, area


def stiffness(mesh):
    """Assembled P1 Laplacian ``K_ij = int grad(phi_i) . grad(phi_j)`` (CSR)."""
    grads, area = _gradients(mesh)
    local = np.einsum("tik,tjk->tij", grads, grads) * area[:, None, None]
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_nodes
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _solve_spd(A, b):
    try:
        x = spla.spsolve(A.tocsc(), b)
        if np.all(np.isfinite(x)):
            return x
    except (RuntimeError, MemoryError):
        pass
    x, info = spla.cg(A, b, rtol=CG_RTOL, maxiter=20 * A.shape[0])
    if info != 0:
        raise NumericalError("conjugate-gradient fallback did not converge", {"info": info})
    return x


def solve_energy_per_area(mesh: Mesh2D, V) -> FieldSolution:
    """Potential with the flat electrode at ``V`` and the grating at 0.

    Sides are periodic. ``energy_per_area = (eps0/2) int |grad phi|^2 dA / period``
    in J/m^2.
    """
    n = mesh.n_nodes
    top, trench = mesh.tagged(TOP), mesh.tagged(TRENCH)
    if top.size == 0 or trench.size == 0:
        raise AssemblyError("both electrodes need Dirichlet nodes; system would be singular",
                            {"top": int(top.size), "trench": int(trench.size)})
    if V == 0:
        return FieldSolution(np.zeros(n), mesh, 0.0, 0.0)

    # fold right periodic nodes onto their left partners
    dof = np.arange(n)
    pairs = mesh.periodic_pairs
    if pairs is not None and len(pairs):
        dof[pairs[:, 1]] = pairs[:, 0]
    P = sp.csr_matrix((np.ones(n), (np.arange(n), dof)), shape=(n, n))
    K = (P.T @ stiffness(mesh) @ P).tocsr()

    u = np.zeros(n)
    u[top] = V
    fixed = np.zeros(n, dtype=bool)
    fixed[top] = True
    fixed[trench] = True
    active = np.zeros(n, dtype=bool)
    active[dof] = True
    free = active & ~fixed
    if not free.any():
        raise AssemblyError("no free nodes")
    Kff = K[free][:, free]
    rhs = -K[free][:, fixed] @ u[fixed]
    u[free] = _solve_spd(Kff, rhs)
    u = u[dof]

    grads, area = _gradients(mesh)
    g = np.einsum("tik,ti->tk", grads, u[mesh.triangles])
    energy = 0.5 * EPS0 * float(np.sum(area * np.sum(g**2, axis=1))) / mesh.period
    return FieldSolution(u, mesh, energy, float(V))


def parallel_plate_energy(gap, V):
    """``eps0 V^2 / (2 d)`` in J/m^2."""
    return EPS0 * V**2 / (2.0 * gap)


def energy_at(profile, gap, V, refinement=DEFAULT_REFINEMENT, density=1.0):
    return solve_energy_per_area(build_unit_cell_mesh(profile, gap, refinement, density), V).energy_per_area


_STENCIL = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
_FD_WEIGHTS = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def corrugated_gradient(R, profile: TrenchProfile, V, V0, z_grid, refinement=DEFAULT_REFINEMENT,
                        density=1.0, step=None, max_workers=None) -> ForceCurve:
    """Sphere-grating electrostatic force gradient by FEM + PFA.

    For each ``z`` the unit-cell energy ``E(z)`` is solved on a 5-point
    stencil ``z + k h`` and ``F' = -2 pi R dE/dz`` is formed by the
    fourth-order central difference. ``h`` defaults to ``min(z_grid)/100``.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    if np.any(np.diff(z_grid) <= 0) or np.any(z_grid <= 0):
        raise ValidationError("z_grid must be positive and increasing")
    tag = f"FEM+PFA R={R:g} m, V-V0={V - V0:g} V, profile {profile.label or 'custom'}"
    dv = V - V0
    if dv == 0:
        return ForceCurve(z_grid, np.zeros_like(z_grid), kind="sphere_gradient", provenance=tag)
    h = z_grid.min() / 100.0 if step is None else step
    if h > z_grid.min() / 100.0:
        raise ValidationError("finite-difference step must be <= min(z)/100")

    def one(z):
        try:
            e = [energy_at(profile, z + k * h, dv, refinement, density) for k in _STENCIL]
        except NumericalError as exc:
            exc.diagnostics["z"] = z
            raise
        return -2 * math.pi * R * float(np.dot(_FD_WEIGHTS, e)) / h

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as ex:
            values = list(ex.map(one, z_grid))
    else:
        values = [one(z) for z in z_grid]
    return ForceCurve(z_grid, np.array(values), kind="sphere_gradient", provenance=tag)


def export_solution_csv(sol: FieldSolution, path):
    lines = ["node,x_m,y_m,potential_V"]
    for i, ((x, y), u) in enumerate(zip(sol.mesh.nodes.tolist(), sol.potential.tolist())):
        lines.append(f"{i},{x!r},{y!r},{u!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
