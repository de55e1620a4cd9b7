"""Triangulated unit cell: flat electrode above one period of a trench grating.

Coordinates: ``x`` along the grating, ``y`` normal to it. The ridge top lies
at ``y = 0`` for ``0 <= x <= p*period``; the trench (slot) occupies
``p*period <= x <= period`` down to its floor at ``y = -depth``; the flat
electrode is at ``y = gap``. Left and right sides of the gap region are
periodic images of each other.

The vacuum region is the union of two rectangles (gap strip and slot),
meshed as a conforming tensor-product grid with every cell split into two
right triangles. Node spacing is graded toward the trench top corners,
where the field is singular.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import MeshError, ValidationError

TOP = "top_electrode"
TRENCH = "trench_electrode"
LEFT = "periodic_left"
RIGHT = "periodic_right"
TAGS = (TOP, TRENCH, LEFT, RIGHT)

DEFAULT_REFINEMENT = 2
GRADING = 2.0

# cells per unit at refinement 0; doubled per refinement level
_BASE = dict(ridge=10, slot=10, gap=10, depth=12)


@dataclass(frozen=True)
class TrenchProfile:
    """Rectangular grating: period (m), depth t = 2a (m), solid fraction p."""

    period: float
    depth: float
    duty_cycle: float
    label: str = ""

    def __post_init__(self):
        if not self.period > 0:
            raise ValidationError("period must be > 0")
        if self.depth == 0.0 and self.duty_cycle == 1.0:
            return  # flat surface
        if not self.depth > 0:
            raise ValidationError("depth must be > 0")
        if not 0.0 < self.duty_cycle < 1.0:
            raise ValidationError(f"duty_cycle must lie in (0, 1), got {self.duty_cycle!r}")

    @classmethod
    def flat(cls, period=1e-6, label="flat"):
        return cls(period, 0.0, 1.0, label)

    @property
    def is_flat(self):
        return self.depth == 0.0

    @property
    def half_depth(self):
        return 0.5 * self.depth

    @property
    def lambda_over_a(self):
        return self.period / self.half_depth


SAMPLE_A = TrenchProfile(1.0e-6, 0.98e-6, 0.478, "A")
SAMPLE_B = TrenchProfile(400e-9, 1.07e-6, 0.510, "B")


@dataclass(frozen=True, eq=False)
class Mesh2D:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_tags: dict
    period: float
    gap: float
    profile: TrenchProfile = None
    periodic_pairs: np.ndarray = field(default=None)

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    def tagged(self, tag):
        return np.array(sorted(i for i, t in self.boundary_tags.items() if t == tag), dtype=int)

    def areas(self):
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def boundary_nodes(self):
        """Nodes on edges that belong to exactly one triangle."""
        t = self.triangles
        edges = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        return np.unique(uniq[counts == 1])

    def validate(self):
        """Raise MeshError unless every invariant holds."""
        a = self.areas()
        if np.any(a <= 0):
            raise MeshError("triangles must be positively oriented", {"n_bad": int((a <= 0).sum())})
        if np.any(a <= 1e-6 * np.median(a)):
            raise MeshError("degenerate triangles present")
        untagged = set(self.boundary_nodes().tolist()) - set(self.boundary_tags)
        if untagged:
            raise MeshError("untagged boundary nodes", {"nodes": sorted(untagged)[:10]})
        left, right = self.tagged(LEFT), self.tagged(RIGHT)
        if left.size != right.size:
            raise MeshError("periodic sides have different node counts")
        if left.size:
            yl = np.sort(self.nodes[left, 1])
            yr = np.sort(self.nodes[right, 1])
            if not np.allclose(yl, yr, rtol=0, atol=1e-12 * self.period):
                raise MeshError("periodic nodes do not pair at equal y")
        return self


def _graded(a, b, n, ends):
    """``n + 1`` points on [a, b] clustered toward the ``ends`` ("lo", "hi", "both")."""
    s = np.linspace(0.0, 1.0, n + 1)
    if ends == "both":
        m = np.where(s < 0.5, 0.5 * (2 * s) ** GRADING, 1 - 0.5 * (2 - 2 * s) ** GRADING)
    elif ends == "lo":
        m = s**GRADING
    elif ends == "hi":
        m = 1 - (1 - s) ** GRADING
    else:
        m = s
    pts = a + (b - a) * m
    pts[0], pts[-1] = a, b
    return pts


def _counts(refinement, density):
    scale = 2**refinement * density
    return {k: max(2, int(round(v * scale))) for k, v in _BASE.items()}


def _grid_triangles(idx):
    """Split every cell of a node-index grid ``idx[j, i]`` (j along y) into
    two counter-clockwise triangles."""
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[1:, :-1].ravel()
    return np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])


def build_unit_cell_mesh(profile: TrenchProfile, gap, refinement=DEFAULT_REFINEMENT, density=1.0):
    """Mesh one period of the gap between a flat electrode and the grating.

    ``refinement + 1`` halves every cell edge (4x triangles); ``density``
    scales node counts continuously (``sqrt(2)`` doubles the triangle count).
    At the default refinement the trench meshes have > 10,000 triangles.
    """
    if not gap > 0:
        raise MeshError("gap must be > 0")
    if refinement < 0 or density <= 0:
        raise MeshError("refinement must be >= 0 and density > 0")
    n = _counts(refinement, density)
    lam = profile.period

    if profile.is_flat:
        nx = 2 * (n["ridge"] + n["slot"])
        xs = np.linspace(0.0, lam, nx + 1)
        ys = np.linspace(0.0, gap, n["gap"] + 1)
        X, Y = np.meshgrid(xs, ys)
        nodes = np.column_stack([X.ravel(), Y.ravel()])
        idx = np.arange(nodes.shape[0]).reshape(Y.shape)
        tris = _grid_triangles(idx)
        tags = {}
        for i in idx[0]:
            tags[int(i)] = TRENCH
        for i in idx[-1]:
            tags[int(i)] = TOP
        for i in idx[1:-1, 0]:
            tags[int(i)] = LEFT
        for i in idx[1:-1, -1]:
            tags[int(i)] = RIGHT
        pairs = np.column_stack([idx[1:-1, 0], idx[1:-1, -1]])
        return Mesh2D(nodes, tris, tags, lam, gap, profile, pairs).validate()

    x_wall = profile.duty_cycle * lam
    slot_w = lam - x_wall
    # aspect-aware counts so cells near the corner stay reasonably shaped
    n_ridge = max(2, int(round(n["ridge"] * max(1.0, 2 * x_wall / lam))))
    n_slot = max(2, int(round(n["slot"] * max(1.0, 2 * slot_w / lam))))
    n_gap = n["gap"]
    n_depth = max(2, int(round(n["depth"] * max(1.0, math.log2(1 + profile.depth / slot_w)))))

    xr = _graded(0.0, x_wall, n_ridge, "both")
    xsl = _graded(x_wall, lam, n_slot, "both")
    xs = np.concatenate([xr, xsl[1:]])
    yg = _graded(0.0, gap, n_gap, "lo")
    yd = -_graded(0.0, profile.depth, n_depth, "lo")[::-1]  # -depth .. 0

    min_edge = min(np.diff(xs).min(), np.diff(yg).min())
    if min_edge < 1e-6 * lam:
        raise MeshError("gap or slot too thin to resolve against the period",
                        {"gap": gap, "slot_width": slot_w, "min_edge": min_edge})

    # gap strip: rows y in yg, all columns
    Xg, Yg = np.meshgrid(xs, yg)
    gap_nodes = np.column_stack([Xg.ravel(), Yg.ravel()])
    gap_idx = np.arange(gap_nodes.shape[0]).reshape(Yg.shape)
    # slot: rows y in yd excluding y = 0 (shared with gap strip)
    i0 = n_ridge  # column of x_wall in xs
    slot_x = xs[i0:]
    Xs, Ys = np.meshgrid(slot_x, yd[:-1])
    slot_nodes = np.column_stack([Xs.ravel(), Ys.ravel()])
    slot_idx = gap_nodes.shape[0] + np.arange(slot_nodes.shape[0]).reshape(Ys.shape)
    slot_idx = np.vstack([slot_idx, gap_idx[0, i0:][None, :]])

    nodes = np.vstack([gap_nodes, slot_nodes])
    tris = np.concatenate([_grid_triangles(gap_idx), _grid_triangles(slot_idx)])

    tags = {}
    for i in gap_idx[1:-1, 0]:
        tags[int(i)] = LEFT
    for i in gap_idx[1:-1, -1]:
        tags[int(i)] = RIGHT
    for i in gap_idx[0, : i0 + 1]:
        tags[int(i)] = TRENCH  # ridge top
    for i in np.concatenate([slot_idx[:, 0], slot_idx[:, -1], slot_idx[0, :]]):
        tags[int(i)] = TRENCH  # walls and floor
    tags[int(gap_idx[0, -1])] = TRENCH
    for i in gap_idx[-1]:
        tags[int(i)] = TOP
    pairs = np.column_stack([gap_idx[1:-1, 0], gap_idx[1:-1, -1]])
    return Mesh2D(nodes, tris, tags, lam, gap, profile, pairs).validate()


def export_mesh_csv(mesh: Mesh2D, node_path, triangle_path):
    lines = ["node,x_m,y_m,tag"]
    for i, (x, y) in enumerate(mesh.nodes.tolist()):
        lines.append(f"{i},{x!r},{y!r},{mesh.boundary_tags.get(i, '')}")
    Path(node_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    lines = ["triangle,n0,n1,n2"]
    for i, (a, b, c) in enumerate(mesh.triangles.tolist()):
        lines.append(f"{i},{a},{b},{c}")
    Path(triangle_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
