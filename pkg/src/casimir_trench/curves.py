"""Distance-parameterized curves, the common currency between modules.

Sign convention used throughout the package: attractive interactions are
reported as positive magnitudes. A force gradient is ``-d|F|/dz`` and is
therefore positive for an attraction that weakens with distance.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

KINDS = ("pressure", "energy_per_area", "sphere_force", "sphere_gradient", "ratio")

CSV_HEADER = "z_m,value,sigma,kind"


@dataclass(frozen=True)
class ForceCurve:
    """Samples ``(z, value, sigma)`` of one physical quantity.

    ``kind`` is one of :data:`KINDS`; ``ratio`` is used for dimensionless
    curves such as the PAA deviation ratio.
    """

    z: np.ndarray
    value: np.ndarray
    sigma: np.ndarray = None
    kind: str = "pressure"
    provenance: str = ""

    def __post_init__(self):
        z = np.array(self.z, dtype=float).reshape(-1)
        value = np.array(self.value, dtype=float).reshape(-1)
        sigma = np.zeros_like(z) if self.sigma is None else np.array(self.sigma, dtype=float).reshape(-1)
        if not (z.shape == value.shape == sigma.shape):
            raise ValidationError("z, value and sigma must have equal length")
        if z.size == 0:
            raise ValidationError("curve has no points")
        if np.any(np.diff(z) <= 0):
            raise ValidationError("z must be strictly increasing")
        if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
            raise ValidationError("sigma must be finite and non-negative")
        if self.kind not in KINDS:
            raise ValidationError(f"unknown curve kind {self.kind!r}")
        for arr in (z, value, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "sigma", sigma)

    def __len__(self):
        return self.z.size

    def replace(self, **changes) -> "ForceCurve":
        kw = dict(z=self.z, value=self.value, sigma=self.sigma,
                  kind=self.kind, provenance=self.provenance)
        kw.update(changes)
        return ForceCurve(**kw)

    def scaled(self, factor: float, provenance: str | None = None) -> "ForceCurve":
        return self.replace(value=self.value * factor, sigma=self.sigma * abs(factor),
                            provenance=self.provenance if provenance is None else provenance)

    def same_grid(self, other: "ForceCurve") -> bool:
        return self.z.shape == other.z.shape and np.array_equal(self.z, other.z)


def write_curve_csv(curve: ForceCurve, path) -> None:
    """Write ``curve`` with full float precision so it round-trips exactly."""
    buf = io.StringIO()
    if curve.provenance:
        buf.write(f"# provenance: {curve.provenance}\n")
    buf.write(CSV_HEADER + "\n")
    for z, v, s in zip(curve.z.tolist(), curve.value.tolist(), curve.sigma.tolist()):
        buf.write(f"{z!r},{v!r},{s!r},{curve.kind}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_curve_csv(path) -> ForceCurve:
    provenance = ""
    rows = []
    kind = None
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("provenance:"):
                    provenance = body[len("provenance:"):].strip()
                continue
            if not header_seen:
                if line.replace(" ", "") != CSV_HEADER:
                    raise ParseError(f"expected header {CSV_HEADER!r}", lineno)
                header_seen = True
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 4:
                raise ParseError("expected 4 columns", lineno)
            try:
                rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if kind is None:
                kind = parts[3]
            elif parts[3] != kind:
                raise ParseError("mixed curve kinds in one file", lineno)
    if not rows:
        raise ParseError("no data rows")
    arr = np.array(rows)
    return ForceCurve(arr[:, 0], arr[:, 1], arr[:, 2], kind=kind, provenance=provenance)


def write_table_csv(columns: dict, path, comment=None) -> None:
    """Write equal-length numeric ``columns`` (name -> sequence) as CSV."""
    names = list(columns)
    cols = [np.asarray(columns[n], dtype=float).reshape(-1).tolist() for n in names]
    if len({len(c) for c in cols}) != 1:
        raise ValidationError("table columns differ in length")
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    buf.write(",".join(names) + "\n")
    for row in zip(*cols):
        buf.write(",".join(repr(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_table_csv(path) -> dict:
    """Inverse of :func:`write_table_csv`; returns name -> float array."""
    names, rows = None, []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if names is None:
                names = parts
                continue
            if len(parts) != len(names):
                raise ParseError(f"expected {len(names)} columns", lineno)
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    if names is None:
        raise ParseError("empty table")
    arr = np.array(rows, dtype=float).reshape(-1, len(names))
    return {n: arr[:, i].copy() for i, n in enumerate(names)}
