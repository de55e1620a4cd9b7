"""Duty cycle from micrographs, pairwise-additive predictions and the rho ratio.

Under the pairwise additive approximation (PAA) the force on a trench
array with solid fraction ``p`` is ``p`` times the flat-surface force. The
ratio ``rho = F'_measured / (p F'_flat)`` is 1 when PAA holds.

Reference curves for perfectly conducting corrugations are external data
(``z_m,rho`` CSV); nothing here computes them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curves import ForceCurve
from .errors import DomainError, ExtrapolationError, ParseError, ValidationError


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Row-major boolean grid; ``True`` marks a bright pixel."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.array(self.bits, dtype=bool)
        if b.ndim != 2 or b.size == 0:
            raise ValidationError("image must be a non-empty 2-D grid")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def bright_fraction(self):
        return float(self.bits.mean())


def stripe_image(width, height, bright_columns):
    """Synthetic top view: the first ``bright_columns`` columns are bright."""
    bits = np.zeros((height, width), dtype=bool)
    bits[:, :bright_columns] = True
    return BinaryImage(bits)


# PBM stores 1 = black. Bright pixels are therefore written as 0.

def _pbm_tokens(data):
    text = re.sub(rb"#[^\n]*", b" ", data)
    return text.split()


def read_pbm(path) -> BinaryImage:
    """Read a P1 (ASCII) or P4 (binary) portable bitmap."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic == b"P1":
        tok = _pbm_tokens(data[2:])
        try:
            w, h = int(tok[0]), int(tok[1])
        except (IndexError, ValueError):
            raise ParseError("bad P1 header") from None
        digits = b"".join(tok[2:])
        if len(digits) < w * h:
            raise ParseError("P1 pixel data truncated")
        ink = np.frombuffer(digits[: w * h], dtype=np.uint8) - ord("0")
        if np.any(ink > 1):
            raise ParseError("P1 pixels must be 0 or 1")
        return BinaryImage(ink.reshape(h, w) == 0)
    if magic == b"P4":
        # header: magic, width, height, then one whitespace byte
        m = re.match(rb"P4(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s", data)
        if not m:
            raise ParseError("bad P4 header")
        w, h = int(m.group(1)), int(m.group(2))
        row_bytes = (w + 7) // 8
        raw = np.frombuffer(data[m.end(): m.end() + row_bytes * h], dtype=np.uint8)
        if raw.size < row_bytes * h:
            raise ParseError("P4 pixel data truncated")
        ink = np.unpackbits(raw.reshape(h, row_bytes), axis=1)[:, :w]
        return BinaryImage(ink == 0)
    raise ParseError(f"not a P1/P4 bitmap (magic {magic!r})")


def write_pbm(image: BinaryImage, path, binary=True):
    ink = (~image.bits).astype(np.uint8)
    h, w = ink.shape
    if binary:
        payload = np.packbits(ink, axis=1).tobytes()
        Path(path).write_bytes(f"P4\n{w} {h}\n".encode() + payload)
    else:
        rows = ["".join("1" if v else "0" for v in row) for row in ink]
        Path(path).write_text(f"P1\n{w} {h}\n" + "\n".join(rows) + "\n", encoding="ascii")


def duty_cycle_from_image(images):
    """Mean bright-pixel fraction and its standard error over ``images``."""
    images = list(images)
    if not images:
        raise ValidationError("need at least one image")
    fr = np.array([im.bright_fraction for im in images])
    err = fr.std(ddof=1) / np.sqrt(fr.size) if fr.size > 1 else 0.0
    return float(fr.mean()), float(err)


def paa_and_rho(flat_gradient: ForceCurve, measured_gradient: ForceCurve, p):
    """PAA prediction ``p F'_flat`` and ``rho = measured / (p F'_flat)``.

    ``sigma_rho = rho sqrt((s_m/m)^2 + (s_f/f)^2)``.
    """
    if not 0.0 < p < 1.0:
        raise ValidationError(f"duty cycle p must lie in (0, 1), got {p!r}")
    if not flat_gradient.same_grid(measured_gradient):
        raise ValidationError("flat and measured curves must share a z grid")
    f, sf = flat_gradient.value, flat_gradient.sigma
    m, sm = measured_gradient.value, measured_gradient.sigma
    if np.any(f == 0):
        idx = np.flatnonzero(f == 0)
        raise DomainError(f"flat gradient is zero at z = {flat_gradient.z[idx[0]]:g} m")
    paa = flat_gradient.scaled(p, provenance=f"PAA p={p:g}; {flat_gradient.provenance}")
    rho = m / (p * f)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.sqrt(np.where(m != 0, (sm / m) ** 2, 0.0) + (sf / f) ** 2)
    sig = np.abs(rho) * rel
    if np.any(m == 0):
        sig = np.where(m == 0, sm / np.abs(p * f), sig)
    rho_curve = ForceCurve(flat_gradient.z, rho, sig, kind="ratio", provenance=f"rho p={p:g}")
    return paa, rho_curve


@dataclass(frozen=True, eq=False)
class ReferenceCurve:
    z: np.ndarray
    rho: np.ndarray
    lambda_over_a: float
    source: str = ""

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        r = np.array(self.rho, dtype=float)
        if z.shape != r.shape or z.size < 2:
            raise ValidationError("reference curve needs >= 2 matching (z, rho) points")
        if np.any(np.diff(z) <= 0):
            raise ValidationError("reference z must be increasing")
        if np.any(r <= 0):
            raise ValidationError("reference rho must be > 0")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "rho", r)


def read_reference_csv(path) -> ReferenceCurve:
    """``z_m,rho`` CSV; a ``# lambda_over_a: <x>`` comment is required."""
    lam_a = None
    source = ""
    rows = []
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, val = body.partition(":")
                if key.strip() == "lambda_over_a":
                    lam_a = float(val)
                elif key.strip() == "source":
                    source = val.strip()
                continue
            if not header_seen:
                if line.replace(" ", "") != "z_m,rho":
                    raise ParseError("expected header 'z_m,rho'", lineno)
                header_seen = True
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise ParseError(f"bad row {line!r}", lineno) from None
    if lam_a is None:
        raise ParseError("missing '# lambda_over_a: <value>' header comment")
    arr = np.array(rows)
    return ReferenceCurve(arr[:, 0], arr[:, 1], lam_a, source or Path(path).name)


def write_reference_csv(ref: ReferenceCurve, path):
    lines = [f"# lambda_over_a: {ref.lambda_over_a!r}"]
    if ref.source:
        lines.append(f"# source: {ref.source}")
    lines.append("z_m,rho")
    lines += [f"{z!r},{r!r}" for z, r in zip(ref.z.tolist(), ref.rho.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class ComparisonReport:
    z: np.ndarray
    rho_measured: np.ndarray
    rho_reference: np.ndarray
    difference: np.ndarray
    significance: np.ndarray
    lambda_over_a: float
    mean_deviation_ratio: float

    def rows(self):
        return list(zip(self.z.tolist(), self.rho_measured.tolist(), self.rho_reference.tolist(),
                        self.difference.tolist(), self.significance.tolist()))


def compare_reference(rho_curve: ForceCurve, ref: ReferenceCurve) -> ComparisonReport:
    """Interpolate ``ref`` onto the measured grid and score each point.

    ``significance = (rho_meas - rho_ref) / sigma_rho`` (raw difference when
    sigma is 0). ``mean_deviation_ratio`` averages
    ``(rho_meas - 1) / (rho_ref - 1)``, the measured PAA deviation as a
    fraction of the predicted one, over points where ``rho_ref != 1``.
    """
    z = rho_curve.z
    if z[0] < ref.z[0] or z[-1] > ref.z[-1]:
        raise ExtrapolationError(
            f"measured z range [{z[0]:g}, {z[-1]:g}] m exceeds reference [{ref.z[0]:g}, {ref.z[-1]:g}] m")
    r_ref = np.interp(z, ref.z, ref.rho)
    diff = rho_curve.value - r_ref
    sig = rho_curve.sigma
    score = np.where(sig > 0, diff / np.where(sig > 0, sig, 1.0), diff)
    pred = r_ref - 1.0
    ok = pred != 0
    ratio = float(np.mean((rho_curve.value[ok] - 1.0) / pred[ok])) if ok.any() else float("nan")
    return ComparisonReport(z, rho_curve.value, r_ref, diff, score, ref.lambda_over_a, ratio)
