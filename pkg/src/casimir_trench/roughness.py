"""Geometrical-averaging roughness correction.

The rough-surface value is the smooth value averaged over the distribution
of local separations::

    F_rough(z) = sum_i w_i F_smooth(z + h_i)

The two surfaces are treated as independent, so their height
distributions combine into one with ``sigma_h = sqrt(rms_1^2 + rms_2^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .curves import ForceCurve
from .errors import DomainError, ExtrapolationError, ParseError, ValidationError

GAUSS_HERMITE_POINTS = 15
GAUSS_TRUNCATION = 5.0
UNIFORM_POINTS = 15


@dataclass(frozen=True)
class RoughnessSpec:
    """rms heights (m) of the gold and silicon surfaces.

    ``distribution`` is ``"gaussian"``, ``"uniform"`` or ``"histogram"``;
    a histogram carries ``offsets`` (m) and ``weights`` for the combined
    separation offset, in which case the rms values are informational.
    """

    rms_1: float = 0.0
    rms_2: float = 0.0
    distribution: str = "gaussian"
    offsets: tuple = ()
    weights: tuple = ()

    def __post_init__(self):
        if self.rms_1 < 0 or self.rms_2 < 0:
            raise ValidationError("rms roughness must be >= 0")
        if self.distribution not in ("gaussian", "uniform", "histogram"):
            raise ValidationError(f"unknown distribution {self.distribution!r}")
        if self.distribution == "histogram":
            w = np.asarray(self.weights, dtype=float)
            if len(self.offsets) != w.size or w.size == 0:
                raise ValidationError("histogram needs equal-length, non-empty offsets and weights")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ValidationError("histogram weights must be >= 0 and sum to 1")

    @property
    def combined_rms(self):
        return math.hypot(self.rms_1, self.rms_2)

    def nodes(self):
        """Offsets ``h_i`` (m) and weights ``w_i`` of the combined distribution."""
        s = self.combined_rms
        if self.distribution == "histogram":
            return np.asarray(self.offsets, dtype=float), np.asarray(self.weights, dtype=float)
        if self.distribution == "gaussian":
            x, w = np.polynomial.hermite_e.hermegauss(GAUSS_HERMITE_POINTS)
            keep = np.abs(x) <= GAUSS_TRUNCATION
            x, w = x[keep], w[keep]
            return s * x, w / w.sum()
        # uniform with the same rms: half-width sqrt(3) sigma
        x, w = np.polynomial.legendre.leggauss(UNIFORM_POINTS)
        return math.sqrt(3.0) * s * x, w / 2.0


def load_histogram(path, rms_1=0.0, rms_2=0.0) -> RoughnessSpec:
    """Read an ``offset_m,weight`` CSV; weights are normalised to sum 1."""
    rows = []
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line.replace(" ", "") != "offset_m,weight":
                    raise ParseError("expected header 'offset_m,weight'", lineno)
                header_seen = True
                continue
            try:
                h, w = (float(v) for v in line.split(","))
            except ValueError:
                raise ParseError(f"bad row {line!r}", lineno) from None
            rows.append((h, w))
    if not rows:
        raise ParseError("no histogram rows")
    h, w = np.array(rows).T
    if np.any(w < 0) or w.sum() <= 0:
        raise ValidationError("histogram weights must be >= 0 with positive sum")
    return RoughnessSpec(rms_1, rms_2, "histogram", tuple(h), tuple(w / w.sum()))


def _interpolator(curve: ForceCurve, extrapolate):
    z, v = curve.z, curve.value
    loglog = np.all(v > 0) and z.size >= 2
    if z.size < 2:
        raise ValidationError("need at least 2 points to interpolate a curve")
    spline = CubicSpline(np.log(z), np.log(v)) if loglog else CubicSpline(z, v)
    sig = CubicSpline(z, curve.sigma)

    def power_law_ends(zq):
        lz = np.log(zq)
        lo = np.log(z[:2])
        hi = np.log(z[-2:])
        lv = np.log(np.abs(v))
        s_lo = (lv[1] - lv[0]) / (lo[1] - lo[0])
        s_hi = (lv[-1] - lv[-2]) / (hi[1] - hi[0])
        return np.where(zq < z[0], np.exp(lv[0] + s_lo * (lz - lo[0])),
                        np.exp(lv[-1] + s_hi * (lz - hi[1])))

    def evaluate(zq):
        outside = (zq < z[0]) | (zq > z[-1])
        if np.any(outside):
            if extrapolate != "power_law" or not loglog:
                raise ExtrapolationError(
                    f"roughness average needs the curve on [{zq.min():g}, {zq.max():g}] m, "
                    f"have [{z[0]:g}, {z[-1]:g}] m; extend the grid or pass extrapolate='power_law'")
        zc = np.clip(zq, z[0], z[-1])
        val = np.exp(spline(np.log(zc))) if loglog else spline(zc)
        if np.any(outside):
            val = np.where(outside, power_law_ends(zq), val)
        return val, np.clip(sig(zc), 0.0, None)

    return evaluate


def apply_roughness(curve: ForceCurve, spec: RoughnessSpec, extrapolate=None, z_out=None) -> ForceCurve:
    """Average ``curve`` over the combined height distribution.

    The output lives on ``z_out`` (default: the curve's own grid); a padded
    input grid with a narrower ``z_out`` avoids extrapolation. Off-grid
    samples come from a cubic spline in log-log space (linear space if the
    curve changes sign).
    ``extrapolate="power_law"`` extends the ends as power laws; otherwise a
    grid that does not cover ``z + h_i`` raises ExtrapolationError.
    Zero roughness returns the input values unchanged.
    """
    h, w = spec.nodes()
    z = curve.z if z_out is None else np.asarray(z_out, dtype=float).reshape(-1)
    if _trivial(spec, h, w):
        if z_out is None or np.array_equal(z, curve.z):
            return curve.replace(provenance=_tag(curve, spec))
        h, w = np.zeros(1), np.ones(1)  # plain interpolation onto z_out
    elif spec.distribution != "histogram" and spec.combined_rms >= z[0] / 3:
        raise DomainError("combined rms roughness must be < z_min / 3")
    zq = z[:, None] + h[None, :]
    if np.any(zq[:, w > 0] <= 0):
        raise DomainError("roughness offsets reach zero or negative separation")
    evaluate = _interpolator(curve, extrapolate)
    vals, sigs = evaluate(zq.reshape(-1))
    vals = vals.reshape(zq.shape)
    sigs = sigs.reshape(zq.shape)
    return curve.replace(z=z, value=vals @ w, sigma=sigs @ w, provenance=_tag(curve, spec))


def _trivial(spec, h, w):
    if spec.distribution != "histogram" and spec.combined_rms == 0.0:
        return True
    return bool(np.all(h[w > 0] == 0.0))


def _tag(curve, spec):
    return (f"{curve.provenance}; roughness {spec.distribution} "
            f"rms=({spec.rms_1:g},{spec.rms_2:g}) m").lstrip("; ")
