"""Permittivity models on the imaginary frequency axis.

A tabulated model takes ``eps''(omega) = 2 n k`` from an optical-constants
table and maps it to ``eps(i xi)`` with the Kramers-Kronig relation

    eps(i xi) = 1 + (2/pi) * int_0^inf omega eps''(omega) / (omega^2 + xi^2) d omega

evaluated by trapezoid quadrature on a logarithmic frequency grid spanning
the table. Outside the table:

* below the first row, metals use a Drude tail ``eps'' = wp^2 g / (w (w^2 + g^2))``
  and semiconductors set ``eps'' = 0``;
* above the last row ``eps''`` falls off as ``omega**-3``.

Both tails are integrated in closed form. A free-carrier (Drude) term
``wp^2 / (xi (xi + gamma))`` may be added on top of the tabulated core.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import constants as K
from .errors import DomainError, ExtrapolationError, ParseError, ValidationError

TABLE_HEADER = ("photon_energy_eV", "n", "k")

# conductivity effective mass of holes in p-type silicon (m*/m_e)
SILICON_EFFECTIVE_MASS_RATIO = 0.26
SILICON_STATIC_EPS = 11.66

# Drude part of the Rakic (1998) gold model that generated the bundled table
GOLD_TAIL_PLASMA_EV = math.sqrt(0.760) * 9.03
GOLD_TAIL_DAMPING_EV = 0.053


@dataclass(frozen=True)
class OpticalTable:
    """Rows of ``(photon energy [eV], n, k)`` sorted by energy."""

    energy_ev: np.ndarray
    n: np.ndarray
    k: np.ndarray
    material_name: str = ""

    def __post_init__(self):
        e = np.array(self.energy_ev, dtype=float).reshape(-1)
        n = np.array(self.n, dtype=float).reshape(-1)
        k = np.array(self.k, dtype=float).reshape(-1)
        if not (e.shape == n.shape == k.shape):
            raise ValidationError("energy, n and k columns differ in length")
        if e.size < 2:
            raise ValidationError("optical table needs at least 2 rows")
        if np.any(e <= 0):
            raise ValidationError("photon energies must be > 0")
        if np.any(np.diff(e) <= 0):
            raise ValidationError("photon energies must be strictly increasing (duplicate or unsorted rows)")
        if np.any(n <= 0):
            raise ValidationError("n must be > 0")
        if np.any(k < 0):
            raise ValidationError("k must be >= 0")
        for arr in (e, n, k):
            arr.setflags(write=False)
        object.__setattr__(self, "energy_ev", e)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)

    def __len__(self):
        return self.energy_ev.size

    @property
    def omega(self):
        return K.ev_to_rad_s(self.energy_ev)

    @property
    def eps_imag(self):
        """``eps''(omega) = 2 n k`` per row."""
        return 2.0 * self.n * self.k

    def nk_at(self, energy_ev):
        """Interpolate ``(n, k)`` linearly in log-energy; no extrapolation."""
        energy_ev = np.asarray(energy_ev, dtype=float)
        lo, hi = self.energy_ev[0], self.energy_ev[-1]
        if np.any(energy_ev < lo) or np.any(energy_ev > hi):
            raise ExtrapolationError(
                f"photon energy outside table range [{lo:g}, {hi:g}] eV for {self.material_name or 'table'}")
        le = np.log(energy_ev)
        lt = np.log(self.energy_ev)
        return np.interp(le, lt, self.n), np.interp(le, lt, self.k)


@dataclass(frozen=True)
class CarrierParams:
    carrier_density_cm3: float
    dc_resistivity_ohm_cm: float
    effective_mass_ratio: float = SILICON_EFFECTIVE_MASS_RATIO

    def __post_init__(self):
        for name in ("carrier_density_cm3", "dc_resistivity_ohm_cm", "effective_mass_ratio"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be > 0, got {v!r}")


def load_optical_table(path, material_name=None) -> OpticalTable:
    """Read a ``photon_energy_eV,n,k`` CSV; ``#`` lines are comments.

    Rows are sorted by energy; repeated energies are rejected.
    """
    path = Path(path)
    rows = []
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if not header_seen:
                if tuple(parts) != TABLE_HEADER:
                    raise ParseError(f"expected header {','.join(TABLE_HEADER)!r}, got {line!r}", lineno)
                header_seen = True
                continue
            if len(parts) != 3:
                raise ParseError(f"expected 3 columns, got {len(parts)}", lineno)
            try:
                rows.append(tuple(float(p) for p in parts))
            except ValueError:
                raise ParseError(f"non-numeric value in {line!r}", lineno) from None
    if not header_seen:
        raise ParseError("missing header line")
    if not rows:
        raise ParseError("no data rows")
    arr = np.array(rows)
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    return OpticalTable(arr[:, 0], arr[:, 1], arr[:, 2], material_name or path.stem)


def write_optical_table(table: OpticalTable, path, comment=None) -> None:
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(",".join(TABLE_HEADER))
    lines += [f"{e!r},{n!r},{k!r}" for e, n, k in zip(table.energy_ev.tolist(), table.n.tolist(), table.k.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def drude_params_from_transport(c: CarrierParams):
    """Plasma frequency and relaxation rate (both rad/s) from N and rho_dc.

    ``wp^2 = N e^2 / (eps0 m*)`` and ``gamma = eps0 wp^2 rho_dc``, so that
    ``sigma_dc = eps0 wp^2 / gamma`` reproduces ``1 / rho_dc``.
    """
    n = K.per_cm3_to_per_m3(c.carrier_density_cm3)
    rho = K.ohm_cm_to_ohm_m(c.dc_resistivity_ohm_cm)
    wp2 = n * K.E_CHARGE**2 / (K.EPS0 * c.effective_mass_ratio * K.M_ELECTRON)
    return math.sqrt(wp2), K.EPS0 * wp2 * rho


def dc_conductivity(plasma_frequency, relaxation_rate):
    """``sigma_dc`` in S/m of a Drude term."""
    return K.EPS0 * plasma_frequency**2 / relaxation_rate


@dataclass(frozen=True)
class DielectricModel:
    """Permittivity ``eps(i xi)`` of one material.

    kind
        ``"tabulated"`` (Kramers-Kronig core from ``table``),
        ``"constant"`` (``eps == constant``) or ``"perfect_conductor"``.
    drude
        Optional ``(wp, gamma)`` in rad/s added as a free-carrier term.
    low_tail
        Optional ``(wp, gamma)`` describing ``eps''`` below the table
        (metals). ``None`` means ``eps'' = 0`` there.
    n_grid
        Points of the logarithmic Kramers-Kronig grid over the table range.
    """

    kind: str
    table: OpticalTable | None = None
    constant: float | None = None
    drude: tuple | None = None
    low_tail: tuple | None = None
    n_grid: int = 4096
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("tabulated", "constant", "perfect_conductor"):
            raise ValidationError(f"unknown dielectric kind {self.kind!r}")
        if self.kind == "tabulated" and self.table is None:
            raise ValidationError("tabulated model requires a table")
        if self.kind == "constant" and (self.constant is None or self.constant < 1):
            raise ValidationError("constant model requires eps >= 1")
        for term in (self.drude, self.low_tail):
            if term is not None and not (term[0] > 0 and term[1] > 0):
                raise ValidationError("Drude parameters must be > 0")
        if self.n_grid < 16:
            raise ValidationError("n_grid too small")

    @property
    def is_perfect_conductor(self):
        return self.kind == "perfect_conductor"

    def with_drude(self, plasma_frequency, relaxation_rate) -> "DielectricModel":
        return DielectricModel(self.kind, self.table, self.constant,
                               (plasma_frequency, relaxation_rate), self.low_tail,
                               self.n_grid, self.name)

    # -- Kramers-Kronig core ------------------------------------------------
    @cached_property
    def _kk_grid(self):
        t = self.table
        u = np.linspace(math.log(t.omega[0]), math.log(t.omega[-1]), self.n_grid)
        omega = np.exp(u)
        n, k = t.nk_at(K.rad_s_to_ev(omega).clip(t.energy_ev[0], t.energy_ev[-1]))
        eps2 = 2.0 * n * k
        w = np.full(u.size, u[1] - u[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return omega, eps2, w

    def core_eps(self, xi):
        """Kramers-Kronig ``eps(i xi)`` of the tabulated core (no Drude term)."""
        xi = np.asarray(xi, dtype=float)
        omega, eps2, w = self._kk_grid
        flat = xi.reshape(-1)
        out = np.empty_like(flat)
        step = max(1, 2_000_000 // omega.size)
        om2 = omega**2
        num = w * om2 * eps2
        for s in range(0, flat.size, step):
            x = flat[s:s + step]
            out[s:s + step] = (num[:, None] / (om2[:, None] + x[None, :] ** 2)).sum(axis=0)
        out = 1.0 + (2.0 / math.pi) * (out + self._low_tail(flat) + self._high_tail(flat))
        return out.reshape(xi.shape)

    def _low_tail(self, xi):
        if self.low_tail is None:
            return np.zeros_like(xi)
        wp, g = self.low_tail
        a = self.table.omega[0]

        def h(s):
            return np.arctan(a / s) / s

        near = np.abs(xi - g) < 1e-6 * g
        xs = np.where(near, 2 * g, xi)
        val = (h(g) - h(xs)) / (xs**2 - g**2)
        dh = -np.arctan(a / g) / g**2 - a / (g * (g**2 + a**2))
        val = np.where(near, -dh / (2 * g), val)
        return wp**2 * g * val

    def _high_tail(self, xi):
        t = self.table
        a = t.omega[-1]
        amp = t.eps_imag[-1]
        y = xi / a
        small = y < 1e-3
        ys = np.where(small, 1.0, y)
        # int_a^inf w^-2 / (w^2 + xi^2) dw
        bracket = (1.0 / a - np.arctan(ys) / (ys * a)) / (ys * a) ** 2
        series = (1.0 / 3.0 - y**2 / 5.0) / a**3
        return amp * a**3 * np.where(small, series, bracket)

    # -- fast sampler for nested quadratures --------------------------------
    @cached_property
    def _sampler(self):
        lx = np.linspace(math.log(1e8), math.log(1e20), 481)
        vals = self.core_eps(np.exp(lx)) - 1.0
        if np.any(vals <= 0):
            return None
        return lx, PchipInterpolator(lx, np.log(vals), extrapolate=False), np.log(vals)

    def fast_eps(self, xi):
        """``eps(i xi)`` from a monotone spline of the KK result (tabulated)
        or exactly (other kinds). Used inside the Lifshitz integrals."""
        xi = np.asarray(xi, dtype=float)
        if self.kind != "tabulated":
            return eps_imag_axis(self, xi)
        s = self._sampler
        if s is None:
            core = self.core_eps(xi)
        else:
            lx, spline, lv = s
            l = np.log(xi)
            inside = spline(np.clip(l, lx[0], lx[-1]))
            slope_hi = (lv[-1] - lv[-2]) / (lx[-1] - lx[-2])
            lv_out = np.where(l > lx[-1], lv[-1] + slope_hi * (l - lx[-1]),
                              np.where(l < lx[0], lv[0], inside))
            core = 1.0 + np.exp(lv_out)
        return core + self._drude_term(xi)

    def _drude_term(self, xi):
        if self.drude is None:
            return 0.0
        wp, g = self.drude
        return wp**2 / (xi * (xi + g))


def eps_imag_axis(m: DielectricModel, xi):
    """Permittivity at imaginary frequency ``i xi`` (``xi`` in rad/s, > 0).

    Returns ``inf`` for a perfect conductor.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(~(xi > 0)):
        raise DomainError("xi must be > 0")
    if m.kind == "perfect_conductor":
        out = np.full(xi.shape, np.inf)
    elif m.kind == "constant":
        out = np.full(xi.shape, float(m.constant))
    else:
        out = m.core_eps(xi)
    if m.drude is not None and m.kind != "perfect_conductor":
        out = out + m._drude_term(xi)
    return out if out.ndim else float(out)


def skin_depth(m: DielectricModel, wavelength):
    """Intensity penetration depth ``c / (2 omega Im sqrt(eps(omega)))`` in m.

    Uses the table's ``(n, k)`` at ``omega = 2 pi c / wavelength`` plus the
    free-carrier term when present; equals ``wavelength / (4 pi k)`` for a
    bare table. The field-amplitude decay length is twice this value.
    """
    wavelength = np.asarray(wavelength, dtype=float)
    if np.any(wavelength <= 0):
        raise DomainError("wavelength must be > 0")
    if m.kind != "tabulated":
        raise DomainError(f"skin depth needs optical constants; model kind is {m.kind!r}")
    omega = 2 * math.pi * K.C_LIGHT / wavelength
    n, k = m.table.nk_at(K.rad_s_to_ev(omega))
    eps = (n + 1j * k) ** 2
    if m.drude is not None:
        wp, g = m.drude
        eps = eps - wp**2 / (omega * (omega + 1j * g))
    out = K.C_LIGHT / (2.0 * omega * np.sqrt(eps).imag)
    return out if out.ndim else float(out)


# -- bundled materials -------------------------------------------------------

def bundled_table(name) -> OpticalTable:
    """Load one of the packaged tables: ``"gold"`` or ``"silicon"``."""
    files = {"gold": "gold_rakic_drude_lorentz.csv", "silicon": "silicon_lorentz.csv"}
    if name not in files:
        raise KeyError(f"no bundled table {name!r}; choose from {sorted(files)}")
    with resources.as_file(resources.files("casimir_trench.data") / files[name]) as p:
        return load_optical_table(p, material_name=name)


def gold_model(table: OpticalTable | None = None, n_grid=4096) -> DielectricModel:
    table = bundled_table("gold") if table is None else table
    tail = (K.ev_to_rad_s(GOLD_TAIL_PLASMA_EV), K.ev_to_rad_s(GOLD_TAIL_DAMPING_EV))
    return DielectricModel("tabulated", table, low_tail=tail, n_grid=n_grid, name="gold")


def doped_silicon_model(carriers: CarrierParams | None = None, table: OpticalTable | None = None,
                        n_grid=4096) -> DielectricModel:
    """Silicon core table plus the free-carrier term from transport data.

    Defaults: N = 2e18 cm^-3, rho_dc = 0.028 Ohm cm, m*/m_e = 0.26.
    """
    table = bundled_table("silicon") if table is None else table
    carriers = CarrierParams(2e18, 0.028) if carriers is None else carriers
    core = DielectricModel("tabulated", table, n_grid=n_grid, name="doped_silicon")
    return core.with_drude(*drude_params_from_transport(carriers))


def perfect_conductor() -> DielectricModel:
    return DielectricModel("perfect_conductor", name="perfect_conductor")


def constant_model(eps) -> DielectricModel:
    return DielectricModel("constant", constant=float(eps), name=f"constant({eps:g})")
