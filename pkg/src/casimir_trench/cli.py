"""``casimir-trench``: run pipeline stages from a TOML config and write data files.

Usage::

    casimir-trench <subcommand> --config run.toml [--out DIR] [--seed N] [--no-timestamp]

Every subcommand writes CSV files, ``effective_config.json`` and a
``manifest.json`` describing each file's columns and units. Outputs are
fully determined by the config and seed; the manifest's ``generated_utc``
field is the only varying content and ``--no-timestamp`` drops it.

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 I/O or parse error. Failures print a one-line JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, config_from_dict, parse_config
from .constants import NM, ev_to_rad_s
from .curves import ForceCurve, read_curve_csv, write_curve_csv, write_table_csv
from .dielectric import drude_params_from_transport, eps_imag_axis, skin_depth
from .electrostatics.fem import corrugated_gradient
from .electrostatics.mesh import TrenchProfile
from .electrostatics.series import sphere_plate_series
from .errors import CasimirTrenchError, ConfigError, ParseError
from .lifshitz import ideal_pressure, interaction_curves, pfa_sphere
from .oscillator import calibrate, derive_seeds, find_residual_voltage, read_series, write_series
from .pipeline import (calibration_sweeps, casimir_figure, electrostatic_figure, flat_casimir_theory,
                       residual_voltage_scan)
from .trench_analysis import compare_reference, paa_and_rho, read_reference_csv

SUBCOMMANDS = ("dielectric", "lifshitz", "electro-series", "electro-fem", "calibrate", "simulate",
               "analyze", "figure2", "figure3")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_UNITS = {"pressure": "Pa", "energy_per_area": "J/m^2", "sphere_force": "N",
          "sphere_gradient": "N/m", "ratio": "1"}


class Outputs:
    """Collects artifacts and writes them once, at the end of a subcommand."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.curves = {}
        self.tables = {}
        self.series = {}
        self.results = {}

    def curve(self, name, curve: ForceCurve, description=""):
        self.curves[name] = (curve, description)

    def table(self, name, columns: dict, units: dict, description=""):
        self.tables[name] = (columns, units, description)

    def write(self, out_dir: Path, subcommand, seed, timestamp=True):
        out_dir.mkdir(parents=True, exist_ok=True)
        files = []
        want_json = "json" in self.cfg.outputs.formats
        for name, (c, desc) in self.curves.items():
            fn = f"{name}.csv"
            write_curve_csv(c, out_dir / fn)
            files.append({"file": fn, "format": "curve", "kind": c.kind, "description": desc,
                          "x": {"column": "z_m", "unit": "m"},
                          "y": {"column": "value", "unit": _UNITS[c.kind], "error": "sigma"}})
            if want_json:
                payload = {"z_m": c.z.tolist(), "value": c.value.tolist(), "sigma": c.sigma.tolist(),
                           "kind": c.kind, "provenance": c.provenance}
                (out_dir / f"{name}.json").write_text(json.dumps(payload) + "\n", encoding="utf-8")
        for name, (cols, units, desc) in self.tables.items():
            fn = f"{name}.csv"
            write_table_csv(cols, out_dir / fn)
            files.append({"file": fn, "format": "table", "description": desc,
                          "columns": [{"name": k, "unit": units.get(k, "")} for k in cols]})
        for name, (s, desc) in self.series.items():
            fn = f"{name}.csv"
            write_series(s, out_dir / fn)
            files.append({"file": fn, "format": "measurement_series", "description": desc,
                          "sidecar": fn + ".json"})
        manifest = {"tool": "casimir-trench", "version": __version__, "subcommand": subcommand,
                    "seed": seed, "files": files, "results": self.results}
        if timestamp:
            manifest["generated_utc"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                               encoding="utf-8")


# -- helpers -----------------------------------------------------------------

def _workers():
    return min(8, os.cpu_count() or 1)


def _theory(cfg: RunConfig, z_min, z_max):
    return flat_casimir_theory(cfg.radius, cfg.sphere_material(), cfg.plate_material(), z_min, z_max,
                               cfg.roughness_spec(), cfg.lifshitz.points_per_decade, cfg.lifshitz.rtol,
                               max_workers=_workers())


def _fem_grid(cfg: RunConfig):
    s = cfg.sweep
    return np.linspace(s.z_min_nm * NM, s.z_max_nm * NM, cfg.fem.z_points)


def _calibration_theory(cfg: RunConfig):
    # margin on both sides: trial z0 values inside the fit move the separations
    s = cfg.sweep
    return _theory(cfg, 0.5 * s.calibration_z_min_nm * NM, 1.5 * s.calibration_z_max_nm * NM)


def _calibration_inputs(cfg: RunConfig, seed):
    """Simulated calibration sweeps and residual-voltage scan, plus the
    Casimir theory used both to generate and to subtract."""
    o, s = cfg.oscillator, cfg.sweep
    params, noise = cfg.oscillator_params(), cfg.noise_model()
    z0 = o.z0_um * 1e-6
    theory = _calibration_theory(cfg)
    s_sweep, s_scan = derive_seeds(seed, 2)
    sweeps = calibration_sweeps(params, z0, o.residual_voltage_V, np.asarray(s.voltages_mV_above_V0) * 1e-3,
                                s.calibration_z_min_nm * NM, s.calibration_z_max_nm * NM,
                                s.calibration_points, theory, noise, s_sweep)
    scan = residual_voltage_scan(params, z0, s.scan_z_nm * NM, o.residual_voltage_V, s.scan_half_span_mV * 1e-3,
                                 s.scan_points, theory, noise, s_scan)
    return theory, sweeps, scan


def _measured_curves(cfg: RunConfig, seed):
    """Flat and per-sample gradient curves, read from files or synthesized."""
    a = cfg.analysis
    profiles = cfg.profiles()
    if a.flat_gradient:
        flat = read_curve_csv(cfg.path(a.flat_gradient))
        samples = {k: read_curve_csv(cfg.path(p)) for k, p in a.sample_gradients.items()}
        missing = set(profiles) - set(samples)
        if missing:
            raise ConfigError(f"analysis.sample_gradients lacks {sorted(missing)}", "analysis.sample_gradients")
        return None, flat, samples
    z = cfg.z_grid()
    theory = _theory(cfg, z[0], z[-1])
    fig = casimir_figure(theory, profiles, z, cfg.oscillator_params(), cfg.noise_model(), seed,
                         a.synthetic_rho)
    return theory, fig["flat"], {k: fig[k] for k in profiles}


# -- subcommands -------------------------------------------------------------

def cmd_dielectric(cfg: RunConfig, seed, out: Outputs):
    xi = np.geomspace(1e12, 1e18, 121)
    sphere, plate = cfg.sphere_material(), cfg.plate_material()
    out.table("dielectric", {"xi_rad_s": xi, "eps_sphere": eps_imag_axis(sphere, xi),
                             "eps_plate": eps_imag_axis(plate, xi)},
              {"xi_rad_s": "rad/s", "eps_sphere": "1", "eps_plate": "1"},
              "permittivity on the imaginary frequency axis")
    wp, gamma = drude_params_from_transport(cfg.carriers())
    res = {"plate_plasma_frequency_rad_s": wp, "plate_relaxation_rate_rad_s": gamma,
           "plate_plasma_frequency_eV": wp / ev_to_rad_s(1.0)}
    for name, m in (("sphere", sphere), ("plate", plate)):
        if m.kind == "tabulated":
            res[f"{name}_skin_depth_300nm_m"] = skin_depth(m, 300e-9)
    out.results.update(res)


def cmd_lifshitz(cfg: RunConfig, seed, out: Outputs):
    z = cfg.z_grid()
    energy, pressure = interaction_curves(cfg.sphere_material(), cfg.plate_material(), z,
                                          rtol=cfg.lifshitz.rtol, max_workers=_workers())
    force, gradient = pfa_sphere(cfg.radius, energy, pressure)
    out.curve("lifshitz_energy", energy, "plate-plate energy per area (negative = attractive)")
    out.curve("lifshitz_pressure", pressure, "plate-plate pressure, attractive positive")
    out.curve("lifshitz_sphere_force", force, "PFA sphere-plate force, no roughness")
    out.curve("lifshitz_sphere_gradient", gradient, "PFA sphere-plate gradient, no roughness")
    out.curve("lifshitz_reduction_factor",
              ForceCurve(z, pressure.value / ideal_pressure(z), kind="ratio",
                         provenance="P / P_ideal"), "reduction factor eta = P / P_ideal")


def cmd_electro_series(cfg: RunConfig, seed, out: Outputs):
    z = cfg.z_grid()
    dv = cfg.fem.voltage_mV_above_V0 * 1e-3
    f, g = sphere_plate_series(cfg.radius, z, dv, 0.0)
    tag = f"sphere-plate series R={cfg.radius:g} m, V-V0={dv:g} V"
    out.curve("electro_series_force", ForceCurve(z, f, kind="sphere_force", provenance=tag))
    out.curve("electro_series_gradient", ForceCurve(z, g, kind="sphere_gradient", provenance=tag))


def cmd_electro_fem(cfg: RunConfig, seed, out: Outputs):
    z = _fem_grid(cfg)
    dv = cfg.fem.voltage_mV_above_V0 * 1e-3
    flat = TrenchProfile.flat()
    for label, prof in [("flat", flat)] + list(cfg.profiles().items()):
        c = corrugated_gradient(cfg.radius, prof, dv, 0.0, z, refinement=cfg.fem.refinement,
                                max_workers=_workers())
        out.curve(f"electro_fem_gradient_{label}", c, f"FEM + PFA electrostatic gradient, sample {label}")


def cmd_simulate(cfg: RunConfig, seed, out: Outputs):
    _, sweeps, scan = _calibration_inputs(cfg, seed)
    out.series["calibration_series"] = (sweeps, "electrostatic calibration sweeps (Casimir included)")
    out.series["residual_voltage_scan"] = (scan, "voltage scan at one separation")
    _, flat, samples = _measured_curves(cfg, derive_seeds(seed, 3)[2])
    out.curve("measured_flat", flat, "synthetic flat-sample gradient")
    for k, c in samples.items():
        out.curve(f"measured_{k}", c, f"synthetic gradient, sample {k}")


def cmd_calibrate(cfg: RunConfig, seed, out: Outputs):
    o = cfg.oscillator
    if cfg.analysis.calibration_series:
        sweeps = read_series(cfg.path(cfg.analysis.calibration_series))
        v0, v0_sigma = o.residual_voltage_V, 0.0
        theory = _calibration_theory(cfg)
        source = str(cfg.analysis.calibration_series)
    else:
        theory, sweeps, scan = _calibration_inputs(cfg, seed)
        v0, v0_sigma = find_residual_voltage(scan)
        source = "simulated"
    res = calibrate(sweeps, v0, casimir_gradient=theory, theta=o.theta_rad, residual_voltage_sigma=v0_sigma)
    out.results.update({"C_m_per_N_s": res.C, "C_sigma": res.C_sigma, "C_spread": res.C_spread,
                        "z0_m": res.z0, "z0_sigma_m": res.z0_sigma, "z0_spread_m": res.z0_spread,
                        "residual_voltage_V": v0, "residual_voltage_sigma_V": v0_sigma, "source": source})
    pv = res.per_voltage
    out.table("calibration_per_voltage",
              {"V_volt": [f["V"] for f in pv], "C_m_per_N_s": [f["C"] for f in pv],
               "z0_m": [f["z0"] for f in pv], "chi2": [f["chi2"] for f in pv], "n_points": [f["n"] for f in pv]},
              {"V_volt": "V", "C_m_per_N_s": "m/(N s)", "z0_m": "m", "chi2": "1", "n_points": "1"},
              "per-voltage calibration fits")


def _rho_outputs(cfg, flat, samples, out: Outputs, prefix):
    profiles = cfg.profiles()
    cols, units = {"z_m": flat.z}, {"z_m": "m"}
    for k, prof in profiles.items():
        meas = samples[k]
        if not meas.same_grid(flat):
            raise ConfigError(f"sample {k} gradient is not on the flat-sample z grid", "analysis.sample_gradients")
        paa, rho = paa_and_rho(flat, meas, prof.duty_cycle)
        out.curve(f"{prefix}paa_{k}", paa, f"pairwise-additive prediction p*F'_flat, sample {k}")
        cols[f"rho_{k}"], cols[f"sigma_rho_{k}"] = rho.value, rho.sigma
        units[f"rho_{k}"] = units[f"sigma_rho_{k}"] = "1"
        out.results[f"mean_rho_{k}"] = float(np.mean(rho.value))
        ref_path = cfg.analysis.reference_curves.get(k)
        if ref_path:
            rep = compare_reference(rho, read_reference_csv(cfg.path(ref_path)))
            out.table(f"{prefix}comparison_{k}",
                      {"z_m": rep.z, "rho_measured": rep.rho_measured, "rho_reference": rep.rho_reference,
                       "difference": rep.difference, "significance": rep.significance},
                      {"z_m": "m", "rho_measured": "1", "rho_reference": "1", "difference": "1",
                       "significance": "sigma"}, f"rho versus reference curve (lambda/a = {rep.lambda_over_a:g})")
            out.results[f"deviation_ratio_{k}"] = rep.mean_deviation_ratio
    out.table(f"{prefix}rho", cols, units, "rho = F'_measured / (p F'_flat) per sample")


def cmd_analyze(cfg: RunConfig, seed, out: Outputs):
    _, flat, samples = _measured_curves(cfg, seed)
    _rho_outputs(cfg, flat, samples, out, "")


def cmd_figure2(cfg: RunConfig, seed, out: Outputs):
    z = _fem_grid(cfg)
    dv = cfg.fem.voltage_mV_above_V0 * 1e-3
    fig = electrostatic_figure(cfg.radius, list(cfg.profiles().values()), dv, z, cfg.fem.refinement,
                               max_workers=_workers())
    for k, c in fig.items():
        desc = "flat plate, exact series" if k == "flat" else f"trench sample {k}, FEM + PFA"
        out.curve(f"figure2_{k}", c, f"electrostatic gradient at V - V0 = {dv:g} V: {desc}")


def cmd_figure3(cfg: RunConfig, seed, out: Outputs):
    theory, flat, samples = _measured_curves(cfg, seed)
    if theory is not None:
        out.curve("figure3_theory", theory.on(flat.z), "flat-sample Lifshitz + roughness + PFA gradient")
    out.curve("figure3_flat", flat, "measured flat-sample gradient")
    for k, c in samples.items():
        out.curve(f"figure3_{k}", c, f"measured gradient, sample {k}")
    _rho_outputs(cfg, flat, samples, out, "figure3_")


_DISPATCH = {"dielectric": cmd_dielectric, "lifshitz": cmd_lifshitz, "electro-series": cmd_electro_series,
             "electro-fem": cmd_electro_fem, "calibrate": cmd_calibrate, "simulate": cmd_simulate,
             "analyze": cmd_analyze, "figure2": cmd_figure2, "figure3": cmd_figure3}


def dispatch(subcommand, cfg: RunConfig, out_dir, seed=None, timestamp=True):
    """Run one subcommand and write its artifacts to ``out_dir``."""
    if subcommand not in _DISPATCH:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    seed = cfg.oscillator.seed if seed is None else seed
    out = Outputs(cfg)
    _DISPATCH[subcommand](cfg, seed, out)
    out_dir = Path(out_dir)
    cfg.write_echo(out_dir)
    out.write(out_dir, subcommand, seed, timestamp)
    return out


def _parser():
    p = argparse.ArgumentParser(prog="casimir-trench", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, default=None, help="TOML run configuration (defaults if omitted)")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides outputs.directory)")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides oscillator.seed)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp so reruns are byte-identical")
    return p


def _fail(exc, code):
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if getattr(exc, "key", None):
        err["key"] = exc.key
    if getattr(exc, "diagnostics", None):
        err["diagnostics"] = exc.diagnostics
    sys.stderr.write(json.dumps(err, default=str, sort_keys=True) + "\n")
    return code


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer", "seed")
        cfg = parse_config(args.config) if args.config is not None else config_from_dict({})
        if args.seed is not None:
            cfg.oscillator.seed = args.seed
        if args.out is not None:
            out_dir = args.out
            cfg.outputs.directory = str(args.out)
        else:
            out_dir = cfg.path(cfg.outputs.directory)
        dispatch(args.subcommand, cfg, out_dir, timestamp=not args.no_timestamp)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except (ParseError, OSError) as exc:
        return _fail(exc, EXIT_IO)
    except CasimirTrenchError as exc:
        return _fail(exc, EXIT_NUMERICAL)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
