"""Run configuration for the command-line tool.

TOML file; every physical quantity carries its unit in the key name. All
sections and keys are optional, and an empty file gives the defaults below.
Unknown keys are rejected.

::

    [materials]
    sphere = "gold"               # gold | perfect_conductor | constant:<eps> | <table.csv>
    plate = "doped_silicon"       # doped_silicon | silicon | gold | perfect_conductor | constant:<eps> | <table.csv>
    plate_table = ""              # optional n,k table replacing the bundled silicon one
    carrier_density_cm3 = 2e18
    dc_resistivity_ohm_cm = 0.028
    effective_mass_ratio = 0.26

    [geometry]
    sphere_radius_um = 50.0

    [geometry.samples.A]          # any number of samples; A and B by default
    period_nm = 1000.0
    depth_nm = 980.0
    duty_cycle = 0.478

    [roughness]
    rms_sphere_nm = 4.0
    rms_plate_nm = 0.6
    distribution = "gaussian"     # gaussian | uniform | histogram
    histogram = ""                # offset_m,weight CSV when distribution = "histogram"

    [lifshitz]
    rtol = 1e-6
    points_per_decade = 40

    [oscillator]
    f0_hz = 1783.0
    quality_factor = 32000.0
    lever_arm_um = 210.0
    transduction_m_per_N_s = 628.0
    residual_voltage_V = -0.43
    z0_um = 1.0
    theta_rad = 0.0
    noise_pN_per_um = 0.64
    noise_reference_nm = 300.0
    noise_exponent = 0.0
    seed = 1

    [sweep]
    z_min_nm = 150.0
    z_max_nm = 500.0
    z_points = 15
    calibration_z_min_nm = 150.0
    calibration_z_max_nm = 1000.0
    calibration_points = 60
    voltages_mV_above_V0 = [245.0, 256.0, 267.0, 278.0, 289.0, 300.0]
    scan_half_span_mV = 150.0
    scan_points = 11
    scan_z_nm = 300.0

    [fem]
    refinement = 2
    voltage_mV_above_V0 = 300.0
    z_points = 6

    [analysis]
    synthetic_rho = {}            # e.g. {A = 1.1, B = 1.2}; 1 reproduces PAA
    reference_curves = {}         # e.g. {A = "rho_ref_A.csv"}; z_m,rho CSVs
    calibration_series = ""       # measured series CSV for `calibrate`
    flat_gradient = ""            # measured curves (z_m,value,sigma,kind) for `analyze`
    sample_gradients = {}         # e.g. {A = "A.csv", B = "B.csv"}

    [outputs]
    directory = "casimir_out"
    formats = ["csv"]

Relative paths are resolved against the config file's directory.
"""
from __future__ import annotations

import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

import numpy as np

from .constants import NM, UM
from .dielectric import (CarrierParams, DielectricModel, bundled_table, constant_model, doped_silicon_model,
                         gold_model, load_optical_table, perfect_conductor)
from .electrostatics.mesh import SAMPLE_A, SAMPLE_B, TrenchProfile
from .errors import ConfigError, ValidationError
from .oscillator import NoiseModel, OscillatorParams
from .roughness import RoughnessSpec, load_histogram


@dataclass
class MaterialsConfig:
    sphere: str = "gold"
    plate: str = "doped_silicon"
    plate_table: str = ""
    carrier_density_cm3: float = 2e18
    dc_resistivity_ohm_cm: float = 0.028
    effective_mass_ratio: float = 0.26


@dataclass
class SampleConfig:
    period_nm: float
    depth_nm: float
    duty_cycle: float


def _default_samples():
    return {p.label: SampleConfig(p.period / NM, p.depth / NM, p.duty_cycle) for p in (SAMPLE_A, SAMPLE_B)}


@dataclass
class GeometryConfig:
    sphere_radius_um: float = 50.0
    samples: dict = field(default_factory=_default_samples)


@dataclass
class RoughnessConfig:
    rms_sphere_nm: float = 4.0
    rms_plate_nm: float = 0.6
    distribution: str = "gaussian"
    histogram: str = ""


@dataclass
class LifshitzConfig:
    rtol: float = 1e-6
    points_per_decade: int = 40


@dataclass
class OscillatorConfig:
    f0_hz: float = 1783.0
    quality_factor: float = 32000.0
    lever_arm_um: float = 210.0
    transduction_m_per_N_s: float = 628.0
    residual_voltage_V: float = -0.43
    z0_um: float = 1.0
    theta_rad: float = 0.0
    noise_pN_per_um: float = 0.64
    noise_reference_nm: float = 300.0
    noise_exponent: float = 0.0
    seed: int = 1


@dataclass
class SweepConfig:
    z_min_nm: float = 150.0
    z_max_nm: float = 500.0
    z_points: int = 15
    calibration_z_min_nm: float = 150.0
    calibration_z_max_nm: float = 1000.0
    calibration_points: int = 60
    voltages_mV_above_V0: list = field(default_factory=lambda: [245.0, 256.0, 267.0, 278.0, 289.0, 300.0])
    scan_half_span_mV: float = 150.0
    scan_points: int = 11
    scan_z_nm: float = 300.0


@dataclass
class FemConfig:
    refinement: int = 2
    voltage_mV_above_V0: float = 300.0
    z_points: int = 6


@dataclass
class AnalysisConfig:
    synthetic_rho: dict = field(default_factory=dict)
    reference_curves: dict = field(default_factory=dict)
    calibration_series: str = ""
    flat_gradient: str = ""
    sample_gradients: dict = field(default_factory=dict)


@dataclass
class OutputsConfig:
    directory: str = "casimir_out"
    formats: list = field(default_factory=lambda: ["csv"])


_SECTIONS = {
    "materials": MaterialsConfig, "geometry": GeometryConfig, "roughness": RoughnessConfig,
    "lifshitz": LifshitzConfig, "oscillator": OscillatorConfig, "sweep": SweepConfig,
    "fem": FemConfig, "analysis": AnalysisConfig, "outputs": OutputsConfig,
}


@dataclass
class RunConfig:
    materials: MaterialsConfig = field(default_factory=MaterialsConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    roughness: RoughnessConfig = field(default_factory=RoughnessConfig)
    lifshitz: LifshitzConfig = field(default_factory=LifshitzConfig)
    oscillator: OscillatorConfig = field(default_factory=OscillatorConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    fem: FemConfig = field(default_factory=FemConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    outputs: OutputsConfig = field(default_factory=OutputsConfig)
    base_dir: Path = field(default_factory=Path.cwd)

    # -- derived library objects --------------------------------------------

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def radius(self):
        return self.geometry.sphere_radius_um * UM

    def profiles(self):
        return {k: TrenchProfile(s.period_nm * NM, s.depth_nm * NM, s.duty_cycle, k)
                for k, s in self.geometry.samples.items()}

    def carriers(self):
        m = self.materials
        return CarrierParams(m.carrier_density_cm3, m.dc_resistivity_ohm_cm, m.effective_mass_ratio)

    def _material(self, spec) -> DielectricModel:
        if spec == "gold":
            return gold_model()
        if spec == "perfect_conductor":
            return perfect_conductor()
        if spec == "silicon":
            return DielectricModel("tabulated", table=bundled_table("silicon"), name="silicon")
        if spec == "doped_silicon":
            table = load_optical_table(self.path(self.materials.plate_table)) if self.materials.plate_table else None
            return doped_silicon_model(self.carriers(), table)
        if spec.startswith("constant:"):
            return constant_model(float(spec.split(":", 1)[1]))
        return DielectricModel("tabulated", table=load_optical_table(self.path(spec)), name=Path(spec).stem)

    def sphere_material(self):
        return self._material(self.materials.sphere)

    def plate_material(self):
        return self._material(self.materials.plate)

    def roughness_spec(self):
        r = self.roughness
        if r.distribution == "histogram":
            return load_histogram(self.path(r.histogram), r.rms_sphere_nm * NM, r.rms_plate_nm * NM)
        return RoughnessSpec(r.rms_sphere_nm * NM, r.rms_plate_nm * NM, r.distribution)

    def oscillator_params(self):
        o = self.oscillator
        return OscillatorParams(o.f0_hz, o.quality_factor, o.lever_arm_um * UM, self.radius, o.transduction_m_per_N_s)

    def noise_model(self):
        o = self.oscillator
        if o.noise_pN_per_um == 0:
            return None
        # 1 pN/um = 1e-6 N/m
        return NoiseModel(o.noise_pN_per_um * 1e-6, o.noise_reference_nm * NM, o.noise_exponent)

    def z_grid(self):
        s = self.sweep
        return np.linspace(s.z_min_nm * NM, s.z_max_nm * NM, s.z_points)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def write_echo(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "effective_config.json").write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
                                                  encoding="utf-8")


# -- parsing -----------------------------------------------------------------

def _coerce(section, name, value, default):
    key = f"{section}.{name}"
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
        if ok and not math.isfinite(value):
            raise ConfigError(f"{key} must be finite", key)
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    elif isinstance(default, dict):
        ok = isinstance(value, dict)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{key}: expected {type(default).__name__}, got {value!r}", key)
    return value


def _build(cls, section, table):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table", section)
    defaults = cls() if cls is not SampleConfig else None
    names = {f.name for f in dataclasses.fields(cls)}
    for k in table:
        if k not in names:
            raise ConfigError(f"unknown key {section}.{k}", f"{section}.{k}")
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name in table:
            ref = getattr(defaults, f.name) if defaults is not None else 0.0
            kw[f.name] = _coerce(section, f.name, table[f.name], ref)
        elif defaults is None:
            raise ConfigError(f"missing key {section}.{f.name}", f"{section}.{f.name}")
    return cls(**kw)


def _positive(cfg, section, *names):
    for n in names:
        v = getattr(getattr(cfg, section), n)
        if not v > 0:
            raise ConfigError(f"{section}.{n} must be > 0, got {v!r}", f"{section}.{n}")


def _validate(cfg: RunConfig):
    m = cfg.materials
    _positive(cfg, "materials", "carrier_density_cm3", "dc_resistivity_ohm_cm", "effective_mass_ratio")
    _positive(cfg, "geometry", "sphere_radius_um")
    for label, s in cfg.geometry.samples.items():
        key = f"geometry.samples.{label}"
        for n in ("period_nm", "depth_nm"):
            if not getattr(s, n) > 0:
                raise ConfigError(f"{key}.{n} must be > 0", f"{key}.{n}")
        if not 0.0 < s.duty_cycle < 1.0:
            raise ConfigError(f"{key}.duty_cycle must lie in (0, 1), got {s.duty_cycle!r}", f"{key}.duty_cycle")
    r = cfg.roughness
    if r.distribution not in ("gaussian", "uniform", "histogram"):
        raise ConfigError("roughness.distribution must be gaussian, uniform or histogram", "roughness.distribution")
    if r.rms_sphere_nm < 0 or r.rms_plate_nm < 0:
        raise ConfigError("roughness rms must be >= 0", "roughness.rms_sphere_nm")
    if r.distribution == "histogram" and not r.histogram:
        raise ConfigError("roughness.histogram path required for distribution = histogram", "roughness.histogram")
    if not 0 < cfg.lifshitz.rtol < 0.1:
        raise ConfigError("lifshitz.rtol must lie in (0, 0.1)", "lifshitz.rtol")
    _positive(cfg, "lifshitz", "points_per_decade")
    _positive(cfg, "oscillator", "f0_hz", "quality_factor", "lever_arm_um", "transduction_m_per_N_s", "z0_um",
              "noise_reference_nm")
    o = cfg.oscillator
    if o.noise_pN_per_um < 0:
        raise ConfigError("oscillator.noise_pN_per_um must be >= 0", "oscillator.noise_pN_per_um")
    if not 0 <= o.seed < 2**64:
        raise ConfigError("oscillator.seed must be an unsigned 64-bit integer", "oscillator.seed")
    s = cfg.sweep
    _positive(cfg, "sweep", "z_min_nm", "z_max_nm", "calibration_z_min_nm", "calibration_z_max_nm",
              "scan_half_span_mV", "scan_z_nm")
    if s.z_max_nm <= s.z_min_nm or s.z_points < 2:
        raise ConfigError("sweep z grid needs z_max_nm > z_min_nm and z_points >= 2", "sweep.z_max_nm")
    if s.calibration_z_max_nm <= s.calibration_z_min_nm or s.calibration_points < 3:
        raise ConfigError("calibration grid needs max > min and >= 3 points", "sweep.calibration_z_max_nm")
    if s.calibration_z_max_nm > o.z0_um * 1e3:
        raise ConfigError("calibration separations cannot exceed z0_um", "sweep.calibration_z_max_nm")
    if not s.voltages_mV_above_V0 or any(not isinstance(v, (int, float)) or v == 0 for v in s.voltages_mV_above_V0):
        raise ConfigError("sweep.voltages_mV_above_V0 must be a non-empty list of non-zero numbers",
                          "sweep.voltages_mV_above_V0")
    if s.scan_points < 3:
        raise ConfigError("sweep.scan_points must be >= 3", "sweep.scan_points")
    f = cfg.fem
    if f.refinement < 0 or f.z_points < 2 or f.voltage_mV_above_V0 == 0:
        raise ConfigError("fem.refinement >= 0, fem.z_points >= 2, fem.voltage_mV_above_V0 != 0", "fem")
    a = cfg.analysis
    for label, v in a.synthetic_rho.items():
        if not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"analysis.synthetic_rho.{label} must be > 0", f"analysis.synthetic_rho.{label}")
    for label in list(a.synthetic_rho) + list(a.reference_curves) + list(a.sample_gradients):
        if label not in cfg.geometry.samples:
            raise ConfigError(f"analysis refers to unknown sample {label!r}", f"analysis.{label}")
    bad = [x for x in cfg.outputs.formats if x not in ("csv", "json")]
    if bad:
        raise ConfigError(f"unsupported output format(s) {bad}", "outputs.formats")
    # referenced files must exist
    files = {"materials.plate_table": m.plate_table, "roughness.histogram": r.histogram,
             "analysis.calibration_series": a.calibration_series, "analysis.flat_gradient": a.flat_gradient}
    for which in ("sphere", "plate"):
        v = getattr(m, which)
        if v not in ("gold", "perfect_conductor", "silicon", "doped_silicon") and not v.startswith("constant:"):
            files[f"materials.{which}"] = v
        elif v.startswith("constant:"):
            try:
                if not float(v.split(":", 1)[1]) >= 1:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"materials.{which}: constant permittivity must be a number >= 1",
                                  f"materials.{which}") from None
    for label, p in a.reference_curves.items():
        files[f"analysis.reference_curves.{label}"] = p
    for label, p in a.sample_gradients.items():
        files[f"analysis.sample_gradients.{label}"] = p
    for key, p in files.items():
        if p and not cfg.path(p).is_file():
            raise ConfigError(f"{key}: file not found: {cfg.path(p)}", key)


def config_from_dict(data: dict, base_dir=None) -> RunConfig:
    """Build and validate a :class:`RunConfig` from parsed TOML."""
    kw = {}
    for name, table in data.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]", name)
        if name == "geometry":
            table = dict(table)
            samples = table.pop("samples", None)
            geo = _build(GeometryConfig, "geometry", table)
            if samples is not None:
                if not isinstance(samples, dict):
                    raise ConfigError("geometry.samples must be a table", "geometry.samples")
                geo.samples = {k: _build(SampleConfig, f"geometry.samples.{k}", v) for k, v in samples.items()}
            kw[name] = geo
        else:
            kw[name] = _build(_SECTIONS[name], name, table)
    cfg = RunConfig(**kw, base_dir=Path(base_dir) if base_dir is not None else Path.cwd())
    _validate(cfg)
    # construct library objects once so their own invariants are checked here
    try:
        cfg.profiles()
        cfg.oscillator_params()
        cfg.noise_model()
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def parse_config(path, out_dir=None) -> RunConfig:
    """Read, validate and (optionally) echo a TOML run configuration.

    Raises
    ------
    ConfigError
        Unknown key or section, wrong type, or invariant violation; the
        offending key is in ``.key``.
    OSError
        The file cannot be read.
    """
    path = Path(path)
    raw = path.read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = config_from_dict(data, path.parent)
    if out_dir is not None:
        cfg.write_echo(out_dir)
    return cfg
