"""Experiment configuration: one YAML file describes one run.

Every section maps onto a frozen dataclass. Keys are checked against the
dataclass fields and values against the type of the field's default, so a
typo or a string where a number belongs fails before anything runs.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..control import FingerPose, PidState, orientation_pid, vertical_pid
from ..errors import ConfigError
from ..physics import STIFFNESS_CLASSES, PageMaterial, RigidPlane, flat_page
from ..rig import PagePlant, PlanePlant, Rig, Servo
from ..shape import MARKER_START, N_MARKERS, CameraModel, ShapeBand, ShapePids, ShapeTarget
from ..strategy import AdaptiveParams, RubMotion
from ..tactile import SensorCalibration


@dataclass(frozen=True)
class PageConfig:
    """Geometry plus material. ``stiffness`` names a class unless ``bending_stiffness`` is set."""

    stiffness: str = "medium"
    bending_stiffness: float | None = None
    n_nodes: int = 20
    length: float = 0.2
    spine: tuple[float, float] = (0.2, 0.0)
    mu_support: float = 0.2
    mu_tip: float = 0.8
    gravity_load: float = 0.03
    binding: float = 0.5

    def __post_init__(self):
        if self.stiffness not in STIFFNESS_CLASSES:
            raise ValueError(f"stiffness must be one of {sorted(STIFFNESS_CLASSES)}")
        if self.n_nodes < 2 or not self.length > 0:
            raise ValueError("need n_nodes >= 2 and a positive length")
        self.material()

    def material(self) -> PageMaterial:
        ei = self.bending_stiffness if self.bending_stiffness is not None else STIFFNESS_CLASSES[self.stiffness]
        return PageMaterial(bending_stiffness=ei, mu_support=self.mu_support, mu_tip=self.mu_tip,
                            gravity_load=self.gravity_load, binding=self.binding)


@dataclass(frozen=True)
class FingerConfig:
    start: tuple[float, float] = (0.012, 0.0005)
    radius: float = 0.01

    @property
    def clearance(self) -> float:
        """Gap between the start point and the surface below (the page lies at z = 0)."""
        return self.start[1]

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")


def _gains(pid: PidState) -> dict:
    return {"kp": pid.kp, "ki": pid.ki, "kd": pid.kd,
            "integral_limit": pid.integral_limit, "output_limit": pid.output_limit}


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = math.inf
    output_limit: float = math.inf

    def __post_init__(self):
        if not (self.integral_limit > 0 and self.output_limit > 0):
            raise ValueError("limits must be positive")

    def pid(self) -> PidState:
        return PidState(self.kp, self.ki, self.kd, self.integral_limit, self.output_limit)


_SHAPE = ShapePids()


@dataclass(frozen=True)
class GainsConfig:
    orientation: PidGains = field(default_factory=lambda: PidGains(**_gains(orientation_pid())))
    vertical: PidGains = field(default_factory=lambda: PidGains(**_gains(vertical_pid())))
    shape_theta: PidGains = field(default_factory=lambda: PidGains(**_gains(_SHAPE.theta)))
    shape_x: PidGains = field(default_factory=lambda: PidGains(**_gains(_SHAPE.x)))


@dataclass(frozen=True)
class ShapeConfig:
    Theta_des: float = 215.0
    X_c_des: float = 979.0
    band_Theta: float = 3.0
    band_X_c: float = 15.0
    hold: int = 25
    max_cycles: int = 3000
    markers: int = N_MARKERS
    marker_start: float = MARKER_START

    def __post_init__(self):
        ShapeTarget(self.Theta_des, self.X_c_des)
        if not (self.band_Theta > 0 and self.band_X_c > 0):
            raise ValueError("bands must be positive")
        if self.hold < 1 or self.max_cycles < 0 or self.markers < 4 or self.marker_start < 0:
            raise ValueError("need hold >= 1, max_cycles >= 0, markers >= 4, marker_start >= 0")

    @property
    def target(self) -> ShapeTarget:
        return ShapeTarget(self.Theta_des, self.X_c_des)

    @property
    def band(self) -> ShapeBand:
        return ShapeBand(self.band_Theta, self.band_X_c, self.hold)


@dataclass(frozen=True)
class PressConfig:
    """Pressing-only experiment: hold ``P_des`` on a plant for ``cycles`` servo cycles."""

    plant: str = "plane"
    incline_deg: float = 10.0
    P_des: float = 2180.0
    cycles: int = 650
    band: float = 0.02
    hold: int = 500

    def __post_init__(self):
        if self.plant not in ("plane", "page"):
            raise ValueError("plant must be 'plane' or 'page'")
        if not (-60.0 < self.incline_deg < 60.0):
            raise ValueError("incline_deg must lie in (-60, 60)")
        if not (self.P_des > 0 and self.band > 0) or self.cycles < 0 or self.hold < 1:
            raise ValueError("need P_des > 0, band > 0, cycles >= 0, hold >= 1")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "runs"
    csv: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "turning"
    P0_des: float = 1000.0
    rng_seed: int = 0
    max_cycles: int = 20000
    page: PageConfig = field(default_factory=PageConfig)
    finger: FingerConfig = field(default_factory=FingerConfig)
    sensor: SensorCalibration = field(default_factory=SensorCalibration)
    gains: GainsConfig = field(default_factory=GainsConfig)
    adaptive: AdaptiveParams = field(default_factory=AdaptiveParams)
    rub: RubMotion = field(default_factory=RubMotion)
    camera: CameraModel = field(default_factory=CameraModel)
    shape: ShapeConfig = field(default_factory=ShapeConfig)
    press: PressConfig = field(default_factory=PressConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if self.mode not in ("turning", "press"):
            raise ValueError("mode must be 'turning' or 'press'")
        if not self.P0_des > 0:
            raise ValueError("P0_des must be positive")
        if self.max_cycles < 0:
            raise ValueError("max_cycles must be non-negative")

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    @property
    def hash(self) -> str:
        """Digest of everything that affects the result (the output section is excluded)."""
        d = self.to_dict()
        d.pop("output")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def build_rig(self) -> Rig:
        """Rig at the start pose. In press mode on a plane, the plane passes
        under the start point at the finger's start height."""
        p = self.page
        g = self.gains
        if self.mode == "press" and self.press.plant == "plane":
            y0, z0 = self.finger.start
            plant = PlanePlant(RigidPlane(math.radians(self.press.incline_deg), (y0, z0 - self.finger.clearance)))
        else:
            plant = PagePlant(flat_page(p.n_nodes, p.length, p.spine), p.material())
        return Rig(plant, FingerPose(self.finger.start, 0.0, self.finger.radius),
                   Servo(g.orientation.pid(), g.vertical.pid()), self.sensor, seed=self.rng_seed)

    def shape_pids(self) -> ShapePids:
        return ShapePids(self.gains.shape_theta.pid(), self.gains.shape_x.pid())

    def replace(self, overrides: dict) -> "ExperimentConfig":
        """New config with dotted-key overrides such as ``{"page.stiffness": "low"}``."""
        d = self.to_dict()
        for key, value in overrides.items():
            *head, last = key.split(".")
            node = d
            for part in head:
                if not isinstance(node.get(part), dict):
                    raise ConfigError(f"unknown section {key!r}")
                node = node[part]
            if last not in node:
                raise ConfigError(f"unknown key {key!r}")
            node[last] = value
        return from_dict(d)


def _plain(obj):
    """Tuples to lists and infinities to strings, so the dict is YAML/JSON-clean."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def _number(value, path, integer=False):
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", ".inf", "-inf", "-.inf"):
        if integer:
            raise ConfigError(f"{path}: expected an integer")
        return -math.inf if value.strip().startswith("-") else math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if math.isnan(value):
        raise ConfigError(f"{path}: NaN is not allowed")
    return float(value)


def _coerce(value, default, path):
    if dataclasses.is_dataclass(default):
        return _build(type(default), value, path, default)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false")
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"{path}: expected a list of {len(default)} numbers")
        return tuple(_coerce(v, d, f"{path}[{i}]") for i, (v, d) in enumerate(zip(value, default)))
    if isinstance(default, int):
        return _number(value, path, integer=True)
    if default is None:
        return None if value is None else _number(value, path)
    return _number(value, path)


def _build(cls, data, path, base=None):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping")
    base = base if base is not None else cls()
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {', '.join(unknown)}")
    kw = {}
    for name in names:
        default = getattr(base, name)
        sub = f"{path}.{name}" if path else name
        kw[name] = _coerce(data[name], default, sub) if name in data else default
    try:
        return cls(**kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def from_dict(data: dict | None) -> ExperimentConfig:
    """Validate a nested mapping; missing keys keep their defaults."""
    return _build(ExperimentConfig, copy.deepcopy(data or {}), "")


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    return from_dict(data)


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True)
