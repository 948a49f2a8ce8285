"""INI-backed tool configuration.

One config file drives every CLI subcommand so an experiment is fully
described by (inputs, config, seed). All quantities are SI: meters,
seconds, newtons, N/m, kg. The default config path can be set with the
``COMPLIANCEKIT_CONFIG`` environment variable.
"""
from __future__ import annotations

import configparser
import hashlib
import io
import os
from dataclasses import dataclass, field
from pathlib import Path

from .admittance import AdmittanceParams
from .errors import FormatError
from .flipsim import FlipScenario
from .stiffness import DEFAULT_K_HIGH, DEFAULT_SCHEDULE, StiffnessSchedule
from .wrench_signal import SpectrogramConfig

CONFIG_ENV_VAR = "COMPLIANCEKIT_CONFIG"

DEFAULT_CONFIG_TEXT = """\
[stiffness]
k_max = 2000.0
k_min = 50.0
f_max = 8.0
f_min = 1.0
k_high = 2000.0

[admittance]
mass = 2.0
damping = critical
dt = 0.002
force_limit = 30.0

[labeling]
label_rate = 10.0
filter_window = 1.0

[spectrogram]
window_seconds = 1.0
samples = 496
frame = 32
hop = 16
log_magnitude = false

[simulation]
trials_per_cell = 100
output_dir = .
seed = 0
"""


@dataclass(frozen=True)
class ToolConfig:
    """Validated settings shared by the CLI subcommands."""

    schedule: StiffnessSchedule = DEFAULT_SCHEDULE
    k_high: float = DEFAULT_K_HIGH
    admittance: AdmittanceParams = field(
        default_factory=lambda: AdmittanceParams.critically_damped(2.0, 2000.0, 2e-3, 30.0))
    label_rate: float = 10.0
    filter_window: float = 1.0
    spectrogram: SpectrogramConfig = field(default_factory=SpectrogramConfig)
    scenarios: dict = field(default_factory=dict)   # name -> FlipScenario
    scenario_paths: dict = field(default_factory=dict)  # name -> source path
    trials_per_cell: int = 100
    output_dir: Path = Path(".")
    seed: int = 0
    source_text: str = DEFAULT_CONFIG_TEXT

    def __post_init__(self):
        if self.k_high <= 0:
            raise ValueError(f"k_high must be > 0, got {self.k_high}")
        if self.label_rate <= 0 or self.filter_window <= 0:
            raise ValueError("label_rate and filter_window must be > 0")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be >= 1")
        # the loop must be stable for the stiffest commanded spring
        self.admittance.assert_stable(max(self.schedule.k_max, self.k_high))

    def config_hash(self) -> str:
        """Short digest of the source text, for provenance headers."""
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()[:12]


def _get(parser: configparser.ConfigParser, section: str, option: str, fallback: str) -> str:
    return parser.get(section, option, fallback=fallback)


def parse_config(text: str, base_dir: Path | None = None, name: str = "<config>") -> ToolConfig:
    """Parse an INI config; scenario paths resolve relative to base_dir."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=name)
    except configparser.Error as exc:
        raise FormatError(f"{name}: {exc}") from exc
    base = Path(".") if base_dir is None else Path(base_dir)

    try:
        schedule = StiffnessSchedule(
            k_max=float(_get(parser, "stiffness", "k_max", "2000.0")),
            k_min=float(_get(parser, "stiffness", "k_min", "50.0")),
            f_max=float(_get(parser, "stiffness", "f_max", "8.0")),
            f_min=float(_get(parser, "stiffness", "f_min", "1.0")),
        )
        k_high = float(_get(parser, "stiffness", "k_high", "2000.0"))

        mass = float(_get(parser, "admittance", "mass", "2.0"))
        dt = float(_get(parser, "admittance", "dt", "0.002"))
        force_limit = float(_get(parser, "admittance", "force_limit", "30.0"))
        damping_raw = _get(parser, "admittance", "damping", "critical")
        if damping_raw.strip() == "critical":
            admittance = AdmittanceParams.critically_damped(mass, k_high, dt, force_limit)
        else:
            admittance = AdmittanceParams(mass, float(damping_raw), dt, force_limit)

        label_rate = float(_get(parser, "labeling", "label_rate", "10.0"))
        filter_window = float(_get(parser, "labeling", "filter_window", "1.0"))

        spect = SpectrogramConfig(
            window_seconds=float(_get(parser, "spectrogram", "window_seconds", "1.0")),
            samples=int(_get(parser, "spectrogram", "samples", "496")),
            frame=int(_get(parser, "spectrogram", "frame", "32")),
            hop=int(_get(parser, "spectrogram", "hop", "16")),
            log_magnitude=parser.getboolean("spectrogram", "log_magnitude", fallback=False),
        )

        trials = int(_get(parser, "simulation", "trials_per_cell", "100"))
        output_dir = Path(_get(parser, "simulation", "output_dir", "."))
        seed = int(_get(parser, "simulation", "seed", "0"))
    except ValueError as exc:
        raise FormatError(f"{name}: {exc}") from exc

    scenario_paths = {}
    scenarios = {}
    if parser.has_section("scenarios"):
        for sname, rel in parser.items("scenarios"):
            path = base / rel
            if not path.exists():
                raise FormatError(f"{name}: scenario file {path} does not exist")
            scenario_paths[sname] = path
            scenarios[sname] = load_scenario(path)

    return ToolConfig(
        schedule=schedule, k_high=k_high, admittance=admittance,
        label_rate=label_rate, filter_window=filter_window, spectrogram=spect,
        scenarios=scenarios, scenario_paths=scenario_paths, trials_per_cell=trials,
        output_dir=output_dir, seed=seed, source_text=text,
    )


def load_config(path=None) -> ToolConfig:
    """Load a config file; falls back to $COMPLIANCEKIT_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return parse_config(DEFAULT_CONFIG_TEXT)
    path = Path(path)
    if not path.exists():
        raise FormatError(f"config file {path} does not exist")
    return parse_config(path.read_text(), base_dir=path.parent, name=str(path))


def load_scenario(path) -> FlipScenario:
    """Read one flipping scenario from an INI file ([scenario] section)."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(Path(path).read_text(), source=str(path))
    except configparser.Error as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not parser.has_section("scenario"):
        raise FormatError(f"{path}: missing [scenario] section")
    s = parser["scenario"]
    try:
        return FlipScenario(
            item_width=s.getfloat("item_width", 0.06),
            item_height=s.getfloat("item_height", 0.24),
            item_mass=s.getfloat("item_mass", 0.1),
            fixture_pose=(s.getfloat("fixture_x", 0.0), s.getfloat("fixture_z", 0.0)),
            fixture_slide_threshold=s.getfloat("fixture_slide_threshold", 18.0),
            fixture_slide_rate=s.getfloat("fixture_slide_rate", 0.004),
            fixture_edge_limit=s.getfloat("fixture_edge_limit", 0.015),
            finger_friction=s.getfloat("finger_friction", 0.8),
            position_noise_sigma=s.getfloat("position_noise_sigma", 0.01),
            seed=s.getint("seed", 0),
        )
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_default_config(path) -> None:
    Path(path).write_text(DEFAULT_CONFIG_TEXT)


def dump_config(config: ToolConfig) -> str:
    """Round-trippable INI text for the effective configuration."""
    parser = configparser.ConfigParser()
    parser["stiffness"] = {
        "k_max": repr(config.schedule.k_max), "k_min": repr(config.schedule.k_min),
        "f_max": repr(config.schedule.f_max), "f_min": repr(config.schedule.f_min),
        "k_high": repr(config.k_high),
    }
    parser["admittance"] = {
        "mass": repr(float(config.admittance.mass[0, 0])),
        "damping": repr(float(config.admittance.damping[0, 0])),
        "dt": repr(config.admittance.dt),
        "force_limit": repr(config.admittance.force_limit),
    }
    parser["labeling"] = {
        "label_rate": repr(config.label_rate), "filter_window": repr(config.filter_window),
    }
    parser["spectrogram"] = {
        "window_seconds": repr(config.spectrogram.window_seconds),
        "samples": str(config.spectrogram.samples),
        "frame": str(config.spectrogram.frame),
        "hop": str(config.spectrogram.hop),
        "log_magnitude": str(config.spectrogram.log_magnitude).lower(),
    }
    parser["simulation"] = {
        "trials_per_cell": str(config.trials_per_cell),
        "output_dir": str(config.output_dir),
        "seed": str(config.seed),
    }
    if config.scenario_paths:
        parser["scenarios"] = {k: str(v) for k, v in config.scenario_paths.items()}
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()
