"""Scenario configuration: a flat ``key = value`` text file.

Lines are ``key = value``; ``#`` starts a comment; lists are comma separated;
booleans are ``true``/``false``. Unknown keys are errors. Every key and its
default is listed in :class:`ScenarioConfig`.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path

from qplasmon.errors import ConfigError, QPlasmonError
from qplasmon.optics import ComplexPermittivity, StackModel
from qplasmon.photons import ChannelModel, ProbeModel, SamplingPlan

EXPERIMENTS = ("angle_scan", "concentration_scan", "calibrate", "analyze")

# keys that do not change any number in the output
_NON_SEMANTIC = {"output_dir", "threads"}

ASSUMPTIONS = (
    "prism index is not given by the source experiment; default 1.5106 is assumed",
    "t_before and t_after defaults (0.8, 0.9) are assumptions; detector efficiency 0.5",
    "heralding efficiency default 1.0 is an assumption",
    "T_prism expectation is R_sp(n) / R_sp(air) when normalize_model is true",
)


@dataclass(frozen=True)
class ScenarioConfig:
    experiment: str = "angle_scan"
    # stack (truth for simulations, fixed geometry for fits)
    prism_index: float = 1.5106
    gold_eps_real: float = -18.2484
    gold_eps_imag: float = 0.8096
    gold_thickness: float = 57.41
    wavelength: float = 799.0
    reference_index: float = 1.0
    normalize_model: bool = True
    # probe
    probe: str = "heralded"
    mean_photon_number: float = 1.0
    heralding_efficiency: float = 1.0
    # channel extras
    t_before: float = 0.8
    t_after: float = 0.9
    detector_efficiency: float = 0.5
    no_prism: bool = False
    # sampling
    trials: int = 10_000
    repetitions: int = 1_000
    seed: int = 12345
    zero_noise: bool = False
    threads: int = 1
    # angle scan
    angle_min: float = 66.5
    angle_max: float = 69.0
    angle_steps: int = 26
    analyte_labels: tuple = ("water", "bsa2")
    analyte_indices: tuple = (1.3284, 1.3325)
    # concentration scan
    theta_in: float = 67.5
    concentrations: tuple = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
    n_intercept: float = 1.3284
    dn_dc: float = 1.933e-3
    n_bracket_low: float = 1.3275
    n_bracket_high: float = 1.3375
    invert: bool = False
    # fits and inputs
    input_csv: str = ""
    fit_max_iter: int = 500
    fit_rms_threshold: float = 0.05
    fit_weighted: bool = True
    output_dir: str = "."

    def __post_init__(self):
        try:
            self.validate()
        except QPlasmonError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.probe not in ("heralded", "coherent"):
            raise ConfigError(f"probe: must be 'heralded' or 'coherent', got {self.probe!r}")
        if len(self.analyte_labels) != len(self.analyte_indices):
            raise ConfigError("analyte_labels / analyte_indices: lengths differ")
        if len(set(self.analyte_labels)) != len(self.analyte_labels):
            raise ConfigError("analyte_labels: duplicate label")
        if not self.angle_min < self.angle_max or self.angle_steps < 2:
            raise ConfigError("angle_min / angle_max / angle_steps: need min < max and steps >= 2")
        if self.repetitions < 2 and not self.zero_noise:
            raise ConfigError("repetitions: the transmittance SD needs at least 2 repetitions")
        if self.threads < 1:
            raise ConfigError("threads: must be >= 1")
        if not self.n_bracket_low < self.n_bracket_high:
            raise ConfigError("n_bracket_low / n_bracket_high: must be ordered")
        if self.mean_photon_number <= 0:
            raise ConfigError("mean_photon_number: must be > 0")
        for name in ("t_before", "t_after", "detector_efficiency", "heralding_efficiency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}: must lie in [0, 1], got {v}")
        # surface type invariants with field names
        for name, build in (("stack", self.stack), ("plan", self.plan)):
            try:
                build()
            except ConfigError:
                raise
            except QPlasmonError as exc:
                raise ConfigError(f"{name}: {exc}") from exc

    # -- derived domain objects ------------------------------------------------
    def stack(self, analyte_index: float | None = None) -> StackModel:
        n = self.analyte_indices[0] if analyte_index is None else analyte_index
        return StackModel(self.prism_index,
                          ComplexPermittivity(self.gold_eps_real, self.gold_eps_imag),
                          self.gold_thickness, n, self.wavelength)

    def plan(self) -> SamplingPlan:
        return SamplingPlan(self.trials, self.repetitions, self.seed)

    def probe_model(self, kind: str | None = None) -> ProbeModel:
        kind = kind or self.probe
        if kind == "heralded":
            return ProbeModel.heralded(self.heralding_efficiency)
        return ProbeModel.coherent(self.mean_photon_number)

    def channel(self, t_prism: float) -> ChannelModel:
        return ChannelModel(self.t_before, 1.0 if self.no_prism else t_prism, self.t_after,
                            self.detector_efficiency)

    @property
    def model_reference(self):
        """Reference index of the T_prism forward model (None = bare R_sp)."""
        if self.no_prism or not self.normalize_model:
            return None
        return self.reference_index

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def config_hash(self) -> str:
        d = {k: v for k, v in self.as_dict().items() if k not in _NON_SEMANTIC}
        blob = json.dumps(d, sort_keys=True, default=list, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_FIELDS = {f.name: f for f in fields(ScenarioConfig)}
_DEFAULTS = ScenarioConfig()


def _convert(key, raw):
    default = getattr(_DEFAULTS, key)
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if default and isinstance(default[0], str):
                return tuple(items)
            return tuple(float(s) for s in items)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {type(default).__name__}") from None


def config_from_mapping(values: dict) -> ScenarioConfig:
    unknown = sorted(set(values) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    kwargs = {k: _convert(k, v) if isinstance(v, str) else v for k, v in values.items()}
    return ScenarioConfig(**kwargs)


def parse_config_text(text: str, source: str = "<config>", defaults=None) -> ScenarioConfig:
    """Parse the file format; ``defaults`` fill keys the text leaves out."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = raw
    return config_from_mapping({**(defaults or {}), **values})


def load_config(path, defaults=None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path), defaults)


def dump_config(cfg: ScenarioConfig) -> str:
    """Render ``cfg`` in the file format accepted by :func:`parse_config_text`."""
    out = []
    for k, v in cfg.as_dict().items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, tuple):
            v = ", ".join(str(x) for x in v)
        out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"
