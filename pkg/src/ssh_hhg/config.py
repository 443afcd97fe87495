"""Run configuration, presets and YAML round-tripping."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .drive import DriveSpec
from .model import ChainSpec
from .quantum_optics import G0_DEFAULT, WINDOWS
from .spectral import EDGE_CHOICES

PHASES = ("trivial", "topological")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Frequency grid ``q * omega_l / per_order`` up to ``max_order``."""

    max_order: float = 40.0
    per_order: int = 4
    start: int = 1

    def omega(self, omega_l: float) -> np.ndarray:
        q = np.arange(self.start, int(round(self.max_order * self.per_order)) + 1)
        return q * omega_l / self.per_order


@dataclass(frozen=True)
class Tolerances:
    norm_drift: float = 1e-6
    imag_current: float = 1e-10


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run bundle.

    ``chain.delta`` sets the magnitude of the dimerization; the sign used for
    each entry of ``phases`` follows the phase label.
    """

    chain: ChainSpec
    drive: DriveSpec
    phases: tuple[str, ...] = PHASES
    krylov_dim: int = 6
    g0: float = G0_DEFAULT
    n_emitters: int = 1
    eta_grid: GridSpec = GridSpec(40.0, 4, 1)
    spectrum_grid: GridSpec = GridSpec(40.0, 20, 0)
    window: str = "hann"
    edge_exclusion: bool = True
    edge_occupation: str = "lower"
    dump_currents: bool = False
    output_dir: str = "results"
    deterministic: bool = True
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not self.phases or any(p not in PHASES for p in self.phases):
            raise ConfigError(f"phases must be a non-empty subset of {PHASES}, got {self.phases}")
        if self.krylov_dim < 2:
            raise ConfigError("krylov_dim must be at least 2")
        if self.g0 < 0 or self.n_emitters < 1:
            raise ConfigError("need g0 >= 0 and n_emitters >= 1")
        if self.window not in WINDOWS:
            raise ConfigError(f"window must be one of {WINDOWS}")
        if self.edge_occupation not in EDGE_CHOICES:
            raise ConfigError(f"edge_occupation must be one of {EDGE_CHOICES}")
        if not self.deterministic:
            raise ConfigError("only deterministic execution is supported")

    def chain_for(self, phase: str) -> ChainSpec:
        return self.chain.with_phase(phase)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["phases"] = list(self.phases)
        return d

    def digest(self) -> str:
        """Hash of everything that affects results (the output location does not)."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping")
    types = {f.name: f.type for f in fields(cls)}
    unknown = set(data) - set(types)
    if unknown:
        raise ConfigError(f"unknown keys in {path or 'config'}: {sorted(unknown)}")
    for key, value in data.items():
        # YAML 1.1 reads exponents without a dot (1e-3) as strings
        if types[key] in ("float", float) and isinstance(value, str):
            try:
                data[key] = float(value)
            except ValueError:
                raise ConfigError(f"{path + '.' if path else ''}{key} must be a number, got {value!r}") from None
    return cls(**data)


def config_from_dict(data: dict) -> RunConfig:
    data = copy.deepcopy(data)
    try:
        nested = {
            "chain": ChainSpec,
            "drive": DriveSpec,
            "eta_grid": GridSpec,
            "spectrum_grid": GridSpec,
            "tolerances": Tolerances,
        }
        for key, cls in nested.items():
            if key in data:
                data[key] = _build(cls, data[key], key)
        if "chain" not in data or "drive" not in data:
            raise ConfigError("config needs 'chain' and 'drive' sections")
        if "phases" in data:
            data["phases"] = tuple(data["phases"])
        return _build(RunConfig, data, "")
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return config_from_dict(data or {})


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def apply_overrides(config: RunConfig, assignments) -> RunConfig:
    """Apply ``section.key=value`` strings (YAML-typed values)."""
    data = config.to_dict()
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"unknown config section {p!r} in {key!r}")
            node = node[p]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {key!r}")
        node[parts[-1]] = yaml.safe_load(value)
    return config_from_dict(data)


def _reference(n_cells: int, f0: float, phases=PHASES) -> RunConfig:
    return RunConfig(
        chain=ChainSpec(n_cells=n_cells, a=2.0, delta=0.15),
        drive=DriveSpec(f0=f0, omega_l=0.0075, n_on=5, n_pl=10, dt=1.0),
        phases=tuple(phases),
    )


PRESETS: dict[str, RunConfig] = {
    "short-chain": _reference(12, 0.0015),
    "long-chain": _reference(50, 0.0025),
    "short-chain-trivial": _reference(12, 0.0015, ("trivial",)),
    "short-chain-topological": _reference(12, 0.0015, ("topological",)),
    "long-chain-trivial": _reference(50, 0.0025, ("trivial",)),
    "long-chain-topological": _reference(50, 0.0025, ("topological",)),
}


def preset(name: str) -> RunConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


def with_output(config: RunConfig, output_dir) -> RunConfig:
    return replace(config, output_dir=str(output_dir))
