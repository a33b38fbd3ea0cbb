# run_config.py
"""
Run configuration: named presets, a flat `key = value` file format, and
command-line overrides (flags > file > preset).

    # comments and blank lines are ignored
    T = 8
    hf_bits = 1,1,0,0,0,0
    backend = density
"""
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Mapping

from errors import ConfigError
from paths import H3PLUS_HAMILTONIAN, RUNS_DIR

logger = logging.getLogger(__name__)

BACKENDS = ("exact", "density", "leakage")
MODES = ("raw", "parity", "hf")
ORDERINGS = ("blocked", "interleaved")
UNHASHED = ("output_dir", "jobs")


@dataclass(frozen=True)
class RunConfig:
    hamiltonian_path: str = H3PLUS_HAMILTONIAN
    total_time: float = 8.0
    s: float = 10.0
    tau: float = 0.1
    epsilon: float = 0.04
    n_circuits: int = 346
    shots_per_circuit: int = 5
    lambda_incoh: float = 0.0
    lambda_coh: float = 0.0
    lambda_leak: float = 0.0
    post_select: str = "hf"
    master_seed: int = 0
    repetitions: int = 1
    output_dir: str = RUNS_DIR
    n_up: int = 1
    n_down: int = 1
    hf_bits: tuple[int, ...] | None = None
    spin_ordering: str | None = None
    backend: str = "exact"
    jobs: int = 1
    infinite_shots: bool = False
    release_diagonals: bool = True
    max_mean_tqg: float = 1100.0
    sweep_s: tuple[float, ...] = (6.0, 8.0, 10.0, 12.0)
    sweep_tau: tuple[float, ...] = (0.05, 0.1, 0.2)
    sweep_circuits: int = 50
    sweep_seeds: int = 20
    sweep_shots: int = 5

    def validate(self) -> "RunConfig":
        if self.shots_per_circuit < 1:
            raise ConfigError(f"shots_per_circuit must be at least 1, got {self.shots_per_circuit}")
        if not 0.0 < self.tau < math.pi / 2:
            raise ConfigError(f"tau must lie in (0, pi/2), got {self.tau}")
        for name in ("total_time", "s", "epsilon"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("lambda_incoh", "lambda_coh", "lambda_leak"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        for name in ("n_circuits", "repetitions", "jobs", "sweep_circuits", "sweep_seeds", "sweep_shots"):
            if getattr(self, name) < 1 and not (name == "jobs" and self.jobs == -1):
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.post_select not in MODES:
            raise ConfigError(f"post_select must be one of {MODES}, got {self.post_select!r}")
        if self.spin_ordering is not None and self.spin_ordering not in ORDERINGS:
            raise ConfigError(f"spin_ordering must be one of {ORDERINGS}, got {self.spin_ordering!r}")
        if self.hf_bits is not None and set(self.hf_bits) - {0, 1}:
            raise ConfigError(f"hf_bits must be 0/1 values, got {self.hf_bits}")
        if self.infinite_shots and self.backend == "leakage":
            raise ConfigError("the leakage backend cannot run with infinite_shots")
        if self.backend == "exact" and self.lambda_leak > 0.0:
            raise ConfigError("lambda_leak > 0 needs the leakage backend")
        return self

    def to_dict(self) -> dict:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    @property
    def run_id(self) -> str:
        """First 12 hex digits of the SHA-256 of the output-relevant settings."""
        snapshot = {k: v for k, v in self.to_dict().items() if k not in UNHASHED}
        return hashlib.sha256(json.dumps(snapshot, sort_keys=True).encode("utf-8")).hexdigest()[:12]


PRESETS: dict[str, RunConfig] = {
    "h3plus-paper": RunConfig(hf_bits=(1, 1, 0, 0, 0, 0), spin_ordering="interleaved"),
    "h3plus-quick": RunConfig(hf_bits=(1, 1, 0, 0, 0, 0), spin_ordering="interleaved", n_circuits=40,
                              sweep_s=(8.0, 10.0), sweep_tau=(0.1, 0.2), sweep_circuits=10, sweep_seeds=4),
}


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_optional(parser):
    def parse(text: str):
        return None if text.lower() in ("", "none") else parser(text)
    return parse


def _parse_tuple(item):
    def parse(text: str):
        return tuple(item(part.strip()) for part in text.split(",") if part.strip())
    return parse


_PARSERS = {
    "hamiltonian_path": str,
    "output_dir": str,
    "post_select": str,
    "backend": str,
    "spin_ordering": _parse_optional(str),
    "hf_bits": _parse_optional(_parse_tuple(int)),
    "sweep_s": _parse_tuple(float),
    "sweep_tau": _parse_tuple(float),
    "infinite_shots": _parse_bool,
    "release_diagonals": _parse_bool,
}
_ALIASES = {"T": "total_time", "mode": "post_select", "seed": "master_seed", "shots": "shots_per_circuit"}


def _parser_for(name: str):
    if name in _PARSERS:
        return _PARSERS[name]
    default = getattr(RunConfig, name)
    return int if isinstance(default, int) and not isinstance(default, bool) else float


def parse_config_text(text: str) -> dict[str, Any]:
    known = {f.name for f in fields(RunConfig)}
    values: dict[str, Any] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line_number)
        key, value = (part.strip() for part in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", line_number)
        if key in values:
            raise ConfigError(f"key {key!r} given twice", line_number)
        try:
            values[key] = _parser_for(key)(value)
        except ValueError as error:
            raise ConfigError(f"bad value for {key!r}: {error}", line_number) from error
    return values


def load_config_file(path: str) -> dict[str, Any]:
    with open(path, encoding="utf-8") as handle:
        values = parse_config_text(handle.read())
    logger.info("Loaded %d setting(s) from %s", len(values), path)
    return values


def resolve_config(preset: str | None = "h3plus-paper", path: str | None = None,
                   overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Preset, then file, then non-None overrides; validated."""
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    config = PRESETS[preset] if preset is not None else RunConfig()
    if path is not None:
        config = replace(config, **load_config_file(path))
    if overrides:
        config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    return config.validate()
