"""Run configuration: a flat key=value file with strict validation.

Every key has a CLI flag of the same name (dashes for underscores), unknown
keys are rejected, and all ranges are checked at load time so a bad run
fails before any data is touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .neuron import SURROGATE_KINDS
from .topology import CORRELATION_MODES

TOPOLOGY_MODES = ("correlation", "random")
WEIGHT_MODES = ("spike-aware", "kaiming")
_BOOL_WORDS = {"true": True, "on": True, "1": True, "yes": True,
               "false": False, "off": False, "0": False, "no": False}


@dataclass
class RunConfig:
    """Everything a training run needs, validated."""

    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    out_dir: str = "runs/out"
    beta: int = 2
    hidden: str = ""                  # comma-separated widths; overrides beta
    hidden_layers: int = 1
    time_steps: int = 4
    sparsity: float = 0.95
    prune_rate: float = 0.35
    epochs: int = 10
    lr: float = 0.1
    batch_size: int = 100
    threshold: float = 0.2
    decay: float = 0.5
    seed_encode: int = 1
    seed_init: int = 2
    seed_evolve: int = 3
    correlation: str = "pearson-phi"
    surrogate: str = "rectangular"
    surrogate_width: float = 0.0      # 0 means the default 0.5 * threshold
    topology_init: str = "correlation"
    weight_init: str = "spike-aware"
    evolve: bool = True
    removal_mode: str = "inverse"
    phi_samples: int = 2048
    train_limit: int = 0              # 0 means the whole file
    test_limit: int = 0
    figures: bool = True
    pj_per_sop: float = 1.5

    def validate(self) -> None:
        if not self.train_images or not self.train_labels:
            raise ConfigError("train_images and train_labels are required")
        if not self.test_images or not self.test_labels:
            raise ConfigError("test_images and test_labels are required")
        if self.beta < 1:
            raise ConfigError(f"beta must be >= 1, got {self.beta}")
        if self.hidden_layers < 1:
            raise ConfigError(f"hidden_layers must be >= 1, got {self.hidden_layers}")
        if self.hidden:
            widths = self.hidden_widths()
            if any(w < 1 for w in widths):
                raise ConfigError(f"hidden widths must be >= 1, got {self.hidden}")
        if self.time_steps < 1:
            raise ConfigError(f"time_steps must be >= 1, got {self.time_steps}")
        if not 0.0 <= self.sparsity < 1.0:
            raise ConfigError(f"sparsity must lie in [0, 1), got {self.sparsity}")
        if not 0.0 < self.prune_rate < 1.0:
            raise ConfigError(f"prune_rate must lie in (0, 1), got {self.prune_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr < 0:
            raise ConfigError(f"lr must be non-negative, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.threshold <= 0:
            raise ConfigError(f"threshold must be positive, got {self.threshold}")
        if not 0.0 <= self.decay <= 1.0:
            raise ConfigError(f"decay must lie in [0, 1], got {self.decay}")
        if self.correlation not in CORRELATION_MODES:
            raise ConfigError(f"correlation must be one of {CORRELATION_MODES}")
        if self.surrogate not in SURROGATE_KINDS:
            raise ConfigError(f"surrogate must be one of {SURROGATE_KINDS}")
        if self.surrogate_width < 0:
            raise ConfigError(
                f"surrogate_width must be non-negative, got {self.surrogate_width}")
        if self.topology_init not in TOPOLOGY_MODES:
            raise ConfigError(f"topology_init must be one of {TOPOLOGY_MODES}")
        if self.weight_init not in WEIGHT_MODES:
            raise ConfigError(f"weight_init must be one of {WEIGHT_MODES}")
        if self.removal_mode not in ("inverse", "reciprocal"):
            raise ConfigError("removal_mode must be 'inverse' or 'reciprocal'")
        if self.phi_samples < 1:
            raise ConfigError(f"phi_samples must be >= 1, got {self.phi_samples}")
        if self.train_limit < 0 or self.test_limit < 0:
            raise ConfigError("sample limits must be non-negative")
        if self.pj_per_sop < 0:
            raise ConfigError(f"pj_per_sop must be non-negative, got {self.pj_per_sop}")

    def hidden_widths(self) -> list:
        if not self.hidden:
            return []
        try:
            return [int(w) for w in self.hidden.split(",") if w.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad hidden width list {self.hidden!r}") from exc

    def effective_surrogate_width(self) -> float:
        return self.surrogate_width if self.surrogate_width > 0 else 0.5 * self.threshold

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    target = RunConfig.__dataclass_fields__[name].default
    try:
        if isinstance(target, bool):
            word = raw.strip().lower()
            if word not in _BOOL_WORDS:
                raise ValueError(raw)
            return _BOOL_WORDS[word]
        if isinstance(target, int):
            return int(raw)
        if isinstance(target, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse "key = value" lines ('#' starts a comment) over a base config."""
    cfg = base if base is not None else RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in RunConfig.__dataclass_fields__:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        setattr(cfg, key, _coerce(key, raw))
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text())
