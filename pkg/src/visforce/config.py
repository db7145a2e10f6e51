# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Configuration for training, evaluation and synthetic data.

Configuration precedence (highest to lowest):
1. Code arguments / CLI flags (explicit values passed to TrainConfig)
2. Environment variables (VISFORCE_*, OTEL_*)
3. YAML config file (visforce.yaml or specified path)
4. Built-in defaults
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import yaml

from visforce.errors import ConfigurationError

logger = logging.getLogger(__name__)

MODEL_VARIANTS = ("baseline", "ssam", "scam", "se", "cbam")
POOLING_MODES = ("wap", "gap")
ATTENTION_VARIANTS = ("ssam", "scam")

_DEFAULTS: Dict[str, Any] = {
    "model_variant": "ssam",
    "k": 2,
    "r": 16,
    "pooling": "wap",
    "image_size": 128,
    "backbone_channels": (16, 32, 64, 128, 256),
    "hidden_size": 256,
    "fc_size": 1024,
    "epochs": 120,
    "batch_size": 64,
    "window": 20,
    "base_lr": 1e-4,
    "lr_decay": 0.1,
    "lr_step_epochs": 30,
    "seed": 0,
    "micro_batch": 8,
    "force_scale_newtons": 12.0,
    "deterministic": True,
    "workers": 1,
    "output_dir": "runs",
    "log_level": "INFO",
    "otlp_endpoint": None,
    "service_name": "visforce",
}

# YAML section each field lives under.
_SECTIONS: Dict[str, Tuple[str, ...]] = {
    "model": ("model_variant", "k", "r", "pooling", "image_size", "backbone_channels", "hidden_size", "fc_size"),
    "optim": ("epochs", "batch_size", "window", "base_lr", "lr_decay", "lr_step_epochs", "micro_batch"),
    "data": ("force_scale_newtons",),
    "runtime": ("seed", "deterministic", "workers", "output_dir", "log_level"),
    "telemetry": ("otlp_endpoint", "service_name"),
}


def _parse_bool(raw: str) -> bool:
    return raw.lower() in ("true", "1", "yes")


def _parse_channels(raw: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part.strip())


_ENV_PARSERS: Dict[str, Callable[[str], Any]] = {
    "k": int,
    "r": int,
    "image_size": int,
    "backbone_channels": _parse_channels,
    "hidden_size": int,
    "fc_size": int,
    "epochs": int,
    "batch_size": int,
    "window": int,
    "base_lr": float,
    "lr_decay": float,
    "lr_step_epochs": int,
    "seed": int,
    "micro_batch": int,
    "force_scale_newtons": float,
    "deterministic": _parse_bool,
    "workers": int,
}


@dataclass
class TrainConfig:
    """Everything a training or evaluation run needs.

    Typically built from a YAML file plus environment overrides::

        >>> cfg = TrainConfig.from_file_or_env("visforce.yaml")
        >>> cfg = TrainConfig(model_variant="scam", epochs=5)
    """

    # Model
    model_variant: Optional[str] = None
    k: Optional[int] = None
    r: Optional[int] = None
    pooling: Optional[str] = None
    image_size: Optional[int] = None
    backbone_channels: Optional[Tuple[int, ...]] = None
    hidden_size: Optional[int] = None
    fc_size: Optional[int] = None

    # Optimization
    epochs: Optional[int] = None
    batch_size: Optional[int] = None
    window: Optional[int] = None
    base_lr: Optional[float] = None
    lr_decay: Optional[float] = None
    lr_step_epochs: Optional[int] = None
    # Samples per gradient evaluation; bounds peak tape memory.
    micro_batch: Optional[int] = None

    # Data
    force_scale_newtons: Optional[float] = None

    # Runtime
    seed: Optional[int] = None
    deterministic: Optional[bool] = None
    workers: Optional[int] = None
    output_dir: Optional[str] = None
    log_level: Optional[str] = None

    # Telemetry
    otlp_endpoint: Optional[str] = None
    service_name: Optional[str] = None

    # Values read from a YAML file; they rank below the environment.
    _file_values: Dict[str, Any] = field(default_factory=dict, repr=False)
    _config_file: Optional[str] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        """Fill unset fields from env, then the config file, then defaults."""
        for name, default in _DEFAULTS.items():
            if getattr(self, name) is not None:
                continue
            value = self._from_env(name)
            if value is None:
                value = self._file_values.get(name)
            if value is None:
                value = default
            setattr(self, name, value)
        if isinstance(self.backbone_channels, list):
            self.backbone_channels = tuple(self.backbone_channels)

    def _from_env(self, name: str) -> Any:
        if name == "otlp_endpoint":
            return (
                os.getenv("VISFORCE_OTLP_ENDPOINT")
                or os.getenv("OTEL_EXPORTER_OTLP_TRACES_ENDPOINT")
                or os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT")
            )
        if name == "service_name":
            return os.getenv("VISFORCE_SERVICE_NAME", os.getenv("OTEL_SERVICE_NAME"))
        raw = os.getenv(f"VISFORCE_{name.upper()}")
        if raw is None:
            return None
        parser = _ENV_PARSERS.get(name, str)
        try:
            return parser(raw)
        except ValueError:
            logger.warning("Ignoring unparsable VISFORCE_%s=%r", name.upper(), raw)
            return None

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    @property
    def uses_frame_stack(self) -> bool:
        return self.model_variant in ATTENTION_VARIANTS

    def validate(self) -> TrainConfig:
        """Raise :class:`ConfigurationError` on the first invalid value."""
        if self.model_variant not in MODEL_VARIANTS:
            raise ConfigurationError(f"model_variant must be one of {MODEL_VARIANTS}, got {self.model_variant!r}")
        if self.pooling not in POOLING_MODES:
            raise ConfigurationError(f"pooling must be one of {POOLING_MODES}, got {self.pooling!r}")
        for name in ("k", "r", "image_size", "hidden_size", "fc_size", "batch_size", "window", "lr_step_epochs",
                     "micro_batch", "workers"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be non-negative, got {self.epochs}")
        if self.base_lr <= 0:
            raise ConfigurationError(f"base_lr must be > 0, got {self.base_lr}")
        if not 0 < self.lr_decay <= 1:
            raise ConfigurationError(f"lr_decay must lie in (0, 1], got {self.lr_decay}")
        if self.force_scale_newtons <= 0:
            raise ConfigurationError(f"force_scale_newtons must be > 0, got {self.force_scale_newtons}")
        if not self.backbone_channels or any(c < 1 for c in self.backbone_channels):
            raise ConfigurationError(f"backbone_channels must be positive, got {self.backbone_channels}")
        downsample = 2 ** (len(self.backbone_channels) - 1)
        if self.image_size % downsample:
            raise ConfigurationError(f"image_size {self.image_size} is not divisible by {downsample}")
        channels = self.backbone_channels[-1]
        gated = self.k * channels if self.uses_frame_stack else channels
        if self.model_variant != "baseline" and gated % self.r:
            raise ConfigurationError(f"r={self.r} does not divide the {gated} gated channels")
        return self

    # ------------------------------------------------------------------
    # YAML loading
    # ------------------------------------------------------------------

    @classmethod
    def from_yaml(cls, path: Optional[str] = None) -> TrainConfig:
        """Load configuration from a YAML file.

        Supports environment variable interpolation using ``${VAR_NAME}``
        and ``${VAR_NAME:-default}``.

        Raises:
            FileNotFoundError: If config file doesn't exist.
            ConfigurationError: If YAML is malformed.
        """
        data = load_yaml_document(path)
        return cls._from_dict(data, config_file=str(path))

    @classmethod
    def from_file_or_env(cls, path: Optional[str] = None) -> TrainConfig:
        """Load config from file if exists, otherwise use environment variables.

        Search order:
        1. Explicit *path* argument
        2. ``VISFORCE_CONFIG_FILE`` env var
        3. ``./visforce.yaml``
        4. ``./config/visforce.yaml``
        5. Falls back to env-only config
        """
        candidate = find_config_file(path)
        if candidate is not None:
            logger.info("Loading config from: %s", candidate)
            return cls.from_yaml(str(candidate))
        logger.debug("No config file found, using environment variables only")
        return cls()

    @classmethod
    def _from_dict(cls, data: Dict[str, Any], config_file: Optional[str] = None) -> TrainConfig:
        """Create config from a sectioned dictionary (parsed YAML)."""
        known = {f.name for f in fields(cls)}
        flat: Dict[str, Any] = {}
        for section, names in _SECTIONS.items():
            block = data.get(section) or {}
            if not isinstance(block, dict):
                raise ConfigurationError(f"config section {section!r} must be a mapping")
            for key, value in block.items():
                if key not in names or key not in known:
                    logger.warning("Ignoring unknown config key %s.%s", section, key)
                    continue
                flat[key] = value
        return cls(_file_values=flat, _config_file=config_file)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for section, names in _SECTIONS.items():
            out[section] = {
                name: list(getattr(self, name)) if name == "backbone_channels" else getattr(self, name)
                for name in names
            }
        return out

    def overridden(self, **values: Any) -> TrainConfig:
        """Copy with explicit values replacing the named fields (``None`` is ignored)."""
        current = {name: getattr(self, name) for name in _DEFAULTS}
        current.update({k: v for k, v in values.items() if v is not None})
        return TrainConfig(**current, _config_file=self._config_file)


def find_config_file(path: Optional[str] = None) -> Optional[Path]:
    if path:
        explicit = Path(path)
        if not explicit.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        return explicit
    search_paths: List[Path] = []
    env_path = os.getenv("VISFORCE_CONFIG_FILE")
    if env_path:
        search_paths.append(Path(env_path))
    search_paths.extend(
        [
            Path("visforce.yaml"),
            Path("visforce.yml"),
            Path("config/visforce.yaml"),
            Path("config/visforce.yml"),
        ]
    )
    for candidate in search_paths:
        if candidate.exists():
            return candidate
    return None


def load_yaml_document(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        raise FileNotFoundError("No config file path provided")
    resolved = Path(path)
    if not resolved.exists():
        raise FileNotFoundError(f"Config file not found: {resolved}")

    content = _interpolate_env_vars(resolved.read_text(encoding="utf-8"))
    try:
        data = yaml.safe_load(content)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Invalid YAML in {resolved}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{resolved}: top level must be a mapping")
    return data


def _interpolate_env_vars(content: str) -> str:
    """Interpolate ``${VAR_NAME}`` and ``${VAR_NAME:-default}`` in *content*."""
    pattern = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}")

    def _replace(match: re.Match) -> str:  # type: ignore[type-arg]
        value = os.getenv(match.group(1))
        if value is not None:
            return value
        if match.group(2) is not None:
            return match.group(2)
        return match.group(0)

    return pattern.sub(_replace, content)
