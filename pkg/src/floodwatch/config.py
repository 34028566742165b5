"""Run configuration: flat key=value files, strict validation, presets.

Unknown keys are fatal (with a closest-match suggestion) so hyperparameter
typos never silently fall back to defaults.
"""

from __future__ import annotations

import difflib
import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

PRESETS = ("run1", "run2", "run3", "run4", "run5", "custom")
MEMBER_NAMES = ("bow_nb", "emb_lr", "images")


class ConfigError(ValueError):
    """A configuration file or value is invalid."""


@dataclass
class RunConfig:
    preset: str = "run1"
    train: Path | None = None
    dev: Path | None = None
    test: Path | None = None
    dataset_format: str | None = None
    stopwords: Path | None = None
    text_features: Path | None = None
    image_features: tuple[Path, ...] = ()
    members: tuple[str, ...] = ()  # custom preset only
    output_dir: Path = Path("runs")
    seed: int = 0
    dev_fraction: float | None = None
    cv_folds: int | None = None
    smote: str = "off"  # off | equalize | factor
    smote_factor: float = 3.0
    smote_k: int = 5
    min_count: int = 1
    nb_alpha: float = 1.0
    learning_rate: float = 0.1
    lr_epochs: int = 500
    l2: float = 1e-4
    svm_lambda: float = 1e-3
    svm_epochs: int = 200
    hash_dim: int = 256
    standardize: bool = False
    macro: bool = False

    def config_hash(self) -> str:
        """Stable digest of every setting; used to stamp output files."""
        parts = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            parts.append(f"{f.name}={value}")
        return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()[:16]


_PATH_KEYS = {"train", "dev", "test", "stopwords", "text_features", "output_dir"}
_INT_KEYS = {"seed", "smote_k", "min_count", "lr_epochs", "svm_epochs", "hash_dim", "cv_folds"}
_FLOAT_KEYS = {"dev_fraction", "smote_factor", "nb_alpha", "learning_rate", "l2", "svm_lambda"}
_BOOL_KEYS = {"standardize", "macro"}
KNOWN_KEYS = (
    _PATH_KEYS
    | _INT_KEYS
    | _FLOAT_KEYS
    | _BOOL_KEYS
    | {"preset", "dataset_format", "image_features", "smote", "members"}
)


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat key=value file; '#' lines are comments, keys are unique."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    entries: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key=value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value.strip()
    return entries


def _convert(key: str, value: str):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {value!r}") from None
    if key in _BOOL_KEYS:
        lowered = value.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"key {key!r}: expected true/false, got {value!r}")
    if key in _PATH_KEYS:
        return Path(value)
    if key == "image_features":
        return tuple(Path(p.strip()) for p in value.split(",") if p.strip())
    if key == "members":
        return tuple(m.strip() for m in value.split(",") if m.strip())
    return value


def validate_config(entries: dict[str, str], base_dir: Path | None = None) -> RunConfig:
    """Normalize raw entries into a RunConfig, applying defaults and checks.

    Relative paths are resolved against ``base_dir`` (normally the config
    file's directory) so run directories stay relocatable.
    """
    cfg = RunConfig()
    for key, raw in entries.items():
        if key not in KNOWN_KEYS:
            hint = ""
            close = difflib.get_close_matches(key, sorted(KNOWN_KEYS), n=1)
            if close:
                hint = f" (did you mean {close[0]!r}?)"
            raise ConfigError(f"unknown key {key!r}{hint}")
        cfg = replace(cfg, **{key: _convert(key, raw)})

    if base_dir is not None:
        for key in _PATH_KEYS:
            value = getattr(cfg, key)
            if value is not None and not value.is_absolute():
                cfg = replace(cfg, **{key: base_dir / value})
        if cfg.image_features:
            cfg = replace(
                cfg,
                image_features=tuple(
                    p if p.is_absolute() else base_dir / p for p in cfg.image_features
                ),
            )

    if cfg.preset not in PRESETS:
        raise ConfigError(f"unknown preset {cfg.preset!r}; expected one of {', '.join(PRESETS)}")
    if cfg.train is None:
        raise ConfigError("key 'train' is required")
    for key in ("train", "dev", "test", "stopwords", "text_features"):
        value = getattr(cfg, key)
        if value is not None and not Path(value).exists():
            raise ConfigError(f"key {key!r}: file not found: {value}")
    for p in cfg.image_features:
        if not Path(p).exists():
            raise ConfigError(f"key 'image_features': file not found: {p}")

    if cfg.preset in ("run4", "run5") and not cfg.image_features:
        raise ConfigError(f"preset {cfg.preset!r} requires 'image_features'")
    if cfg.preset == "custom":
        if not cfg.members:
            raise ConfigError("preset 'custom' requires 'members' (comma-separated)")
        unknown = [m for m in cfg.members if m not in MEMBER_NAMES]
        if unknown:
            raise ConfigError(
                f"unknown member(s) {', '.join(map(repr, unknown))}; expected {', '.join(MEMBER_NAMES)}"
            )
        if "images" in cfg.members and not cfg.image_features:
            raise ConfigError("member 'images' requires 'image_features'")
    elif cfg.members:
        raise ConfigError("key 'members' is only valid with preset=custom")

    if cfg.smote not in ("off", "equalize", "factor"):
        raise ConfigError(f"key 'smote': expected off/equalize/factor, got {cfg.smote!r}")
    if cfg.dataset_format is not None and cfg.dataset_format not in ("csv", "jsonlines"):
        raise ConfigError(
            f"key 'dataset_format': expected csv or jsonlines, got {cfg.dataset_format!r}"
        )
    if cfg.dev_fraction is not None and not 0.0 < cfg.dev_fraction < 1.0:
        raise ConfigError(f"key 'dev_fraction': must be in (0, 1), got {cfg.dev_fraction}")
    if cfg.cv_folds is not None and cfg.cv_folds < 2:
        raise ConfigError(f"key 'cv_folds': must be >= 2, got {cfg.cv_folds}")
    exclusive = [k for k in ("dev", "dev_fraction", "cv_folds") if getattr(cfg, k) is not None]
    if len(exclusive) > 1:
        raise ConfigError(f"keys {', '.join(map(repr, exclusive))} are mutually exclusive")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return validate_config(parse_config_file(path), base_dir=path.parent)
