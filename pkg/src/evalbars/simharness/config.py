"""Simulation configuration and its flat ``key = value`` file format.

Example::

    setting = iid
    profile = fast
    theta = beta(1, 1)
    sizes = 3, 10, 30, 100
    levels = grid(0.8, 0.995, 100), 0.95
    methods = clt, wilson, bayes
    master_seed = 7
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import os
import re

import numpy as np
from scipy.special import expit, logit

from evalbars.errors import ConfigurationError
from evalbars.simharness.priors import SETTING_PARAMETERS, Prior, default_priors

SETTINGS = tuple(SETTING_PARAMETERS)
PROFILES = {"fast": (25, 50), "full": (100, 200)}


def logit_levels(lo: float = 0.8, hi: float = 0.995, n: int = 100) -> tuple[float, ...]:
    """``n`` levels equally spaced on the logit scale, endpoints included exactly."""
    if not 0.0 < lo < hi < 1.0 or n < 2:
        raise ConfigurationError("level grid needs 0 < lo < hi < 1 and n >= 2")
    grid = expit(np.linspace(logit(lo), logit(hi), n))
    grid[0], grid[-1] = lo, hi
    return tuple(float(x) for x in grid)


DEFAULT_LEVELS = logit_levels()


@dataclass(frozen=True)
class SimConfig:
    setting: str
    priors: dict[str, Prior] = field(default_factory=dict)
    n_param_draws: int = 100
    n_datasets_per_draw: int = 200
    sizes: tuple[int, ...] = (3, 10, 30, 100)
    levels: tuple[float, ...] = DEFAULT_LEVELS
    methods: tuple[str, ...] = ()
    master_seed: int = 0
    bootstrap_k: int = 10_000
    is_k: int = 10_000
    posterior_k: int = 2_000
    cluster_size: int = 5
    clamp: bool = False
    resample: bool = True
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.setting not in SETTINGS:
            raise ConfigurationError(f"unknown setting {self.setting!r}; expected one of {SETTINGS}")
        priors = default_priors(self.setting)
        for name, prior in dict(self.priors).items():
            if name not in priors:
                raise ConfigurationError(f"setting {self.setting!r} has no parameter {name!r}")
            priors[name] = prior if isinstance(prior, Prior) else Prior.parse(str(prior))
        object.__setattr__(self, "priors", priors)
        levels = tuple(float(x) for x in self.levels)
        if not levels or any(not 0.0 < x < 1.0 for x in levels):
            raise ConfigurationError("levels must lie strictly inside (0, 1)")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigurationError("levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "methods", tuple(self.methods))
        for name in ("n_param_draws", "n_datasets_per_draw", "cluster_size"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1")
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise ConfigurationError("sizes must be positive")
        if self.threads is not None and self.threads < 1:
            raise ConfigurationError("threads must be at least 1")

    @classmethod
    def profile(cls, name: str, setting: str, **overrides) -> "SimConfig":
        """``fast`` (25 draws x 50 datasets) or ``full`` (100 x 200)."""
        if name not in PROFILES:
            raise ConfigurationError(f"unknown profile {name!r}; expected fast or full")
        draws, datasets = PROFILES[name]
        overrides.setdefault("n_param_draws", draws)
        overrides.setdefault("n_datasets_per_draw", datasets)
        return cls(setting, **overrides)

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, master_seed=seed)

    def worker_count(self) -> int:
        """Threads to use: explicit setting, else ``UQ_THREADS``, else 1."""
        if self.threads is not None:
            return self.threads
        env = os.environ.get("UQ_THREADS")
        if env:
            try:
                value = int(env)
            except ValueError as exc:
                raise ConfigurationError(f"UQ_THREADS must be an integer, got {env!r}") from exc
            if value < 1:
                raise ConfigurationError("UQ_THREADS must be at least 1")
            return value
        return 1

    def to_dict(self) -> dict:
        """Result-relevant fields (thread count is excluded: it never changes results)."""
        return {
            "setting": self.setting,
            "priors": {k: str(v) for k, v in self.priors.items()},
            "n_param_draws": self.n_param_draws,
            "n_datasets_per_draw": self.n_datasets_per_draw,
            "sizes": list(self.sizes),
            "levels": list(self.levels),
            "methods": list(self.methods),
            "master_seed": self.master_seed,
            "bootstrap_k": self.bootstrap_k,
            "is_k": self.is_k,
            "posterior_k": self.posterior_k,
            "cluster_size": self.cluster_size,
            "clamp": self.clamp,
            "resample": self.resample,
        }


_TOKEN = re.compile(r"grid\([^)]*\)|[^,\s]+")
_INT_KEYS = {"n_param_draws", "n_datasets_per_draw", "master_seed", "bootstrap_k", "is_k", "posterior_k", "cluster_size", "threads"}
_BOOL_KEYS = {"clamp", "resample"}


def parse_levels(text: str) -> tuple[float, ...]:
    """Comma-separated numbers and ``grid(lo, hi, n)`` terms, merged and sorted."""
    values: set[float] = set()
    for token in _TOKEN.findall(text):
        if token.startswith("grid("):
            parts = token[5:-1].split(",")
            if len(parts) != 3:
                raise ConfigurationError(f"grid needs (lo, hi, n), got {token!r}")
            values.update(logit_levels(float(parts[0]), float(parts[1]), int(parts[2])))
        elif token == "default":
            values.update(DEFAULT_LEVELS)
        else:
            try:
                values.add(float(token))
            except ValueError as exc:
                raise ConfigurationError(f"bad level {token!r}") from exc
    return tuple(sorted(values))


def _parse_bool(key: str, value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigurationError(f"{key} must be true or false, got {value!r}")


def parse_config_text(text: str, source: str = "<config>") -> SimConfig:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)

    if "setting" not in entries:
        raise ConfigurationError(f"{source}: missing required key 'setting'")
    setting = entries.pop("setting")[0]
    if setting not in SETTINGS:
        raise ConfigurationError(f"{source}: unknown setting {setting!r}")
    kwargs: dict = {}
    priors: dict[str, Prior] = {}
    profile = None
    for key, (value, lineno) in entries.items():
        try:
            if key == "profile":
                profile = value
            elif key in SETTING_PARAMETERS[setting]:
                priors[key] = Prior.parse(value)
            elif key == "levels":
                kwargs["levels"] = parse_levels(value)
            elif key == "sizes":
                kwargs["sizes"] = tuple(int(v) for v in _TOKEN.findall(value))
            elif key == "methods":
                kwargs["methods"] = tuple(_TOKEN.findall(value))
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _BOOL_KEYS:
                kwargs[key] = _parse_bool(key, value)
            else:
                raise ConfigurationError(f"unknown key {key!r}")
        except ConfigurationError as exc:
            raise ConfigurationError(f"{source}:{lineno}: {exc}") from None
        except ValueError as exc:
            raise ConfigurationError(f"{source}:{lineno}: bad value for {key!r}: {value!r}") from exc
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigurationError(f"{source}: unknown profile {profile!r}")
        draws, datasets = PROFILES[profile]
        kwargs.setdefault("n_param_draws", draws)
        kwargs.setdefault("n_datasets_per_draw", datasets)
    return SimConfig(setting, priors=priors, **kwargs)


def load_config(path: str) -> SimConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config_text(text, source=str(path))


def format_config(config: SimConfig) -> str:
    """Inverse of :func:`parse_config_text` for the result-relevant fields."""
    d = config.to_dict()
    lines = [f"setting = {config.setting}"]
    lines += [f"{name} = {prior}" for name, prior in d.pop("priors").items()]
    d.pop("setting")
    for key, value in d.items():
        if isinstance(value, list):
            if key == "methods" and not value:
                continue
            value = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
