"""``key = value`` run configuration.

Recognised keys (defaults in brackets)::

    epochs [10]               warmup_epochs [2]        batch_size [8]
    learning_rate [0.001]     weight_decay [0.0001]    seed [0]
    delta [0.01]              tau [0.01]               lambda [1.0]
    prior_refresh_every [1]   fixed_priors [none]      method [crisp]
    hidden [0]                # 0 = linear model, h > 0 = one hidden layer

Blank lines and ``#`` comments are ignored.  ``fixed_priors`` is a
comma-separated list or ``none``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .prior import EstimatorConfig
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    epochs: int = 10
    warmup_epochs: int = 2
    batch_size: int = 8
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    seed: int = 0
    delta: float = 0.01
    tau: float = 0.01
    lam: float = 1.0
    prior_refresh_every: int = 1
    fixed_priors: tuple | None = None
    method: str = "crisp"
    hidden: int = 0

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, warmup_epochs=self.warmup_epochs, batch_size=self.batch_size,
            learning_rate=self.learning_rate, weight_decay=self.weight_decay, seed=self.seed,
            estimator=EstimatorConfig(self.delta, self.tau), lam=self.lam,
            prior_refresh_every=self.prior_refresh_every, fixed_priors=self.fixed_priors,
            method=self.method,
        )

    def to_dict(self) -> dict:
        d = {_key(f.name): getattr(self, f.name) for f in fields(self)}
        d["fixed_priors"] = None if self.fixed_priors is None else list(self.fixed_priors)
        return d


def _key(name: str) -> str:
    return "lambda" if name == "lam" else name


_FIELDS = {_key(f.name): f for f in fields(RunConfig)}


def parse_priors(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"malformed prior list {text!r}") from None


def _convert(key: str, raw: str):
    f = _FIELDS[key]
    raw = raw.strip()
    try:
        if key == "fixed_priors":
            return None if raw.lower() in ("", "none") else parse_priors(raw)
        if key == "method":
            return raw
        if f.type == "int":
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def apply_overrides(cfg: RunConfig, pairs: dict) -> RunConfig:
    updates = {}
    for key, raw in pairs.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        updates[_FIELDS[key].name] = _convert(key, raw) if isinstance(raw, str) else raw
    out = replace(cfg, **updates)
    try:
        out.train_config()
        if out.hidden < 0:
            raise ValueError("hidden must be >= 0")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return out


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        pairs[key.strip()] = value
    return apply_overrides(base or RunConfig(), pairs)


def format_config(cfg: RunConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if key == "fixed_priors":
            value = "none" if value is None else ",".join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
