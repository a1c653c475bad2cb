"""Declarative experiment configuration with strict validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..channel import DEFAULT_CARRIER_HZ, load_pdp

EXPERIMENT_KINDS = ("ber-sweep", "tap-error", "temporal", "utilization")

RECEIVERS = ("blind", "blind-lambda", "blind-cluster", "mrc-linear", "mrc-fft", "mmse")
TAP_ESTIMATORS = ("variance", "circularity")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field path."""


@dataclass(frozen=True)
class BlindParams:
    """Blind-receiver knobs as they appear in config files."""

    iterations: int = 10
    mu: float = 0.1
    derotate_at: int = 4
    init: str = "variance"
    eta: int = 1
    given_taps: tuple[int, ...] | None = None

    @classmethod
    def from_dict(cls, raw: dict, path: str) -> "BlindParams":
        return _build(cls, raw, path)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one simulation run needs, resolvable from a JSON file."""

    kind: str
    n: int = 1024
    n_r: int = 64
    m: int = 64
    n_u: int = 1
    pdps: tuple[str, ...] = ("ped4",)
    delays: tuple[int, ...] | None = None
    corr_r: float = 0.0
    snr_db: tuple[float, ...] = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)
    snr_offsets_db: tuple[float, ...] | None = None
    trials: int = 200
    receivers: tuple[str, ...] = ("blind", "mrc-fft")
    blind: BlindParams = field(default_factory=BlindParams)
    baseline_pilot_density: float = 104 / 1024
    speeds_kmh: tuple[float, ...] = (5.0, 10.0)
    symbol_times_ms: tuple[float, ...] = (0.0, 5.0, 10.0)
    carrier_hz: float = DEFAULT_CARRIER_HZ
    seed: int = 0

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"kind: unknown experiment {self.kind!r}")
        if self.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if not self.snr_db:
            raise ConfigError("snr_db: grid must be nonempty")
        if self.m not in (4, 16, 64, 256):
            raise ConfigError(f"m: unsupported QAM order {self.m}")
        if not 0 <= self.corr_r < 1:
            raise ConfigError(f"corr_r: must be in [0, 1), got {self.corr_r}")
        if len(self.pdps) != self.n_u:
            raise ConfigError(
                f"pdps: need one profile per user ({self.n_u}), got {len(self.pdps)}"
            )
        if self.snr_offsets_db is not None and len(self.snr_offsets_db) != self.n_u:
            raise ConfigError("snr_offsets_db: need one offset per user")
        if not 0 < self.baseline_pilot_density <= 1:
            raise ConfigError(
                f"baseline_pilot_density: must be in (0, 1], got {self.baseline_pilot_density}"
            )
        names = TAP_ESTIMATORS if self.kind == "tap-error" else RECEIVERS
        for r in self.receivers:
            if r not in names:
                raise ConfigError(f"receivers: unknown entry {r!r}; expected one of {names}")
        if self.kind == "tap-error" and self.n_u > 1 and "variance" in self.receivers:
            raise ConfigError("receivers: the variance estimator is single-user only")
        if self.n_u > 1:
            for r in self.receivers:
                if r in ("mrc-linear", "mrc-fft", "blind-lambda", "blind-cluster"):
                    raise ConfigError(f"receivers: {r!r} is single-user only")
        for p in self.pdps:
            try:
                load_pdp(p)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"pdps: cannot resolve {p!r}: {exc}") from exc
        if self.blind.eta > 1 and self.n_u > 1:
            raise ConfigError("blind.eta: multiple rotational pilots are single-user only")

    @property
    def resolved_delays(self) -> tuple[int, ...]:
        if self.delays is not None:
            return self.delays
        merged: set[int] = set()
        for name in self.pdps:
            merged.update(load_pdp(name).delays)
        return tuple(sorted(merged))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, BlindParams):
                v = {bf.name: _plain(getattr(v, bf.name)) for bf in fields(BlindParams)}
            else:
                v = _plain(v)
            out[f.name] = v
        return out


def _plain(v):
    if isinstance(v, tuple):
        return list(v)
    return v


def _build(cls, raw: dict, path: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(raw).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"{where}{sorted(unknown)[0]}: unknown key")
    kwargs = {}
    for name, value in raw.items():
        where = f"{path}.{name}" if path else name
        if name == "blind":
            kwargs[name] = BlindParams.from_dict(value, where)
            continue
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def config_from_dict(raw: dict, kind: str | None = None) -> ExperimentConfig:
    """Build and validate a config from parsed JSON; ``kind`` supplied by the
    CLI subcommand must agree with any kind present in the file."""
    raw = dict(raw)
    if kind is not None:
        file_kind = raw.setdefault("kind", kind)
        if file_kind != kind:
            raise ConfigError(f"kind: config says {file_kind!r} but command is {kind!r}")
    return _build(ExperimentConfig, raw, "")


def load_config(path: str | Path, kind: str | None = None, **overrides) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(raw, kind)
