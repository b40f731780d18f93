"""Run configuration files and run manifests.

Configurations are flat key-value text with one section per concern; every
key has a default, so an empty file reproduces the reference experiment.
Parsing then serializing yields a stable canonical form, which is what the
manifest written next to each command's outputs contains.
"""

import configparser
import io
from dataclasses import asdict, dataclass, field, fields, replace

from .predictor import TrainConfig
from .simulation import CONTROLLERS, SimConfig


class ConfigError(ValueError):
    """Raised with the offending section/key on malformed configuration."""


@dataclass(frozen=True)
class SweepConfig:
    totals: tuple[float, ...] = (200.0, 400.0, 600.0, 800.0, 1000.0)
    trials: int = 30
    controllers: tuple[str, ...] = ("elmopp", "naive-urgency", "fixed-cycle")


@dataclass
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)


_BOOL = {"true": True, "false": False}


def _parse_value(section: str, key: str, raw: str, default):
    try:
        if isinstance(default, bool):
            if raw.lower() not in _BOOL:
                raise ValueError("expected true or false")
            return _BOOL[raw.lower()]
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if all(isinstance(d, str) for d in default) and default:
                return tuple(parts)
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def _apply_section(section: str, items, obj):
    known = {f.name: getattr(obj, f.name) for f in fields(obj)}
    updates = {}
    for key, raw in items:
        if key not in known:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        updates[key] = _parse_value(section, key, raw, known[key])
    return replace(obj, **updates) if updates else obj


def parse_run_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    rc = RunConfig()
    for section in parser.sections():
        items = parser.items(section)
        if section == "simulation":
            rc.sim = _apply_section(section, items, rc.sim)
        elif section == "training":
            rc.train = _apply_section(section, items, rc.train)
        elif section == "sweep":
            rc.sweep = _apply_section(section, items, rc.sweep)
        else:
            raise ConfigError(f"unknown section [{section}]")
    if rc.sim.controller not in CONTROLLERS:
        raise ConfigError(f"[simulation] controller: unknown kind {rc.sim.controller!r}")
    for kind in rc.sweep.controllers:
        if kind not in CONTROLLERS:
            raise ConfigError(f"[sweep] controllers: unknown kind {kind!r}")
    return rc


def load_run_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_run_config(fh.read())


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_run_config(rc: RunConfig) -> str:
    out = io.StringIO()
    for section, obj in (("simulation", rc.sim), ("training", rc.train), ("sweep", rc.sweep)):
        out.write(f"[{section}]\n")
        for key, value in asdict(obj).items():
            out.write(f"{key} = {_format_value(value)}\n")
        out.write("\n")
    return out.getvalue()


def write_manifest(out_dir, command: str, seed: int, rc: RunConfig,
                   overrides: dict | None = None) -> None:
    """Record what produced the outputs in this directory."""
    lines = [f"command = {command}", f"seed = {seed}"]
    for key, value in (overrides or {}).items():
        lines.append(f"override {key} = {value}")
    body = "\n".join(lines) + "\n\n" + serialize_run_config(rc)
    with open(f"{out_dir}/manifest.txt", "w") as fh:
        fh.write(body)
