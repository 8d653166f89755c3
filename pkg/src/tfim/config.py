"""Run configuration: a flat key = value text format with a JSON alternative.

Every run is fully determined by (config, seed): wall-clock seeding is
rejected at validation.  Lists are comma-separated in the text format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("correlation", "magnetization-sweep", "switching-verify", "irb-check",
         "percolation-sweep", "identity-suite", "lambda-c")


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


@dataclass
class RunConfig:
    kind: str
    d: int = 1
    n: int = 1
    n_schedule: list = field(default_factory=list)
    beta: float | None = None
    ground_state: bool = False
    bc_space: str = "f"
    bc_time: str = "p"
    lam_grid: list = field(default_factory=list)
    delta: float = 1.0
    n_samples: int = 10000
    n_chains: int = 1
    seed: int | None = None
    point_site: tuple = ()
    point_time: float = 0.0
    dt: float = 0.1
    n_sweeps: int = 4000
    l_max_factor: float = 100.0
    out_prefix: str = "run"

    def validate(self) -> "RunConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.seed is None:
            raise ConfigError("a seed is required (no wall-clock seeding)")
        if not self.lam_grid:
            raise ConfigError("empty coupling grid")
        if any(b >= a for a, b in zip(self.lam_grid[1:], self.lam_grid)):
            raise ConfigError("coupling grid must be strictly increasing")
        if self.d < 1 or self.n < 0:
            raise ConfigError("bad box parameters")
        if self.ground_state and self.beta is not None:
            raise ConfigError("ground-state runs take no beta (time length is 2n)")
        if not self.ground_state and self.beta is None:
            raise ConfigError("finite-temperature runs need beta")
        if self.kind == "lambda-c":
            if not self.ground_state:
                raise ConfigError("the critical-point scan is a ground-state run")
            if len(self.n_schedule) < 2:
                raise ConfigError("the crossing estimate needs at least two sizes")
        if self.n_samples < 2 or self.n_chains < 1:
            raise ConfigError("bad sampling parameters")
        return self


_LIST_KEYS = {"lam_grid", "n_schedule", "point_site"}
_INT_KEYS = {"d", "n", "n_samples", "n_chains", "seed", "n_sweeps"}
_FLOAT_KEYS = {"beta", "delta", "point_time", "dt", "l_max_factor"}
_BOOL_KEYS = {"ground_state"}


def _coerce(key: str, raw):
    if key in _LIST_KEYS:
        if isinstance(raw, str):
            items = [s.strip() for s in raw.split(",") if s.strip()]
        else:
            items = list(raw)
        if key == "n_schedule":
            return [int(v) for v in items]
        if key == "point_site":
            return tuple(int(v) for v in items)
        return [float(v) for v in items]
    if key in _INT_KEYS:
        return None if raw in (None, "none") else int(raw)
    if key in _FLOAT_KEYS:
        return None if raw in (None, "none") else float(raw)
    if key in _BOOL_KEYS:
        return raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes")
    return raw


def parse_config_text(text: str) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key] = raw
    return _build(values)


def parse_config_json(text: str) -> RunConfig:
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad JSON config: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError("JSON config must be an object")
    return _build(values)


_ALIASES = {"lam": "lam_grid", "lambda": "lam_grid", "n_grid": "n_schedule"}


def _build(values: dict) -> RunConfig:
    known = set(RunConfig.__dataclass_fields__)
    cfg = RunConfig(kind=str(values.get("kind", "")))
    for key, raw in values.items():
        if key == "kind":
            continue
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, _coerce(key, raw))
    return cfg.validate()


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        return parse_config_json(text)
    return parse_config_text(text)
