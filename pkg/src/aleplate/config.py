"""Plain-text ``key = value`` run configuration."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .initdata import FAMILIES
from .pressure import PressureLaw


class ConfigError(ValueError):
    """Parse or validation failure; the message carries the line number."""


@dataclass(frozen=True)
class Config:
    n1: int = 32
    n2: int = 32
    n3: int = 33
    T: float = 1.0
    safety: float = 0.5
    dt: float = 0.0            # 0 picks the CFL step of the initial state
    gamma: float = 1.4
    m0: float = 0.5
    M0: float = 2.0
    rbar: float = 1.0
    family: str = "small"
    amplitude: float = 1e-3
    init_file: str = ""        # snapshot to start from instead of a family
    kinematic_tol: float = 1e-10
    a_tol: float = 0.1
    snapshot_every: int = 0    # steps; 0 writes only the first and last state
    monitor_every: int = 1
    norms_every: int = 4
    ledgers: bool = True
    ledger_every: int = 4
    ledger_m: int = 0
    window: int = 9
    seed: int = 0

    @property
    def law(self) -> PressureLaw:
        return PressureLaw(self.gamma, self.rbar, self.m0, self.M0)


_TYPES = {f.name: f.type for f in fields(Config)}
_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _convert(key: str, raw: str, lineno: int):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            return _BOOL[raw.lower()]
        return raw
    except (ValueError, KeyError):
        raise ConfigError(f"line {lineno}: cannot read {key} = {raw!r} as {kind}") from None


def parse_text(text: str) -> Config:
    values: dict[str, object] = {}
    where: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {where[key]})")
        values[key] = _convert(key, raw, lineno)
        where[key] = lineno
    cfg = replace(Config(), **values)
    validate(cfg, where)
    return cfg


def parse_config(path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text)


def validate(cfg: Config, where: dict[str, int] | None = None) -> None:
    where = where or {}

    def fail(key, msg):
        loc = f"line {where[key]}: " if key in where else ""
        raise ConfigError(f"{loc}{msg}")

    if cfg.m0 <= 0:
        fail("m0", f"m0 = {cfg.m0} violates the positivity requirement m0 > 0 on the "
                   "density lower bound")
    if cfg.M0 <= cfg.m0:
        fail("M0", f"M0 = {cfg.M0} must exceed m0 = {cfg.m0}")
    if cfg.gamma <= 1:
        fail("gamma", f"gamma = {cfg.gamma} must exceed 1")
    if cfg.rbar <= 0:
        fail("rbar", "rbar must be positive")
    if cfg.T <= 0:
        fail("T", "T must be positive")
    if not 0 < cfg.safety <= 1:
        fail("safety", "safety must lie in (0, 1]")
    if cfg.dt < 0:
        fail("dt", "dt must be nonnegative")
    for key in ("n1", "n2"):
        if getattr(cfg, key) < 4 or getattr(cfg, key) % 2:
            fail(key, f"{key} must be even and at least 4")
    if cfg.n3 < 13:
        fail("n3", "n3 must be at least 13")
    if cfg.family not in FAMILIES:
        fail("family", f"unknown family {cfg.family!r}; choose from {sorted(FAMILIES)}")
    if cfg.amplitude < 0:
        fail("amplitude", "amplitude must be nonnegative")
    if cfg.kinematic_tol <= 0 or cfg.a_tol <= 0:
        fail("kinematic_tol" if cfg.kinematic_tol <= 0 else "a_tol", "tolerances must be positive")
    for key in ("snapshot_every", "monitor_every", "norms_every", "ledger_every"):
        if getattr(cfg, key) < 0:
            fail(key, f"{key} must be nonnegative")
    if not 0 <= cfg.ledger_m <= 3:
        fail("ledger_m", "ledger_m must lie in 0..3")
    if cfg.window < 9 or cfg.window % 2 == 0:
        fail("window", "window must be odd and at least 9")


def format_config(cfg: Config) -> str:
    """Round-trippable text form (every key, fixed order)."""
    lines = []
    for f in fields(Config):
        val = getattr(cfg, f.name)
        if isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"
