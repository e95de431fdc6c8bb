"""Run configuration: INI-style documents, validation, and scenario presets.

A configuration document has up to four sections::

    [grid]      nx, ny, Lx, Ly
    [physics]   scenario, n0, c0, psi0, phi, kappa, gamma, formulation, flow
    [time]      T_end, dt_max, cfl, solver_tol
    [output]    frames, encoding, gronwall_tol, figures

Expressions are strings over (x, y) (see :mod:`cesim.expressions`).  A
``scenario`` key loads a preset first; every other key in the document then
overrides the preset.  Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, fields, replace

from cesim.errors import ConfigError
from cesim.expressions import ExpressionError, parse_expression

FORMULATIONS = ("direct", "transformed_n", "transformed_c")
FLOW_MODES = ("euler", "frozen")


@dataclass(frozen=True)
class SimConfig:
    nx: int = 64
    ny: int = 64
    Lx: float = 1.0
    Ly: float = 1.0
    T_end: float = 1.0
    dt_max: float = 0.01
    cfl: float = 0.9
    solver_tol: float = 1e-10
    n0: str = "1"
    c0: str = "0"
    psi0: str = "0"
    phi: str = "y"
    kappa: str = "0"
    gamma: str = "0"
    formulation: str = "direct"
    flow: str = "euler"
    frames: int = 20
    encoding: str = "ascii"
    gronwall_tol: float = 1e-3
    figures: bool = True
    scenario: str = ""

    def __post_init__(self):
        validate(self)

    def replace(self, **kw) -> SimConfig:
        return replace(self, **kw)

    def to_text(self) -> str:
        """Render as a config document that parses back to an equal config."""
        d = asdict(self)
        lines = []
        for section, keys in SECTIONS.items():
            lines.append(f"[{section}]")
            for k in keys:
                v = d[k]
                if isinstance(v, bool):
                    v = "true" if v else "false"
                elif isinstance(v, float):
                    v = repr(v)
                lines.append(f"{k} = {v}")
            lines.append("")
        return "\n".join(lines)


SECTIONS = {
    "grid": ("nx", "ny", "Lx", "Ly"),
    "physics": ("scenario", "n0", "c0", "psi0", "phi", "kappa", "gamma", "formulation", "flow"),
    "time": ("T_end", "dt_max", "cfl", "solver_tol"),
    "output": ("frames", "encoding", "gronwall_tol", "figures"),
}
_TYPES = {f.name: f.type for f in fields(SimConfig)}


def validate(cfg: SimConfig) -> None:
    def bad(name, msg):
        raise ConfigError(f"invalid {name}: {msg}", field=name)

    if cfg.nx < 4 or cfg.ny < 4:
        bad("nx" if cfg.nx < 4 else "ny", "grid needs at least 4 cells per axis")
    if not (cfg.Lx > 0):
        bad("Lx", "must be positive")
    if not (cfg.Ly > 0):
        bad("Ly", "must be positive")
    if not (cfg.T_end > 0):
        bad("T_end", "must be positive")
    if not (cfg.dt_max > 0):
        bad("dt_max", "must be positive")
    if not (0 < cfg.cfl < 1):
        bad("cfl", f"must lie in (0, 1), got {cfg.cfl}")
    if not (0 < cfg.solver_tol <= 1e-4):
        bad("solver_tol", f"must lie in (0, 1e-4], got {cfg.solver_tol}")
    if not (cfg.gronwall_tol > 0):
        bad("gronwall_tol", "must be positive")
    if cfg.frames < 1:
        bad("frames", "must be at least 1")
    if cfg.formulation not in FORMULATIONS:
        bad("formulation", f"must be one of {FORMULATIONS}")
    if cfg.flow not in FLOW_MODES:
        bad("flow", f"must be one of {FLOW_MODES}")
    if cfg.encoding not in ("ascii", "binary"):
        bad("encoding", "must be ascii or binary")
    for name in ("n0", "c0", "psi0", "phi", "kappa", "gamma"):
        try:
            parse_expression(getattr(cfg, name))
        except ExpressionError as exc:
            bad(name, str(exc))
    if cfg.scenario and cfg.scenario not in SCENARIOS:
        bad("scenario", f"unknown scenario {cfg.scenario!r}; choose from {sorted(SCENARIOS)}")


def _convert(name: str, raw: str, line: int | None):
    typ = _TYPES[name]
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1]
    try:
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"line {line}: cannot read {name} = {raw!r} as {typ}", field=name, line=line) from None


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    out, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"([A-Za-z_][A-Za-z0-9_]*)\s*[=:]", s)
        if m and section is not None:
            out[(section, m.group(1).lower())] = lineno
    return out


def parse_config(text: str, scenario: str | None = None) -> SimConfig:
    """Parse and validate a configuration document.

    ``scenario`` selects a preset when the document does not name one.
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True, default_section="__defaults__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside any section", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"line {line}: cannot parse {exc.errors[0][1] if exc.errors else ''}", line=line) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.message if hasattr(exc, 'message') else exc}", line=exc.lineno) from None

    lines = _key_lines(text)
    values: dict = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", field=section)
        for key, raw in parser.items(section):
            line = lines.get((section, key.lower()))
            if key not in SECTIONS[section]:
                raise ConfigError(f"line {line}: unknown key {key!r} in [{section}]", field=key, line=line)
            values[key] = _convert(key, raw, line)

    if scenario and "scenario" not in values:
        values["scenario"] = scenario
    scenario = values.get("scenario", "")
    base = SCENARIOS[scenario] if scenario in SCENARIOS else {}
    if scenario and scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}", field="scenario")
    merged = {**base, **values}
    return SimConfig(**merged)


def load_config(path, scenario: str | None = None) -> SimConfig:
    with open(path) as fh:
        return parse_config(fh.read(), scenario)


def scenario_config(name: str, **overrides) -> SimConfig:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}", field="scenario")
    return SimConfig(**{**SCENARIOS[name], **overrides})


# --------------------------------------------------------------------------
# presets

_C_SMALL = "(1 + cos(pi*x)*cos(pi*y))/96"
_N_SMOOTH = "1 + 0.5*cos(pi*x)*cos(2*pi*y)"

SCENARIOS: dict[str, dict] = {
    # oxygen data at the smallness threshold 1/48, Robin exchange at the walls
    "paper-smallness": dict(
        scenario="paper-smallness",
        nx=64, ny=64, T_end=1.0, dt_max=1.9e-3,
        n0=_N_SMOOTH, c0=_C_SMALL, psi0="0", phi="y", kappa="1", gamma="1/48",
    ),
    "no-bacteria": dict(
        scenario="no-bacteria",
        nx=32, ny=32, T_end=0.5, dt_max=0.01,
        n0="0", c0="(1 + cos(pi*x)*cos(pi*y))/192", psi0="0", phi="y", kappa="1", gamma="1/48",
    ),
    "fluid-free": dict(
        scenario="fluid-free",
        nx=16, ny=16, T_end=0.1, dt_max=1e-4, flow="frozen",
        n0="1 + 0.5*cos(pi*x)*cos(pi*y)", c0=_C_SMALL, psi0="0", phi="y", kappa="1", gamma="1/48",
    ),
    # impermeable walls for oxygen: the weighted bacterial energy is non-increasing
    "kappa-zero": dict(
        scenario="kappa-zero",
        nx=64, ny=64, T_end=0.25, dt_max=2e-3,
        n0=_N_SMOOTH, c0=_C_SMALL, psi0="0", phi="y", kappa="0", gamma="0",
    ),
    "zero": dict(
        scenario="zero",
        nx=16, ny=16, T_end=0.1, dt_max=0.01,
        n0="0", c0="0", psi0="0", phi="y", kappa="0", gamma="0",
    ),
}
