"""Sectioned key=value run configuration.

The accepted grammar is deliberately small: ``[section]`` headers,
``key = value`` lines, blank lines, and full-line ``#`` comments.
Unknown sections or keys and out-of-range values are rejected with the
offending line number.  :func:`dump_config` emits a canonical rendering
of exactly the keys that were set, so dumping is idempotent and
re-parsing reproduces the same configuration byte for byte.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError
from .scenarios import (
    SCENARIO_NAMES,
    Scenario,
    make_example1,
    make_example2,
    make_lake_at_rest,
    make_steady_custom,
)
from .state import PhysParams

OUTPUT_FORMATS = ("csv", "vtk")

_BOUNDARY_KEYS = ("all", "x", "y", "xmin", "xmax", "ymin", "ymax")


def _parse_float(s):
    try:
        v = float(s)
    except ValueError:
        raise ConfigError(f"not a number: {s!r}")
    if v != v or v in (float("inf"), float("-inf")):
        raise ConfigError(f"number must be finite: {s!r}")
    return v


def _parse_int(s):
    try:
        return int(s, 10)
    except ValueError:
        raise ConfigError(f"not an integer: {s!r}")


def _parse_bool(s):
    if s == "true":
        return True
    if s == "false":
        return False
    raise ConfigError(f"expected true or false, got {s!r}")


def _parse_float_list(s):
    parts = [p.strip() for p in s.split(",") if p.strip()]
    return tuple(_parse_float(p) for p in parts)


def _parse_formats(s):
    parts = tuple(p.strip() for p in s.split(",") if p.strip())
    for p in parts:
        if p not in OUTPUT_FORMATS:
            raise ConfigError(
                f"unknown output format {p!r} (choices: {', '.join(OUTPUT_FORMATS)})"
            )
    if len(set(parts)) != len(parts):
        raise ConfigError("duplicate output format")
    # canonical order, independent of how the user listed them
    return tuple(f for f in OUTPUT_FORMATS if f in parts)


def _fmt_float(v):
    return repr(float(v))


def _fmt_list(v):
    return ", ".join(_fmt_float(x) for x in v)


@dataclass(frozen=True)
class _Key:
    parse: callable
    fmt: callable = str
    check: callable = None
    describe: str = ""

    def convert(self, raw):
        v = self.parse(raw)
        if self.check is not None and not self.check(v):
            raise ConfigError(f"value {raw!r} out of range ({self.describe})")
        return v


def _choice(*opts):
    def parse(s):
        if s not in opts:
            raise ConfigError(f"expected one of {', '.join(opts)}; got {s!r}")
        return s

    return _Key(parse)


_FLOAT = _Key(_parse_float, _fmt_float)
_POS_FLOAT = _Key(_parse_float, _fmt_float, lambda v: v > 0, "must be > 0")
_NONNEG_FLOAT = _Key(_parse_float, _fmt_float, lambda v: v >= 0, "must be >= 0")
_POS_INT = _Key(_parse_int, str, lambda v: v >= 1, "must be >= 1")

SCHEMA = {
    "run": {
        "scenario": _choice(*SCENARIO_NAMES),
    },
    "mesh": {
        "scale": _POS_FLOAT,
        "nx": _POS_INT,
        "ny": _POS_INT,
        "jitter": _Key(_parse_float, _fmt_float, lambda v: 0 <= v <= 0.2,
                       "must be in [0, 0.2]"),
        "seed": _Key(_parse_int, str, lambda v: v >= 0, "must be >= 0"),
        "diagonal": _choice("same", "mirrored"),
        "path": _Key(str),
    },
    "physics": {
        "g": _POS_FLOAT,
        "n": _NONNEG_FLOAT,
        "delta": _Key(_parse_float, _fmt_float, lambda v: 0 <= v < 1,
                      "must be in [0, 1)"),
        "cfl": _Key(_parse_float, _fmt_float, lambda v: 0 < v <= 1,
                    "must be in (0, 1]"),
        "cfl_mode": _choice("multiply", "replace"),
        "epsilon": _POS_FLOAT,
        "h_dry": _POS_FLOAT,
    },
    "initial": {
        "r0_mode": _choice("paper_value", "consistent"),
        "q0": _FLOAT,
        "slope": _FLOAT,
        "c0": _NONNEG_FLOAT,
        "depth": _POS_FLOAT,
        "amplitude": _NONNEG_FLOAT,
        "radius": _POS_FLOAT,
        "h_upstream": _NONNEG_FLOAT,
        "c_upstream": _NONNEG_FLOAT,
        "x_dam": _FLOAT,
        "breach_center": _FLOAT,
        "breach_width": _POS_FLOAT,
    },
    "boundary": {key: _choice("wall", "outflow") for key in _BOUNDARY_KEYS},
    "time": {
        "t_end": _NONNEG_FLOAT,
        "snapshots": _Key(_parse_float_list, _fmt_list),
        "dt_max": _POS_FLOAT,
    },
    "output": {
        "dir": _Key(str),
        "formats": _Key(_parse_formats, lambda v: ", ".join(v)),
        "report": _Key(_parse_bool, lambda v: "true" if v else "false"),
    },
}

# Which scenario-specific keys each scenario understands.
_APPLICABILITY = {
    ("mesh", "scale"): ("example1", "example2", "steady_custom"),
    ("initial", "r0_mode"): ("example1",),
    ("initial", "q0"): ("steady_custom",),
    ("initial", "slope"): ("steady_custom",),
    ("initial", "c0"): ("steady_custom",),
    ("initial", "depth"): ("lake_at_rest",),
    ("initial", "amplitude"): ("lake_at_rest",),
    ("initial", "radius"): ("lake_at_rest",),
    ("initial", "h_upstream"): ("example2",),
    ("initial", "c_upstream"): ("example2",),
    ("initial", "x_dam"): ("example2",),
    ("initial", "breach_center"): ("example2",),
    ("initial", "breach_width"): ("example2",),
}


@dataclass
class RunConfig:
    """Explicitly-set configuration values, keyed by (section, key)."""

    values: dict

    def get(self, section, key, default=None):
        return self.values.get((section, key), default)

    def has(self, section, key):
        return (section, key) in self.values

    def section(self, name):
        return {k: v for (s, k), v in self.values.items() if s == name}


def parse_config(text: str) -> RunConfig:
    """Parse sectioned key=value text; errors carry line numbers."""
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(
                    f"line {lineno}: unknown section [{section}] "
                    f"(choices: {', '.join(SCHEMA)})"
                )
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, rawval = line.partition("=")
        key = key.strip()
        rawval = rawval.strip()
        if key not in SCHEMA[section]:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} in [{section}] "
                f"(choices: {', '.join(SCHEMA[section])})"
            )
        if (section, key) in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{section}]")
        try:
            values[(section, key)] = SCHEMA[section][key].convert(rawval)
        except ConfigError as e:
            raise ConfigError(f"line {lineno}: [{section}] {key}: {e}") from None
    if ("run", "scenario") not in values:
        raise ConfigError("missing required key: [run] scenario")
    return RunConfig(values)


def dump_config(cfg: RunConfig) -> str:
    """Canonical rendering of the explicitly-set keys.

    Sections and keys appear in schema order; parsing the output and
    dumping again is byte-identical.
    """
    blocks = []
    for section, keys in SCHEMA.items():
        lines = []
        for key, field in keys.items():
            if (section, key) in cfg.values:
                lines.append(f"{key} = {field.fmt(cfg.values[(section, key)])}")
        if lines:
            blocks.append(f"[{section}]\n" + "\n".join(lines))
    return "\n\n".join(blocks) + "\n"


@dataclass(frozen=True)
class OutputOptions:
    """Where and how run products are written."""

    directory: str | None = None  # None: use the scenario's default
    formats: tuple = OUTPUT_FORMATS
    report: bool = True


def output_options(cfg: RunConfig) -> OutputOptions:
    return OutputOptions(
        directory=cfg.get("output", "dir"),
        formats=cfg.get("output", "formats", OUTPUT_FORMATS),
        report=cfg.get("output", "report", True),
    )


def _physics_overrides(cfg: RunConfig, base: PhysParams) -> PhysParams:
    mapping = {
        "g": "g",
        "n": "n_manning",
        "delta": "delta",
        "cfl": "cfl",
        "cfl_mode": "cfl_mode",
        "epsilon": "epsilon",
        "h_dry": "h_dry",
    }
    kwargs = {
        mapping[key]: value for key, value in cfg.section("physics").items()
    }
    if not kwargs:
        return base
    try:
        return dataclasses.replace(base, **kwargs)
    except ValueError as e:
        raise ConfigError(f"invalid [physics] override: {e}") from None


_DEFAULT_SCALE = {"example1": 10.0, "example2": 16.0, "steady_custom": 10.0}


def resolve_scenario(cfg: RunConfig) -> Scenario:
    """Turn a parsed configuration into a concrete :class:`Scenario`."""
    name = cfg.get("run", "scenario")
    for (section, key), applies in _APPLICABILITY.items():
        if cfg.has(section, key) and name not in applies:
            raise ConfigError(
                f"[{section}] {key} only applies to scenario(s): {', '.join(applies)}"
            )

    scale = cfg.get("mesh", "scale", _DEFAULT_SCALE.get(name))
    tkw = {}
    if cfg.has("time", "t_end"):
        tkw["t_end"] = cfg.get("time", "t_end")

    if name == "example1":
        scn = make_example1(scale=scale,
                            r0_mode=cfg.get("initial", "r0_mode", "paper_value"),
                            **tkw)
    elif name == "steady_custom":
        scn = make_steady_custom(q0=cfg.get("initial", "q0", 0.1),
                                 slope=cfg.get("initial", "slope", 0.01),
                                 c0=cfg.get("initial", "c0", 0.0),
                                 scale=scale, **tkw)
    elif name == "example2":
        kw = {}
        for key in ("x_dam", "breach_center", "breach_width",
                    "h_upstream", "c_upstream"):
            if cfg.has("initial", key):
                kw[key] = cfg.get("initial", key)
        scn = make_example2(scale=scale, **kw, **tkw)
    elif name == "lake_at_rest":
        kw = {}
        for conf_key, arg in (("depth", "depth"), ("amplitude", "amplitude"),
                              ("radius", "radius")):
            if cfg.has("initial", conf_key):
                kw[arg] = cfg.get("initial", conf_key)
        if cfg.has("mesh", "nx"):
            kw["nx"] = cfg.get("mesh", "nx")
        scn = make_lake_at_rest(**kw, **tkw)
    else:  # pragma: no cover - schema already restricts the choices
        raise ConfigError(f"unknown scenario {name!r}")

    scn = dataclasses.replace(scn, params=_physics_overrides(cfg, scn.params))

    mesh_kw = {}
    for key in ("nx", "ny", "jitter", "seed", "diagonal", "path"):
        if cfg.has("mesh", key):
            mesh_kw[key] = cfg.get("mesh", key)
    if name == "lake_at_rest":
        mesh_kw.pop("nx", None)  # already consumed by the builder
    if mesh_kw:
        scn = dataclasses.replace(scn, mesh=dataclasses.replace(scn.mesh, **mesh_kw))

    rules = cfg.section("boundary")
    if rules:
        merged = dict(scn.boundary)
        merged.update(rules)
        scn = dataclasses.replace(scn, boundary=merged)

    skw = {}
    if cfg.has("time", "snapshots"):
        skw["snapshot_times"] = cfg.get("time", "snapshots")
    if cfg.has("time", "dt_max"):
        skw["dt_max"] = cfg.get("time", "dt_max")
    if cfg.has("output", "dir"):
        skw["output_dir"] = cfg.get("output", "dir")
    if skw:
        scn = dataclasses.replace(scn, **skw)
    return scn
