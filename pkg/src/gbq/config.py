"""Flat key = value run configuration with bracketed section headers.

The format is deliberately minimal (diff-friendly, no dependencies):

    [model]
    alpha = 3
    beta = -1
    nonlinearity = power

    [grid]
    dim = 1
    points = 1024
    side = 80

Unknown sections or keys are rejected; parse errors carry the line number,
validation errors carry the section and key.  serialize(parse(text)) is
idempotent after the first normalization (sorted sections and keys).
"""

from __future__ import annotations

from dataclasses import dataclass

from .propagator import ModelParams, StepperConfig, NONE, POWER, QUADRATIC
from .spectral import Grid, make_grid


class ConfigError(ValueError):
    def __init__(self, message, lineno=None, field=None):
        loc = []
        if lineno is not None:
            loc.append(f"line {lineno}")
        if field is not None:
            loc.append(field)
        prefix = f"[{': '.join(loc)}] " if loc else ""
        super().__init__(prefix + message)
        self.lineno = lineno
        self.field = field


def parse_config_text(text):
    """Parse into {section: {key: raw-string-value}}."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if not current:
                raise ConfigError("empty section name", lineno)
            sections.setdefault(current, {})
            continue
        if "=" in line:
            if current is None:
                raise ConfigError("key outside any [section]", lineno)
            key, value = line.split("=", 1)
            sections[current][key.strip().lower()] = value.strip()
            continue
        raise ConfigError(f"cannot parse {raw!r}", lineno)
    return sections


def serialize_config(sections):
    out = []
    for name in sorted(sections):
        out.append(f"[{name}]")
        for key in sorted(sections[name]):
            out.append(f"{key} = {sections[name][key]}")
        out.append("")
    return "\n".join(out)


_PROFILES = ("gaussian", "cosine", "ground_state_scaled", "zero")


@dataclass
class RunConfig:
    params: ModelParams
    grid: Grid
    stepper: StepperConfig
    profile: str
    amplitude: float
    width: float
    mode: int
    mean_subtract: bool
    ground_state_path: str | None
    morawetz_r: float | None
    morawetz_profile: str
    csv_path: str | None
    checkpoint_path: str | None
    seed: int


def _get(sections, section, key, default=None, required=False):
    value = sections.get(section, {}).get(key)
    if value is None:
        if required:
            raise ConfigError("missing required key", field=f"{section}.{key}")
        return default
    return value


def _convert(sections, section, key, conv, default=None, required=False):
    raw = _get(sections, section, key, None, required)
    if raw is None:
        return default
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=f"{section}.{key}") from None


def _parse_bool(raw):
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_list(conv):
    def inner(raw):
        return tuple(conv(part.strip()) for part in raw.split(",") if part.strip())

    return inner


_KNOWN = {
    "model": {"alpha", "beta", "nonlinearity"},
    "grid": {"dim", "points", "side"},
    "stepper": {"dt", "t_end", "sample_every", "blowup_h1_factor", "dealias"},
    "initial": {"profile", "amplitude", "width", "mode", "mean_subtract",
                "ground_state"},
    "diagnostics": {"morawetz_r", "morawetz_profile"},
    "output": {"csv", "checkpoint"},
    "run": {"seed"},
}


def run_config_from_sections(sections):
    for name, keys in sections.items():
        if name not in _KNOWN:
            raise ConfigError(f"unknown section [{name}]", field=name)
        unknown = set(keys) - _KNOWN[name]
        if unknown:
            raise ConfigError(
                f"unknown keys: {', '.join(sorted(unknown))}", field=name
            )

    nonlinearity = _get(sections, "model", "nonlinearity", POWER)
    if nonlinearity not in (POWER, QUADRATIC, NONE):
        raise ConfigError(
            f"must be one of power/quadratic/none, got {nonlinearity!r}",
            field="model.nonlinearity",
        )
    alpha = _convert(sections, "model", "alpha", float,
                     required=nonlinearity != NONE, default=3.0)
    beta = _convert(sections, "model", "beta", int, default=1)
    try:
        params = ModelParams(alpha, beta, nonlinearity)
    except ValueError as exc:
        raise ConfigError(str(exc), field="model") from None

    dim = _convert(sections, "grid", "dim", int, required=True)
    points = _convert(sections, "grid", "points", _parse_list(int), required=True)
    side = _convert(sections, "grid", "side", _parse_list(float), required=True)
    if len(points) == 1:
        points = points * dim
    if len(side) == 1:
        side = side * dim
    try:
        grid = make_grid(dim, points, side)
    except ValueError as exc:
        raise ConfigError(str(exc), field="grid") from None

    try:
        stepper = StepperConfig(
            dt=_convert(sections, "stepper", "dt", float, required=True),
            t_end=_convert(sections, "stepper", "t_end", float, required=True),
            sample_every=_convert(sections, "stepper", "sample_every", int, 1),
            blowup_h1_factor=_convert(
                sections, "stepper", "blowup_h1_factor", float, 50.0
            ),
            dealias=_convert(sections, "stepper", "dealias", _parse_bool, True),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), field="stepper") from None

    profile = _get(sections, "initial", "profile", "zero")
    if profile not in _PROFILES:
        raise ConfigError(
            f"must be one of {', '.join(_PROFILES)}, got {profile!r}",
            field="initial.profile",
        )
    return RunConfig(
        params=params,
        grid=grid,
        stepper=stepper,
        profile=profile,
        amplitude=_convert(sections, "initial", "amplitude", float, 1.0),
        width=_convert(sections, "initial", "width", float, 1.0),
        mode=_convert(sections, "initial", "mode", int, 1),
        mean_subtract=_convert(
            sections, "initial", "mean_subtract", _parse_bool, False
        ),
        ground_state_path=_get(sections, "initial", "ground_state"),
        morawetz_r=_convert(sections, "diagnostics", "morawetz_r", float),
        morawetz_profile=_get(sections, "diagnostics", "morawetz_profile", "d3"),
        csv_path=_get(sections, "output", "csv"),
        checkpoint_path=_get(sections, "output", "checkpoint"),
        seed=_convert(sections, "run", "seed", int, 0),
    )


def load_run_config(path):
    with open(path) as fh:
        return run_config_from_sections(parse_config_text(fh.read()))
