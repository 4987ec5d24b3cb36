"""Plain `key = value` configuration files for the command line tools.

One assignment per line; `#` starts a comment; values are typed by shape:
integers, floats, true/false booleans, comma-separated lists of those, or
bare strings.  Example::

    # Table 1 style run
    model = beta
    a = 2
    horizons = 13, 17, 20
    methods = gl, cv, rot, oracle, mle
"""

from __future__ import annotations

from .division import BetaKernel, BetaMixtureKernel, TabulatedKernel
from .grids import EvaluationGrid


class ConfigError(Exception):
    """Invalid or missing configuration input."""


def _parse_scalar(token: str):
    token = token.strip()
    low = token.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    return token


def parse_config_text(text: str) -> dict:
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if "," in value:
            out[key] = [_parse_scalar(t) for t in value.split(",") if t.strip()]
        else:
            out[key] = _parse_scalar(value)
    return out


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def as_list(value) -> list:
    """Normalize a scalar-or-list config value to a list."""
    if isinstance(value, list):
        return value
    return [value]


def require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing required config key {key!r}")
    return cfg[key]


def model_from_config(cfg: dict):
    """Build the division-fraction law described by a config mapping."""
    kind = str(cfg.get("model", "beta")).lower()
    try:
        if kind == "beta":
            return BetaKernel(float(require(cfg, "a")))
        if kind == "mixture":
            return BetaMixtureKernel(
                weight=float(cfg.get("weight", 0.5)),
                a1=float(require(cfg, "a1")),
                b1=float(require(cfg, "b1")),
                a2=float(require(cfg, "a2")),
                b2=float(require(cfg, "b2")),
            )
        if kind == "tabulated":
            path = require(cfg, "tabulated_file")
            grid, values = _read_tabulation(path)
            return TabulatedKernel.from_arrays(grid, values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad model parameters: {exc}") from exc
    raise ConfigError(f"unknown model kind {kind!r}")


def _read_tabulation(path):
    grid = []
    values = []
    try:
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = [p for p in line.replace(",", " ").split() if p]
                if len(parts) != 2:
                    raise ConfigError(f"tabulation rows need two columns, got {raw.strip()!r}")
                try:
                    x, v = float(parts[0]), float(parts[1])
                except ValueError:
                    continue  # header row
                grid.append(x)
                values.append(v)
    except OSError as exc:
        raise ConfigError(f"cannot read tabulation {path}: {exc}") from exc
    if len(grid) < 2:
        raise ConfigError("tabulation needs at least two numeric rows")
    return grid, values


def grid_from_config(cfg: dict) -> EvaluationGrid:
    try:
        return EvaluationGrid(
            lo=float(cfg.get("grid_lo", -0.5)),
            hi=float(cfg.get("grid_hi", 1.5)),
            n_points=int(cfg.get("grid_points", 2001)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad grid parameters: {exc}") from exc
