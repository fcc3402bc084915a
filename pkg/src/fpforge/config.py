"""Flat `key = value` run configuration with per-subcommand schemas.

`#` starts a comment; values are numbers, booleans, bare tokens, or
preset calls like `f = affine(c=0.5, w0=1)`.  Validation collects every
problem (with line numbers) instead of stopping at the first.
"""

import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError

SUBCOMMANDS = ("solve-volterra", "solve-hammerstein", "elliptic", "geometry", "certify", "fuzz")

_PRESET_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?$")


@dataclass
class Field:
    kind: str  # int | float | bool | str | preset
    required: bool = False
    default: object = None
    check: callable = None  # value -> error message or None


def _pos(name):
    return lambda v: None if v > 0 else f"{name} must be positive"


def _nonneg(name):
    return lambda v: None if v >= 0 else f"{name} must be nonnegative"


def _at_least(name, lo):
    return lambda v: None if v >= lo else f"{name} must be >= {lo}"


def _in_open(name, lo, hi):
    return lambda v: None if lo < v < hi else f"{name} must lie in ({lo}, {hi})"


def _choice(name, options):
    return lambda v: None if v in options else f"{name} must be one of {sorted(options)}"


_COMMON = {
    "seed": Field("int", default=0, check=_nonneg("seed")),
    "output_dir": Field("str", default="out"),
}

SCHEMAS = {
    "solve-volterra": {
        **_COMMON,
        "T": Field("float", required=True, check=_pos("T")),
        "n_steps": Field("int", required=True, check=_at_least("n_steps", 1)),
        "dim": Field("int", default=1, check=_at_least("dim", 1)),
        "tol": Field("float", default=1e-8, check=_pos("tol")),
        "max_outer": Field("int", default=200, check=_at_least("max_outer", 1)),
        "vector_p": Field("float", default=2.0, check=_at_least("vector_p", 1)),
        "f": Field("preset", required=True),
        "g": Field("preset", required=True),
        "alpha": Field("preset", required=True),
        "phi": Field("preset", required=True),
    },
    "solve-hammerstein": {
        **_COMMON,
        "T": Field("float", required=True, check=_pos("T")),
        "n_steps": Field("int", required=True, check=_at_least("n_steps", 1)),
        "dim": Field("int", default=1, check=_at_least("dim", 1)),
        "p": Field("float", default=2.0, check=_in_open("p", 1, math.inf)),
        "tol": Field("float", default=1e-8, check=_pos("tol")),
        "max_outer": Field("int", default=200, check=_at_least("max_outer", 1)),
        "vector_p": Field("float", default=2.0, check=_at_least("vector_p", 1)),
        "f": Field("preset", required=True),
        "k": Field("preset", required=True),
        "Phi": Field("preset", required=True),
        "G": Field("preset"),
        "psi": Field("preset"),
        "f_lip": Field("float", check=lambda v: None if 0 <= v <= 1 else "f_lip must lie in [0, 1]"),
        "override": Field("bool", default=False),
        "profile": Field("str", default=""),
    },
    "elliptic": {
        **_COMMON,
        "n": Field("int", required=True, check=_at_least("n", 2)),
        "lambda": Field("float", default=0.0),
        "mu": Field("float", default=0.0, check=_nonneg("mu")),
        "p": Field("float", default=4.0, check=lambda v: None if v > 2 else "p must exceed 2"),
        "q": Field("float", default=1.5,
                   check=lambda v: None if 1.5 <= v < 2 else "q must lie in [3/2, 2)"),
        "a": Field("float", default=0.0, check=_nonneg("a")),
        "h_preset": Field("str", required=True),
        "R": Field("float", check=_pos("R")),
        "auto_mu_star": Field("bool", default=False),
        "override": Field("bool", default=False),
        "tol": Field("float", default=1e-10, check=_pos("tol")),
        "max_outer": Field("int", default=500, check=_at_least("max_outer", 1)),
    },
    "geometry": {
        **_COMMON,
        "profile": Field("str", default="hilbert"),
        "op": Field("str", default="epsilon0",
                    check=_choice("op", {"modulus", "epsilon0", "triang-fuzz", "a5-demo"})),
        "eps": Field("str", default="1.0"),
        "trials": Field("int", default=1000, check=_at_least("trials", 1)),
    },
    "certify": {
        **_COMMON,
        "kind": Field("str", required=True,
                      check=_choice("kind", {"mu-star", "power", "c6", "expanding"})),
        "p": Field("float"),
        "q": Field("float"),
        "a": Field("float"),
        "b": Field("float"),
        "lam_b": Field("float"),
        "c": Field("float"),
        "t": Field("float"),
        "r": Field("float"),
        "f0": Field("float"),
        "b_preset": Field("preset"),
        "dim": Field("int", default=2, check=_at_least("dim", 1)),
        "samples": Field("int", default=200, check=_at_least("samples", 1)),
        "lambdas": Field("str", default="0.1,0.5,1,2,10"),
    },
    "fuzz": {
        **_COMMON,
        "target": Field("str", required=True,
                        check=_choice("target", {"space-triangle", "strong-triangle-fuzz", "tube",
                                                 "expanding"})),
        "trials": Field("int", default=1000, check=_at_least("trials", 1)),
    },
}


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    seed: int
    output_dir: str
    raw: dict = field(default_factory=dict)


def _parse_value(kind, text):
    text = text.strip()
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ValueError(f"expected an integer, got '{text}'")
    if kind == "float":
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"expected a number, got '{text}'")
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected true/false, got '{text}'")
    if kind == "preset":
        return parse_preset(text)
    return text


def parse_preset(text):
    """Parse `name` or `name(k=v, ...)` into ('name', {k: float})."""
    m = _PRESET_RE.match(text.strip())
    if not m:
        raise ValueError(f"expected a preset like name(k=v, ...), got '{text}'")
    name, args = m.group(1), m.group(2)
    params = {}
    if args is not None and args.strip():
        for piece in args.split(","):
            if "=" not in piece:
                raise ValueError(f"preset argument '{piece.strip()}' is not of the form k=v")
            key, val = piece.split("=", 1)
            key = key.strip()
            try:
                params[key] = float(val.strip())
            except ValueError:
                raise ValueError(f"preset argument '{key}' has a non-numeric value '{val.strip()}'")
    return name, params


def format_preset(preset):
    name, params = preset
    if not params:
        return name
    inner = ", ".join(f"{k}={format_value('float', v)}" for k, v in params.items())
    return f"{name}({inner})"


def format_value(kind, value):
    if kind == "bool":
        return "true" if value else "false"
    if kind == "preset":
        return format_preset(value)
    if kind == "float":
        out = repr(float(value))
        return out
    return str(value)


def validate(subcommand, items):
    """Typed RunConfig from (line, key, rawvalue) triples; collects all errors."""
    if subcommand not in SCHEMAS:
        raise ConfigError([f"unknown subcommand '{subcommand}'"])
    schema = SCHEMAS[subcommand]
    errors = []
    params = {}
    raw = {}
    seen = set()
    for line, key, rawval in items:
        where = f"line {line}: " if line is not None else ""
        if key not in schema:
            errors.append(f"{where}unknown key '{key}' for {subcommand}")
            continue
        if key in seen:
            errors.append(f"{where}duplicate key '{key}'")
            continue
        seen.add(key)
        fld = schema[key]
        try:
            value = _parse_value(fld.kind, rawval)
        except ValueError as exc:
            errors.append(f"{where}{key}: {exc}")
            continue
        if fld.check is not None:
            msg = fld.check(value)
            if msg:
                errors.append(f"{where}{msg}")
                continue
        params[key] = value
        raw[key] = rawval.strip() if isinstance(rawval, str) else rawval
    for key, fld in schema.items():
        if key in params or key in seen:  # seen-but-invalid keys are already reported
            continue
        if fld.required:
            errors.append(f"missing required key '{key}' for {subcommand}")
        elif key not in params:
            params[key] = fld.default
    if errors:
        raise ConfigError(errors)
    seed = params.pop("seed")
    output_dir = params.pop("output_dir")
    return RunConfig(subcommand=subcommand, params=params, seed=seed,
                     output_dir=output_dir, raw=raw)


def parse_config(text, subcommand):
    """Parse the documented key = value format for the given subcommand."""
    items = []
    errors = []
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got '{line}'")
            continue
        key, val = line.split("=", 1)
        items.append((lineno, key.strip(), val.strip()))
    if errors:
        # Still validate what parsed, so every problem is reported at once.
        try:
            validate(subcommand, items)
        except ConfigError as exc:
            errors.extend(exc.messages)
        raise ConfigError(errors)
    return validate(subcommand, items)


def emit_defaults(subcommand):
    """Config text carrying every optional key at its default value."""
    if subcommand not in SCHEMAS:
        raise ConfigError([f"unknown subcommand '{subcommand}'"])
    lines = [f"# defaults for {subcommand}"]
    for key, fld in sorted(SCHEMAS[subcommand].items()):
        if fld.required or fld.default is None:
            continue
        lines.append(f"{key} = {format_value(fld.kind, fld.default)}")
    return "\n".join(lines) + "\n"
