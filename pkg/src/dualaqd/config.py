"""Flat ``key = value`` experiment configuration files.

Grammar: one ``key = value`` pair per line; ``#`` starts a comment; blank
lines are ignored. Keys are the :class:`~dualaqd.training.TrainConfig`
fields plus the harness keys in :data:`HARNESS_KEYS`. Lists are comma
separated. Booleans accept true/false, yes/no, on/off, 1/0.
"""
from __future__ import annotations

import dataclasses
import typing
from pathlib import Path

from .exceptions import ConfigurationError
from .training import TrainConfig

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}

HARNESS_KEYS = {
    "target_column": "y",
    "methods": "dualaqd,dualaqd_nobs,qd,qdplus,mcdropout_pi",
    "alphas": "0.001,0.005,0.01,0.05,0.1",
}

_TYPES = typing.get_type_hints(TrainConfig)


def _parse_bool(text):
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_value(key, text):
    hint = _TYPES[key]
    text = text.strip()
    if hint == (int | None):
        return None if text.lower() in ("", "none") else int(text)
    if hint is bool:
        return _parse_bool(text)
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    if hint is tuple:
        return tuple(int(t) for t in text.split(",") if t.strip())
    return text


def parse_config_text(text, source="<config>"):
    """Parse config text into a ``{key: raw string}`` dict; syntax errors are collected."""
    entries, problems = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {line!r}")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key in entries:
            problems.append(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    if problems:
        raise ConfigurationError("\n".join(problems))
    return entries


def build_config(entries, source="<config>"):
    """Turn raw entries into ``(TrainConfig, harness_settings)``.

    Every problem (unknown key, unparsable value, out-of-range value) is
    reported at once.
    """
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    problems, kwargs = [], {}
    harness = dict(HARNESS_KEYS)
    for key, raw in entries.items():
        if key in HARNESS_KEYS:
            harness[key] = raw
        elif key not in known:
            problems.append(f"{source}: unknown key {key!r}")
        else:
            try:
                kwargs[key] = _parse_value(key, raw)
            except ValueError as exc:
                problems.append(f"{source}: bad value for {key!r}: {exc}")
    settings = {"target_column": harness["target_column"].strip(),
                "methods": [m.strip() for m in harness["methods"].split(",") if m.strip()]}
    try:
        settings["alphas"] = [float(a) for a in harness["alphas"].split(",") if a.strip()]
    except ValueError as exc:
        problems.append(f"{source}: bad value for 'alphas': {exc}")
    # range checks run even after parse errors; unparsable keys keep defaults
    base = TrainConfig.__new__(TrainConfig)
    for f in dataclasses.fields(TrainConfig):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        setattr(base, f.name, kwargs.get(f.name, default))
    base.hidden = tuple(base.hidden)
    problems += [f"{source}: {p}" for p in base.problems()]
    if problems:
        raise ConfigurationError("\n".join(problems))
    return TrainConfig(**kwargs), settings


def load_config(path=None, overrides=None):
    """Read an optional config file and apply ``overrides`` (raw strings) on top."""
    entries = {}
    source = "<defaults>"
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        entries = parse_config_text(text, str(path))
        source = str(path)
    entries.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    return build_config(entries, source)


def dump_config(config, settings=None):
    lines = []
    for key, value in config.to_dict().items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {'none' if value is None else value}")
    for key, value in (settings or {}).items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
