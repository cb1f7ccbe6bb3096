"""Experiment configuration files.

A config is an INI-style file of ``key = value`` lines, one section per
experiment; a file without any section header is treated as one anonymous
section.  Lists are comma separated, optionally wrapped in brackets::

    [fig1a]
    n = 10000
    r = 50
    basis_kind = gaussian
    m_grid = 10, 25, 50, 100, 200, 400, 800, 1600, 3000
    seed = 7
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from pathlib import Path

from .errors import InvalidParameter, ParseError
from .simlab import ExperimentConfig

_DEFAULT_SECTION = "experiment"

_INT = {"n", "r", "trials_per_m", "seed"}
_FLOAT = {"spike", "target_mu_S", "vector_scale", "noise_sigma"}
_INT_LIST = {"m_grid", "fourier_frequencies"}
_FLOAT_LIST = {"lambda_grid"}
REQUIRED = ("n", "r", "m_grid")
KNOWN = {f.name for f in dataclasses.fields(ExperimentConfig)}


def _split_list(text):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
    return [part.strip() for part in text.split(",") if part.strip()]


def _convert(key, raw):
    raw = raw.strip()
    if key in _INT:
        return int(raw)
    if key in _FLOAT:
        return float(raw)
    if key in _INT_LIST:
        return tuple(int(x) for x in _split_list(raw))
    if key in _FLOAT_LIST:
        return tuple(float(x) for x in _split_list(raw))
    if key == "dof_policy":
        raw = raw.strip("'\"")
        return int(raw) if raw.isdigit() else raw
    return raw.strip("'\"")


def _line_of(lines, section, key):
    current = None
    for no, line in enumerate(lines, start=1):
        head = re.match(r"\s*\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
            continue
        if current == section and re.match(rf"\s*{re.escape(key)}\s*[=:]", line):
            return no
    return None


def parse_config(text: str, section: str | None = None, source: str = "<config>") -> ExperimentConfig:
    lines = text.splitlines()
    if not any(re.match(r"\s*\[[^\]]+\]", line) for line in lines):
        text = f"[{_DEFAULT_SECTION}]\n" + text
        lines = text.splitlines()
        offset = -1
    else:
        offset = 0
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(f"{source}: {exc.message if hasattr(exc, 'message') else exc}",
                         line=None if line is None else line + offset) from exc

    sections = parser.sections()
    if section is None:
        if len(sections) != 1:
            raise ParseError(f"{source}: expected one section, found {sections}; pick one explicitly")
        section = sections[0]
    elif section not in sections:
        if len(sections) == 1:
            section = sections[0]
        else:
            raise ParseError(f"{source}: no section [{section}] (have {sections})")

    def line(key):
        found = _line_of(lines, section, key)
        return None if found is None else found + offset

    values = {}
    for key, raw in parser.items(section):
        if key not in KNOWN:
            raise ParseError(f"{source}: unknown key", line=line(key), field=key)
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ParseError(f"{source}: bad value {raw!r} ({exc})", line=line(key), field=key) from exc
    for key in REQUIRED:
        if key not in values:
            raise ParseError(f"{source}: missing required key", field=key)
    try:
        return ExperimentConfig(**values)
    except InvalidParameter as exc:
        bad = exc.field
        raise ParseError(f"{source}: {exc}", line=None if bad is None else line(bad), field=bad) from exc


def load_config(path, section: str | None = None) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), section, source=str(path))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def config_to_text(cfg: ExperimentConfig, section: str = _DEFAULT_SECTION) -> str:
    rows = [f"[{section}]"]
    for key, value in config_to_dict(cfg).items():
        if value is None:
            continue
        if isinstance(value, list):
            value = ", ".join(repr(x) for x in value)
        elif isinstance(value, float):
            value = repr(value)
        rows.append(f"{key} = {value}")
    return "\n".join(rows) + "\n"
