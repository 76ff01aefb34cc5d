"""Experiment configuration files.

A config is plain text with named sections::

    # Z2 x Z2 two-block shift
    [group]
    p = 2
    exponents = 1 1

    [incidence]          # |A| rows of 0/1, canonical element order
    1 1 0 0
    ...

    [transition]         # |A| rows of reals, or the single word ``haar``
    0.6 0.4 0 0
    ...

    [params]             # all optional
    alpha = 0.15
    seed = 7
    cap_work = 200000000
    cap_enum = 1000000

``#`` starts a comment.  Errors carry the offending line number.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import HaarCAError, ValidationError
from .group import DEFAULT_ENUM_CAP, GroupSpec
from .measure import MarkovMeasure, haar_measure, validate_measure
from .pushforward import DEFAULT_WORK_CAP
from .shift import SubgroupShift, validate_subgroup_shift

SECTIONS = ("group", "incidence", "transition", "params")


class ConfigError(ValidationError):
    def __init__(self, source: str, line: int | None, message: str):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.line = line


@dataclass
class ExperimentConfig:
    p: int
    exponents: tuple[int, ...]
    incidence: list[list[int]]
    transition: list[list[float]] | None  # None means the Haar kernel
    alpha: float | None = None
    seed: int = 0
    cap_work: int = DEFAULT_WORK_CAP
    cap_enum: int = DEFAULT_ENUM_CAP
    source: str = "<config>"
    lines: dict[str, int] = field(default_factory=dict)

    def build(self) -> tuple[SubgroupShift, MarkovMeasure]:
        """Validate into a shift and a measure, re-anchoring failures to the config lines."""
        try:
            spec = GroupSpec(self.p, self.exponents, enum_cap=self.cap_enum)
        except HaarCAError as exc:
            raise ConfigError(self.source, self.lines.get("group"), str(exc)) from exc
        try:
            shift = validate_subgroup_shift(spec, np.array(self.incidence), enum_cap=self.cap_enum)
        except HaarCAError as exc:
            raise ConfigError(self.source, self.lines.get("incidence"), str(exc)) from exc
        try:
            measure = haar_measure(shift) if self.transition is None else validate_measure(shift, self.transition)
        except HaarCAError as exc:
            raise ConfigError(self.source, self.lines.get("transition"), str(exc)) from exc
        return shift, measure


def _parse_number(text: str, kind, source: str, line: int):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(source, line, f"cannot read {text!r} as {kind.__name__}") from None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    section = None
    body: dict[str, list[tuple[int, str]]] = {name: [] for name in SECTIONS}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(source, lineno, f"malformed section header {line!r}")
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ConfigError(source, lineno, f"unknown section [{section}]")
            if section in lines:
                raise ConfigError(source, lineno, f"duplicate section [{section}]")
            lines[section] = lineno
            continue
        if section is None:
            raise ConfigError(source, lineno, "content before the first section header")
        body[section].append((lineno, line))

    for name in ("group", "incidence", "transition"):
        if name not in lines:
            raise ConfigError(source, None, f"missing section [{name}]")

    def keyvals(name: str) -> dict[str, tuple[int, str]]:
        out = {}
        for lineno, line in body[name]:
            key, eq, val = line.partition("=")
            if not eq:
                raise ConfigError(source, lineno, f"expected 'key = value' in [{name}]")
            out[key.strip().lower()] = (lineno, val.strip())
        return out

    group = keyvals("group")
    for key in ("p", "exponents"):
        if key not in group:
            raise ConfigError(source, lines["group"], f"[group] needs '{key}'")
    extra = set(group) - {"p", "exponents"}
    if extra:
        raise ConfigError(source, group[sorted(extra)[0]][0], f"unknown key {sorted(extra)[0]!r} in [group]")
    p = _parse_number(group["p"][1], int, source, group["p"][0])
    exps = tuple(_parse_number(v, int, source, group["exponents"][0]) for v in group["exponents"][1].split())

    def matrix(name: str, kind) -> list[list]:
        rows = []
        for lineno, line in body[name]:
            rows.append([_parse_number(v, kind, source, lineno) for v in line.split()])
        if not rows:
            raise ConfigError(source, lines[name], f"[{name}] is empty")
        width = len(rows[0])
        for (lineno, _), row in zip(body[name], rows):
            if len(row) != width or width != len(rows):
                raise ConfigError(source, lineno, f"[{name}] must be a square matrix")
        return rows

    incidence = matrix("incidence", int)
    if len(body["transition"]) == 1 and body["transition"][0][1].lower() == "haar":
        transition = None
    else:
        transition = matrix("transition", float)

    cfg = ExperimentConfig(p, exps, incidence, transition, source=source, lines=lines)
    for key, (lineno, val) in keyvals("params").items():
        if key == "alpha":
            cfg.alpha = _parse_number(val, float, source, lineno)
        elif key in ("seed", "cap_work", "cap_enum"):
            setattr(cfg, key, _parse_number(val, int, source, lineno))
        else:
            raise ConfigError(source, lineno, f"unknown key {key!r} in [params]")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), None, f"cannot read config: {exc.strerror}") from exc
    return parse_config(text, str(path))


def format_config(cfg: ExperimentConfig) -> str:
    out = ["[group]", f"p = {cfg.p}", "exponents = " + " ".join(map(str, cfg.exponents)), "", "[incidence]"]
    out += [" ".join(str(int(v)) for v in row) for row in cfg.incidence]
    out += ["", "[transition]"]
    if cfg.transition is None:
        out.append("haar")
    else:
        out += [" ".join(repr(float(v)) for v in row) for row in cfg.transition]
    out += ["", "[params]", f"seed = {cfg.seed}"]
    if cfg.alpha is not None:
        out.append(f"alpha = {cfg.alpha!r}")
    return "\n".join(out) + "\n"
