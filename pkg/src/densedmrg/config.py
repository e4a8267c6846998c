"""Run configuration: a flat ``key = value`` text format.

Grammar, one entry per line::

    # comment
    key = value            # trailing comments are allowed
    corr = Sz:Sz, Sp:Sm    # lists are comma-separated

Keys are case-sensitive and must be known; a repeated key is an error.
Booleans accept ``true/false``, ``yes/no``, ``on/off`` and ``1/0``.

Structured list items use colons:

* ``schedule``: ``m:cutoff`` per sweep; sweeps past the end reuse the last item.
* ``pins``: ``site:operator:coefficient`` on-site terms added to the MPO.
* ``corr``: ``A:B`` or ``A:B:trail`` correlation pairs.
* ``init_ops``: ``operator@site`` applications for ``init = ops``.
* ``transfer``: a single ``first:last`` site window.
"""

from __future__ import annotations

import math
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path

from .decompositions import TruncationSpec
from .dmrg import DmrgParams
from .errors import ConfigError, ModelError
from .models import MODELS, ModelSpec, operator_set

__all__ = ["RunConfig", "parse_config", "parse_config_text", "INIT_STATES"]

INIT_STATES = ("ferro", "staggered", "random", "ops")
_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _bool(text: str) -> bool:
    low = text.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _items(text: str) -> list[str]:
    items = [s.strip() for s in text.split(",")]
    if any(not s for s in items):
        raise ValueError("empty list item")
    return items


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(_items(text))


def _schedule(text: str) -> tuple[tuple[int, float], ...]:
    out = []
    for item in _items(text):
        m, sep, cutoff = item.partition(":")
        if not sep:
            raise ValueError(f"schedule item {item!r} is not m:cutoff")
        out.append((int(m), float(cutoff)))
    return tuple(out)


def _pins(text: str) -> tuple[tuple[int, str, float], ...]:
    out = []
    for item in _items(text):
        parts = item.split(":")
        if len(parts) != 3:
            raise ValueError(f"pin {item!r} is not site:operator:coefficient")
        out.append((int(parts[0]), parts[1].strip(), float(parts[2])))
    return tuple(out)


def _pairs(text: str) -> tuple[tuple[str, ...], ...]:
    out = []
    for item in _items(text):
        parts = tuple(p.strip() for p in item.split(":"))
        if len(parts) not in (2, 3) or not all(parts):
            raise ValueError(f"correlation {item!r} is not A:B or A:B:trail")
        out.append(parts)
    return tuple(out)


def _site_ops(text: str) -> tuple[tuple[str, int], ...]:
    out = []
    for item in _items(text):
        op, sep, site = item.partition("@")
        if not sep:
            raise ValueError(f"operator application {item!r} is not operator@site")
        out.append((op.strip(), int(site)))
    return tuple(out)


def _window(text: str) -> tuple[int, int]:
    first, sep, last = text.partition(":")
    if not sep:
        raise ValueError(f"window {text!r} is not first:last")
    return int(first), int(last)


def _opt_float(text: str) -> float | None:
    return None if text.lower() == "none" else float(text)


def _opt_int(text: str) -> int | None:
    return None if text.lower() == "none" else int(text)


def _key(parser, default=MISSING, doc: str = ""):
    return field(default=default, metadata={"parser": parser, "doc": doc})


@dataclass(frozen=True)
class RunConfig:
    """Everything one batch run needs; field names are the config keys."""

    model: str = _key(str, doc="heisenberg | tfim | hubbard | heisenberg2d")
    N: int | None = _key(_opt_int, None, "chain length (1D models)")
    Lx: int | None = _key(_opt_int, None, "columns (heisenberg2d)")
    Ly: int | None = _key(_opt_int, None, "rows (heisenberg2d)")
    J: float = _key(float, 1.0)
    g: float = _key(float, 0.0)
    t: float = _key(float, 1.0)
    U: float = _key(float, 0.0)
    mu: float = _key(float, 0.0)
    pins: tuple = _key(_pins, ())
    init: str = _key(str, "staggered", "ferro | staggered | random | ops")
    init_index: int = _key(int, 0, "basis state used by init = ferro")
    init_m: int = _key(int, 4, "bond dimension of init = random")
    init_base: str = _key(str, "ferro", "product state under init = ops")
    init_ops: tuple = _key(_site_ops, ())
    init_trail: str | None = _key(str, None, "sign-string operator for init_ops")
    seed: int | None = _key(_opt_int, None, "required for init = random")
    sweeps: int = _key(int, 10)
    m: int = _key(int, 100)
    cutoff: float = _key(float, 1e-9)
    lanczos_iters: int = _key(int, 2)
    cvgE: bool = _key(_bool, True)
    tol: float = _key(float, 1e-8)
    goal: float | None = _key(_opt_float, None)
    SvNbond: int | None = _key(_opt_int, None, "defaults to N//2 - 1")
    schedule: tuple = _key(_schedule, ())
    entropy: bool = _key(_bool, True, "write svn.tsv")
    local_ops: tuple = _key(_str_list, ())
    corr: tuple = _key(_pairs, ())
    transfer: tuple | None = _key(_window, None)
    out: str = _key(str, "out")
    disk: bool = _key(_bool, False)
    verify: bool = _key(_bool, False)
    threads: int | None = _key(_opt_int, None)

    @property
    def n_sites(self) -> int:
        return self.model_spec().n_sites

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            model=self.model, N=self.N, Lx=self.Lx, Ly=self.Ly,
            J=self.J, g=self.g, t=self.t, U=self.U, mu=self.mu, pins=self.pins,
        )

    def dmrg_params(self) -> DmrgParams:
        return DmrgParams(
            sweeps=self.sweeps,
            spec=TruncationSpec(m=self.m, cutoff=self.cutoff),
            lanczos_iters=self.lanczos_iters,
            cvg_energy=self.cvgE,
            goal=self.goal,
            tol=self.tol,
            svn_bond=self.SvNbond,
            schedule=self.schedule,
        )

    def operator_names(self) -> set[str]:
        names = set(self.local_ops)
        for pair in self.corr:
            names.update(pair)
        names.update(op for op, _ in self.init_ops)
        names.update(op for _, op, _ in self.pins)
        if self.init_trail is not None:
            names.add(self.init_trail)
        return names


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _check(cfg: RunConfig, lines: dict[str, int], path) -> None:
    def fail(msg: str, key: str | None = None, cls=ConfigError):
        raise cls(msg, lines.get(key) if key else None, path)

    if cfg.model not in MODELS:
        fail(f"unknown model {cfg.model!r}; choose from {', '.join(MODELS)}", "model", ModelError)
    if cfg.init not in INIT_STATES:
        fail(f"unknown init {cfg.init!r}; choose from {', '.join(INIT_STATES)}", "init")
    if cfg.init_base not in ("ferro", "staggered"):
        fail("init_base must be ferro or staggered", "init_base")
    if cfg.init == "random" and cfg.seed is None:
        fail("init = random requires a seed", "init")
    if cfg.init == "ops" and not cfg.init_ops:
        fail("init = ops requires init_ops", "init")
    for key in ("sweeps", "m", "lanczos_iters", "init_m"):
        if getattr(cfg, key) < 1:
            fail(f"{key} must be positive", key)
    if cfg.threads is not None and cfg.threads < 1:
        fail("threads must be positive", "threads")
    for key in ("cutoff", "tol"):
        value = getattr(cfg, key)
        if not math.isfinite(value) or value < 0:
            fail(f"{key} must be a finite non-negative number", key)
    if len(cfg.schedule) > cfg.sweeps:
        fail("schedule has more entries than sweeps", "schedule")
    names = [pair[:2] for pair in cfg.corr]
    if len(set(names)) != len(names):
        fail("corr lists the same A:B pair twice (both would write one file)", "corr")
    table = operator_set(cfg.model)
    missing = sorted(n for n in cfg.operator_names() if n not in table)
    if missing:
        fail(f"operators {missing} are not defined for model {cfg.model}; known: {', '.join(sorted(table))}", cls=ModelError)


def parse_config_text(text: str, path: str | None = None, **overrides) -> RunConfig:
    """Parse configuration text; ``overrides`` replace parsed values (already typed)."""
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, path)
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno, path)
        if not value:
            raise ConfigError(f"key {key!r} has no value", lineno, path)
        try:
            values[key] = _FIELDS[key].metadata["parser"](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, path) from None
        lines[key] = lineno
    if "model" not in values:
        raise ConfigError("missing required key 'model'", None, path)
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**values)
    _check(cfg, lines, path)
    return cfg


def parse_config(path: str | Path, **overrides) -> RunConfig:
    """Read and strictly parse a configuration file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror or exc}", None, str(p)) from None
    except UnicodeDecodeError:
        raise ConfigError("configuration is not valid UTF-8", None, str(p)) from None
    return parse_config_text(text, str(p), **overrides)
