"""Experiment configuration files and the bundled parameter presets.

The format is flat ``key = value`` text with dotted keys::

    # TFCPP with exponential jumps
    seed = 42
    arrival.kind = stable
    arrival.lambda = 4
    arrival.alpha = 0.9
    jump.kind = exponential
    jump.eta = 2
    simulate.horizon = 1
    simulate.grid = 100
    simulate.paths = 10
    output.dir = out

Blank lines and ``#`` comments are ignored. Every error names the file
line it comes from.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .jumps import (
    BernsteinType,
    CenteredTwoPoint,
    DiscreteUniform,
    Exponential,
    Logarithmic,
    MittagLeffler,
    TemperedMittagLeffler,
    TruncatedGeometric,
)
from .processes import (
    ProcessSpec,
    StableAtExpCPP,
    SubordinatorAtExpCPP,
    TemperedStableAtExpCPP,
)
from .specfun import InverseGaussian, Stable, TemperedStable

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "PRESETS",
    "preset_text",
]


class ConfigError(ValueError):
    """Invalid configuration; the message carries the offending line."""


# key -> (type, default); REQUIRED marks mandatory keys
REQUIRED = object()
_SCHEMA = {
    "seed": (int, REQUIRED),
    "arrival.kind": (str, REQUIRED),
    "arrival.lambda": (float, REQUIRED),
    "arrival.alpha": (float, None),
    "arrival.mu": (float, None),
    "arrival.delta": (float, None),
    "arrival.gamma": (float, None),
    "arrival.multiplier": (int, 1),
    "jump.kind": (str, REQUIRED),
    "jump.eta": (float, None),
    "jump.beta": (float, None),
    "jump.nu": (float, None),
    "jump.k": (int, None),
    "jump.rho": (float, None),
    "jump.q": (float, None),
    "simulate.horizon": (float, 1.0),
    "simulate.grid": (int, 100),
    "simulate.paths": (int, 1),
    "simulate.n_steps": (int, 10_000),
    "simulate.mode": (str, None),
    "output.dir": (str, "out"),
    "report.kinds": (list, []),
    "report.paths": (int, 10_000),
    "report.n_steps": (int, 10_000),
    "report.t": (float, 1.0),
    "report.s": (float, None),
    "report.t_pairs": (list, ["0.5:1", "1:2"]),
    "report.lrd_s": (float, 1.0),
    "report.lrd_t_min": (float, 2.0),
    "report.lrd_t_max": (float, 200.0),
    "report.lrd_points": (int, 12),
    "report.dde_n_max": (int, 2),
    "report.dde_h": (float, 1.0 / 128),
    "report.dde_t_max": (float, 2.0),
    "report.dde_t_min": (float, 0.25),
    "report.dde_source": (str, "semi-analytic"),
    "report.representation": (str, "stable"),
    "report.beta": (float, None),
    "report.nu": (float, None),
    "report.delta": (float, None),
    "report.gamma": (float, None),
}

_ARRIVALS = ("poisson", "stable", "tempered", "inverse_gaussian")
_JUMPS = ("exponential", "mittag_leffler", "tempered_mittag_leffler", "discrete_uniform",
          "truncated_geometric", "logarithmic", "centered")
_REPORTS = ("moments", "lrd", "martingale", "dde", "representation")


@dataclass
class ExperimentConfig:
    values: dict
    lines: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, key):
        return self.values[key]

    def _need(self, key):
        v = self.values.get(key)
        if v is None:
            raise ConfigError(f"missing required key '{key}'")
        return v

    def _at(self, key, exc):
        line = self.lines.get(key)
        where = f"line {line}: " if line else ""
        return ConfigError(f"{where}{key}: {exc}")

    @property
    def seed(self) -> int:
        return self.values["seed"]

    def canonical(self) -> str:
        return json.dumps(self.values, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def with_seed(self, seed) -> "ExperimentConfig":
        vals = dict(self.values)
        vals["seed"] = _check_seed(seed, "seed")
        return ExperimentConfig(vals, dict(self.lines))

    # ------------------------------------------------------------------
    def subordinator(self):
        kind = self.values["arrival.kind"]
        try:
            if kind == "poisson":
                return None
            if kind == "stable":
                return Stable(self._need("arrival.alpha"))
            if kind == "tempered":
                return TemperedStable(self._need("arrival.alpha"), self._need("arrival.mu"))
            return InverseGaussian(self._need("arrival.delta"), self._need("arrival.gamma"))
        except (ValueError, TypeError) as exc:
            raise self._at("arrival.kind", exc) from None

    def jump_law(self):
        kind = self.values["jump.kind"]
        n = self._need
        try:
            if kind == "exponential":
                return Exponential(n("jump.eta"))
            if kind == "mittag_leffler":
                return MittagLeffler(n("jump.beta"), n("jump.eta"))
            if kind == "tempered_mittag_leffler":
                return TemperedMittagLeffler(n("jump.beta"), n("jump.eta"), n("jump.nu"))
            if kind == "discrete_uniform":
                return DiscreteUniform(n("jump.k"))
            if kind == "truncated_geometric":
                return TruncatedGeometric(n("jump.rho"), n("jump.k"))
            if kind == "logarithmic":
                return Logarithmic(n("jump.q"))
            return CenteredTwoPoint()
        except (ValueError, TypeError) as exc:
            raise self._at("jump.kind", exc) from None

    def process_spec(self) -> ProcessSpec:
        sub = self.subordinator()
        law = self.jump_law()
        try:
            return ProcessSpec(self.values["arrival.lambda"], law, sub,
                               self.values["arrival.multiplier"])
        except (ValueError, TypeError) as exc:
            raise self._at("arrival.multiplier", exc) from None

    def t_pairs(self):
        out = []
        for item in self.values["report.t_pairs"]:
            try:
                s, t = (float(x) for x in item.split(":"))
            except ValueError:
                raise self._at("report.t_pairs", f"expected 's:t' pairs, got {item!r}") from None
            if not 0 <= s <= t:
                raise self._at("report.t_pairs", f"need 0 <= s <= t in {item!r}")
            out.append((s, t))
        return out

    def representation(self):
        """``(direct jump law, outer sampler)`` for the representation report."""
        kind = self.values["report.representation"]
        base = self.jump_law()
        if not isinstance(base, Exponential):
            raise self._at("jump.kind", "the representation report needs exponential jumps")
        eta = base.eta
        try:
            if kind == "stable":
                beta = self._need("report.beta")
                return MittagLeffler(beta, eta), StableAtExpCPP(beta)
            if kind == "tempered":
                beta, nu = self._need("report.beta"), self._need("report.nu")
                return TemperedMittagLeffler(beta, eta, nu), TemperedStableAtExpCPP(beta, nu)
            if kind == "inverse_gaussian":
                g = InverseGaussian(self._need("report.delta"), self._need("report.gamma"))
                return BernsteinType(g, eta), SubordinatorAtExpCPP(g)
        except (ValueError, TypeError) as exc:
            raise self._at("report.representation", exc) from None
        raise self._at("report.representation",
                       "expected one of stable, tempered, inverse_gaussian")


def _check_seed(v, key):
    if not 0 <= v < 2 ** 64:
        raise ConfigError(f"{key}: seed must be an unsigned 64-bit integer")
    return v


def _convert(key, raw, typ):
    if typ is list:
        return [x.strip() for x in raw.split(",") if x.strip()]
    if typ is int:
        try:
            return int(raw, 10)
        except ValueError:
            raise ValueError(f"expected an integer, got {raw!r}") from None
    if typ is float:
        try:
            v = float(raw)
        except ValueError:
            raise ValueError(f"expected a number, got {raw!r}") from None
        if not math.isfinite(v):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return v
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; raises `ConfigError` with a line number."""
    values, lines = {}, {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line.strip()!r}")
        key, raw = (x.strip() for x in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}' (first set on line {lines[key]})")
        if not raw:
            raise ConfigError(f"line {lineno}: empty value for '{key}'")
        try:
            values[key] = _convert(key, raw, _SCHEMA[key][0])
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
        lines[key] = lineno

    for key, (_, default) in _SCHEMA.items():
        if key not in values:
            if default is REQUIRED:
                raise ConfigError(f"missing required key '{key}'")
            values[key] = list(default) if isinstance(default, list) else default

    cfg = ExperimentConfig(values, lines)
    _validate(cfg)
    return cfg


def _validate(cfg):
    v = cfg.values

    def bad(key, msg):
        raise cfg._at(key, msg)

    _check_seed(v["seed"], "seed") if v["seed"] >= 0 else bad("seed", "seed must be >= 0")
    if v["arrival.kind"] not in _ARRIVALS:
        bad("arrival.kind", f"expected one of {', '.join(_ARRIVALS)}")
    if v["jump.kind"] not in _JUMPS:
        bad("jump.kind", f"expected one of {', '.join(_JUMPS)}")
    for key in ("simulate.horizon", "report.t", "report.lrd_t_max", "report.dde_h",
                "report.dde_t_max"):
        if not v[key] > 0:
            bad(key, "must be > 0")
    for key in ("simulate.grid", "simulate.n_steps", "report.n_steps", "report.lrd_points"):
        if v[key] < 1:
            bad(key, "must be >= 1")
    for key in ("simulate.paths", "report.paths", "report.dde_n_max"):
        if v[key] < 0:
            bad(key, "must be >= 0")
    if v["simulate.mode"] not in (None, "events", "grid"):
        bad("simulate.mode", "expected events or grid")
    for kind in v["report.kinds"]:
        if kind not in _REPORTS:
            bad("report.kinds", f"unknown report {kind!r}; expected {', '.join(_REPORTS)}")
    if v["report.dde_source"] not in ("semi-analytic", "monte-carlo"):
        bad("report.dde_source", "expected semi-analytic or monte-carlo")
    # constructing the objects runs their own range checks
    cfg.process_spec()
    cfg.t_pairs()


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# =======
# Presets
# =======

_ROWS = {
    "cpp": ["arrival.kind = poisson"],
    "cpp-iign": ["arrival.kind = inverse_gaussian", "arrival.delta = 0.3", "arrival.gamma = 1"],
    "cpp-itss": ["arrival.kind = tempered", "arrival.alpha = 0.7", "arrival.mu = 2"],
}
_COLUMNS = {
    "exponential": ["jump.kind = exponential", "jump.eta = 2"],
    "mittag-leffler": ["jump.kind = mittag_leffler", "jump.eta = 2", "jump.beta = 0.9"],
    "discrete-uniform": ["jump.kind = discrete_uniform", "jump.k = 5", "arrival.multiplier = 5"],
    "logarithmic": ["jump.kind = logarithmic", "jump.q = 0.5"],
}


def preset_text(row, column, seed=20240101):
    body = [f"# preset {row}-{column}", f"seed = {seed}", "arrival.lambda = 4"]
    body += _ROWS[row] + _COLUMNS[column]
    body += ["simulate.horizon = 10", "simulate.grid = 1000", "simulate.paths = 3",
             f"output.dir = out/{row}-{column}"]
    if column != "mittag-leffler":
        # Mittag-Leffler jumps have no finite mean
        body.append("report.kinds = moments, martingale")
    return "\n".join(body) + "\n"


PRESETS = {f"{r}-{c}": (r, c) for r in _ROWS for c in _COLUMNS}
