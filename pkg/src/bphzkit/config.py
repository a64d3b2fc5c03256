"""Run configuration files.

A config is a plain JSON object with optional sections; everything has
a default so the empty object is valid.  Rational parameters are
written as strings like ``"-251/100"`` (or bare ints), integrability
as a number or ``"inf"``.  ``fingerprint`` hashes the resolved
content so reports can cite the exact configuration that produced
them.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from .degrees import INF, PValue, StructureParams
from .grids import NOISE_LAWS, Grid
from .rules import PRESETS, Rule, preset

__all__ = [
    "Config",
    "ConfigError",
    "fingerprint",
    "load_config",
    "parse_rational",
    "parse_pvalue",
    "rational_str",
    "pvalue_str",
]


class ConfigError(ValueError):
    """Invalid or inconsistent configuration content."""


def parse_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ConfigError(f"expected a rational, got {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad rational literal {x!r}") from exc
    raise ConfigError(f"expected a rational, got {x!r}")


def rational_str(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_pvalue(x) -> PValue:
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity"):
        return INF
    if x == INF:
        return INF
    q = parse_rational(x)
    if q < 2:
        raise ConfigError(f"integrability must be >= 2 or inf, got {x!r}")
    return q


def pvalue_str(p: PValue) -> str:
    return "inf" if p == INF else rational_str(p)


_RATIONAL_OVERRIDES = ("eps", "a", "b", "s0", "r0", "beta0", "C0")


@dataclass
class Config:
    """Validated run configuration.

    preset names one of the built-in rules; an inline ``rule`` section
    may replace it (then ``params`` must supply the analytic data).
    ``params`` entries override the preset's StructureParams fields.
    """

    preset: str | None = "phi4_3"
    rule: dict | None = None
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Config":
        if not isinstance(data, Mapping):
            raise ConfigError("config root must be a JSON object")
        known = {"preset", "rule", "params", "grid", "experiment"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(
            preset=data.get("preset", "phi4_3" if "rule" not in data else None),
            rule=data.get("rule"),
            params=dict(data.get("params", {})),
            grid=dict(data.get("grid", {})),
            experiment=dict(data.get("experiment", {})),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.rule is None and self.preset is None:
            raise ConfigError("need either a preset name or an inline rule")
        if self.rule is None and self.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {self.preset!r}; available: {sorted(PRESETS)}"
            )
        if self.rule is not None:
            needed = {"name", "d", "productions"}
            missing = needed - set(self.rule)
            if missing:
                raise ConfigError(f"inline rule missing keys: {sorted(missing)}")
        for key in self.params:
            if key not in _RATIONAL_OVERRIDES + ("p", "d"):
                raise ConfigError(f"unknown params override {key!r}")
        for key in self.grid:
            if key not in ("nt", "nx", "T", "L"):
                raise ConfigError(f"unknown grid key {key!r}")
        exp = self.experiment
        for key in exp:
            if key not in (
                "samples",
                "seed",
                "law",
                "mollification",
                "tol",
                "probes",
                "h_ladder",
            ):
                raise ConfigError(f"unknown experiment key {key!r}")
        if "law" in exp and exp["law"] not in NOISE_LAWS:
            raise ConfigError(
                f"unknown noise law {exp['law']!r}; known: {NOISE_LAWS}"
            )
        for key in ("samples", "seed", "mollification", "probes"):
            if key in exp and (not isinstance(exp[key], int) or exp[key] < 0):
                raise ConfigError(f"experiment.{key} must be a nonnegative int")
        if "tol" in exp and not (
            isinstance(exp["tol"], (int, float)) and exp["tol"] > 0
        ):
            raise ConfigError("experiment.tol must be a positive number")
        # exercise the rational parses so errors surface at load time
        self.resolve()

    def resolve(self) -> tuple[Rule, StructureParams]:
        """The (rule, params) pair with overrides applied."""
        if self.rule is not None:
            spec = self.rule
            rule = Rule(
                name=str(spec["name"]),
                d=int(spec["d"]),
                productions=frozenset(
                    (int(a), int(b)) for a, b in spec["productions"]
                ),
                poly_budget=int(spec.get("poly_budget", 0)),
                deriv_budget=int(spec.get("deriv_budget", 0)),
            )
            base = {
                "d": rule.d,
                "s0": Fraction(0),
                "r0": Fraction(-1),
                "beta0": Fraction(199, 100),
                "C0": Fraction(1),
            }
        else:
            rule, params0 = preset(self.preset)
            base = {
                "d": params0.d,
                "s0": params0.s0,
                "r0": params0.r0,
                "beta0": params0.beta0,
                "C0": params0.C0,
                "eps": params0.eps,
                "p": params0.p,
                "a": params0.a,
                "b": params0.b,
            }
        for key in _RATIONAL_OVERRIDES:
            if key in self.params:
                base[key] = parse_rational(self.params[key])
        if "p" in self.params:
            base["p"] = parse_pvalue(self.params["p"])
        if "d" in self.params and int(self.params["d"]) != rule.d:
            raise ConfigError("params.d must match the rule dimension")
        base["d"] = rule.d
        try:
            return rule, StructureParams(**base)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def make_grid(self, default_nt: int = 8, default_nx: int = 8) -> Grid:
        rule, _ = self.resolve()
        g = self.grid
        try:
            return Grid(
                rule.d,
                int(g.get("nt", default_nt)),
                int(g.get("nx", default_nx)),
                float(g.get("T", 1.0)),
                float(g.get("L", 1.0)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def experiment_value(self, key: str, default):
        return self.experiment.get(key, default)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        if self.preset is not None:
            out["preset"] = self.preset
        if self.rule is not None:
            out["rule"] = {
                "name": self.rule["name"],
                "d": self.rule["d"],
                "productions": sorted(
                    [int(a), int(b)] for a, b in self.rule["productions"]
                ),
                "poly_budget": int(self.rule.get("poly_budget", 0)),
                "deriv_budget": int(self.rule.get("deriv_budget", 0)),
            }
        if self.params:
            out["params"] = {
                k: (pvalue_str(parse_pvalue(v)) if k == "p" else rational_str(parse_rational(v)))
                if k != "d"
                else int(v)
                for k, v in sorted(self.params.items())
            }
        if self.grid:
            out["grid"] = {k: self.grid[k] for k in sorted(self.grid)}
        if self.experiment:
            out["experiment"] = {k: self.experiment[k] for k in sorted(self.experiment)}
        return out

    def fingerprint(self) -> str:
        return fingerprint(self.to_dict())


def fingerprint(data: Mapping[str, Any]) -> str:
    """Stable short hash of a JSON-representable mapping."""
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def load_config(path) -> Config:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return Config.from_dict(data)
