"""Experiment descriptions and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Union

from .stats import KS, Absolute, AtLeast, AtMost, BinomialCI, Rule

MAX_SEED = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid experiment description; ``location`` points at the bad field."""

    def __init__(self, location: str, message: str):
        self.location = location
        self.message = message
        super().__init__(f"{location}: {message}" if location else message)


@dataclass(frozen=True)
class Comparison:
    statistic: str
    args: tuple[tuple[str, Any], ...]
    # analytic operation name, or a literal threshold
    target: Union[str, float]
    rule: Rule

    @property
    def arg_dict(self) -> dict:
        return dict(self.args)

    @property
    def label(self) -> str:
        if not self.args:
            return self.statistic
        inner = ",".join(f"{k}={_fmt_arg(v)}" for k, v in self.args)
        return f"{self.statistic}[{inner}]"


def _fmt_arg(v) -> str:
    if isinstance(v, (list, tuple)):
        return "(" + " ".join(str(x) for x in v) + ")"
    return str(v)


@dataclass(frozen=True)
class ExperimentSpec:
    construction: str
    parameters: Mapping[str, Any]
    trials: int
    master_seed: int
    comparisons: tuple[Comparison, ...] = ()
    keep_samples: int = 5
    raw: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def with_overrides(self, *, trials=None, master_seed=None) -> "ExperimentSpec":
        doc = dict(self.raw)
        if trials is not None:
            doc["trials"] = trials
        if master_seed is not None:
            doc["master_seed"] = master_seed
        return parse_spec(doc)


def parse_fraction(value, location: str) -> Fraction:
    try:
        if isinstance(value, bool):
            raise TypeError
        if isinstance(value, float):
            return Fraction(repr(value))
        if isinstance(value, (int, str)):
            return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        pass
    raise ConfigError(location, f"expected a number or fraction string, got {value!r}")


def _require(doc: Mapping, key: str, kind, location: str):
    if key not in doc:
        raise ConfigError(location, f"missing field '{key}'")
    value = doc[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{location}.{key}".lstrip("."), f"expected an integer, got {value!r}")
    if kind is not int and not isinstance(value, kind):
        raise ConfigError(f"{location}.{key}".lstrip("."), f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def parse_rule(doc, location: str) -> Rule:
    if not isinstance(doc, Mapping):
        raise ConfigError(location, "rule must be an object")
    kind = doc.get("kind")
    try:
        if kind == "binomial":
            return BinomialCI(float(doc.get("z", 3.0)))
        if kind == "ks":
            return KS(float(doc.get("threshold", 0.005)))
        if kind == "absolute":
            return Absolute(float(_require(doc, "tol", (int, float), location)))
        if kind == "at_least":
            return AtLeast()
        if kind == "at_most":
            return AtMost()
    except (TypeError, ValueError) as exc:
        raise ConfigError(location, str(exc)) from None
    raise ConfigError(f"{location}.kind", f"unknown rule kind {kind!r}")


def rule_name(rule: Rule) -> str:
    if isinstance(rule, BinomialCI):
        return f"binomial(z={rule.z:g})"
    if isinstance(rule, KS):
        return f"ks(threshold={rule.threshold:g})"
    if isinstance(rule, Absolute):
        return f"absolute(tol={rule.tol:g})"
    return "at_least" if isinstance(rule, AtLeast) else "at_most"


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    return v


def parse_spec(doc: Any) -> ExperimentSpec:
    from .constructions import REGISTRY  # circular at import time

    if not isinstance(doc, Mapping):
        raise ConfigError("", "experiment must be a JSON object")
    name = _require(doc, "construction", str, "")
    if name not in REGISTRY:
        raise ConfigError("construction", f"unknown construction {name!r}; choose from {sorted(REGISTRY)}")
    construction = REGISTRY[name]
    trials = _require(doc, "trials", int, "")
    if trials < 1:
        raise ConfigError("trials", "must be >= 1")
    seed = _require(doc, "master_seed", int, "")
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError("master_seed", "must be a 64-bit unsigned value")
    keep = doc.get("keep_samples", 5)
    if isinstance(keep, bool) or not isinstance(keep, int) or keep < 0:
        raise ConfigError("keep_samples", "must be a non-negative integer")
    params = doc.get("parameters", {})
    if not isinstance(params, Mapping):
        raise ConfigError("parameters", "must be an object")
    construction.parse(params)  # validate early; raises ConfigError

    comparisons = []
    raw_cmp = doc.get("comparisons", [])
    if not isinstance(raw_cmp, list):
        raise ConfigError("comparisons", "must be a list")
    for idx, c in enumerate(raw_cmp):
        loc = f"comparisons[{idx}]"
        if not isinstance(c, Mapping):
            raise ConfigError(loc, "must be an object")
        stat = _require(c, "statistic", str, loc)
        sdef = construction.statistics.get(stat)
        if sdef is None:
            raise ConfigError(f"{loc}.statistic", f"{name} has no statistic {stat!r}; choose from {sorted(construction.statistics)}")
        args = c.get("args", {})
        if not isinstance(args, Mapping):
            raise ConfigError(f"{loc}.args", "must be an object")
        unknown = set(args) - set(sdef.args)
        missing = set(sdef.args) - set(args)
        if unknown:
            raise ConfigError(f"{loc}.args", f"unexpected argument(s) {sorted(unknown)}")
        if missing:
            raise ConfigError(f"{loc}.args", f"missing argument(s) {sorted(missing)}")
        target = c.get("target", sdef.analytic)
        if target is None:
            raise ConfigError(f"{loc}.target", f"statistic {stat!r} has no analytic operation; give a numeric target")
        if isinstance(target, str):
            if target != sdef.analytic:
                raise ConfigError(f"{loc}.target", f"statistic {stat!r} is checked against {sdef.analytic!r}, not {target!r}")
        elif isinstance(target, (int, float)) and not isinstance(target, bool):
            target = float(target)
        else:
            raise ConfigError(f"{loc}.target", "must name an analytic operation or be a number")
        rule = parse_rule(c.get("rule", {"kind": sdef.default_rule}), f"{loc}.rule")
        if sdef.kind == "distribution" and not isinstance(rule, KS):
            raise ConfigError(f"{loc}.rule", "distribution statistics need a ks rule")
        if sdef.kind != "distribution" and isinstance(rule, KS):
            raise ConfigError(f"{loc}.rule", "ks rules apply only to distribution statistics")
        frozen = tuple(sorted((k, _freeze(v)) for k, v in args.items()))
        comparison = Comparison(stat, frozen, target, rule)
        try:
            construction.check_args(params, comparison)
        except ConfigError as exc:
            raise ConfigError(f"{loc}.{exc.location}".rstrip("."), exc.message) from None
        comparisons.append(comparison)

    return ExperimentSpec(
        construction=name,
        parameters=params,
        trials=trials,
        master_seed=seed,
        comparisons=tuple(comparisons),
        keep_samples=keep,
        raw=json.loads(json.dumps(doc)),
    )


def loads_spec(text: str) -> ExperimentSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return parse_spec(doc)


def load_spec(path: Union[str, Path]) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), exc.strerror or str(exc)) from None
    try:
        return loads_spec(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc.location}" if exc.location else str(path), exc.message) from None
