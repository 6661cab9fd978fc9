"""Simulators and analytic targets for each experiment type.

Each construction turns a block of trials into a :class:`Tally`.  Tallies
merge by adding counts and concatenating samples in block order, so the
merged result is the same however the blocks were scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np

from .. import graphs, ktheory, markov, simplex, uhf, villadsen
from ..markov import bounds
from .config import Comparison, ConfigError, parse_fraction


@dataclass(frozen=True)
class StatDef:
    # "proportion", "scalar" or "distribution"
    kind: str
    analytic: Optional[str]
    args: tuple[str, ...] = ()
    default_rule: str = "binomial"


@dataclass
class Tally:
    n: int = 0
    hits: dict = field(default_factory=dict)
    unresolved: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def add(self, key: int, hits: int, unresolved: int = 0) -> None:
        """Count for the comparison at position ``key``."""
        self.hits[key] = self.hits.get(key, 0) + int(hits)
        self.unresolved[key] = self.unresolved.get(key, 0) + int(unresolved)

    def merge(self, other: "Tally", keep: int) -> "Tally":
        out = Tally(self.n + other.n)
        for label in {**self.hits, **other.hits}:
            out.hits[label] = self.hits.get(label, 0) + other.hits.get(label, 0)
            out.unresolved[label] = self.unresolved.get(label, 0) + other.unresolved.get(label, 0)
        for label in {**self.values, **other.values}:
            parts = [v for v in (self.values.get(label), other.values.get(label)) if v is not None]
            out.values[label] = np.concatenate(parts)
        out.records = (self.records + other.records)[:keep]
        return out


def _sig(x: float) -> float:
    return float(f"{x:.12g}")


class Construction:
    name: str
    block_size: int
    statistics: Mapping[str, StatDef]

    def parse(self, params: Mapping[str, Any]):
        raise NotImplementedError

    def check_args(self, params: Mapping[str, Any], comparison: Comparison) -> None:
        pass

    def run_block(self, model, comparisons: Sequence[Comparison], n: int, rng, keep: int) -> Tally:
        raise NotImplementedError

    def analytic(self, model, comparison: Comparison):
        """``(lo, hi)`` for proportions, a float for scalars, a CDF for distributions."""
        raise NotImplementedError


def _int_arg(comparison: Comparison, name: str, minimum: int) -> int:
    v = comparison.arg_dict[name]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"args.{name}", f"expected an integer >= {minimum}, got {v!r}")
    return v


def _float_bounds(value) -> tuple[float, float]:
    lo, hi = bounds(value)
    return float(lo), float(hi)


# --------------------------------------------------------------------------
# Birth-death walks (shared by MarkovOnly, Uhf, Simplex)


@dataclass(frozen=True)
class WalkModel:
    spec: markov.TransitionSpec
    initial: markov.InitialDistribution
    max_steps: int
    escape_eps: Optional[float]


def parse_walk(params: Mapping[str, Any]) -> WalkModel:
    loc = "parameters"
    if "p" not in params:
        raise ConfigError(loc, "missing field 'p'")
    p = parse_fraction(params["p"], f"{loc}.p")
    q0 = params.get("q0")
    try:
        family = markov.ConstantPQ(p)
        if "prefix" in params:
            prefix = [parse_fraction(v, f"{loc}.prefix[{k}]") for k, v in enumerate(params["prefix"])]
            family = markov.Table(tuple(prefix), family)
        boundary = markov.Reflecting() if q0 is None else markov.Absorbing(parse_fraction(q0, f"{loc}.q0"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(loc, str(exc)) from None
    spec = markov.TransitionSpec(family, boundary)

    raw_init = params.get("initial", {"0": 1})
    if not isinstance(raw_init, Mapping):
        raise ConfigError(f"{loc}.initial", "must map states to weights")
    try:
        weights = {int(s): parse_fraction(w, f"{loc}.initial.{s}") for s, w in raw_init.items()}
        initial = markov.InitialDistribution(weights)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{loc}.initial", str(exc)) from None

    max_steps = params.get("max_steps", 10_000)
    if isinstance(max_steps, bool) or not isinstance(max_steps, int) or max_steps < 1:
        raise ConfigError(f"{loc}.max_steps", "must be a positive integer")
    eps = params.get("escape_eps")
    if eps is not None:
        if isinstance(eps, bool) or not isinstance(eps, (int, float)) or not 0 < eps < 1:
            raise ConfigError(f"{loc}.escape_eps", "must lie in (0, 1)")
        if q0 is None:
            raise ConfigError(f"{loc}.escape_eps", "escape barriers need an absorbing boundary (q0)")
    return WalkModel(spec, initial, max_steps, eps)


def _walk_batch(model: WalkModel, n: int, rng, stop_above: Optional[int]) -> markov.WalkBatch:
    starts = np.atleast_1d(model.initial.sample(rng, n))
    return markov.simulate_batch(
        model.spec, starts, rng, model.max_steps, stop_above=stop_above, escape_eps=model.escape_eps
    )


def _bounded_max_counts(batch: markov.WalkBatch, k: int) -> tuple[int, int]:
    below = batch.maximum <= k
    hits = int((batch.absorbed & below).sum())
    # escaped or still running without exceeding k: could go either way
    unresolved = int((~batch.absorbed & below).sum())
    return hits, unresolved


def _walk_records(batch: markov.WalkBatch, keep: int, extra: Callable[[int], dict] = None) -> list[dict]:
    out = []
    for t in range(min(keep, len(batch.start))):
        rec = {
            "start": int(batch.start[t]),
            "max": int(batch.maximum[t]),
            "absorbed": bool(batch.absorbed[t]),
            "escaped": bool(batch.escaped[t]),
            "steps": int(batch.steps[t]),
        }
        if extra:
            rec.update(extra(t))
        out.append(rec)
    return out


class _WalkConstruction(Construction):
    block_size = 8192
    # statistics whose resolution needs the walk to run until absorption
    _full_length = ("absorbed", "finite_dimensional")

    def parse(self, params):
        return parse_walk(params)

    def _bound(self, comparison: Comparison) -> int:
        raise NotImplementedError

    def check_args(self, params, comparison):
        if params.get("q0") is None:
            raise ConfigError("statistic", f"{comparison.statistic!r} needs an absorbing boundary (q0)")
        if comparison.args:
            self._bound(comparison)

    def run_block(self, model, comparisons, n, rng, keep):
        full = any(c.statistic in self._full_length for c in comparisons)
        bounded = [self._bound(c) for c in comparisons if c.args]
        stop = None if full or not bounded else max(bounded)
        batch = _walk_batch(model, n, rng, stop)
        tally = Tally(n)
        for key, c in enumerate(comparisons):
            if c.statistic in self._full_length:
                tally.add(key, batch.absorbed.sum(), batch.running.sum())
            else:
                tally.add(key, *_bounded_max_counts(batch, self._bound(c)))
        tally.records = _walk_records(batch, keep, self._record_extra(batch))
        return tally

    def _record_extra(self, batch):
        return None


class MarkovOnly(_WalkConstruction):
    name = "MarkovOnly"
    statistics = {
        "absorbed": StatDef("proportion", "markov.absorption_probability"),
        "max_at_most": StatDef("proportion", "markov.stay_at_most_probability", ("k",)),
    }

    def _bound(self, c):
        return _int_arg(c, "k", 0)

    def analytic(self, model, c):
        lo = hi = 0.0
        for i, w in model.initial:
            if c.statistic == "absorbed":
                a, b = _float_bounds(markov.absorption_probability(model.spec, i))
            else:
                a = b = float(markov.stay_at_most_probability(model.spec, self._bound(c), i))
            lo += float(w) * a
            hi += float(w) * b
        return lo, hi


class Uhf(_WalkConstruction):
    name = "Uhf"
    statistics = {
        "finite_dimensional": StatDef("proportion", "uhf.prob_finite_dimensional"),
        "bounded_prime": StatDef("proportion", "uhf.prob_bounded_prime", ("k",)),
    }

    def _bound(self, c):
        return _int_arg(c, "k", 0)

    def analytic(self, model, c):
        if c.statistic == "finite_dimensional":
            return _float_bounds(uhf.prob_finite_dimensional(model.spec, model.initial))
        return _float_bounds(uhf.prob_bounded_prime(model.spec, model.initial, self._bound(c)))

    def _record_extra(self, batch):
        return lambda t: {"largest_prime": uhf.prime_enumeration(int(batch.maximum[t]))}


class Simplex(_WalkConstruction):
    name = "Simplex"
    statistics = {
        "traces_at_most": StatDef("proportion", "simplex.extremal_traces_at_most_prob", ("k",)),
    }

    def parse(self, params):
        model = parse_walk(params)
        m = params.get("measure", "K")
        if m not in {x.value for x in simplex.Measure}:
            raise ConfigError("parameters.measure", f"unknown measure {m!r}")
        return model

    def _bound(self, c):
        # at most k extreme points <=> the walk never exceeds k - 1
        return _int_arg(c, "k", 1) - 1

    def analytic(self, model, c):
        k = _int_arg(c, "k", 1)
        return _float_bounds(simplex.extremal_traces_at_most_prob(model.spec, model.initial, k))

    def _record_extra(self, batch):
        return lambda t: {"extreme_points": max(int(batch.maximum[t]), 0) + 1}


# --------------------------------------------------------------------------
# Radius of comparison


@dataclass(frozen=True)
class VilladsenModel:
    walk: villadsen.BetaWalkSpec
    tame: Optional[villadsen.QFamily]


def _parse_beta(value) -> float:
    if isinstance(value, str):
        text = value.strip().replace(" ", "")
        sign = -1.0 if text.startswith("-") else 1.0
        if text.lstrip("+-") == "ln2":
            return sign * villadsen.LN2
        try:
            return float(Fraction(text))
        except ValueError:
            pass
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ConfigError("parameters.beta", f"expected a number or 'ln2', got {value!r}")


def _parse_family(doc) -> villadsen.QFamily:
    loc = "parameters.tame"
    if not isinstance(doc, Mapping):
        raise ConfigError(loc, "must be an object")
    kind = doc.get("family")
    if kind == "constant":
        return villadsen.ConstantQ(parse_fraction(doc.get("q"), f"{loc}.q"))
    if kind == "one_minus_inverse_square":
        return villadsen.OneMinusInverseSquare(parse_fraction(doc.get("first", "1/2"), f"{loc}.first"))
    if kind == "table":
        prefix = [parse_fraction(v, f"{loc}.prefix[{k}]") for k, v in enumerate(doc.get("prefix", []))]
        return villadsen.QTable(tuple(prefix), parse_fraction(doc.get("tail"), f"{loc}.tail"))
    raise ConfigError(f"{loc}.family", f"unknown family {kind!r}")


class Villadsen(Construction):
    name = "Villadsen"
    block_size = 1 << 16
    statistics = {
        "zstable": StatDef("proportion", "villadsen.prob_zstable"),
        "ccdf": StatDef("proportion", "villadsen.ccdf_R", ("r",)),
        "cdf": StatDef("distribution", "villadsen.cdf_R", default_rule="ks"),
        "mean": StatDef("scalar", "villadsen.expected_R"),
        "tame_in_window": StatDef("proportion", "villadsen.tame_in_window_probability", ("start", "stop")),
    }

    def parse(self, params):
        beta = _parse_beta(params.get("beta", 0.0))
        raw_init = params.get("initial", {"1": 1})
        if not isinstance(raw_init, Mapping):
            raise ConfigError("parameters.initial", "must map values of W0 to weights")
        init = {
            parse_fraction(v, f"parameters.initial.{v}"): parse_fraction(w, f"parameters.initial.{v}")
            for v, w in raw_init.items()
        }
        try:
            walk = villadsen.BetaWalkSpec(beta, init, params.get("bit_budget", villadsen.DEFAULT_BIT_BUDGET))
        except ValueError as exc:
            raise ConfigError("parameters", str(exc)) from None
        tame = _parse_family(params["tame"]) if "tame" in params else None
        return VilladsenModel(walk, tame)

    def check_args(self, params, c):
        if c.statistic == "tame_in_window":
            if "tame" not in params:
                raise ConfigError("statistic", "tame_in_window needs parameters.tame")
            start, stop = _int_arg(c, "start", 1), _int_arg(c, "stop", 1)
            if stop < start:
                raise ConfigError("args.stop", "must be >= start")
        if c.statistic == "ccdf":
            r = c.arg_dict["r"]
            if isinstance(r, bool) or not isinstance(r, (int, float)) or r <= 0:
                raise ConfigError("args.r", "must be a positive number")

    def run_block(self, model, comparisons, n, rng, keep):
        tally = Tally(n)
        w0, r = villadsen.sample_R_batch(model.walk, n, rng)
        windows = [c for c in comparisons if c.statistic == "tame_in_window"]
        tame = None
        if windows:
            horizon = max(_int_arg(c, "stop", 1) for c in windows)
            tame = villadsen.simulate_tame_choices(model.tame, horizon, n, rng)
        for key, c in enumerate(comparisons):
            if c.statistic == "zstable":
                tally.add(key, (w0 == 0).sum())
            elif c.statistic == "ccdf":
                tally.add(key, (r >= float(c.arg_dict["r"])).sum())
            elif c.statistic in ("cdf", "mean"):
                tally.values["R"] = r
            else:
                a, b = _int_arg(c, "start", 1), _int_arg(c, "stop", 1)
                tally.add(key, tame[:, a - 1 : b].any(axis=1).sum())
        tally.records = [{"w0": str(Fraction(w0[t]).limit_denominator(1 << 62)), "r": _sig(r[t])} for t in range(min(keep, n))]
        return tally

    def analytic(self, model, c):
        walk = model.walk
        if c.statistic == "zstable":
            v = float(villadsen.prob_zstable(walk))
            return v, v
        if c.statistic == "ccdf":
            v = villadsen.ccdf_R(walk, float(c.arg_dict["r"]))
            return v, v
        if c.statistic == "cdf":
            return lambda x: villadsen.cdf_R(walk, x)
        if c.statistic == "mean":
            return villadsen.expected_R(walk)
        v = float(villadsen.tame_in_window_probability(model.tame, c.arg_dict["start"], c.arg_dict["stop"]))
        return v, v


# --------------------------------------------------------------------------
# Random regular graphs


@dataclass(frozen=True)
class GraphModel:
    n: int
    r: int


class GraphKTheory(Construction):
    name = "GraphKTheory"
    block_size = 25
    statistics = {
        "sylow": StatDef("proportion", "ktheory.wood_limit_probability", ("p", "partition")),
        "simple": StatDef("proportion", None, default_rule="at_least"),
        "purely_infinite": StatDef("proportion", None, default_rule="at_least"),
        "simple_iff_connected": StatDef("proportion", None, default_rule="at_least"),
    }

    def parse(self, params):
        n, r = params.get("n"), params.get("r", 3)
        if isinstance(n, bool) or not isinstance(n, int) or n < 2 or n % 2:
            raise ConfigError("parameters.n", "must be an even integer >= 2")
        if isinstance(r, bool) or not isinstance(r, int) or r < 1:
            raise ConfigError("parameters.r", "must be a positive integer")
        return GraphModel(n, r)

    def check_args(self, params, c):
        if c.statistic != "sylow":
            return
        p = _int_arg(c, "p", 2)
        part = c.arg_dict["partition"]
        if not isinstance(part, tuple) or any(isinstance(e, bool) or not isinstance(e, int) or e < 1 for e in part):
            raise ConfigError("args.partition", "must be a list of positive integers")
        try:
            ktheory.wood_limit_probability({p: part}, params.get("r", 3))
        except ValueError as exc:
            raise ConfigError("args.p", str(exc)) from None

    def run_block(self, model, comparisons, n, rng, keep):
        tally = Tally(n)
        want_k = any(c.statistic == "sylow" for c in comparisons)
        counts = [0] * len(comparisons)
        for t in range(n):
            g = graphs.sample_regular_multigraph(model.n, model.r, rng)
            d = graphs.double_to_digraph(g)
            pred = graphs.kirchberg_predicates(d)
            k0 = None
            if want_k or t < keep:
                k0 = ktheory.k_groups(d).k0 if not pred.has_sink else None
            for key, c in enumerate(comparisons):
                if c.statistic == "sylow":
                    part = tuple(sorted(c.arg_dict["partition"], reverse=True))
                    counts[key] += k0 is not None and k0.partition(c.arg_dict["p"]) == part
                elif c.statistic == "simple":
                    counts[key] += bool(pred.simple)
                elif c.statistic == "purely_infinite":
                    counts[key] += pred.purely_infinite
                else:
                    counts[key] += bool(pred.simple) == graphs.is_connected(g)
            if t < keep:
                tally.records.append({"k0": str(k0), "simple": pred.simple, "purely_infinite": pred.purely_infinite})
        for key, v in enumerate(counts):
            tally.add(key, v)
        return tally

    def analytic(self, model, c):
        v = ktheory.wood_limit_probability({c.arg_dict["p"]: c.arg_dict["partition"]}, model.r)
        return v, v


REGISTRY: dict[str, Construction] = {
    cls.name: cls() for cls in (MarkovOnly, Uhf, Simplex, Villadsen, GraphKTheory)
}
