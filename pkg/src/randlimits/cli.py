"""Command-line entry point: ``randlimits <area> <action> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from . import graphs, ktheory, markov, simplex, uhf, villadsen
from .harness import ConfigError, emit_report, load_spec, run_experiment
from .harness.seeding import MASK64, block_rng

SEED_ENV = "RANDLIMITS_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        seed = int(raw, 0)
    except ValueError:
        raise SystemExit(f"{SEED_ENV}={raw!r} is not an integer")
    return seed & MASK64


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a number or fraction")


def _mapping(text: str) -> dict[str, Fraction]:
    """``"0:1/2,1:1/2"`` -> ``{"0": 1/2, "1": 1/2}``."""
    out = {}
    for part in text.split(","):
        key, sep, weight = part.partition(":")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected state:weight pairs, got {part!r}")
        out[key.strip()] = _fraction(weight.strip())
    return out


def _beta(text: str) -> float:
    t = text.strip()
    if t.lstrip("+-") == "ln2":
        return -villadsen.LN2 if t.startswith("-") else villadsen.LN2
    return float(_fraction(t))


def _prob(value) -> dict:
    lo, hi = markov.bounds(value)
    if lo == hi:
        return {"exact": str(lo), "value": float(lo)}
    return {"lower": str(lo), "upper": str(hi), "value": float((lo + hi) / 2)}


def _emit(rows: list[dict] | dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(rows, indent=2, default=str) + "\n")
        return
    rows = rows if isinstance(rows, list) else [rows]
    fields: list[str] = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (format(v, ".12g") if isinstance(v, float) else v) for k, v in r.items()})
    out.write(buf.getvalue())


def _walk_spec(args) -> markov.TransitionSpec:
    return markov.TransitionSpec.constant(args.p, args.q0)


def _initial(args) -> markov.InitialDistribution:
    return markov.InitialDistribution({int(k): v for k, v in args.initial.items()})


def _rngs(args, count: int) -> Iterable[np.random.Generator]:
    # one stream per sample, so sample t is the same whatever the count
    for t in range(count):
        yield block_rng(args.seed, t)


# ------------------------------------------------------------------ markov


def cmd_markov_classify(args):
    c = markov.classify_chain(_walk_spec(args))
    return {"kind": c.kind.value, **{k: v for k, v in c.diagnostics.items() if k != "tail"}}


def cmd_markov_absorb(args):
    return {"i": args.i, "absorption": _prob(markov.absorption_probability(_walk_spec(args), args.i))}


def cmd_markov_hitmax(args):
    spec = _walk_spec(args)
    rows = []
    for i in range(0, args.k + 1):
        v = markov.max_not_exceeding_probability(spec, args.k, i)
        rows.append({"k": args.k, "i": i, "probability": str(v), "value": float(v)})
    return rows


# ------------------------------------------------------------------ uhf


def cmd_uhf_sample(args):
    spec, init = _walk_spec(args), _initial(args)
    rows = []
    for t, rng in enumerate(_rngs(args, args.trials)):
        s = uhf.sample_uhf(spec, init, args.max_steps, rng)
        rows.append({
            "trial": t,
            "supernatural": str(s.number) or "1",
            "terminal": s.number.terminal.value,
            "length": s.number.trajectory_length,
            "order": s.number.order,
        })
    return rows


def cmd_uhf_prob(args):
    spec, init = _walk_spec(args), _initial(args)
    out = {"finite_dimensional": _prob(uhf.prob_finite_dimensional(spec, init))}
    if args.k is not None:
        out["bounded_prime"] = {"k": args.k, "prime": uhf.prime_enumeration(args.k), **_prob(uhf.prob_bounded_prime(spec, init, args.k))}
    return out


# ------------------------------------------------------------------ simplex


def cmd_simplex_sample(args):
    spec, init = _walk_spec(args), _initial(args)
    measure = simplex.Measure(args.measure)
    rows = []
    for t, rng in enumerate(_rngs(args, args.trials)):
        tower = simplex.sample_tower(spec, init, measure, args.max_steps, rng)
        rows.append({"trial": t, "top": tower.top, "levels": len(tower.dims), "steps": tower.to_records()})
    return rows


def cmd_simplex_traces(args):
    v = simplex.extremal_traces_at_most_prob(_walk_spec(args), _initial(args), args.k)
    return {"k": args.k, **_prob(v)}


# ------------------------------------------------------------------ villadsen


def _beta_spec(args) -> villadsen.BetaWalkSpec:
    return villadsen.BetaWalkSpec(args.beta, {Fraction(k): w for k, w in args.initial.items()})


def cmd_villadsen_sample(args):
    w0, r = villadsen.sample_R_batch(_beta_spec(args), args.trials, block_rng(args.seed, 0))
    return [{"trial": t, "w0": float(a), "r": float(b)} for t, (a, b) in enumerate(zip(w0, r))]


def cmd_villadsen_ccdf(args):
    return {"r": args.r, "ccdf": villadsen.ccdf_R(_beta_spec(args), args.r)}


def cmd_villadsen_mean(args):
    spec = _beta_spec(args)
    return {"beta": spec.beta, "mean_factor": villadsen.mean_factor(spec.beta), "expected_R": villadsen.expected_R(spec)}


def cmd_villadsen_zstable(args):
    if args.family == "constant":
        fam = villadsen.ConstantQ(args.q)
    else:
        fam = villadsen.OneMinusInverseSquare(args.q if args.q is not None else Fraction(1, 2))
    return {"family": args.family, **_prob(villadsen.zstable_probability(fam))}


# ------------------------------------------------------------------ graphs


def cmd_graph_sample(args):
    g = graphs.sample_regular_multigraph(args.n, args.r, block_rng(args.seed, 0))
    if args.adjacency:
        sys.stdout.write(graphs.double_to_digraph(g).to_text())
    else:
        sys.stdout.write(g.to_edge_list())
    return None


def cmd_graph_ktheory(args):
    rows = []
    for t, rng in enumerate(_rngs(args, args.trials)):
        d = graphs.double_to_digraph(graphs.sample_regular_multigraph(args.n, args.r, rng))
        pred = graphs.kirchberg_predicates(d)
        k = ktheory.k_groups(d)
        rows.append({
            "trial": t,
            "k0": str(k.k0),
            "k1_rank": k.k1_rank,
            "sylow_3": str(ktheory.sylow_component(k.k0, 3)),
            "simple": pred.simple,
            "purely_infinite": pred.purely_infinite,
        })
    return rows


# ------------------------------------------------------------------ experiment


def cmd_experiment_run(args):
    spec = load_spec(args.config)
    spec = spec.with_overrides(trials=args.trials, master_seed=args.seed if args.seed_given else None)
    report = run_experiment(spec, threads=args.threads)
    emit_report(report, args.format, args.output, include_runtime=args.runtime)
    return None if report.passed else 1


# ------------------------------------------------------------------ parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=lambda s: int(s, 0) & MASK64, default=None,
                   help=f"master seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--trials", type=int, default=None, help="number of samples")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def _walk_args(p: argparse.ArgumentParser, absorbing: bool = True, initial: bool = False) -> None:
    p.add_argument("--p", type=_fraction, required=True, help="up-probability for states >= 1")
    p.add_argument("--q0", type=_fraction, required=absorbing, default=None,
                   help="absorption probability at 0 (omit for a reflecting boundary)")
    if initial:
        p.add_argument("--initial", type=_mapping, default={"0": Fraction(1)}, help='e.g. "0:1/2,1:1/2"')


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="randlimits", description=__doc__)
    areas = parser.add_subparsers(dest="area", required=True)

    def leaf(group, name, fn, help_):
        p = group.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    m = areas.add_parser("markov", help="birth-death walks").add_subparsers(dest="action", required=True)
    _walk_args(leaf(m, "classify", cmd_markov_classify, "recurrence class of the reflecting walk"), absorbing=False)
    p = leaf(m, "absorb", cmd_markov_absorb, "probability of absorption from state i")
    _walk_args(p)
    p.add_argument("--i", type=int, required=True)
    p = leaf(m, "hitmax", cmd_markov_hitmax, "probability the maximum stays <= k, for every start i <= k")
    _walk_args(p)
    p.add_argument("--k", type=int, required=True)

    u = areas.add_parser("uhf", help="random UHF algebras").add_subparsers(dest="action", required=True)
    p = leaf(u, "sample", cmd_uhf_sample, "sample supernatural numbers")
    _walk_args(p, initial=True)
    p.add_argument("--max-steps", type=int, default=10_000)
    p = leaf(u, "prob", cmd_uhf_prob, "exact finite-dimensional and bounded-prime probabilities")
    _walk_args(p, initial=True)
    p.add_argument("--k", type=int, default=None)

    s = areas.add_parser("simplex", help="random simplex towers").add_subparsers(dest="action", required=True)
    p = leaf(s, "sample", cmd_simplex_sample, "sample a tower and its representing rows")
    _walk_args(p, initial=True)
    p.add_argument("--measure", choices=[m.value for m in simplex.Measure], default="K")
    p.add_argument("--max-steps", type=int, default=50)
    p = leaf(s, "traces", cmd_simplex_traces, "probability of at most k extremal traces")
    _walk_args(p, initial=True)
    p.add_argument("--k", type=int, required=True)

    v = areas.add_parser("villadsen", help="random radius of comparison").add_subparsers(dest="action", required=True)
    for name, fn, help_ in (
        ("sample", cmd_villadsen_sample, "sample R"),
        ("ccdf", cmd_villadsen_ccdf, "P(R >= r)"),
        ("mean", cmd_villadsen_mean, "E(R)"),
    ):
        p = leaf(v, name, fn, help_)
        p.add_argument("--beta", type=_beta, default=0.0, help="number or 'ln2'")
        p.add_argument("--initial", type=_mapping, default={"1": Fraction(1)}, help='law of W0, e.g. "0:1/4,2:3/4"')
        if name == "ccdf":
            p.add_argument("--r", type=float, required=True)
    p = leaf(v, "zstable", cmd_villadsen_zstable, "probability of Z-stability for tame/exotic choices")
    p.add_argument("--family", choices=("constant", "one_minus_inverse_square"), default="constant")
    p.add_argument("--q", type=_fraction, default=None, help="constant q, or q_1 for the second family")

    g = areas.add_parser("graph", help="random regular multigraphs").add_subparsers(dest="action", required=True)
    for name, fn, help_ in (
        ("sample", cmd_graph_sample, "sample a multigraph (edge list or adjacency)"),
        ("ktheory", cmd_graph_ktheory, "K-groups of sampled graph algebras"),
    ):
        p = leaf(g, name, fn, help_)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--r", type=int, default=3)
        if name == "sample":
            p.add_argument("--adjacency", action="store_true", help="print the doubled adjacency matrix")

    e = areas.add_parser("experiment", help="declarative experiments").add_subparsers(dest="action", required=True)
    p = leaf(e, "run", cmd_experiment_run, "run a JSON experiment and print its report")
    p.add_argument("config")
    p.add_argument("--output", default=None, help="write the report here instead of stdout")
    p.add_argument("--runtime", action="store_true", help="include wall-clock runtime in the report")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # precedence: --seed, then the environment, then the config file (experiments) or 0
    args.seed_given = args.seed is not None or SEED_ENV in os.environ
    if args.seed is None:
        args.seed = _default_seed()
    if args.trials is None and args.fn is not cmd_experiment_run:
        args.trials = 1
    if args.trials is not None and args.trials < 1:
        parser.error("--trials must be >= 1")
    try:
        result = args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, int):
        return result
    if result is not None:
        _emit(result, args.format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
