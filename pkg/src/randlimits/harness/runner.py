"""Run experiments block by block and serialise the resulting reports."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Any, Optional, Union

from .config import ExperimentSpec, parse_spec, rule_name
from .constructions import REGISTRY, Tally
from .seeding import block_rng, blocks
from .stats import ks_verdict, mean_verdict, proportion_verdict


def _sig(x: Optional[float]) -> Optional[float]:
    if x is None or not math.isfinite(x):
        return x
    return float(f"{x:.12g}")


@dataclass(frozen=True)
class ComparisonRecord:
    statistic: str
    target: str
    rule: str
    n: int
    unresolved: int
    empirical: float
    analytic: float
    ci_low: float
    ci_high: float
    passed: bool
    detail: str = ""

    def __post_init__(self):
        for name in ("empirical", "analytic", "ci_low", "ci_high"):
            object.__setattr__(self, name, _sig(float(getattr(self, name))))


@dataclass(frozen=True)
class Report:
    construction: str
    trials: int
    master_seed: int
    config: dict
    comparisons: tuple[ComparisonRecord, ...]
    samples: tuple[dict, ...]
    runtime: float = field(default=0.0, compare=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "construction": self.construction,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "passed": self.passed,
            "comparisons": [asdict(c) for c in self.comparisons],
            "samples": list(self.samples),
            "config": self.config,
        }
        if include_runtime:
            out["runtime_seconds"] = round(self.runtime, 3)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "Report":
        return cls(
            construction=doc["construction"],
            trials=doc["trials"],
            master_seed=doc["master_seed"],
            config=doc["config"],
            comparisons=tuple(ComparisonRecord(**c) for c in doc["comparisons"]),
            samples=tuple(doc["samples"]),
            runtime=doc.get("runtime_seconds", 0.0),
        )


def _run_block(args) -> Tally:
    name, raw, block, n, keep = args
    spec = parse_spec(raw)
    construction = REGISTRY[name]
    model = construction.parse(spec.parameters)
    return construction.run_block(model, spec.comparisons, n, block_rng(spec.master_seed, block), keep)


def simulate(spec: ExperimentSpec, threads: int = 1) -> Tally:
    """Merged tally over every trial of ``spec``."""
    construction = REGISTRY[spec.construction]
    size = construction.block_size
    jobs = [
        (spec.construction, spec.raw, b, n, max(0, spec.keep_samples - b * size))
        for b, n in blocks(spec.trials, size)
    ]
    if threads <= 1 or len(jobs) == 1:
        parts = [_run_block(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_block, jobs))
    total = Tally()
    for part in parts:
        total = total.merge(part, spec.keep_samples)
    return total


def _judge(spec: ExperimentSpec, tally: Tally) -> list[ComparisonRecord]:
    construction = REGISTRY[spec.construction]
    model = construction.parse(spec.parameters)
    out = []
    for key, c in enumerate(spec.comparisons):
        sdef = construction.statistics[c.statistic]
        literal = isinstance(c.target, float)
        target_name = repr(c.target) if literal else c.target
        if sdef.kind == "distribution":
            v = ks_verdict(tally.values["R"], construction.analytic(model, c), c.rule)
            n, unresolved = tally.n, 0
        elif sdef.kind == "scalar":
            goal = c.target if literal else construction.analytic(model, c)
            v = mean_verdict(tally.values["R"], goal, c.rule)
            n, unresolved = tally.n, 0
        else:
            goal = (c.target, c.target) if literal else construction.analytic(model, c)
            n, unresolved = tally.n, tally.unresolved[key]
            v = proportion_verdict(tally.hits[key], unresolved, n, goal, c.rule)
        out.append(ComparisonRecord(
            c.label, target_name, rule_name(c.rule), n, unresolved,
            v.empirical, v.analytic, v.ci[0], v.ci[1], bool(v.passed), v.detail,
        ))
    return out


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> Report:
    start = time.perf_counter()
    tally = simulate(spec, threads)
    records = _judge(spec, tally)
    return Report(
        construction=spec.construction,
        trials=spec.trials,
        master_seed=spec.master_seed,
        config=spec.raw,
        comparisons=tuple(records),
        samples=tuple(tally.records),
        runtime=time.perf_counter() - start,
    )


CSV_FIELDS = [
    "statistic", "target", "rule", "n", "unresolved",
    "empirical", "analytic", "ci_low", "ci_high", "passed", "detail",
]


def _csv_cell(v: Any) -> Any:
    return format(v, ".12g") if isinstance(v, float) else v


def format_report(report: Report, fmt: str = "json", include_runtime: bool = False) -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(include_runtime), indent=2, sort_keys=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for c in report.comparisons:
            writer.writerow({k: _csv_cell(v) for k, v in asdict(c).items()})
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(
    report: Report,
    fmt: str = "json",
    destination: Union[str, Path, IO[str], None] = None,
    include_runtime: bool = False,
) -> None:
    text = format_report(report, fmt, include_runtime)
    if destination is None or destination == "-":
        sys.stdout.write(text)
        return
    if hasattr(destination, "write"):
        destination.write(text)
        return
    path = Path(destination)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
