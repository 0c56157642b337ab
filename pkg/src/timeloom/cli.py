"""Command-line interface: infer event timelines from rule and data files.

    timeloom run --rules care.tes --data ward.facts --mode consistent

Outputs are deterministic: facts are sorted, JSON key order is fixed, and
partitioned runs are assembled in entity order regardless of worker timing.
Exit codes: 0 success, 1 rule or data error, 2 enumeration cap exceeded,
3 check-mode target not recognized.
"""

from __future__ import annotations

import argparse
import json
import pickle
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import EnumerationCapExceeded, IoError, ParseError, TimeloomError
from .ingest import ingest, validate_dataset
from .language import TES, parse_tes
from .model import (
    STAR,
    AnnotatedEventFact,
    Dataset,
    Interval,
    ObservationFact,
    Value,
    fact_key,
    value_key,
)
from .repair import DEFAULT_CAP, TimelineResult, recognize_timeline, timeline


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation: where the rules and data live and how to run."""

    rules_path: str
    data_paths: tuple[tuple[str, str | None], ...]  # (data file, mapping file or None)
    mode: str
    check_target_path: str | None = None
    now: int | None = None
    max_models: int | None = None
    cap: int = DEFAULT_CAP
    output_format: str = "json"
    partition_by: int | None = None
    out_path: str | None = None

    def __post_init__(self):
        if (self.mode == "check") != (self.check_target_path is not None):
            raise ValueError("--check is required for mode check and only there")


# ---------------------------------------------------------------------------
# Serialization


def fact_to_json(f: AnnotatedEventFact, now: int | None = None) -> dict:
    """One event fact as a JSON-ready dict; an ongoing end becomes "*" and,
    under --now, gains a display-only clamped_end."""
    iv: dict = {"start": f.interval.start}
    if f.interval.ongoing:
        iv["end"] = "*"
        if now is not None:
            iv["clamped_end"] = now + 1
    else:
        iv["end"] = f.interval.end
    return {"pred": f.pred, "args": list(f.args), "interval": iv, "level": f.level}


def fact_from_json(d: dict) -> AnnotatedEventFact:
    end = d["interval"]["end"]
    interval = Interval(d["interval"]["start"], STAR if end == "*" else end)
    return AnnotatedEventFact(d["pred"], tuple(d["args"]), interval, d["level"])


def model_to_json(model: frozenset, tes: TES, now: int | None = None) -> dict:
    simple = sorted((f for f in model if tes.is_simple_pred(f.pred)), key=fact_key)
    meta = sorted((f for f in model if not tes.is_simple_pred(f.pred)), key=fact_key)
    return {"simple": [fact_to_json(f, now) for f in simple],
            "meta": [fact_to_json(f, now) for f in meta]}


def model_from_json(d: dict) -> frozenset:
    return frozenset(fact_from_json(x) for x in d["simple"] + d["meta"])


def result_to_json(result: TimelineResult, tes: TES, now: int | None = None,
                   max_models: int | None = None) -> dict:
    models = result.models[:max_models] if max_models is not None else result.models
    return {"mode": result.mode,
            "models": [model_to_json(m, tes, now) for m in models],
            "exhaustive": result.exhaustive}


def result_from_json(doc: dict) -> TimelineResult:
    return TimelineResult(doc["mode"],
                          tuple(model_from_json(m) for m in doc["models"]),
                          doc["exhaustive"])


def _tsv_fact_rows(prefix: list[str], d: dict, with_clamp: bool) -> list[str]:
    rows = []
    for section in ("simple", "meta"):
        for fj in d[section]:
            row = prefix + [section, fj["pred"],
                            ",".join(str(a) for a in fj["args"]),
                            str(fj["interval"]["start"]), str(fj["interval"]["end"]),
                            str(fj["level"])]
            if with_clamp:
                row.append(str(fj["interval"].get("clamped_end", "")))
            rows.append("\t".join(row))
    return rows


def render_document(doc: dict, fmt: str, with_clamp: bool = False) -> str:
    """Render a run document as JSON or as flat tab-separated rows."""
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    rows: list[str] = []
    if "recognized" in doc:
        return f"recognized\t{str(doc['recognized']).lower()}\n"
    if "entities" in doc:
        for ent in doc["entities"]:
            for mi, m in enumerate(ent["models"]):
                rows += _tsv_fact_rows([str(ent["entity"]), str(mi)], m, with_clamp)
    else:
        for mi, m in enumerate(doc["models"]):
            rows += _tsv_fact_rows([str(mi)], m, with_clamp)
    return "".join(r + "\n" for r in rows)


# ---------------------------------------------------------------------------
# Partitioning


def partition_dataset(dataset: Dataset, argpos: int) -> list[tuple[Value, Dataset]]:
    """Split observations by the value at one argument position; atemporal
    facts and observations without that position are shared by every entity."""
    groups: dict[Value, list] = {}
    shared: list = []
    for f in dataset.facts:
        if isinstance(f, ObservationFact) and len(f.args) > argpos:
            groups.setdefault(f.args[argpos], []).append(f)
        else:
            shared.append(f)
    return [(k, Dataset(groups[k] + shared))
            for k in sorted(groups, key=value_key)]


def _entity_job(job: tuple) -> tuple:
    key, dataset, tes, mode, cap = job
    return key, timeline(dataset, tes, mode, cap)


def _run_entities(jobs: list[tuple]) -> list[tuple]:
    if len(jobs) > 1:
        try:
            with ProcessPoolExecutor(max_workers=min(8, len(jobs))) as pool:
                return list(pool.map(_entity_job, jobs))
        except TimeloomError:
            raise
        except (OSError, RuntimeError, pickle.PicklingError):
            pass  # no worker pool available here; fall back to in-process
    return [_entity_job(j) for j in jobs]


# ---------------------------------------------------------------------------
# Entry points


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from None


def _load_rules(path: str) -> TES:
    try:
        return parse_tes(_read(path))
    except ParseError as e:
        raise ParseError(f"{path}: {e.message}", e.line, e.col) from None


def run(config: RunConfig) -> int:
    """Execute one configuration and write its output; returns the exit code."""
    tes = _load_rules(config.rules_path)
    dataset = ingest(list(config.data_paths))
    validate_dataset(dataset, tes)

    if config.mode == "check":
        try:
            target = json.loads(_read(config.check_target_path))
            kind = target.get("kind", "consistent")
            facts = frozenset(fact_from_json(x) for x in target["facts"])
        except (ValueError, KeyError, TypeError) as e:
            raise IoError(f"bad check target {config.check_target_path}: {e}") from None
        if kind not in ("consistent", "preferred"):
            raise IoError(f"bad check target kind {kind!r}")
        ok = recognize_timeline(dataset, tes, facts, mode=kind, cap=config.cap)
        _write(config, {"recognized": ok})
        return 0 if ok else 3

    exhaustive = True
    if config.partition_by is not None:
        parts = partition_dataset(dataset, config.partition_by)
        jobs = [(k, ds, tes, config.mode, config.cap) for k, ds in parts]
        entities = []
        for key, result in _run_entities(jobs):
            entities.append({"entity": key,
                             **result_to_json(result, tes, config.now, config.max_models)})
            exhaustive = exhaustive and result.exhaustive
        doc = {"mode": config.mode, "partition_by": config.partition_by,
               "entities": entities, "exhaustive": exhaustive}
    else:
        result = timeline(dataset, tes, config.mode, config.cap)
        doc = result_to_json(result, tes, config.now, config.max_models)
        exhaustive = result.exhaustive
    _write(config, doc)
    return 0 if exhaustive else 2


def _write(config: RunConfig, doc: dict) -> None:
    text = render_document(doc, config.output_format, with_clamp=config.now is not None)
    if config.out_path:
        try:
            Path(config.out_path).write_text(text)
        except OSError as e:
            raise IoError(f"cannot write {config.out_path}: {e}") from None
    else:
        sys.stdout.write(text)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="timeloom",
                                description="Infer event timelines from timestamped facts.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run inference over a rule file and data files")
    r.add_argument("--rules", required=True, help="rule file (.tes)")
    r.add_argument("--data", action="append", required=True,
                   help="fact file (.facts) or CSV file (.csv); repeatable")
    r.add_argument("--map", action="append", default=[],
                   help="mapping file for the matching CSV --data, in order")
    r.add_argument("--mode", default="naive",
                   choices=["naive", "consistent", "preferred", "cautious", "check"])
    r.add_argument("--check", help="target timeline JSON (mode check)")
    r.add_argument("--now", type=int, help="clamp ongoing ends to N+1 for display")
    r.add_argument("--cap", type=int, default=DEFAULT_CAP,
                   help="enumeration cap on candidate subsets")
    r.add_argument("--max-models", type=int, help="emit at most this many models")
    r.add_argument("--partition-by", type=int,
                   help="argument position to split entities on")
    r.add_argument("--format", default="json", choices=["json", "tsv"])
    r.add_argument("--out", help="write output here instead of stdout")
    return p


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    maps = list(args.map)
    pairs: list[tuple[str, str | None]] = []
    for d in args.data:
        if d.endswith(".csv"):
            pairs.append((d, maps.pop(0) if maps else None))
        else:
            pairs.append((d, None))
    if maps:
        raise ValueError(f"{len(maps)} unused --map file(s)")
    return RunConfig(rules_path=args.rules, data_paths=tuple(pairs), mode=args.mode,
                     check_target_path=args.check, now=args.now,
                     max_models=args.max_models, cap=args.cap,
                     output_format=args.format, partition_by=args.partition_by,
                     out_path=args.out)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    try:
        config = _config_from_args(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        return run(config)
    except EnumerationCapExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TimeloomError as e:
        where = ""
        if getattr(e, "line", None):
            where = f" (line {e.line})"
        print(f"error: {e}{where}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
