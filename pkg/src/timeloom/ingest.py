"""Fact ingestion: native fact files and column-mapped CSV.

Native files hold one fact per statement:

    atemporal ab(amox, weak).
    obs adm(p1, amox, 5).      # trailing value is the timestamp

CSV files are headerless; a mapping file names the predicate, the argument
columns, and the timestamp column:

    predicate=adm
    columns=0,1
    timestamp_column=2
    timestamp_format=rfc3339
"""

from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    ArityMismatch,
    IoError,
    MalformedTimestamp,
    MappingError,
    ParseError,
    UndeclaredPredicate,
)
from .language import TES, PredKind, _tokenize
from .model import AtemporalFact, Dataset, Fact, ObservationFact


def parse_fact_text(text: str) -> list[Fact]:
    """Parse native fact statements into atemporal and observation facts."""
    toks = _tokenize(text)
    i = 0

    def expect(kind: str, what: str):
        nonlocal i
        t = toks[i]
        if t.kind != kind:
            raise ParseError(f"expected {what}, found {t.text!r}", t.line, t.col)
        i += 1
        return t

    def value():
        nonlocal i
        t = toks[i]
        if t.kind == "NAT":
            i += 1
            return int(t.text)
        if t.kind in ("IDENT", "QSYM"):
            i += 1
            return t.text
        raise ParseError(f"expected a constant or natural, found {t.text!r}", t.line, t.col)

    facts: list[Fact] = []
    while toks[i].kind != "EOF":
        kw = expect("IDENT", "'atemporal' or 'obs'")
        if kw.text not in ("atemporal", "obs"):
            raise ParseError(f"expected 'atemporal' or 'obs', found {kw.text!r}",
                             kw.line, kw.col)
        name = expect("IDENT", "a predicate name")
        vals: list = []
        if toks[i].kind == "LPAREN":
            i += 1
            vals.append(value())
            while toks[i].kind == "COMMA":
                i += 1
                vals.append(value())
            expect("RPAREN", "')'")
        expect("PERIOD", "'.'")
        if kw.text == "atemporal":
            facts.append(AtemporalFact(name.text, tuple(vals)))
        else:
            if not vals or not isinstance(vals[-1], int):
                raise ParseError(f"observation {name.text} needs a natural timestamp last",
                                 name.line, name.col)
            facts.append(ObservationFact(name.text, tuple(vals[:-1]), vals[-1]))
    return facts


# ---------------------------------------------------------------------------
# CSV mapping


def parse_mapping(text: str) -> dict:
    """Parse a key=value mapping file for CSV ingestion."""
    known = {"predicate", "columns", "timestamp_column", "timestamp_format"}
    raw: dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MappingError(None, f"line {ln}: expected key=value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise MappingError(None, f"line {ln}: unknown key {key!r}")
        if key in raw:
            raise MappingError(None, f"line {ln}: duplicate key {key!r}")
        raw[key] = val
    if "predicate" not in raw or not raw["predicate"]:
        raise MappingError(None, "mapping needs a predicate")
    if "timestamp_column" not in raw:
        raise MappingError(None, "mapping needs a timestamp_column")
    try:
        ts_col = int(raw["timestamp_column"])
    except ValueError:
        raise MappingError("timestamp_column", "must be a column index") from None
    cols: tuple[int, ...] = ()
    if raw.get("columns"):
        try:
            cols = tuple(int(c.strip()) for c in raw["columns"].split(","))
        except ValueError:
            raise MappingError("columns", "must be comma-separated column indexes") from None
    fmt = raw.get("timestamp_format", "epoch")
    if fmt not in ("epoch", "rfc3339"):
        raise MappingError("timestamp_format", f"unknown format {fmt!r}")
    if ts_col < 0 or any(c < 0 for c in cols):
        raise MappingError("columns", "column indexes start at 0")
    return {"predicate": raw["predicate"], "columns": cols,
            "timestamp_column": ts_col, "timestamp_format": fmt}


def _timestamp(raw: str, fmt: str) -> int:
    raw = raw.strip()
    if fmt == "epoch":
        if not raw.isdigit():
            raise MalformedTimestamp(f"timestamp {raw!r} is not a natural number")
        return int(raw)
    try:
        dt = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        raise MalformedTimestamp(f"timestamp {raw!r} is not an RFC 3339 datetime") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    epoch = int(dt.timestamp())
    if epoch < 0:
        raise MalformedTimestamp(f"timestamp {raw!r} precedes the epoch")
    return epoch


def _cell(raw: str):
    raw = raw.strip()
    return int(raw) if raw.isdigit() else raw


def read_csv_mapped(csv_text: str, mapping: dict) -> list[ObservationFact]:
    """Turn headerless CSV rows into observation facts under a mapping."""
    pred = mapping["predicate"]
    cols = mapping["columns"]
    ts_col = mapping["timestamp_column"]
    fmt = mapping["timestamp_format"]
    out: list[ObservationFact] = []
    for rn, row in enumerate(csv.reader(csv_text.splitlines()), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        for c in (*cols, ts_col):
            if c >= len(row):
                raise MappingError(c, f"row {rn} has only {len(row)} columns")
        args = tuple(_cell(row[c]) for c in cols)
        out.append(ObservationFact(pred, args, _timestamp(row[ts_col], fmt)))
    return out


# ---------------------------------------------------------------------------
# File-level entry points


def ingest(pairs: list[tuple[str, str | None]]) -> Dataset:
    """Read (data_path, mapping_path) pairs into one dataset. Fact files
    take no mapping; CSV files require one."""
    facts: list[Fact] = []
    for data_path, map_path in pairs:
        try:
            text = Path(data_path).read_text()
        except OSError as e:
            raise IoError(f"cannot read {data_path}: {e}") from None
        if data_path.endswith(".csv"):
            if map_path is None:
                raise MappingError(None, f"CSV input {data_path} needs --map")
            try:
                map_text = Path(map_path).read_text()
            except OSError as e:
                raise IoError(f"cannot read {map_path}: {e}") from None
            facts.extend(read_csv_mapped(text, parse_mapping(map_text)))
        else:
            facts.extend(parse_fact_text(text))
    return Dataset(facts)


def validate_dataset(dataset: Dataset, tes: TES) -> None:
    """Check every fact against the rule set's declarations."""
    for f in dataset.facts:
        decl = tes.decls.get(f.pred)
        if decl is None:
            raise UndeclaredPredicate(f"{f.pred} is not declared")
        want = PredKind.OBSERVATION if isinstance(f, ObservationFact) else PredKind.ATEMPORAL
        if decl.kind is not want:
            raise UndeclaredPredicate(
                f"{f.pred} is declared {decl.kind.value}, used as {want.value}")
        if len(f.args) != decl.arity:
            raise ArityMismatch(
                f"{f.pred} declared with arity {decl.arity}, fact has {len(f.args)}")
