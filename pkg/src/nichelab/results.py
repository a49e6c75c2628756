"""Result files and plot-ready tables.

Result file layout (UTF-8 text)::

    # nichelab-results
    # artifact_version: 0.1.0
    # schema_version: 1
    # record_type: run | sweep_summary
    # master_seed: <int or empty>
    # <extra key>: <value>            (optional, e.g. grid labels)
    <CSV header row in the fixed field order of the record dataclass>
    <one CSV row per record>

Empty cells mean ``None``; booleans are ``true``/``false``; floats use
``repr`` so they round-trip exactly.
"""
from __future__ import annotations

import csv
import io
import typing
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .experiments import BoxStats, RunResult, SweepSummary

MAGIC = "# nichelab-results"
SCHEMA_VERSION = 1
RECORD_TYPES = {"run": RunResult, "sweep_summary": SweepSummary}


class ResultsError(Exception):
    pass


class ResultsIOError(ResultsError):
    def __init__(self, path, cause):
        super().__init__(f"{path}: {cause}")
        self.path = Path(path)


class SchemaError(ResultsError):
    def __init__(self, path, problem):
        super().__init__(f"{path}: {problem}")
        self.path = Path(path)


def _columns(cls) -> list:
    return [f for f in fields(cls) if f.compare]


def _encode(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _decode(text: str, tp):
    base = [a for a in typing.get_args(tp) if a is not type(None)]
    if base:
        if text == "":
            return None
        tp = base[0]
    if tp is bool:
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r}")
        return text == "true"
    return tp(text)


def _record_type_of(records) -> str:
    kinds = {type(r) for r in records}
    if len(kinds) != 1:
        raise ValueError("records must all be of one type")
    cls = kinds.pop()
    for name, c in RECORD_TYPES.items():
        if c is cls:
            return name
    raise ValueError(f"cannot persist {cls.__name__}")


def persist_results(results: Sequence, path, master_seed: Optional[int] = None,
                    extra: Optional[dict] = None) -> None:
    """Write RunResult or SweepSummary records to one file."""
    if not results:
        raise ValueError("nothing to persist")
    rtype = _record_type_of(results)
    cols = _columns(RECORD_TYPES[rtype])
    buf = io.StringIO()
    buf.write(f"{MAGIC}\n# artifact_version: {__version__}\n# schema_version: {SCHEMA_VERSION}\n")
    buf.write(f"# record_type: {rtype}\n# master_seed: {_encode(master_seed)}\n")
    for k, v in (extra or {}).items():
        buf.write(f"# {k}: {v}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([c.name for c in cols])
    for r in results:
        writer.writerow([_encode(getattr(r, c.name)) for c in cols])
    try:
        Path(path).write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise ResultsIOError(path, exc) from exc


def read_header(path) -> dict:
    return _parse(path)[0]


def _parse(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ResultsIOError(path, exc) from exc
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise SchemaError(path, "missing results header")
    header = {}
    body = 1
    for line in lines[1:]:
        if not line.startswith("# "):
            break
        key, sep, value = line[2:].partition(": ")
        if not sep:
            raise SchemaError(path, f"malformed header line {line!r}")
        header[key] = value
        body += 1
    try:
        version = int(header.get("schema_version", ""))
    except ValueError:
        raise SchemaError(path, "missing or malformed schema_version") from None
    if version != SCHEMA_VERSION:
        raise SchemaError(path, f"schema version {version}, expected {SCHEMA_VERSION}")
    if header.get("record_type") not in RECORD_TYPES:
        raise SchemaError(path, f"unknown record type {header.get('record_type')!r}")
    return header, lines[body:]


def load_results(path) -> list:
    header, rows = _parse(path)
    cls = RECORD_TYPES[header["record_type"]]
    cols = _columns(cls)
    hints = typing.get_type_hints(cls)
    reader = csv.reader(rows)
    names = next(reader, None)
    if names != [c.name for c in cols]:
        raise SchemaError(path, f"columns {names} do not match {cls.__name__}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(cols):
            raise SchemaError(path, f"row {lineno} has {len(row)} fields, expected {len(cols)}")
        try:
            out.append(cls(**{c.name: _decode(v, hints[c.name]) for c, v in zip(cols, row)}))
        except (ValueError, TypeError) as exc:
            raise SchemaError(path, f"row {lineno}: {exc}") from exc
    return out


def _write_csv(path, header_lines: Sequence[str], columns: Sequence[str], rows) -> None:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    try:
        Path(path).write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise ResultsIOError(path, exc) from exc


FIG1_COLUMNS = ["n", "runs", "min", "whisker_low", "q1", "median", "q3", "whisker_high", "max", "outliers"]


def write_fig1_table(path, stats: Sequence[BoxStats], header_lines: Sequence[str] = ()) -> None:
    """Boxplot statistics of the normalised best fitness, one row per n."""
    rows = [[s.n, s.runs, repr(s.minimum), repr(s.whisker_low), repr(s.q1), repr(s.median), repr(s.q3),
             repr(s.whisker_high), repr(s.maximum), ";".join(repr(o) for o in s.outliers)] for s in stats]
    _write_csv(path, header_lines, FIG1_COLUMNS, rows)


def write_fig2_table(path, mus: Sequence[int], ws: Sequence[int], cells: dict,
                     header_lines: Sequence[str] = ()) -> None:
    """Success counts, one row per mu and one ``w<k>`` column per window size."""
    rows = [[mu] + [cells.get((mu, w), "") for w in ws] for mu in mus]
    _write_csv(path, header_lines, ["mu"] + [f"w{w}" for w in ws], rows)


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Columns and rows of a plot table, skipping ``#`` header lines."""
    try:
        lines = [l for l in Path(path).read_text(encoding="utf-8").splitlines() if not l.startswith("#")]
    except OSError as exc:
        raise ResultsIOError(path, exc) from exc
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
