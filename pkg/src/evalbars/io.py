"""Reading and writing evaluation files (UTF-8 CSV with a header row).

Formats:

* single: ``question_id,outcome``
* paired: ``question_id,outcome_a,outcome_b``
* clustered: ``cluster_id,n,y``
* confusion: ``n_tp,n_fp,n_fn,n_tn`` with exactly one data row

Errors carry the 1-based line number of the offending row.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterator

import numpy as np

from evalbars.data import BinaryEvalVector, ClusteredEvalData, ConfusionCounts, PairedEvalData
from evalbars.errors import DomainError, IngestError

HEADERS = {
    "single": ("question_id", "outcome"),
    "paired": ("question_id", "outcome_a", "outcome_b"),
    "clustered": ("cluster_id", "n", "y"),
    "confusion": ("n_tp", "n_fp", "n_fn", "n_tn"),
}


def _rows(path, kind: str) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)`` for each data row after validating the header."""
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except FileNotFoundError:
        raise IngestError("file not found", path=str(path)) from None
    except UnicodeDecodeError as exc:
        raise IngestError(f"not valid UTF-8 ({exc.reason})", path=str(path)) from None
    reader = csv.reader(io.StringIO(text))
    expected = HEADERS[kind]
    header = None
    for fields in reader:
        if not fields or all(not f.strip() for f in fields):
            continue
        if header is None:
            header = tuple(f.strip() for f in fields)
            if header != expected:
                raise IngestError(
                    f"header {','.join(header)!r} does not match expected {','.join(expected)!r}",
                    path=str(path),
                    line=reader.line_num,
                )
            continue
        if len(fields) != len(expected):
            raise IngestError(
                f"expected {len(expected)} fields, found {len(fields)}", path=str(path), line=reader.line_num
            )
        yield reader.line_num, [f.strip() for f in fields]
    if header is None:
        raise IngestError("file is empty (a header row is required)", path=str(path))


def _binary(value: str, name: str, path, line: int) -> int:
    if value not in ("0", "1"):
        raise IngestError(f"{name} must be 0 or 1, got {value!r}", path=str(path), line=line)
    return int(value)


def _count(value: str, name: str, path, line: int) -> int:
    try:
        out = int(value)
    except ValueError:
        raise IngestError(f"{name} must be a nonnegative integer, got {value!r}", path=str(path), line=line) from None
    if out < 0:
        raise IngestError(f"{name} must be nonnegative, got {out}", path=str(path), line=line)
    return out


def _unique_id(seen: dict[str, int], key: str, label: str, path, line: int) -> None:
    if not key:
        raise IngestError(f"empty {label}", path=str(path), line=line)
    if key in seen:
        raise IngestError(f"duplicate {label} {key!r} (first seen on line {seen[key]})", path=str(path), line=line)
    seen[key] = line


def read_single(path) -> BinaryEvalVector:
    seen: dict[str, int] = {}
    outcomes = []
    for line, (qid, outcome) in _rows(path, "single"):
        _unique_id(seen, qid, "question_id", path, line)
        outcomes.append(_binary(outcome, "outcome", path, line))
    return BinaryEvalVector(np.array(outcomes, dtype=np.int8))


def read_paired(path) -> PairedEvalData:
    seen: dict[str, int] = {}
    a, b = [], []
    for line, (qid, oa, ob) in _rows(path, "paired"):
        _unique_id(seen, qid, "question_id", path, line)
        a.append(_binary(oa, "outcome_a", path, line))
        b.append(_binary(ob, "outcome_b", path, line))
    return PairedEvalData(BinaryEvalVector(np.array(a, dtype=np.int8)), BinaryEvalVector(np.array(b, dtype=np.int8)))


def read_clustered(path) -> ClusteredEvalData:
    seen: dict[str, int] = {}
    sizes, successes = [], []
    for line, (cid, n_text, y_text) in _rows(path, "clustered"):
        _unique_id(seen, cid, "cluster_id", path, line)
        n = _count(n_text, "n", path, line)
        y = _count(y_text, "y", path, line)
        if n < 1:
            raise IngestError("cluster size n must be at least 1", path=str(path), line=line)
        if y > n:
            raise IngestError(f"successes y={y} exceed cluster size n={n}", path=str(path), line=line)
        sizes.append(n)
        successes.append(y)
    if not sizes:
        raise IngestError("no clusters in file", path=str(path))
    return ClusteredEvalData(np.array(sizes), np.array(successes))


def read_confusion(path) -> ConfusionCounts:
    rows = list(_rows(path, "confusion"))
    if len(rows) != 1:
        line = rows[1][0] if len(rows) > 1 else None
        raise IngestError(f"expected exactly one data row, found {len(rows)}", path=str(path), line=line)
    line, fields = rows[0]
    values = [_count(v, name, path, line) for v, name in zip(fields, HEADERS["confusion"])]
    return ConfusionCounts(*values)


_READERS = {"single": read_single, "paired": read_paired, "clustered": read_clustered, "confusion": read_confusion}


def ingest(path, kind: str):
    """Parse ``path`` as the format for ``kind`` (``single``, ``paired``, ``clustered``, ``confusion``)."""
    if kind == "compare":
        kind = "single"
    if kind not in _READERS:
        raise DomainError(f"no input format for {kind!r}")
    return _READERS[kind](path)


def emit(value, path) -> Path:
    """Write a domain value in its ingest format. ``ingest(emit(x)) == x``."""
    out = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(value, BinaryEvalVector):
        writer.writerow(HEADERS["single"])
        writer.writerows((f"q{i + 1}", int(v)) for i, v in enumerate(value.outcomes))
    elif isinstance(value, PairedEvalData):
        writer.writerow(HEADERS["paired"])
        rows = zip(value.y_a.outcomes, value.y_b.outcomes)
        writer.writerows((f"q{i + 1}", int(a), int(b)) for i, (a, b) in enumerate(rows))
    elif isinstance(value, ClusteredEvalData):
        writer.writerow(HEADERS["clustered"])
        rows = zip(value.sizes, value.successes)
        writer.writerows((f"c{i + 1}", int(n), int(y)) for i, (n, y) in enumerate(rows))
    elif isinstance(value, ConfusionCounts):
        writer.writerow(HEADERS["confusion"])
        writer.writerow((value.n_tp, value.n_fp, value.n_fn, value.n_tn))
    else:
        raise DomainError(f"cannot emit {type(value).__name__}")
    out.write_text(buf.getvalue(), encoding="utf-8")
    return out
