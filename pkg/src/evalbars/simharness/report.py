"""Coverage reports: per-level rows, coverage error, CSV and JSON emitters."""

from __future__ import annotations

from dataclasses import dataclass, field
import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from evalbars.errors import DomainError

CSV_HEADER = ("method", "setting", "N", "level", "coverage", "mean_width", "invalid_count", "reps")
WIDTH_PROBS = (0.1, 0.5, 0.9)
SCHEMA_VERSION = 1


def coverage_error(coverages, levels) -> float:
    """Mean absolute gap between empirical and nominal coverage over the level grid."""
    cov = np.asarray(coverages, dtype=float)
    lv = np.asarray(levels, dtype=float)
    if cov.shape != lv.shape:
        raise DomainError(f"coverage and level vectors differ in length ({cov.size} vs {lv.size})")
    if cov.size == 0:
        raise DomainError("need at least one level")
    return float(np.mean(np.abs(cov - lv)))


@dataclass(frozen=True)
class CoverageRow:
    method: str
    setting: str
    N: int
    level: float
    coverage: float
    mean_width: float
    invalid_count: int
    reps: int
    width_quantiles: tuple[float, float, float] = (math.nan, math.nan, math.nan)

    @property
    def covered(self) -> int:
        return int(round(self.coverage * self.reps))

    def binomial_se(self) -> float:
        """Binomial standard error at the nominal level (the null of exact calibration)."""
        return math.sqrt(self.level * (1.0 - self.level) / self.reps)


def _num(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _json_num(x: float):
    return None if (math.isnan(x) or math.isinf(x)) else float(x)


def _from_json_num(x) -> float:
    return math.nan if x is None else float(x)


@dataclass(frozen=True)
class CoverageReport:
    setting: str
    levels: tuple[float, ...]
    rows: tuple[CoverageRow, ...]
    config: dict = field(default_factory=dict)

    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {}
            for row in self.rows:
                idx.setdefault((row.method, row.N), []).append(row)
            object.__setattr__(self, "_idx", idx)
        return idx

    @property
    def methods(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(r.method for r in self.rows))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(dict.fromkeys(r.N for r in self.rows))

    def slice(self, method: str, N: int) -> list[CoverageRow]:
        try:
            return self._index()[(method, N)]
        except KeyError:
            raise KeyError(f"no rows for method {method!r} at N={N}") from None

    def coverage(self, method: str, N: int) -> np.ndarray:
        return np.array([r.coverage for r in self.slice(method, N)])

    def row(self, method: str, N: int, level: float) -> CoverageRow:
        for r in self.slice(method, N):
            if abs(r.level - level) < 1e-12:
                return r
        raise KeyError(f"level {level} not in the grid")

    def coverage_error(self, method: str, N: int) -> float:
        rows = self.slice(method, N)
        return coverage_error([r.coverage for r in rows], [r.level for r in rows])

    def coverage_errors(self) -> dict[tuple[str, int], float]:
        return {key: self.coverage_error(*key) for key in self._index()}

    # --- serialisation ------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow(
                [r.method, r.setting, r.N, _num(r.level), _num(r.coverage), _num(r.mean_width), r.invalid_count, r.reps]
            )
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "setting": self.setting,
            "config": self.config,
            "rows": [
                {
                    "method": r.method,
                    "setting": r.setting,
                    "N": r.N,
                    "level": r.level,
                    "coverage": r.coverage,
                    "mean_width": _json_num(r.mean_width),
                    "invalid_count": r.invalid_count,
                    "reps": r.reps,
                    "width_quantiles": {str(p): _json_num(q) for p, q in zip(WIDTH_PROBS, r.width_quantiles)},
                }
                for r in self.rows
            ],
            "coverage_error": [
                {"method": m, "N": n, "coverage_error": err} for (m, n), err in self.coverage_errors().items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CoverageReport":
        rows = tuple(
            CoverageRow(
                method=r["method"],
                setting=r["setting"],
                N=int(r["N"]),
                level=float(r["level"]),
                coverage=float(r["coverage"]),
                mean_width=_from_json_num(r["mean_width"]),
                invalid_count=int(r["invalid_count"]),
                reps=int(r["reps"]),
                width_quantiles=tuple(_from_json_num(r["width_quantiles"][str(p)]) for p in WIDTH_PROBS),
            )
            for r in doc["rows"]
        )
        levels = tuple(dict.fromkeys(r.level for r in rows))
        return cls(doc["setting"], tuple(sorted(levels)), rows, doc.get("config", {}))

    def write(self, out_dir, stem: str | None = None) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or f"coverage_{self.setting}"
        csv_path = out / f"{stem}.csv"
        json_path = out / f"{stem}.json"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        json_path.write_text(self.to_json(), encoding="utf-8")
        return csv_path, json_path

    def summary_table(self) -> str:
        """Coverage error per method (rows) and N (columns), as aligned text."""
        sizes = self.sizes
        errors = self.coverage_errors()
        width = max([len("method")] + [len(m) for m in self.methods])
        lines = [f"{'method':<{width}}  " + "  ".join(f"{'N=' + str(n):>8}" for n in sizes)]
        for m in self.methods:
            cells = [f"{errors[(m, n)]:8.4f}" if (m, n) in errors else f"{'-':>8}" for n in sizes]
            lines.append(f"{m:<{width}}  " + "  ".join(cells))
        return "\n".join(lines)
