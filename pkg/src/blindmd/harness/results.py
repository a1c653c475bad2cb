"""Result tables and their CSV/JSON serialization.

CSV columns are exactly ``experiment,receiver,snr_db,metric,value,stderr,
trials,seed`` in that order; floats are written with 9 significant digits so
equal-seed reruns are byte-identical. JSON mirrors the rows and adds the full
config echo.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

CSV_COLUMNS = ("experiment", "receiver", "snr_db", "metric", "value", "stderr", "trials", "seed")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    receiver: str
    snr_db: float
    metric: str
    value: float
    stderr: float
    trials: int
    seed: int


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, **kw) -> None:
        self.rows.append(ResultRow(**kw))

    def value(self, receiver: str, metric: str, snr_db: float | None = None) -> float:
        for r in self.rows:
            if r.receiver == receiver and r.metric == metric:
                if snr_db is None or r.snr_db == snr_db:
                    return r.value
        raise KeyError(f"no row for receiver={receiver!r} metric={metric!r} snr_db={snr_db}")

    def stderr(self, receiver: str, metric: str, snr_db: float | None = None) -> float:
        for r in self.rows:
            if r.receiver == receiver and r.metric == metric:
                if snr_db is None or r.snr_db == snr_db:
                    return r.stderr
        raise KeyError(f"no row for receiver={receiver!r} metric={metric!r} snr_db={snr_db}")


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


def table_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for r in table.rows:
        buf.write(
            f"{r.experiment},{r.receiver},{_fmt(r.snr_db)},{r.metric},"
            f"{_fmt(r.value)},{_fmt(r.stderr)},{r.trials},{r.seed}\n"
        )
    return buf.getvalue()


def _json_row(r: ResultRow) -> dict:
    return {
        "experiment": r.experiment,
        "receiver": r.receiver,
        "snr_db": float(_fmt(r.snr_db)),
        "metric": r.metric,
        "value": float(_fmt(r.value)),
        "stderr": float(_fmt(r.stderr)),
        "trials": r.trials,
        "seed": r.seed,
    }


def table_to_json(table: ResultTable) -> str:
    doc = {"meta": table.meta, "rows": [_json_row(r) for r in table.rows]}
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def emit_results(table: ResultTable, path: str | Path, fmt: str = "csv") -> Path:
    """Write the table to ``path`` as CSV or JSON and return the path."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown output format {fmt!r}")
    path = Path(path)
    text = table_to_csv(table) if fmt == "csv" else table_to_json(table)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path
