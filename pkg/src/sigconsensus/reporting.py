"""Delimiter-separated report tables.

Cells are formatted by column kind: percentage rates get 2 decimals,
scores/thresholds 6, feature statistics 4. ``precision`` overrides the
decimals for every numeric column; ``"full"`` writes shortest round-trip
reprs. Parsing a table and writing it back with the same precision
reproduces it byte for byte.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

from .evaluation import ProtocolResult, SweepRow

RATE, SCORE, STAT, INT, TEXT = "rate", "score", "stat", "int", "text"
DEFAULT_DECIMALS = {RATE: 2, SCORE: 6, STAT: 4}

RATE_COLUMNS = ("Accuracy", "FAR", "FRR", "AER")

COLUMN_KINDS = {
    "Dataset": TEXT, "Feature": TEXT, "Strategy": TEXT, "Writer": TEXT, "Measure": TEXT,
    "Alpha": SCORE, "Threshold": SCORE,
    "Writers": INT, "Skipped": INT, "Trials": INT, "Seed": INT,
    "TP": INT, "TN": INT, "FP": INT, "FN": INT,
    "Genuine": STAT, "Forge": STAT, "Difference": STAT,
}
for _c in RATE_COLUMNS:
    COLUMN_KINDS[_c] = RATE
    COLUMN_KINDS[_c + "_std"] = RATE
    COLUMN_KINDS["Macro_" + _c] = RATE


def format_cell(value, kind: str, precision=None) -> str:
    if kind == TEXT:
        return str(value)
    if kind == INT:
        return str(int(value))
    if precision == "full":
        return repr(float(value))
    decimals = DEFAULT_DECIMALS[kind] if precision is None else int(precision)
    return f"{float(value):.{decimals}f}"


def parse_cell(text: str, kind: str):
    if kind == TEXT:
        return text
    if kind == INT:
        return int(text)
    return float(text)


@dataclass
class Table:
    columns: list
    rows: list  # list of lists of typed values

    def kinds(self):
        return [COLUMN_KINDS.get(c, TEXT) for c in self.columns]

    def to_text(self, precision=None, delimiter: str = ",") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        w.writerow(self.columns)
        kinds = self.kinds()
        for row in self.rows:
            w.writerow([format_cell(v, k, precision) for v, k in zip(row, kinds)])
        return buf.getvalue()

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.columns, row)) for row in self.rows]


def parse_table(text: str, delimiter: str = ",") -> Table:
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    rows = list(reader)
    if not rows:
        raise ValueError("empty report")
    columns = rows[0]
    kinds = [COLUMN_KINDS.get(c, TEXT) for c in columns]
    body = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(columns):
            raise ValueError(f"report line {i}: {len(row)} cells, header has {len(columns)}")
        body.append([parse_cell(v, k) for v, k in zip(row, kinds)])
    return Table(columns, body)


def _result_cells(result: ProtocolResult, macro: bool) -> list:
    agg = result.aggregate
    std = result.trial_std
    cells = [agg.accuracy, agg.far, agg.frr, agg.aer,
             std["accuracy"], std["far"], std["frr"], std["aer"],
             len(result.per_writer), len(result.skipped), result.trials]
    if macro:
        m = result.macro
        cells += [m["accuracy"], m["far"], m["frr"], m["aer"]]
    return cells


def _result_columns(macro: bool) -> list:
    cols = [*RATE_COLUMNS, *(c + "_std" for c in RATE_COLUMNS), "Writers", "Skipped", "Trials"]
    if macro:
        cols += ["Macro_" + c for c in RATE_COLUMNS]
    return cols


def results_table(dataset: str, feature: str, results: Mapping[str, ProtocolResult],
                  macro: bool = False) -> Table:
    rows = [[dataset, feature, strategy, *_result_cells(r, macro)] for strategy, r in results.items()]
    return Table(["Dataset", "Feature", "Strategy", *_result_columns(macro)], rows)


def sweep_table(dataset: str, feature: str, strategy: str, sweep: Sequence[SweepRow],
                macro: bool = False) -> Table:
    rows = [[dataset, feature, strategy, row.alpha, *_result_cells(row.result, macro)] for row in sweep]
    return Table(["Dataset", "Feature", "Strategy", "Alpha", *_result_columns(macro)], rows)


def per_writer_table(dataset: str, feature: str, results: Mapping[str, ProtocolResult]) -> Table:
    rows = []
    for strategy, result in results.items():
        for writer_id, r in result.per_writer.items():
            c = r.counts
            rows.append([dataset, feature, strategy, writer_id, c.tp, c.tn, c.fp, c.fn,
                         r.accuracy, r.far, r.frr, r.aer])
    return Table(["Dataset", "Feature", "Strategy", "Writer", "TP", "TN", "FP", "FN", *RATE_COLUMNS], rows)
