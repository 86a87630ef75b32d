"""Convergence records and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

from actn.network import ContractionReport, relative_error


@dataclass(frozen=True)
class ConvergenceRecord:
    family: str
    seed: int
    method: str
    chi: int
    G: int
    n_samples: int
    estimate_log: float
    estimate_sign: int
    reference_log: float
    reference_sign: int
    relative_error: float
    elapsed_seconds: float
    max_bond_reached: int
    discarded_weight: float

    @classmethod
    def build(cls, estimate: ContractionReport, reference: ContractionReport, **kw) -> ConvergenceRecord:
        return cls(
            estimate_log=float(estimate.value_log),
            estimate_sign=int(estimate.value_sign),
            reference_log=float(reference.value_log),
            reference_sign=int(reference.value_sign),
            relative_error=float(relative_error(estimate, reference)),
            max_bond_reached=int(kw.pop("max_bond_reached", estimate.max_bond_reached)),
            discarded_weight=float(kw.pop("discarded_weight", estimate.cumulative_discarded_weight)),
            **kw,
        )

    def estimate(self) -> ContractionReport:
        return ContractionReport(self.estimate_log, self.estimate_sign)

    def reference(self) -> ContractionReport:
        return ContractionReport(self.reference_log, self.reference_sign)


COLUMNS = [f.name for f in fields(ConvergenceRecord)]
_TYPES = {f.name: f.type for f in fields(ConvergenceRecord)}


def _fmt(v) -> str:
    # repr round-trips doubles exactly
    return repr(v) if isinstance(v, float) else str(v)


class RecordWriter:
    """CSV writer that flushes after every row."""

    def __init__(self, stream):
        self.stream = stream
        self.writer = csv.writer(stream, lineterminator="\n")
        self.writer.writerow(COLUMNS)
        stream.flush()

    def write(self, record: ConvergenceRecord):
        row = asdict(record)
        self.writer.writerow([_fmt(row[c]) for c in COLUMNS])
        self.stream.flush()


def _parse(name, text):
    typ = _TYPES[name]
    if typ in ("int", int):
        return int(text)
    if typ in ("float", float):
        return float(text)
    return text


def read_records(text: str) -> list[ConvergenceRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != COLUMNS:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    return [ConvergenceRecord(**{k: _parse(k, v) for k, v in row.items()}) for row in reader]


def recomputed_error(record: ConvergenceRecord) -> float:
    return relative_error(record.estimate(), record.reference())


def finite(record: ConvergenceRecord) -> bool:
    return record.estimate_sign == 0 or math.isfinite(record.estimate_log)
