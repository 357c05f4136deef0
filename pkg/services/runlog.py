"""Run-log records and their line-delimited text format.

A run log starts with a comment line stamping the format version and the
design switches, followed by a header naming the fields and one line per
record. Vectors are semicolon-separated decimals written with 17
significant digits, so write -> parse restores identical floats.
"""

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import Solution, UsageError

logger = logging.getLogger(__name__)

FORMAT_TAG = "moead-runlog v1"
FIELDS = ("run_id", "generation", "eval_index", "subproblem_id", "x", "f", "v", "feasible")
ARCHIVE_SENTINEL = -1


@dataclass(frozen=True, eq=False)
class RunLogRecord:
    run_id: int
    generation: int
    eval_index: int
    subproblem_id: int
    x: tuple[float, ...]
    f: tuple[float, ...]
    v: float
    feasible: bool

    @property
    def is_archive(self) -> bool:
        return self.subproblem_id == ARCHIVE_SENTINEL

    def key(self) -> tuple:
        return (
            self.run_id,
            self.generation,
            self.eval_index,
            self.subproblem_id,
            self.x,
            self.f,
            self.v,
            self.feasible,
        )

    def __eq__(self, other):
        if not isinstance(other, RunLogRecord):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def to_solution(self) -> Solution:
        return Solution(
            x=np.array(self.x),
            f=np.array(self.f),
            v=self.v,
            eval_index=self.eval_index,
            run_id=self.run_id,
        )

    @classmethod
    def from_solution(cls, solution, generation, eval_index, subproblem_id):
        return cls(
            run_id=solution.run_id,
            generation=generation,
            eval_index=eval_index,
            subproblem_id=subproblem_id,
            x=tuple(float(v) for v in solution.x),
            f=tuple(float(v) for v in solution.f),
            v=float(solution.v),
            feasible=solution.feasible,
        )


def _format_float(value: float) -> str:
    return format(float(value), ".17g")


def _format_vector(values) -> str:
    return ";".join(_format_float(v) for v in values)


def _parse_vector(text: str) -> tuple[float, ...]:
    if not text:
        return ()
    return tuple(float(v) for v in text.split(";"))


def render_runlog(records: Iterable[RunLogRecord], switches: dict | None = None) -> str:
    """Serialize records into the run-log text format"""
    output = io.StringIO()
    stamp = " ".join(f"{k}={v}" for k, v in sorted((switches or {}).items()))
    output.write(f"# {FORMAT_TAG} {stamp}".rstrip() + "\n")
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(FIELDS)
    for record in records:
        writer.writerow(
            [
                record.run_id,
                record.generation,
                record.eval_index,
                record.subproblem_id,
                _format_vector(record.x),
                _format_vector(record.f),
                _format_float(record.v),
                int(record.feasible),
            ]
        )
    return output.getvalue()


def iter_runlog(text: str) -> Iterator[RunLogRecord]:
    """
    Parse run-log text.

    Raises:
        UsageError: missing header or malformed line
    """
    lines = [line for line in text.splitlines() if line and not line.startswith("#")]
    if not lines:
        raise UsageError("Run log is empty (no header line)")
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != FIELDS:
        raise UsageError(f"Unexpected run-log header: {','.join(header)}")
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(FIELDS):
            raise UsageError(f"Malformed run-log line {lineno}: expected {len(FIELDS)} fields")
        yield RunLogRecord(
            run_id=int(row[0]),
            generation=int(row[1]),
            eval_index=int(row[2]),
            subproblem_id=int(row[3]),
            x=_parse_vector(row[4]),
            f=_parse_vector(row[5]),
            v=float(row[6]),
            feasible=row[7] == "1",
        )


def parse_runlog(text: str) -> list[RunLogRecord]:
    return list(iter_runlog(text))


def read_runlog(path: Path) -> list[RunLogRecord]:
    logger.debug(f"Reading run log {path}")
    return parse_runlog(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class RunLog:
    """Parsed run log of one run, records in file order"""

    records: tuple[RunLogRecord, ...]

    @classmethod
    def from_path(cls, path: Path) -> "RunLog":
        return cls(tuple(read_runlog(path)))

    @property
    def run_id(self) -> int:
        return self.records[0].run_id if self.records else 0

    def archive_records(self) -> list[RunLogRecord]:
        return [r for r in self.records if r.is_archive]

    def front_records(self) -> list[RunLogRecord]:
        return [r for r in self.records if not r.is_archive]

    def generations(self) -> dict[int, list[RunLogRecord]]:
        """Population-front snapshots keyed by generation, in order"""
        snapshots: dict[int, list[RunLogRecord]] = {}
        for record in self.front_records():
            snapshots.setdefault(record.generation, []).append(record)
        return snapshots

    def final_eval(self) -> int:
        return max((r.eval_index for r in self.records), default=0)
