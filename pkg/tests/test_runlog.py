import numpy as np
import pytest

from services.core import UsageError
from services.runlog import FIELDS, FORMAT_TAG, RunLog, RunLogRecord, iter_runlog, parse_runlog, render_runlog


def test_header_and_stamp(record):
    text = render_runlog([record(1, (0.1, 0.2), (1.0, 2.0))], {"repair": "clip", "de": "rand1"})
    first, second = text.splitlines()[:2]
    assert first == f"# {FORMAT_TAG} de=rand1 repair=clip"
    assert second == ",".join(FIELDS)


def test_round_trip_preserves_floats(record):
    rng = np.random.default_rng(2)
    records = [
        record(g, tuple(rng.random(3)), tuple(rng.random(2) * 1e-7), v=float(rng.random()), archive=g % 2 == 0)
        for g in range(1, 20)
    ]
    assert parse_runlog(render_runlog(records)) == records


def test_vectors_are_semicolon_separated(record):
    text = render_runlog([record(1, (0.5, 0.25), (1.0, 0.0))])
    assert "0.5;0.25" in text
    assert "1;0" in text


def test_empty_log_renders_header_only():
    text = render_runlog([])
    assert parse_runlog(text) == []


def test_bad_header_rejected():
    with pytest.raises(UsageError):
        list(iter_runlog("a,b,c\n1,2,3\n"))


def test_empty_text_rejected():
    with pytest.raises(UsageError):
        parse_runlog("# only a comment\n")


def test_malformed_line_rejected(record):
    text = render_runlog([record(1, (0.1,), (1.0, 2.0))]) + "1,2,3\n"
    with pytest.raises(UsageError):
        parse_runlog(text)


def test_runlog_views(record, tmp_path):
    records = [
        record(0, (0.1,), (1.0, 1.0), archive=True, eval_index=5),
        record(0, (0.1,), (1.0, 1.0), subproblem_id=2, eval_index=5),
        record(1, (0.2,), (0.5, 0.5), subproblem_id=0, eval_index=10),
    ]
    path = tmp_path / "rep00.log"
    path.write_text(render_runlog(records), encoding="utf-8")
    log = RunLog.from_path(path)
    assert len(log.archive_records()) == 1
    assert list(log.generations()) == [0, 1]
    assert log.final_eval() == 10


def test_record_solution_conversion(record):
    original = record(3, (0.1, 0.9), (2.0, 3.0), v=0.25)
    solution = original.to_solution()
    assert not solution.feasible
    assert RunLogRecord.from_solution(solution, 3, original.eval_index, original.subproblem_id) == original
