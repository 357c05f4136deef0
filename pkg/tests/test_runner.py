import json
import os

import pytest

from services.runlog import read_runlog
from services.runner import ExperimentPlan, NamedConfig, RunTask, execute_task, map_parallel
from services.tuning_service import AUTO_MOEAD, make_variants
from utils import atomic


@pytest.fixture
def plan(small_config):
    configs = [NamedConfig(name="base", config=AUTO_MOEAD)] + [
        NamedConfig(name=v.name, config=v.config) for v in make_variants()
    ]
    return ExperimentPlan(problems=("zdt1",), configs=tuple(configs), repetitions=10, budget=5000)


def test_plan_task_grid(plan, tmp_path):
    tasks = plan.tasks(tmp_path)
    assert len(tasks) == 80
    assert len({t.config.seed for t in tasks}) == 80
    assert all(t.config.budget == 5000 for t in tasks)
    assert tasks[0].log_path == tmp_path / "runs" / "zdt1" / "base" / "rep00.log"


def test_task_seeds_independent_of_plan_shape(plan, tmp_path):
    wider = plan.model_copy(update={"problems": ("tanaka", "zdt1")})
    seeds = {(t.config_name, t.repetition): t.config.seed for t in plan.tasks(tmp_path)}
    for task in wider.tasks(tmp_path):
        if task.problem == "zdt1":
            assert task.config.seed == seeds[(task.config_name, task.repetition)]


def test_plan_rejects_duplicate_names(small_config):
    named = NamedConfig(name="same", config=small_config)
    with pytest.raises(ValueError):
        ExperimentPlan(problems=("zdt1",), configs=(named, named))


def test_execute_task_writes_artifacts(small_config, tmp_path):
    task = RunTask(problem="zdt1", config_name="small", config=small_config, repetition=3, out_dir=tmp_path)
    outcome = execute_task(task)
    assert outcome.ok
    assert outcome.evaluations == 600
    records = read_runlog(task.log_path)
    assert records and all(r.run_id == 3 for r in records)
    assert len(read_runlog(task.population_path)) == small_config.pop_size
    meta = json.loads(task.metadata_path.read_text(encoding="utf-8"))
    assert meta["seed"] == small_config.seed
    assert meta["config"]["pop_size"] == 20
    assert not [p for p in task.run_dir.iterdir() if p.name.endswith(".tmp")]


def test_execute_task_reports_failure(small_config, tmp_path):
    task = RunTask(problem="no_such_problem", config_name="small", config=small_config, repetition=0, out_dir=tmp_path)
    outcome = execute_task(task)
    assert not outcome.ok
    assert "no_such_problem" in outcome.error
    assert not task.log_path.exists()


def test_rerun_is_byte_identical(small_config, tmp_path):
    first = RunTask(problem="tanaka", config_name="small", config=small_config, repetition=0, out_dir=tmp_path / "a")
    second = first.model_copy(update={"out_dir": tmp_path / "b"})
    execute_task(first)
    execute_task(second)
    assert first.log_path.read_bytes() == second.log_path.read_bytes()
    assert first.population_path.read_bytes() == second.population_path.read_bytes()


def test_interrupted_write_leaves_nothing(tmp_path, monkeypatch):
    def fail(*args):
        raise KeyboardInterrupt

    monkeypatch.setattr(atomic.os, "replace", fail)
    with pytest.raises(KeyboardInterrupt):
        atomic.write_text_atomic_sync(tmp_path / "run.log", "partial")
    assert os.listdir(tmp_path) == []


async def test_async_write_replaces_content(tmp_path):
    target = tmp_path / "nested" / "out.txt"
    await atomic.write_text_atomic(target, "one\n")
    await atomic.write_text_atomic(target, "two\n")
    assert target.read_text(encoding="utf-8") == "two\n"
    assert os.listdir(target.parent) == ["out.txt"]


def _square(x):
    return x * x


def test_map_parallel_keeps_order():
    assert map_parallel(_square, range(6), workers=2) == [0, 1, 4, 9, 16, 25]
    assert map_parallel(_square, [], workers=4) == []
