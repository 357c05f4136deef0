import numpy as np
import pytest
import pytest_asyncio

from services.core import AlgoConfig, BestUpdate
from services.runlog import ARCHIVE_SENTINEL, RunLog, RunLogRecord
from src.database import close_db, create_tables, init_db


@pytest.fixture
def small_config() -> AlgoConfig:
    """Cheap configuration: 20 subproblems, 600 evaluations"""
    return AlgoConfig(
        decomp="sld",
        pop_size=20,
        aggregation="wt",
        update=BestUpdate(nr=2),
        T=10,
        delta=0.9,
        de_F=0.5,
        pm_eta=20.0,
        pm_prob=0.1,
        budget=600,
        seed=3,
    )


@pytest.fixture
def record():
    """Factory for run-log records; archive=True marks UEA insertions"""

    def make(generation, x, f, eval_index=None, subproblem_id=0, v=0.0, archive=False, run_id=0):
        return RunLogRecord(
            run_id=run_id,
            generation=generation,
            eval_index=eval_index if eval_index is not None else generation * 10,
            subproblem_id=ARCHIVE_SENTINEL if archive else subproblem_id,
            x=tuple(float(c) for c in x),
            f=tuple(float(c) for c in f),
            v=float(v),
            feasible=v == 0.0,
        )

    return make


@pytest.fixture
def path_log(record):
    """Factory: one run whose single front member visits the given decision vectors"""

    def make(points, run_id=0):
        records = []
        for generation, x in enumerate(points):
            f = (float(np.sum(x)), 1.0)
            records.append(record(generation, x, f, run_id=run_id))
        return RunLog(tuple(records))

    return make


@pytest_asyncio.fixture
async def catalog():
    init_db("sqlite+aiosqlite:///:memory:")
    await create_tables()
    yield
    await close_db()
