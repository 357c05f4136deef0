import pytest

from src.database import RunRepository, get_session
from src.database.models import RUN_DONE, RUN_FAILED, RUN_PENDING

METRICS = dict(hv=0.8, hv_ratio=0.66, auc=3.2, variance=0.01, pf_count=12, nodes=40, edges=55, shared=None)


async def _register(problem="zdt1", config_name="base", repetition=0, seed=7):
    async with get_session() as session:
        entry = await RunRepository(session).register_run(
            problem, config_name, repetition, seed, f"runs/{problem}/{config_name}/rep{repetition:02d}.log"
        )
        return entry.id


async def test_register_and_complete(catalog):
    run_id = await _register()
    async with get_session() as session:
        repository = RunRepository(session)
        entry = await repository.get_run("zdt1", "base", 0)
        assert entry.id == run_id
        assert entry.status == RUN_PENDING
        await repository.complete_run(run_id, True, evaluations=600, generations=29)

    async with get_session() as session:
        done = await RunRepository(session).list_runs()
        assert [(r.problem, r.config_name, r.repetition, r.evaluations) for r in done] == [("zdt1", "base", 0, 600)]


async def test_register_again_resets_to_pending(catalog):
    run_id = await _register(seed=7)
    async with get_session() as session:
        await RunRepository(session).complete_run(run_id, False)
    again = await _register(seed=8)
    assert again == run_id
    async with get_session() as session:
        entry = await RunRepository(session).get_run("zdt1", "base", 0)
        assert entry.status == RUN_PENDING
        assert entry.seed == 8


async def test_complete_unknown_run(catalog):
    async with get_session() as session:
        assert await RunRepository(session).complete_run(999, True) is None


async def test_list_filters(catalog):
    ids = [
        await _register("zdt1", "base", 0),
        await _register("zdt1", "no-ra", 0),
        await _register("tanaka", "base", 0),
    ]
    async with get_session() as session:
        repository = RunRepository(session)
        for run_id in ids[:2]:
            await repository.complete_run(run_id, True)
        await repository.complete_run(ids[2], False)

    async with get_session() as session:
        repository = RunRepository(session)
        assert len(await repository.list_runs(problem="zdt1")) == 2
        assert len(await repository.list_runs(config_name="base")) == 1
        failed = await repository.list_runs(status=RUN_FAILED)
        assert [r.problem for r in failed] == ["tanaka"]
        assert len(await repository.list_runs(status=None)) == 3


async def test_save_metrics_upserts(catalog):
    run_id = await _register()
    async with get_session() as session:
        repository = RunRepository(session)
        await repository.complete_run(run_id, True)
        await repository.save_metrics(run_id, **METRICS)
    async with get_session() as session:
        await RunRepository(session).save_metrics(run_id, **{**METRICS, "hv": 0.9, "shared": 4})

    async with get_session() as session:
        (entry,) = await RunRepository(session).list_runs(status=RUN_DONE)
        assert entry.metric.hv == pytest.approx(0.9)
        assert entry.metric.shared == 4


async def test_save_metrics_requires_every_field(catalog):
    run_id = await _register()
    async with get_session() as session:
        with pytest.raises(ValueError, match="edges"):
            await RunRepository(session).save_metrics(run_id, **{k: v for k, v in METRICS.items() if k != "edges"})


async def test_catalog_stats(catalog):
    first = await _register(repetition=0)
    second = await _register(repetition=1)
    await _register(repetition=2)
    async with get_session() as session:
        repository = RunRepository(session)
        await repository.complete_run(first, True)
        await repository.complete_run(second, False)
        await repository.save_metrics(first, **METRICS)

    async with get_session() as session:
        stats = await RunRepository(session).get_catalog_stats()
    assert stats == {"runs": 3, "done": 1, "failed": 1, "pending": 1, "with_metrics": 1}
