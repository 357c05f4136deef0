from pathlib import Path

import numpy as np
import pytest

from services.core import UsageError
from services.tuning_service import (
    AUTO_MOEAD,
    COMPONENT_GROUPS,
    Instance,
    RunScorer,
    _eliminate,
    ablate,
    changed_fields,
    differing_groups,
    make_variants,
    mean_ranks,
    perturb_config,
    race,
    render_variants,
    sample_config,
    tune,
)
from utils.config_files import load_space, parse_space
from utils.seeds import instance_seeds

ROOT = Path(__file__).parent.parent
RIGGED = ROOT / "spaces" / "rigged.space"
COMPONENTS_SPACE = ROOT / "spaces" / "components.space"
GOLDEN = Path(__file__).parent / "golden" / "variants.txt"


def _rigged(**sections):
    """Rigged space with whole [param:NAME] bodies replaced"""
    text = RIGGED.read_text(encoding="utf-8")
    for name, body in sections.items():
        start = text.index(f"[param:{name}]")
        end = text.find("\n\n", start)
        end = len(text) if end == -1 else end
        text = text[:start] + f"[param:{name}]\n{body}" + text[end:]
    return parse_space(text)


class FlatScorer:
    """Deterministic scores without running anything"""

    def __init__(self, score):
        self.score = score
        self.calls = 0

    def score_block(self, configs, instance):
        self.calls += len(configs)
        return [self.score(c, instance) for c in configs]


INSTANCES = [Instance("zdt1", s) for s in range(10)]


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def test_single_value_space_always_same():
    space = _rigged(pm_prob="type = categorical\nvalues = 0.3")
    rng = np.random.default_rng(0)
    assert {sample_config(space, rng).pm_prob for _ in range(50)} == {0.3}


def test_uniform_real_mean():
    space = _rigged(delta="type = real\nrange = 0.1, 1.0")
    rng = np.random.default_rng(1)
    draws = [sample_config(space, rng).delta for _ in range(10_000)]
    assert np.mean(draws) == pytest.approx(0.55, abs=0.02)
    assert min(draws) >= 0.1 and max(draws) <= 1.0


def test_conditional_parameters_follow_parents():
    space = load_space(COMPONENTS_SPACE)
    rng = np.random.default_rng(2)
    configs = [sample_config(space, rng) for _ in range(200)]
    for config in configs:
        flat = config.to_flat()
        assert ("ra_frac" in flat) == (flat["ra"] == "partial")
        assert ("tr" in flat) == (flat["update"] == "restricted")
        assert ("restart_evals" in flat) == (flat["restart"] == "every")
    assert {c.to_flat()["ra"] for c in configs} == {"off", "partial"}


def test_sampled_configs_respect_cross_constraints():
    space = load_space(COMPONENTS_SPACE)
    rng = np.random.default_rng(3)
    for _ in range(100):
        flat = sample_config(space, rng).to_flat()
        assert flat["T"] <= flat["pop_size"]
        assert flat.get("tr", 0) <= flat["T"]


def test_perturbation_stays_in_domain():
    space = load_space(COMPONENTS_SPACE)
    rng = np.random.default_rng(4)
    parent = sample_config(space, rng)
    for _ in range(50):
        child = perturb_config(space, parent, rng)
        assert 0.1 <= child.delta <= 1.0
        assert 10 <= child.T <= 100
        assert child.budget == 100_000


# ---------------------------------------------------------------------------
# Racing
# ---------------------------------------------------------------------------


def test_mean_ranks():
    assert mean_ranks(np.array([[3.0, 2.0, 1.0], [1.0, 2.0, 3.0]])).tolist() == [2.0, 2.0, 2.0]
    assert mean_ranks(np.array([[3.0, 2.0, 1.0]])).tolist() == [1.0, 2.0, 3.0]


def test_elimination_spares_best():
    matrix = np.tile([3.0, 2.0, 1.0], (10, 1)) + np.random.default_rng(0).random((10, 3)) * 0.1
    assert sorted(_eliminate(matrix, 0.05)) == [1, 2]


def test_race_eliminates_consistently_worse(small_config):
    entrants = [small_config.replace(pm_prob=p) for p in (0.0, 0.5, 1.0)]
    scorer = FlatScorer(lambda c, _: c.pm_prob)
    result = race(entrants, INSTANCES, budget_runs=100, elites=1, scorer=scorer)
    assert result.survivors == [2]
    assert sorted(result.eliminated) == [(0, 5), (1, 5)]
    assert result.runs_used == 15 == scorer.calls
    assert set(result.survivors) | {i for i, _ in result.eliminated} == {0, 1, 2}


def test_race_identical_configs_survive(small_config):
    scorer = RunScorer(checkpoint=200, budget=600)
    result = race([small_config, small_config], INSTANCES[:6], budget_runs=20, elites=1, scorer=scorer)
    assert result.eliminated == []
    assert result.scores[0] == result.scores[1]


def test_race_floor_at_elites(small_config):
    entrants = [small_config.replace(pm_prob=p) for p in (0.0, 1.0)]
    result = race(entrants, INSTANCES, budget_runs=100, elites=2, scorer=FlatScorer(lambda c, _: c.pm_prob))
    assert result.eliminated == []
    assert result.survivors == [1, 0]


def test_race_stops_at_budget(small_config):
    entrants = [small_config.replace(pm_prob=p) for p in (0.0, 0.5, 1.0)]
    result = race(entrants, INSTANCES, budget_runs=7, scorer=FlatScorer(lambda c, _: 1.0))
    assert result.runs_used == 6


def test_race_preconditions(small_config):
    with pytest.raises(UsageError):
        race([small_config], INSTANCES, budget_runs=10)
    with pytest.raises(UsageError):
        race([small_config, small_config.replace(pm_prob=0.5)], INSTANCES, budget_runs=1)


def test_scorer_caches_runs(small_config):
    scorer = RunScorer(checkpoint=200, budget=600)
    instance = Instance("binh_korn", 1)
    first = scorer.score_block([small_config], instance)
    assert scorer.score_block([small_config.replace(seed=99)], instance) == first
    assert scorer.runs == 1
    assert first[0] > 0


def test_tune_single_configuration_space():
    space = _rigged(pm_prob="type = categorical\nvalues = 0.3")
    result = tune(space, INSTANCES, 50, np.random.default_rng(0), scorer=FlatScorer(lambda c, _: 0.0))
    assert result.best.pm_prob == 0.3
    assert result.races == []


def test_tune_keeps_best_entrant():
    space = _rigged(pm_prob="type = categorical\nvalues = 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9")
    scorer = FlatScorer(lambda c, _: c.pm_prob)
    result = tune(space, INSTANCES, 60, np.random.default_rng(0), elites=1, scorer=scorer)
    assert result.races
    assert result.best.pm_prob == max(c.pm_prob for r in result.races for c in r.entrants)
    assert result.runs_used <= 60


@pytest.mark.slow
def test_rigged_race_prefers_mutation():
    space = load_space(RIGGED)
    off, on = (sample_config(space, np.random.default_rng(0)).replace(pm_prob=p) for p in (0.0, 0.3))
    wins = 0
    for master in range(10):
        instances = [Instance("zdt1", s) for s in instance_seeds(master, "zdt1", 10)]
        result = race([off, on], instances, budget_runs=200, elites=1, scorer=RunScorer(checkpoint=500, budget=3000))
        wins += result.best.pm_prob == 0.3
    assert wins >= 9


# ---------------------------------------------------------------------------
# Ablation
# ---------------------------------------------------------------------------


def test_ablation_single_difference(small_config):
    target = small_config.replace(pm_prob=0.5)
    result = ablate(small_config, target, INSTANCES[:2], FlatScorer(lambda c, _: c.pm_prob))
    assert len(result.steps) == 1
    assert result.steps[0].flipped == ("pm_prob",)
    assert result.target_score == 0.5


def test_ablation_greedy_path(small_config):
    target = small_config.replace(delta=0.5, de_F=0.8, pm_prob=0.5)
    scorer = FlatScorer(lambda c, _: 10 * c.pm_prob + c.de_F - 0.1 * c.delta)
    result = ablate(small_config, target, INSTANCES[:2], scorer)
    assert [s.flipped for s in result.steps] == [("pm_prob",), ("de_F",), ("delta",)]
    remaining = 3
    for step in result.steps:
        remaining -= 1
        assert len(differing_groups(step.config, target)) == remaining
        assert step.score == max(step.candidates.values())
    assert result.steps[-1].config == target


def test_ablation_moves_conditional_parameters(small_config):
    target = small_config.replace(update="restricted", tr=5)
    result = ablate(small_config, target, INSTANCES[:1], FlatScorer(lambda c, _: 0.0))
    assert result.steps[0].flipped == ("update", "tr")


def test_ablation_is_deterministic(small_config):
    target = small_config.replace(delta=0.5, pm_prob=0.5)
    def score(c, inst):
        return c.pm_prob * inst.seed - c.delta

    first = ablate(small_config, target, INSTANCES[:3], FlatScorer(score))
    second = ablate(small_config, target, INSTANCES[:3], FlatScorer(score))
    assert [s.flipped for s in first.steps] == [s.flipped for s in second.steps]


def test_ablation_needs_different_configs(small_config):
    with pytest.raises(UsageError):
        ablate(small_config, small_config.replace(seed=7), INSTANCES[:1], FlatScorer(lambda c, _: 0.0))


# ---------------------------------------------------------------------------
# Variants
# ---------------------------------------------------------------------------


def test_seven_variants():
    variants = make_variants()
    assert len(variants) == 7
    assert all(v.config != AUTO_MOEAD for v in variants)
    assert len({v.name for v in variants}) == 7


def test_variant_changes_one_group():
    base = AUTO_MOEAD.to_flat()
    for variant in make_variants():
        other = variant.config.to_flat()
        changed = {k for k in set(base) | set(other) if base.get(k) != other.get(k)}
        assert changed and changed <= set(COMPONENT_GROUPS[variant.group])


def test_inverse_change_restores_base():
    base = AUTO_MOEAD.to_flat()
    for variant in make_variants():
        inverse = {k: base[k] for k in COMPONENT_GROUPS[variant.group] if k in base}
        assert variant.config.replace(**inverse) == AUTO_MOEAD


def test_variant_values():
    variants = {v.name: v.config for v in make_variants()}
    assert changed_fields(AUTO_MOEAD, variants["operators"]) == {"de_F": 0.5, "pm_eta": 20.0, "pm_prob": 0.3}
    assert variants["update"].update.tr == 20
    assert variants["decomp-pop"].pop_size == 300


def test_decomp_pop_note_names_tuned_domain():
    variant = next(v for v in make_variants() if v.name == "decomp-pop")
    pop_size = next(p for p in load_space(COMPONENTS_SPACE).params if p.name == "pop_size")
    assert "100 or 500" in variant.note
    assert sorted(int(v) for v in pop_size.values) == [100, 500]
    assert variant.config.pop_size not in {int(v) for v in pop_size.values}


def test_variants_golden_file():
    assert render_variants() == GOLDEN.read_text(encoding="utf-8")
