import pytest

from services.core import UsageError
from utils.seeds import SEED_MODULUS, derive_seed, instance_seeds, split_run_id, validate_run_id_format
from utils.validators import ConfigNameValidator, parse_id_list, sanitize_list, validate_precision


def test_derive_seed_is_stable():
    assert derive_seed(1, "zdt1", "auto-moead", 0) == derive_seed(1, "zdt1", "auto-moead", 0)
    assert 0 <= derive_seed(1, "zdt1", "auto-moead", 0) < SEED_MODULUS


def test_derive_seed_depends_on_every_coordinate():
    seeds = {
        derive_seed(1, "zdt1", "auto-moead", 0),
        derive_seed(2, "zdt1", "auto-moead", 0),
        derive_seed(1, "tanaka", "auto-moead", 0),
        derive_seed(1, "zdt1", "no-ra", 0),
        derive_seed(1, "zdt1", "auto-moead", 1),
    }
    assert len(seeds) == 5


def test_repetition_seeds_distinct():
    assert len({derive_seed(1, "zdt1", "base", rep) for rep in range(100)}) == 100


def test_instance_seeds():
    seeds = instance_seeds(3, "zdt1", 10)
    assert len(set(seeds)) == 10
    assert seeds[:4] == instance_seeds(3, "zdt1", 4)


@pytest.mark.parametrize(
    "run_id,valid",
    [("zdt1/auto-moead", True), ("binh_korn/no-ra", True), ("zdt1", False), ("ZDT1/x", False), ("", False)],
)
def test_run_id_format(run_id, valid):
    assert validate_run_id_format(run_id) is valid


def test_split_run_id():
    assert split_run_id("zdt1/no-restart") == ("zdt1", "no-restart")


def test_validate_precision():
    assert validate_precision(0) == 0
    with pytest.raises(UsageError):
        validate_precision(7)


def test_parse_id_list():
    assert parse_id_list("0, 2,3") == [0, 2, 3]
    assert parse_id_list(None) is None
    assert parse_id_list("  ") is None
    with pytest.raises(UsageError):
        parse_id_list("0,x")
    with pytest.raises(UsageError):
        parse_id_list("-1")


def test_sanitize_list():
    assert sanitize_list(" zdt1 , ,tanaka ") == ["zdt1", "tanaka"]


@pytest.mark.parametrize("name", ["", "a b", "..", "x" * 65, "a/b"])
def test_config_name_rejected(name):
    with pytest.raises(UsageError):
        ConfigNameValidator.validate_or_raise(name)
