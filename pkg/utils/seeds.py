import hashlib
import logging
import re

logger = logging.getLogger(__name__)

SEED_MODULUS = 2**31 - 1

# problem/config identifiers used on the command line, e.g. zdt1/auto-moead
RUN_ID_PATTERN = re.compile(r"^[a-z0-9_]+/[A-Za-z0-9_.\-]+$")


def derive_seed(master_seed: int, problem: str, config_name: str, repetition: int) -> int:
    """
    Seed of one repetition. Depends only on its own coordinates, so reordering
    a plan never changes the seed of a run.
    """
    token = f"{master_seed}:{problem}:{config_name}:{repetition}".encode("utf-8")
    digest = hashlib.sha256(token).digest()
    seed = int.from_bytes(digest[:8], "big") % SEED_MODULUS
    logger.debug(f"Seed for {problem}/{config_name}#{repetition}: {seed}")
    return seed


def instance_seeds(master_seed: int, label: str, count: int) -> list[int]:
    """Seeds for tuning instances, independent of the experiment seeds"""
    return [derive_seed(master_seed, label, "instance", i) for i in range(count)]


def validate_run_id_format(run_id: str) -> bool:
    """Check a problem/config identifier"""
    if not run_id or not isinstance(run_id, str):
        return False
    return RUN_ID_PATTERN.match(run_id) is not None


def split_run_id(run_id: str) -> tuple[str, str]:
    problem, _, config_name = run_id.partition("/")
    return problem, config_name
