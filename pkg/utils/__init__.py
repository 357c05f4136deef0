from .atomic import write_text_atomic, write_text_atomic_sync
from .seeds import derive_seed, split_run_id, validate_run_id_format

__all__ = ["write_text_atomic", "write_text_atomic_sync", "derive_seed", "split_run_id", "validate_run_id_format"]
