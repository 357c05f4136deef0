"""Command handlers, one per subcommand"""

from .experiment_metrics import cmd_metrics
from .experiment_run import cmd_run
from .experiment_stn import cmd_stn
from .experiment_tune import cmd_ablate, cmd_tune
from .experiment_variants import cmd_variants

__all__ = [
    "cmd_run",
    "cmd_metrics",
    "cmd_stn",
    "cmd_tune",
    "cmd_ablate",
    "cmd_variants",
]
