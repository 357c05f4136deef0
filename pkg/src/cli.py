import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from services.core import RunError, UsageError
from services.export_service import ExportFormatter
from utils.config_files import load_config, load_plan
from utils.validators import parse_id_list, sanitize_list, validate_precision

from .config import settings
from .handlers import cmd_ablate, cmd_metrics, cmd_run, cmd_stn, cmd_tune, cmd_variants

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE = "moead.log"
SUMMARY_VIEW = ("problem", "variant", "hv", "auc", "nodes", "edges", "pf_count", "delta_hv")


def setup_logging(out_dir: Optional[Path], level: str) -> None:
    """Stream handler always; file handler inside the output directory when there is one"""
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(out_dir / LOG_FILE))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=settings.output_dir, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--workers", type=int, default=settings.workers, help="worker processes")
    common.add_argument("--precision", type=int, default=settings.precision, help="STN decimals")
    common.add_argument("--vectors", default=None, help="tracked vector ids, e.g. 0,2")
    common.add_argument("--ref-point", type=float, default=settings.ref_point, help="HV reference value")
    common.add_argument("--checkpoint", type=int, default=settings.checkpoint, help="evaluations per checkpoint")

    parser = argparse.ArgumentParser(
        prog="moead",
        description="Component-wise MOEA/D runs and behavior analysis",
    )
    parser.add_argument("--version", action="version", version=f"{settings.app_name} {settings.app_version}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", parents=[common], help="execute an experiment plan")
    run_p.add_argument("--plan", type=Path, required=True, help="plan file")

    metrics_p = sub.add_parser("metrics", parents=[common], help="metrics tables from run logs")
    metrics_p.add_argument("--base", default=settings.base_config, help="configuration deltas are taken against")
    metrics_p.add_argument("--stride", type=int, default=1, help="STN generation stride")

    stn_p = sub.add_parser("stn", parents=[common], help="merged STN of two configurations")
    stn_p.add_argument("base_id", help="problem/config, e.g. zdt1/auto-moead")
    stn_p.add_argument("variant_id", help="problem/config, e.g. zdt1/no-restart")
    stn_p.add_argument("--stride", type=int, default=1, help="STN generation stride")

    tune_p = sub.add_parser("tune", parents=[common], help="iterated racing over a parameter space")
    tune_p.add_argument("--space", type=Path, required=True, help="parameter space file")
    tune_p.add_argument("--problems", required=True, help="comma-separated problem names")
    tune_p.add_argument("--instances", type=int, default=10, help="instances per problem")
    tune_p.add_argument("--budget-runs", type=int, default=500, help="total runs the tuner may spend")
    tune_p.add_argument("--elites", type=int, default=7, help="survivors kept between races")
    tune_p.add_argument("--run-budget", type=int, default=None, help="evaluations per run (overrides the space)")

    ablate_p = sub.add_parser("ablate", parents=[common], help="ablation path between two configurations")
    ablate_p.add_argument("--source", type=Path, required=True, help="source configuration file")
    ablate_p.add_argument("--target", type=Path, required=True, help="target configuration file")
    ablate_p.add_argument("--problems", required=True, help="comma-separated problem names")
    ablate_p.add_argument("--instances", type=int, default=5, help="instances per problem")
    ablate_p.add_argument("--run-budget", type=int, default=None, help="evaluations per run")

    variants_p = sub.add_parser("variants", parents=[common], help="print the component variant suite")
    variants_p.add_argument("--base-config", type=Path, default=None, help="base configuration file")
    variants_p.add_argument("--write", action="store_true", help="also write the configurations under --out")
    return parser


async def dispatch(args: argparse.Namespace) -> int:
    master_seed = args.seed if args.seed is not None else settings.master_seed
    precision = validate_precision(args.precision)
    vectors = parse_id_list(args.vectors)
    if args.workers < 1:
        raise UsageError(f"--workers must be at least 1, got {args.workers}")
    if args.checkpoint < 1:
        raise UsageError(f"--checkpoint must be at least 1, got {args.checkpoint}")

    if args.command == "run":
        plan = load_plan(args.plan)
        if args.seed is not None:
            plan = plan.model_copy(update={"master_seed": args.seed})
        await cmd_run(plan, args.out, args.workers)
    elif args.command == "metrics":
        summary = await cmd_metrics(
            args.out, args.base, args.ref_point, args.checkpoint, precision, vectors, args.stride, args.workers
        )
        print(ExportFormatter.format_table(summary[list(SUMMARY_VIEW)]))
        print(f"{len(summary)} configuration rows written to {args.out / 'metrics'}")
    elif args.command == "stn":
        metrics = await cmd_stn(args.out, args.base_id, args.variant_id, precision, vectors, args.stride)
        print(f"merged: nodes={metrics['nodes']} edges={metrics['edges']} shared={metrics['shared']}")
    elif args.command == "tune":
        best = await cmd_tune(
            args.space, sanitize_list(args.problems), args.out, args.instances, args.budget_runs,
            args.elites, master_seed, args.run_budget, args.checkpoint, args.ref_point, args.workers,
        )
        print(" ".join(f"{k}={v}" for k, v in best.config.to_flat().items() if k != "seed"))
    elif args.command == "ablate":
        result = await cmd_ablate(
            load_config(args.source), load_config(args.target), sanitize_list(args.problems), args.out,
            args.instances, master_seed, args.run_budget, args.checkpoint, args.ref_point, args.workers,
        )
        for step_no, step in enumerate(result.steps, start=1):
            print(f"{step_no}. {','.join(step.flipped)}: {step.score:.6g}")
    elif args.command == "variants":
        base = load_config(args.base_config) if args.base_config else None
        print(await cmd_variants(base, args.out if args.write else None), end="")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    writes_files = args.command != "variants" or args.write
    setup_logging(args.out if writes_files else None, settings.effective_log_level)

    try:
        return asyncio.run(dispatch(args))
    except UsageError as e:
        logger.error(f"{e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except RunError as e:
        logger.error(f"Run failure: {e}")
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_RUNTIME
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return EXIT_RUNTIME


def run():
    """
    Entry point function of the command line
    """
    sys.exit(main())


if __name__ == "__main__":
    run()
