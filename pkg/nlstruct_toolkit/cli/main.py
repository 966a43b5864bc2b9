"""
Command-line entry point: gen-data, train, eval, infer, gradcheck and bench.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from ..exceptions import (
    ArtifactIOException,
    ConfigurationException,
    NLStructException,
    NumericalFailureException,
    StructuralException,
)
from ..learning import gradcheck_table
from .checkpoint import load_checkpoint
from .dao import RunDirectoryDao
from .serializers import RunConfig, load_run_config, parse_run_config
from .service import ExperimentService, bench_table, gradcheck_failed

# Set up logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(run_dir: Optional[Path] = None, verbose: bool = False):
    """Console logging without timestamps; the run directory's run.log gets timestamped records."""
    root = logging.getLogger()
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    for handler in list(root.handlers):
        if getattr(handler, "_nlstruct", False):
            root.removeHandler(handler)
            handler.close()
    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    console._nlstruct = True
    root.addHandler(console)
    if run_dir is not None:
        file_handler = logging.FileHandler(Path(run_dir) / RunDirectoryDao.LOG, encoding="utf-8")
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        file_handler._nlstruct = True
        root.addHandler(file_handler)


def _load_config(args) -> RunConfig:
    if not args.config:
        raise ConfigurationException("This command needs --config", field="--config")
    config = load_run_config(args.config)
    if args.seed_override is not None:
        config = config.with_seed(args.seed_override)
    if args.out:
        config = config.with_output_dir(args.out)
    if args.threads:
        config = config.model_copy(update={
            "train": config.train.model_copy(update={"threads": args.threads}),
            "eval": config.eval.model_copy(update={"threads": args.threads}),
        })
    return config


def _checkpoint_service(args) -> ExperimentService:
    if not args.checkpoint:
        raise ConfigurationException("This command needs --checkpoint", field="--checkpoint")
    config = parse_run_config(load_checkpoint(args.checkpoint).config_json)
    run_dir = args.out or str(Path(args.checkpoint).resolve().parent.parent)
    return ExperimentService(config, RunDirectoryDao(run_dir))


def _service(args, config: RunConfig) -> ExperimentService:
    dao = RunDirectoryDao(config.output_dir)
    dao.ensure_dir()
    configure_logging(dao.root, args.verbose)
    return ExperimentService(config, dao)


def cmd_gen_data(args) -> int:
    service = _service(args, _load_config(args))
    hashes = service.gen_data()
    for split, digest in sorted(hashes.items()):
        print(f"{split}\t{digest}")
    return EXIT_OK


def cmd_train(args) -> int:
    service = _service(args, _load_config(args))
    summary = service.train()
    print(f"epochs\t{summary.epochs}")
    print(f"final_objective\t{summary.final_objective:.10g}")
    if summary.best_val_char_accuracy is not None:
        print(f"best_val_char_accuracy\t{summary.best_val_char_accuracy:.6f}")
    print(f"checkpoint\t{summary.checkpoint}")
    return EXIT_OK


def cmd_eval(args) -> int:
    if not args.dataset:
        raise ConfigurationException("eval needs --dataset", field="--dataset")
    service = _checkpoint_service(args)
    service.dao.ensure_dir()
    configure_logging(service.dao.root, args.verbose)
    report = service.evaluate(args.checkpoint, args.dataset, args.mode)
    print(report.to_table(), end="")
    return EXIT_OK


def cmd_infer(args) -> int:
    if not args.dataset:
        raise ConfigurationException("infer needs --dataset holding the example", field="--dataset")
    service = _checkpoint_service(args)
    service.dao.ensure_dir()
    configure_logging(service.dao.root, args.verbose)
    summary = service.infer(args.checkpoint, args.dataset, args.mode)
    print(f"assignment\t{' '.join(str(int(v)) for v in summary.assignment)}")
    print(f"decoded\t{summary.decoded}")
    if summary.result is not None:
        for key, value in summary.result.diagnostics().items():
            print(f"{key}\t{value:.10g}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    service = _service(args, _load_config(args))
    rows = service.gradcheck()
    table = gradcheck_table(rows)
    service.dao.write_text("gradcheck.tsv", table)
    print(table, end="")
    return EXIT_NUMERICAL if gradcheck_failed(rows) else EXIT_OK


def cmd_bench(args) -> int:
    service = _service(args, _load_config(args))
    print(bench_table(service.bench()), end="")
    return EXIT_OK


COMMANDS: Dict[str, Callable] = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "infer": cmd_infer,
    "gradcheck": cmd_gradcheck,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlstruct", description="Structured prediction with nonlinear top scores")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="Run configuration (JSON)")
    parser.add_argument("--checkpoint", help="Checkpoint file for eval and infer")
    parser.add_argument("--dataset", help="Dataset file for eval, or the example file for infer")
    parser.add_argument("--mode", choices=["auto", "exact-dp", "message-passing", "saddle", "spen-relaxed"],
                        help="Inference mode for eval and infer")
    parser.add_argument("--out", help="Run directory overriding the config's output_dir")
    parser.add_argument("--seed-override", type=int, help="Replace the initialization and shuffle seeds")
    parser.add_argument("--threads", type=int, help="Worker threads for per-example inference")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run a command and map failures to exit codes.

    Returns:
        0 on success, 2 for configuration and structural errors, 3 for numerical
        failures (and failed gradient checks), 4 for missing or corrupt files
    """
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationException, StructuralException) as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailureException as e:
        location = f" (example {e.example_id})" if e.example_id is not None else ""
        print(f"error: {e.message}{location}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ArtifactIOException, OSError) as e:
        print(f"error: {getattr(e, 'message', e)}", file=sys.stderr)
        return EXIT_IO
    except NLStructException as e:
        logger.error(f"Unhandled toolkit error: {e.message}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
