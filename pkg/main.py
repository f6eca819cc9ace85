"""Command-line entry point: corrupt, run, sweep, plot, eval."""
import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from data import PRESET_NAMES
from src.errors import UnInfoError
from src.logger import get_logger
from src.schemas import GetConfigSchemas
from src.validator import Validator

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uninfo", description="Streaming test-time adaptation of a zero-shot classifier.")
    commands = parser.add_subparsers(dest="command", required=True)

    def experiment_command(name: str, help_text: str) -> argparse.ArgumentParser:
        command = commands.add_parser(name, help=help_text)
        command.add_argument("--config", type=Path, default=None, help="experiment config JSON; omitted means defaults")
        command.add_argument("--out", type=Path, default=None, help="output directory, overrides the config")
        command.add_argument("--seed", type=int, action="append", default=None, help="run seed, repeatable; overrides the config")
        command.add_argument("--preset", choices=PRESET_NAMES, default=None, help="ablation preset, overrides the config")
        return command

    experiment_command("corrupt", "write cached corrupted streams")
    experiment_command("run", "adapt on every (kind, seed) stream")
    sweep = experiment_command("sweep", "sensitivity sweep over lambda or I0")
    sweep.add_argument("--param", choices=["lambda", "i0"], required=True)
    sweep.add_argument("--values", type=float, nargs="+", required=True)
    evaluate = experiment_command("eval", "no-adapt evaluation and diagnostics")
    evaluate.add_argument("--corruption-bank", type=Path, default=None, help="archive of corruption-prompt text embeddings")

    plot = commands.add_parser("plot", help="render SVG figures from report CSVs")
    plot.add_argument("--what", choices=["weights", "spca", "sweep"], required=True)
    plot.add_argument("--inputs", type=Path, nargs="+", required=True)
    plot.add_argument("--out", type=Path, default=Path("plots"))
    return parser


def load_config(args: argparse.Namespace):
    config = Validator.validate_config(args.config, GetConfigSchemas.experiment)
    update = {}
    if args.out is not None:
        update["output_dir"] = args.out
    if args.seed:
        update["seeds"] = args.seed
    if args.preset is not None:
        update["preset"] = args.preset
    return config.model_copy(update=update)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    # services pull in torch; imported here so that --help stays fast
    from services.experiment_service import ExperimentService
    from services.plot_service import PlotService

    try:
        if args.command == "plot":
            outputs = PlotService().plot(args.what, args.inputs, args.out)
        else:
            service = ExperimentService(load_config(args))
            if args.command == "corrupt":
                outputs = service.corrupt()
            elif args.command == "run":
                outputs = [service.run()]
            elif args.command == "sweep":
                outputs = [service.sweep(args.param, args.values)]
            else:
                outputs = [service.evaluate(args.corruption_bank)]
    except UnInfoError as ex:
        logger.error(f"{args.command} failed: {ex}")
        print(f"error: {ex}", file=sys.stderr)
        return ex.exit_code

    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
