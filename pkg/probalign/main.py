import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from .cli import commands
from .config import settings
from .exceptions import InvalidEpsilon, ProbAlignError, UsageError

logger = logging.getLogger("probalign")

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE = 2


def _float_in_unit(value: str) -> float:
    number = float(value)
    if not 0 <= number <= 1:
        raise argparse.ArgumentTypeError(f"{value} is not in [0, 1]")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.PROJECT_NAME,
        description="Alignment-based conformance checking over probabilistic event logs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")

    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    common.add_argument("--workers", type=int, default=None, help="worker processes (default: PROBALIGN_THREADS or CPU count)")
    common.add_argument("--out", default=settings.OUT_DIR, help="output directory")
    common.add_argument("--max-expansions", type=int, default=settings.MAX_EXPANSIONS, help="per-case search budget")
    common.add_argument("--timeout", type=float, default=settings.TIMEOUT_S, help="per-case search timeout in seconds")
    common.add_argument("--timings", action="store_true", help="write measured runtimes instead of 0")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    align = sub.add_parser("align", parents=[common], help="align every case of a log against a model")
    align.add_argument("model", help="process model (.pnml)")
    align.add_argument("log", help="probabilistic log (.problog.json, .problog.csv or a directory of CSVs)")
    align.add_argument("--cost", choices=["standard", "weighted"], default="weighted")
    align.add_argument("--epsilon", type=float, default=None)
    align.add_argument("--argmax", action="store_true", help="align the most probable activity of every event")
    align.add_argument("--deterministic", action="store_true", help="log is a deterministic .detlog.json")
    align.add_argument("--renormalize", action="store_true", help="rescale event probabilities to sum to 1")
    align.set_defaults(handler=commands.cmd_align)

    gen = sub.add_parser("gen", parents=[common], help="inject noise into a deterministic log")
    gen.add_argument("log", help="ground-truth deterministic log (.detlog.json)")
    gen.add_argument("--p-h", type=_float_in_unit, required=True)
    gen.add_argument("--t-d", type=_float_in_unit, default=0.25)
    gen.add_argument("--seed", type=int, default=settings.SEED)
    gen.add_argument("--model", default=None, help="widen the universe with the model's activities and write a fitness profile")
    gen.add_argument("--format", choices=["json", "csv"], default="json")
    gen.set_defaults(handler=commands.cmd_gen)

    detect = sub.add_parser("detect", parents=[common], help="score deviation detection against ground truth")
    detect.add_argument("model")
    detect.add_argument("log")
    detect.add_argument("gt", help="ground-truth sidecar (.gt.json)")
    detect.add_argument("--epsilon", type=float, default=None, help="default: the sidecar's T_d")
    detect.add_argument("--t-d", type=_float_in_unit, default=None, help="relabel the ground truth (default: the sidecar's T_d)")
    detect.add_argument("--algorithm", choices=["all", "standard", "probcost", "lowertrust"], default="all")
    detect.add_argument("--renormalize", action="store_true")
    detect.add_argument("--name", default="detect")
    detect.set_defaults(handler=commands.cmd_detect)

    sweep = sub.add_parser("sweep", parents=[common], help="sweep ε or T_d for all three algorithms")
    sweep.add_argument("model")
    sweep.add_argument("log")
    sweep.add_argument("gt")
    sweep.add_argument("--epsilon-grid", default=None, help="start:stop:step or a comma list")
    sweep.add_argument("--t-d-grid", default=None, help="start:stop:step or a comma list")
    sweep.add_argument("--t-d", type=_float_in_unit, default=None, help="relabel the ground truth for an ε sweep")
    sweep.add_argument("--dev-fraction", type=float, default=None, help="sweep ε on a seeded subset")
    sweep.add_argument("--seed", type=int, default=settings.SEED)
    sweep.add_argument("--plot", action="store_true", help="also write a gnuplot script")
    sweep.add_argument("--renormalize", action="store_true")
    sweep.add_argument("--name", default="sweep")
    sweep.set_defaults(handler=commands.cmd_sweep)

    bench = sub.add_parser("bench", parents=[common], help="search effort of standard vs weighted alignment")
    bench.add_argument("model")
    bench.add_argument("logs", nargs="+")
    bench.add_argument("--epsilon", type=float, default=0.25)
    bench.add_argument("--name", default="bench")
    bench.set_defaults(handler=commands.cmd_bench)

    recover = sub.add_parser("recover", parents=[common], help="trace recovery accuracy across P_h")
    recover.add_argument("model")
    recover.add_argument("log", help="ground-truth deterministic log (.detlog.json)")
    recover.add_argument("--p-h-grid", default="0,0.25,0.5,0.75,1")
    recover.add_argument("--epsilon", type=float, default=0.01)
    recover.add_argument("--seed", type=int, default=settings.SEED)
    recover.add_argument("--name", default="recover")
    recover.set_defaults(handler=commands.cmd_recover)

    synth = sub.add_parser("synth", parents=[common], help="seeded model and conforming log")
    synth.add_argument("--activities", type=int, default=20)
    synth.add_argument("--traces", type=int, default=100)
    synth.add_argument("--extra-activities", type=int, default=60)
    synth.add_argument("--seed", type=int, default=settings.SEED)
    synth.add_argument("--name", default="synthetic")
    synth.set_defaults(handler=commands.cmd_synth)

    return parser


def configure_logging(args) -> None:
    level = settings.LOG_LEVEL
    if getattr(args, "verbose", False):
        level = "DEBUG"
    elif getattr(args, "quiet", False):
        level = "WARNING"
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _report(code: str, message: str, details: Optional[dict] = None) -> None:
    print(json.dumps({"error": code, "message": message, "details": details or {}}, ensure_ascii=False), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)

    try:
        return args.handler(args)
    except (UsageError, InvalidEpsilon) as e:
        _report(e.code, e.message, e.details)
        return EXIT_USAGE
    except ValidationError as e:
        first = e.errors()[0]
        _report("usage", f"{'.'.join(str(p) for p in first['loc'])}: {first['msg']}")
        return EXIT_USAGE
    except FileNotFoundError as e:
        _report("usage", f"input file not found: {e.filename}", {"path": str(e.filename)})
        return EXIT_USAGE
    except ProbAlignError as e:
        print(json.dumps(e.to_dict(), ensure_ascii=False), file=sys.stderr)
        return EXIT_DATA_ERROR
    except OSError as e:
        _report("io_error", str(e))
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
