import argparse
import logging
from pathlib import Path
from typing import Sequence
from src.api.commands import run
from src.api.config_parser import parse_config
from src.utils.config import config
from src.utils.constants import RUN_MODES
from src.utils.exception_handlers import run_error_handler
from src.utils.exceptions import ConfigurationError

logger: logging.Logger = logging.getLogger(__name__)

HELP: dict[str, str] = {
    "spectrum": "Enumerate the excited trap modes",
    "rates": "Tabulate feeding and loss rates over N0",
    "evolve": "Propagate the condensate number distribution",
    "steady": "Steady state versus the canonical oracle",
    "oracle": "Canonical condensate-number distribution and T_c",
    "sweep": "Condensate fraction and fluctuation versus T/T_c",
}

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=config.APP_TITLE, description="Number-conserving condensate formation kinetics")
    parser.add_argument("--version", action="version", version=f"%(prog)s {config.APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in RUN_MODES:
        p = sub.add_parser(mode, help=HELP[mode])
        p.add_argument("--config", type=Path, required=True, help="INI-style run configuration")
        p.add_argument("--out", type=Path, default=None, help=f"Output directory (default: $BEC_OUTPUT_DIR or '{config.BEC_OUTPUT_DIR}')")
        p.add_argument("--threads", type=int, default=None, help="Worker threads (default: config file, then $BEC_THREADS)")
        p.add_argument("--mode", choices=("discrete", "semiclassical"), default=None, help="Rate evaluation mode")
        p.add_argument("--log-level", default=None, help="Override LOG_LEVEL for this run")
    return parser

def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, load the configuration and run the selected pipeline."""
    args = build_parser().parse_args(argv)
    if args.log_level:
        logging.getLogger().setLevel(getattr(logging, args.log_level.upper(), logging.INFO))
    out_dir: Path = args.out if args.out is not None else Path(config.BEC_OUTPUT_DIR)

    overrides: dict[str, str] = {"mode": args.command}
    if args.threads is not None:
        overrides["threads"] = str(args.threads)
    if args.mode is not None:
        overrides["rate_mode"] = args.mode
    try:
        run_config = parse_config(args.config, overrides)
    except ConfigurationError as e:
        for violation in e.violations:
            logger.error(f"  {violation}")
        return run_error_handler(e, out_dir)
    return run(run_config, out_dir)
