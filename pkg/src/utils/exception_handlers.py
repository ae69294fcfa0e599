import json
import logging
from pathlib import Path
from src.utils.constants import EXIT_CONFIG_ERROR, EXIT_NUMERIC_FAILURE, EXIT_STRUCTURAL_ERROR
from src.utils.exceptions import (
    ConfigurationError,
    StructuralModelError,
)

logger: logging.Logger = logging.getLogger(__name__)

def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the process exit code contract."""
    if isinstance(exc, ConfigurationError):
        return EXIT_CONFIG_ERROR
    if isinstance(exc, StructuralModelError):
        return EXIT_STRUCTURAL_ERROR
    # NumericFailure, ArithmeticError and anything unexpected
    return EXIT_NUMERIC_FAILURE

def run_error_handler(exc: BaseException, out_dir: Path | None) -> int:
    """
    Translate an error raised during a run into an exit code and an error record.

    The record is written as ``error.json`` into the output directory when one
    is known, so that batch drivers can inspect failures without parsing logs.
    """
    error_msg = str(exc)
    code = exit_code_for(exc)
    logger.error(f"Run failed with {type(exc).__name__} (exit {code}): {error_msg}")

    record: dict = {
        "error": type(exc).__name__,
        "exit_code": code,
        "detail": error_msg,
        "violations": list(getattr(exc, "violations", [])),
    }
    bracket = getattr(exc, "bracket", None)
    if bracket is not None:
        record["bracket"] = [float(b) for b in bracket]
    link = getattr(exc, "link", None)
    if link is not None:
        record["link"] = int(link)

    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "error.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
        except OSError as e:
            logger.error(f"Could not write error record to '{out_dir}': {e}")
    return code
