import configparser
import logging
from pathlib import Path
from pydantic import ValidationError # type: ignore
from src.schemas.run_config import RunConfig
from src.utils.exceptions import ConfigurationError

logger: logging.Logger = logging.getLogger(__name__)

SECTION: str = "run"

def _read_pairs(text: str, source: str) -> dict[str, str]:
    parser = configparser.ConfigParser(
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#",),
        interpolation=None,
        strict=True,
    )
    try:
        parser.read_string(f"[{SECTION}]\n{text}", source=source)
    except configparser.Error as e:
        raise ConfigurationError(f"Cannot parse '{source}': {e}", violations=[str(e)]) from e
    if parser.sections() != [SECTION]:
        extra = [s for s in parser.sections() if s != SECTION]
        raise ConfigurationError(
            f"Sections are not supported in '{source}'", violations=[f"unexpected section [{s}]" for s in extra]
        )
    return {key: value.strip() for key, value in parser.items(SECTION)}

def parse_config(path: str | Path, overrides: dict[str, str] | None = None) -> RunConfig:
    """
    Parse an INI-style ``key = value`` file into a validated RunConfig.

    Every violation is collected before raising, not just the first.

    Args:
        path: Configuration file.
        overrides: Values that replace or extend the file (command-line flags).

    Returns:
        RunConfig

    Raises:
        ConfigurationError: If the file is missing or unreadable, or any key is missing, unknown or invalid
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Configuration file '{path}' not found", violations=[f"missing file {path}"])
    values = _read_pairs(path.read_text(), str(path))
    values.update(overrides or {})
    try:
        run_config = RunConfig(**values)
    except ValidationError as e:
        violations = [
            f"{'.'.join(str(part) for part in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        ]
        raise ConfigurationError(
            f"Invalid configuration '{path}' ({len(violations)} violations)", violations=violations
        ) from e
    logger.info(f"Loaded configuration '{path}' (mode={run_config.mode}, N={run_config.n_total})")
    return run_config
