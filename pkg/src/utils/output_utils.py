import hashlib
import json
import logging
from importlib import metadata
from pathlib import Path
from typing import Sequence
import numpy as np
from src.utils.config import config
from src.utils.constants import CSV_FLOAT_FORMAT, CSV_INT_FORMAT

logger: logging.Logger = logging.getLogger(__name__)

def write_csv(
    path: Path,
    header: Sequence[str],
    columns: Sequence[np.ndarray],
    int_columns: Sequence[str] = (),
    ) -> Path:
    """
    Write column arrays as a CSV file with a header row.

    Floats use 17 significant digits in scientific notation so that every
    value round-trips exactly; columns named in ``int_columns`` are written as
    integers.

    Args:
        path: Target file.
        header: Column names.
        columns: One 1D array per column, all of equal length.
        int_columns: Names of the columns to format as integers.

    Returns:
        The path that was written.

    Raises:
        ValueError: If the column count or lengths do not match.
    """
    if len(header) != len(columns):
        raise ValueError(f"Header has {len(header)} names but {len(columns)} columns were given")
    lengths = {len(np.asarray(c)) for c in columns}
    if len(lengths) > 1:
        raise ValueError(f"Column lengths differ: {sorted(lengths)}")

    data = np.column_stack([np.asarray(c, dtype=float) for c in columns]) if columns else np.empty((0, 0))
    fmt = [CSV_INT_FORMAT if name in int_columns else CSV_FLOAT_FORMAT for name in header]
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(header), comments="")
    logger.debug(f"Wrote {data.shape[0]} rows to '{path}'")
    return path

def sha256_of(path: Path) -> str:
    """Hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()

def package_versions() -> dict[str, str]:
    """Versions of the numerical stack, recorded for reproducibility."""
    versions: dict[str, str] = {config.APP_TITLE: config.APP_VERSION}
    for name in ("numpy", "scipy", "pydantic"):
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions

def write_manifest(out_dir: Path, run_config: dict, outputs: Sequence[Path]) -> Path:
    """
    Write ``manifest.json`` echoing the inputs, versions and output checksums.

    The manifest carries no timestamps so that identical configurations yield
    byte-identical manifests.
    """
    manifest: dict = {
        "config": run_config,
        "versions": package_versions(),
        "outputs": {p.name: sha256_of(p) for p in sorted(outputs)},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info(f"Manifest written to '{path}' ({len(outputs)} outputs)")
    return path
