"""
Output writers, provenance and configuration loading
"""
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .. import __version__
from ..models.config import RunConfig
from ..utils.errors import ConfigError, PLVCError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

FLOAT_FORMAT = "%.17g"


def load_config(path: Optional[str]) -> RunConfig:
    """
    Load and validate a run configuration

    Args:
        path: JSON file; None gives the all-defaults configuration

    Raises:
        ConfigError: unreadable file, unknown keys or invalid values
    """
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Could not read config {path}: {e}", details={"path": str(path)}) from e
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(
            f"Invalid config {path}",
            details={"errors": [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]},
        ) from e


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical JSON form"""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def provenance(config: RunConfig, command: str, seed: Optional[int] = None) -> Dict[str, Any]:
    return {
        "command": command,
        "config_hash": config_hash(config),
        "seed": seed if seed is not None else config.seed,
        "version": __version__,
        "schema_version": config.schema_version,
    }


def to_jsonable(value: Any) -> Any:
    """numpy values to plain Python; non-finite floats to None"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(record: Dict[str, Any], path: Path) -> Path:
    """Write a JSON record; floats use repr, which round-trips exactly"""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(record), indent=2, default=str) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write a CSV with 17 significant digits"""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {path}")
    return path


def error_record(error: BaseException) -> Dict[str, Any]:
    """Machine-readable description of a failure"""
    if isinstance(error, PLVCError):
        return error.to_record()
    return {"type": error.__class__.__name__, "message": str(error), "details": {}}


def write_error(error: BaseException, out_dir: Optional[Path]) -> Dict[str, Any]:
    """Write error.json when an output directory is known; return the record"""
    record = error_record(error)
    if out_dir is not None:
        try:
            write_json(record, out_dir / "error.json")
        except OSError as e:
            logger.error(f"Could not write error record: {e}")
    return record
