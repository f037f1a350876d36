"""
Dataset ingestion and validation
"""
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..models.data import Dataset
from ..utils.errors import IngestionError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

MIN_OBSERVATIONS = 10
INTERCEPT_LABEL = "intercept"


def make_dataset(
    y,
    w,
    x_varying,
    z,
    response_label: str = "y",
    linear_labels: Optional[Sequence[str]] = None,
    varying_labels: Optional[Sequence[str]] = None,
    index_label: str = "z",
) -> Dataset:
    """
    Assemble a Dataset from arrays, prepending the intercept column to the varying block

    Args:
        y: Response (n,)
        w: Linear block (n, q) or (n,); None or width 0 for no linear block
        x_varying: Non-intercept varying regressors (n, d-1) or (n,); None for intercept only
        z: Index variable (n,)
        response_label: Name of the response
        linear_labels: Names of the linear columns
        varying_labels: Names of the non-intercept varying columns
        index_label: Name of the index

    Returns:
        Dataset
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    w = np.zeros((n, 0)) if w is None else np.asarray(w, dtype=float).reshape(n, -1)
    if x_varying is None:
        x_varying = np.zeros((n, 0))
    x_varying = np.asarray(x_varying, dtype=float).reshape(n, -1)
    x = np.column_stack([np.ones(n), x_varying])

    linear_labels = list(linear_labels) if linear_labels is not None else [f"w{j + 1}" for j in range(w.shape[1])]
    varying_labels = list(varying_labels) if varying_labels is not None else [f"x{j + 1}" for j in range(x_varying.shape[1])]

    return Dataset(
        y=y,
        w=w,
        x=x,
        z=np.asarray(z, dtype=float),
        response_label=response_label,
        linear_labels=linear_labels,
        varying_labels=[INTERCEPT_LABEL] + varying_labels,
        index_label=index_label,
    )


def _numeric_column(raw: pd.DataFrame, column: str) -> np.ndarray:
    """Convert one column, reporting the first non-numeric or non-finite cell"""
    if column not in raw.columns:
        raise IngestionError(
            f"Missing column '{column}'",
            details={"column": column, "available": [str(c) for c in raw.columns]},
        )
    series = raw[column]
    values = pd.to_numeric(series, errors="coerce")
    non_numeric = values.isna() & series.notna()
    if non_numeric.any():
        row = int(np.flatnonzero(non_numeric.to_numpy())[0])
        raise IngestionError(
            f"Non-numeric value {series.iloc[row]!r} in column '{column}' at row {row}",
            details={"column": column, "row": row},
        )
    array = values.to_numpy(dtype=float)
    bad = ~np.isfinite(array)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise IngestionError(
            f"Non-finite value in column '{column}' at row {row}",
            details={"column": column, "row": row},
        )
    return array


def validate_dataset(
    raw: pd.DataFrame,
    response: str,
    linear: Sequence[str] = (),
    varying: Sequence[str] = (),
    index: str = "z",
    min_observations: int = MIN_OBSERVATIONS,
) -> Dataset:
    """
    Validate a raw table and map its columns to model roles

    Args:
        raw: Input table
        response: Response column
        linear: Columns entering with constant coefficients
        varying: Columns entering with varying coefficients (intercept is added)
        index: Index column z
        min_observations: Minimum number of rows

    Returns:
        Dataset with the intercept prepended to the varying block
    """
    if len(raw) < min_observations:
        raise IngestionError(
            f"Dataset has {len(raw)} rows; at least {min_observations} required",
            details={"rows": len(raw), "minimum": min_observations},
        )

    y = _numeric_column(raw, response)
    z = _numeric_column(raw, index)
    w = np.column_stack([_numeric_column(raw, c) for c in linear]) if linear else None
    x = np.column_stack([_numeric_column(raw, c) for c in varying]) if varying else None

    try:
        dataset = make_dataset(
            y, w, x, z,
            response_label=response,
            linear_labels=list(linear),
            varying_labels=list(varying),
            index_label=index,
        )
    except ValidationError as e:
        raise IngestionError(f"Invalid dataset: {e}", details={"errors": [err["msg"] for err in e.errors()]}) from e

    logger.info(f"Validated dataset: n={dataset.n}, q={dataset.q}, d={dataset.d}")
    return dataset


def read_dataset(path, response: str, linear: Sequence[str] = (), varying: Sequence[str] = (), index: str = "z") -> Dataset:
    """Read a headered UTF-8 CSV and validate it"""
    try:
        raw = pd.read_csv(path, encoding="utf-8", float_precision="round_trip")
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise IngestionError(f"Could not read dataset {path}: {e}", details={"path": str(path)}) from e
    return validate_dataset(raw, response, linear, varying, index)
