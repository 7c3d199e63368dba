"""
Tabular and JSON output.

CSV floats are written in their shortest round-trip form, so reading a file
back with ``read_csv`` and writing it again reproduces it byte for byte.
"""

import io
import json
import os
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from bimetro import _config
from bimetro._logger import logger

logger.debug(f"Loading module {__name__}.")

__all__ = [
    "dumps",
    "frame",
    "output_path",
    "read_csv",
    "write_csv",
    "write_parquet",
]


def frame(rows: Iterable[dict], columns: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Collect row dicts into a DataFrame, keeping ``columns`` order when given.
    """
    df = pd.DataFrame(list(rows))
    if columns is not None:
        missing = [c for c in columns if c not in df.columns]
        for c in missing:
            df[c] = np.nan
        df = df[list(columns)]
    return df


def write_csv(df: pd.DataFrame, path: Optional[Union[str, os.PathLike]] = None) -> str:
    """
    Write ``df`` as CSV (no index). Returns the text; also writes ``path``
    when given.
    """
    buffer = io.StringIO()
    df.to_csv(buffer, index=False, lineterminator="\n")
    text = buffer.getvalue()
    if path is not None:
        _ensure_parent(path)
        with open(path, "w", newline="") as f:
            f.write(text)
        logger.info(f"Tables: wrote {len(df)} rows to {path}.")
    return text


def read_csv(source: Union[str, os.PathLike, io.StringIO]) -> pd.DataFrame:
    return pd.read_csv(source, float_precision="round_trip")


def write_parquet(df: pd.DataFrame, path: Union[str, os.PathLike]) -> None:
    _ensure_parent(path)
    df.to_parquet(path, engine="pyarrow", index=False)
    logger.info(f"Tables: wrote {len(df)} rows to {path}.")


def _ensure_parent(path: Union[str, os.PathLike]) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def output_path(name: str) -> str:
    """
    ``name`` inside the configured output directory.
    """
    directory = _config.config("bimetro", "output_directory") or "bimetro-out"
    return os.path.join(directory, name)


def _to_builtin(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps(report: dict) -> str:
    """
    JSON text with sorted keys; floats keep their full repr.
    """
    return json.dumps(report, sort_keys=True, default=_to_builtin, indent=2)
