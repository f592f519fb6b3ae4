"""
DataManager Module

This module handles loading and saving for the cocycle laboratory. It builds
the subshift and sampling-function objects from the documents embedded in a
configuration, and writes results as byte-stable CSV (pandas) and JSON files.
"""

import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from src.cocycles.cocycle import LayeredSamplingFunction
from src.dynamics.subshift import SubshiftSpec
from src.utils.exceptions import ConfigurationError

CSV_FLOAT_FORMAT = "%.15g"


def to_builtin(value):
    """
    Convert numpy scalars and arrays to JSON-serializable builtins.

    Args:
        value: Any value found in a result document

    Returns:
        JSON-serializable equivalent
    """
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class DataManager:
    """
    Handles data loading, saving, and format conversion for cocycle experiments.
    """

    def __init__(self, output_dir=None):
        """
        Initialize with a configurable output directory.

        Args:
            output_dir (str or Path, optional): Directory for emitted files. Defaults to "results".
        """
        self.output_dir = Path("results") if output_dir is None else Path(output_dir)
        self.output_dir.mkdir(exist_ok=True, parents=True)
        self.written = []

        self.logger = logging.getLogger("DataManager")

    def path(self, name):
        return self.output_dir / name

    def load_subshift(self, document):
        """SubshiftSpec from a `{"variant": ...}` document."""
        if document is None:
            raise ConfigurationError("Configuration has no 'subshift' section")
        return SubshiftSpec.from_dict(document)

    def load_sampling(self, document):
        """LayeredSamplingFunction from a `{"layers": [...]}` document; missing means f = 0."""
        if document is None:
            return LayeredSamplingFunction.zero()
        return LayeredSamplingFunction.from_dict(document)

    def save_csv(self, rows, name, columns=None):
        """
        Save rows as CSV with a header row, LF line endings and `.` decimals.

        Args:
            rows (DataFrame or list of dict): Table to save
            name (str): File name inside the output directory
            columns (list, optional): Column order. Defaults to the frame's order.

        Returns:
            Path: Written file

        Raises:
            ValueError: If a numeric column contains a non-finite value
        """
        df = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
        numeric = df.select_dtypes(include=[np.number])
        if not np.isfinite(numeric.to_numpy(dtype=float)).all():
            bad = [c for c in numeric.columns if not np.isfinite(numeric[c].to_numpy(dtype=float)).all()]
            raise ValueError(f"Refusing to write non-finite values to {name} (columns {bad})")

        output_file = self.path(name)
        df.to_csv(output_file, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n",
                  encoding="utf-8")
        self.written.append(name)
        self.logger.info(f"Saved {len(df)} rows to {output_file}")
        return output_file

    def save_json(self, document, name):
        """
        Save a document as sorted-key, two-space indented UTF-8 JSON.

        Args:
            document (dict): Document to save
            name (str): File name inside the output directory

        Returns:
            Path: Written file
        """
        output_file = self.path(name)
        with open(output_file, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(to_builtin(document), f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write('\n')
        self.written.append(name)
        self.logger.info(f"Saved {output_file}")
        return output_file
