"""
CSV and manifest I/O for sweep results.

Output files are written so that identical inputs give byte-identical files:
fixed float format, "\n" line endings, sorted manifest keys and no timestamps.
"""

import logging
import os
from typing import Dict, List, Sequence, Tuple

import numpy as np
import orjson
import pandas as pd

from app.errors import ConfigError, OutputError

logger = logging.getLogger(__name__)

RAMAN_COLUMNS = ("detuning_Hz", "density_per_m_per_Hz")


def ensure_output_dir(directory: str) -> str:
	"""
	Create the output directory if needed and check it is writable.

	Raises:
		OutputError: If the directory cannot be created or written
	"""
	try:
		os.makedirs(directory, exist_ok=True)
	except OSError as e:
		raise OutputError(f"Cannot create output directory {directory}: {e}") from e
	if not os.access(directory, os.W_OK):
		raise OutputError(f"Output directory {directory} is not writable")
	return directory


def write_series(
	path: str,
	columns: Sequence[str],
	rows: List[Sequence],
	precision: int = 9
) -> str:
	"""
	Write one CSV series.

	Args:
		path: Target file
		columns: Header row
		rows: Data rows, each with len(columns) values
		precision: Significant digits for floats

	Returns:
		The path written

	Raises:
		OutputError: If a row has the wrong width or the file cannot be written
	"""
	for i, row in enumerate(rows):
		if len(row) != len(columns):
			raise OutputError(f"{path}: row {i} has {len(row)} fields, header has {len(columns)}")
	frame = pd.DataFrame(list(rows), columns=list(columns))
	try:
		frame.to_csv(path, index=False, float_format=f"%.{precision}g", lineterminator="\n")
	except OSError as e:
		raise OutputError(f"Cannot write {path}: {e}") from e
	logger.info(f"Wrote {len(frame)} rows to {path}")
	return path


def write_manifest(path: str, payload: Dict) -> str:
	"""
	Write the run manifest as sorted, indented JSON.

	Raises:
		OutputError: If the file cannot be written
	"""
	data = orjson.dumps(
		payload,
		option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY
	)
	try:
		with open(path, "wb") as f:
			f.write(data + b"\n")
	except OSError as e:
		raise OutputError(f"Cannot write {path}: {e}") from e
	logger.info(f"Wrote manifest {path}")
	return path


def read_raman_csv(path: str) -> Tuple[np.ndarray, np.ndarray]:
	"""
	Read a two-column Raman table (detuning_Hz, density_per_m_per_Hz).

	A header row with those names is optional.

	Raises:
		ConfigError: If the file is missing, malformed or non-numeric
	"""
	if not os.path.exists(path):
		raise ConfigError("Raman profile file not found", path=str(path))
	try:
		frame = pd.read_csv(path, header=None, comment="#")
	except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
		raise ConfigError(f"Cannot parse Raman profile: {e}", path=str(path)) from e
	if frame.shape[1] != 2:
		raise ConfigError(f"Raman profile needs 2 columns, found {frame.shape[1]}", path=str(path))
	if str(frame.iloc[0, 0]).strip() == RAMAN_COLUMNS[0]:
		frame = frame.iloc[1:]
	try:
		values = frame.astype(float).to_numpy()
	except ValueError as e:
		raise ConfigError(f"Raman profile has non-numeric entries: {e}", path=str(path)) from e
	if values.shape[0] < 2:
		raise ConfigError("Raman profile needs at least two rows", path=str(path))
	return values[:, 0], values[:, 1]
