"""
Exception hierarchy for the coexistence planner.

Every error raised on purpose by the package derives from CoexistenceError so
the command-line front end can map it to an exit code.
"""

from typing import Optional, Tuple


class CoexistenceError(Exception):
	"""Base class for all planner errors."""
	exit_code: int = 3


class ConfigError(CoexistenceError, ValueError):
	"""Raised when a run configuration is missing, malformed or out of range."""
	exit_code = 2

	def __init__(self, message: str, path: Optional[str] = None):
		self.path = path
		super().__init__(f"{path}: {message}" if path else message)


class ScenarioError(CoexistenceError, ValueError):
	"""Raised for invalid grids, plans and plan operations."""
	exit_code = 2


class UnphysicalStateError(CoexistenceError, ArithmeticError):
	"""Raised when a channel state yields a negative symplectic discriminant."""


class CalibrationError(CoexistenceError):
	"""Raised when a calibration target cannot be reached.

	Carries the SKR bracket (bit/s) that the scale search could achieve.
	"""

	def __init__(self, message: str, bracket: Tuple[float, float]):
		self.bracket = bracket
		super().__init__(f"{message} (achievable SKR bracket: {bracket[0]:.6g} .. {bracket[1]:.6g} bit/s)")


class OutputError(CoexistenceError, OSError):
	"""Raised when results cannot be written."""
	exit_code = 4
