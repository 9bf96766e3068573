"""
Run configuration: TOML or JSON files parsed into validated settings.

Every section rejects unknown keys. Engineering units in the file (dB/km,
ps^2/km, GHz, dBm) are converted when the LinkScenario is built. Omitted keys
fall back to typical metro-link experimental values.
"""

import logging
import os
import re
from typing import Any, Dict, Optional, Tuple, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

try:
	import tomllib
except ModuleNotFoundError:  # Python < 3.11
	import tomli as tomllib

from app.errors import ConfigError
from app.interference import FiberParams, MechanismToggles, default_raman_profile, load_raman_profile
from app.keyrate import QkdParams
from app.planner import DEFAULT_CALIBRATION_WINDOW, LinkScenario, SweepSpec
from app.scenario import DEFAULT_BAND_START_HZ, Placement, PropagationDirection, kurtosis_for_format
from app.utils.units import dbm_to_watt, watt_to_dbm

logger = logging.getLogger(__name__)

_POWER_PATTERN = re.compile(r"^\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*(dBm|mW|W)?\s*$")


def parse_power(value: Union[str, float, int]) -> float:
	"""
	Parse a per-channel power into dBm.

	Numbers are taken as dBm. Strings may carry a unit: "-1.5 dBm", "0.5 mW", "1e-3 W".

	Raises:
		ValueError: If the string cannot be parsed or the power is not positive
	"""
	if isinstance(value, bool):
		raise ValueError("power must be a number or a string with a unit")
	if isinstance(value, (int, float)):
		return float(value)
	match = _POWER_PATTERN.match(str(value))
	if not match:
		raise ValueError(f"cannot parse power '{value}' (expected e.g. '-1.5 dBm')")
	number, unit = float(match.group(1)), match.group(2) or "dBm"
	if unit == "dBm":
		return number
	watts = number * (1e-3 if unit == "mW" else 1.0)
	if watts <= 0.0:
		raise ValueError(f"power must be positive, got '{value}'")
	return watt_to_dbm(watts)


class _Section(BaseModel):
	model_config = ConfigDict(frozen=True, extra="forbid")


class FiberSection(_Section):
	alpha_db_km: float = Field(default=0.2, gt=0.0)
	beta2_ps2_km: float = -21.7
	gamma_w_km: float = Field(default=1.3, ge=0.0)
	temperature_k: float = Field(default=300.0, gt=0.0)
	distance_km: float = Field(default=10.0, ge=0.0)
	raman_csv: Optional[str] = None
	raman_scale: float = Field(default=1.0, ge=0.0)


class GridSection(_Section):
	n_slots: int = Field(default=88, ge=2)
	spacing_ghz: float = Field(default=50.0, gt=0.0)
	band_start_thz: float = Field(default=DEFAULT_BAND_START_HZ / 1e12, gt=0.0)


class QkdSection(_Section):
	v_a: float = Field(default=8.0, gt=0.0)
	eta_b: float = Field(default=0.6, gt=0.0, le=1.0)
	beta: float = Field(default=0.95, gt=0.0, le=1.0)
	v_el: float = Field(default=0.01, ge=0.0)
	b_s_ghz: float = Field(default=25.0, gt=0.0)
	r_s: float = Field(default=5e8, gt=0.0)


class ScenarioSection(_Section):
	placement: Placement = Placement.BAND_EDGE
	quantum_slot: Optional[int] = Field(default=None, ge=1)
	guardband: int = Field(default=0, ge=0)
	power: float = -4.5
	kurtosis: Optional[float] = Field(default=None, ge=-2.0)
	format: str = "gaussian"
	direction: PropagationDirection = PropagationDirection.CO
	toggles: str = "fwm,sprs"

	@field_validator("power", mode="before")
	@classmethod
	def _parse_power(cls, value: Any) -> float:
		return parse_power(value)

	@field_validator("toggles", mode="before")
	@classmethod
	def _join_toggles(cls, value: Any) -> str:
		if isinstance(value, (list, tuple)):
			return ",".join(str(v) for v in value) or "none"
		return value

	@model_validator(mode="after")
	def _check_slot(self) -> "ScenarioSection":
		if self.placement is Placement.CUSTOM and self.quantum_slot is None:
			raise ValueError("custom placement needs quantum_slot")
		if self.kurtosis is None:
			kurtosis_for_format(self.format)
		MechanismToggles.parse(self.toggles)
		return self

	@property
	def power_w(self) -> float:
		return dbm_to_watt(self.power)

	@property
	def resolved_kurtosis(self) -> float:
		return kurtosis_for_format(self.format) if self.kurtosis is None else self.kurtosis


class SweepSection(SweepSpec):
	calibration_window_mbps: Tuple[float, float] = (
		DEFAULT_CALIBRATION_WINDOW[0] / 1e6,
		DEFAULT_CALIBRATION_WINDOW[1] / 1e6
	)

	@field_validator("powers_dbm", mode="before")
	@classmethod
	def _parse_powers(cls, value: Any) -> Tuple[float, ...]:
		if isinstance(value, (list, tuple)):
			return tuple(parse_power(v) for v in value)
		return value

	@model_validator(mode="after")
	def _check_window(self) -> "SweepSection":
		low, high = self.calibration_window_mbps
		if not 0.0 <= low < high:
			raise ValueError("calibration_window_mbps must satisfy 0 <= low < high")
		return self

	def to_spec(self) -> SweepSpec:
		return SweepSpec(**self.model_dump(exclude={"calibration_window_mbps"}))

	@property
	def calibration_window_bps(self) -> Tuple[float, float]:
		return self.calibration_window_mbps[0] * 1e6, self.calibration_window_mbps[1] * 1e6


class OutputSection(_Section):
	directory: str = "results"
	precision: int = Field(default=9, ge=1, le=17)


class RunConfig(_Section):
	"""Complete, validated run configuration."""
	fiber: FiberSection = Field(default_factory=FiberSection)
	grid: GridSection = Field(default_factory=GridSection)
	qkd: QkdSection = Field(default_factory=QkdSection)
	scenario: ScenarioSection = Field(default_factory=ScenarioSection)
	sweep: SweepSection = Field(default_factory=SweepSection)
	output: OutputSection = Field(default_factory=OutputSection)
	source: Optional[str] = None

	def to_scenario(self) -> LinkScenario:
		"""
		Build the base LinkScenario in SI units.

		Raises:
			ConfigError: If the Raman CSV cannot be loaded
		"""
		if self.fiber.raman_csv:
			raman = load_raman_profile(self._resolve(self.fiber.raman_csv), scale=self.fiber.raman_scale)
		else:
			raman = default_raman_profile(scale=self.fiber.raman_scale)
		fiber = FiberParams.from_engineering(
			alpha_db_km=self.fiber.alpha_db_km,
			beta2_ps2_km=self.fiber.beta2_ps2_km,
			gamma_w_km=self.fiber.gamma_w_km,
			length_km=self.fiber.distance_km,
			temperature=self.fiber.temperature_k,
			raman=raman
		)
		qkd = QkdParams(
			v_a=self.qkd.v_a,
			eta_b=self.qkd.eta_b,
			beta_rec=self.qkd.beta,
			v_el=self.qkd.v_el,
			b_s=self.qkd.b_s_ghz * 1e9,
			r_s=self.qkd.r_s
		)
		return LinkScenario(
			n_slots=self.grid.n_slots,
			spacing=self.grid.spacing_ghz * 1e9,
			band_start=self.grid.band_start_thz * 1e12,
			fiber=fiber,
			qkd=qkd,
			placement=self.scenario.placement,
			quantum_slot=self.scenario.quantum_slot,
			power_dbm=self.scenario.power,
			kurtosis=self.scenario.resolved_kurtosis,
			fmt=self.scenario.format,
			n_gb=self.scenario.guardband,
			direction=self.scenario.direction,
			toggles=MechanismToggles.parse(self.scenario.toggles)
		)

	def echo(self) -> Dict[str, Any]:
		"""JSON-safe copy of the configuration for the run manifest."""
		return self.model_dump(mode="json", exclude={"source"})

	def _resolve(self, path: str) -> str:
		if os.path.isabs(path) or not self.source:
			return path
		return os.path.join(os.path.dirname(os.path.abspath(self.source)), path)


def _format_validation_error(error: ValidationError) -> Tuple[str, str]:
	first = error.errors()[0]
	location = ".".join(str(part) for part in first["loc"])
	return location, first["msg"]


def _read_document(path: str) -> Dict[str, Any]:
	extension = os.path.splitext(path)[1].lower()
	try:
		with open(path, "rb") as f:
			raw = f.read()
	except FileNotFoundError as e:
		raise ConfigError("config file not found", path=path) from e
	except OSError as e:
		raise ConfigError(f"cannot read config file: {e}", path=path) from e

	if extension == ".toml":
		try:
			return tomllib.loads(raw.decode("utf-8"))
		except (tomllib.TOMLDecodeError, UnicodeDecodeError) as e:
			raise ConfigError(f"malformed TOML: {e}", path=path) from e
	if extension == ".json":
		if not raw.strip():
			return {}
		try:
			document = orjson.loads(raw)
		except orjson.JSONDecodeError as e:
			raise ConfigError(f"malformed JSON: {e}", path=path) from e
		if not isinstance(document, dict):
			raise ConfigError("top level of a JSON config must be an object", path=path)
		return document
	raise ConfigError(f"unsupported config format '{extension}' (use .toml or .json)", path=path)


def parse_config(path: Optional[str] = None) -> RunConfig:
	"""
	Parse and validate a run configuration.

	Args:
		path: TOML or JSON file; None gives the defaults

	Returns:
		Validated RunConfig

	Raises:
		ConfigError: Missing file, malformed syntax, unknown keys or out-of-range
			values, with the offending field path in the message
	"""
	document = _read_document(path) if path else {}
	try:
		config = RunConfig(**document, source=path)
	except ValidationError as e:
		location, message = _format_validation_error(e)
		raise ConfigError(f"{location}: {message}", path=path) from e
	except (ValueError, TypeError) as e:
		raise ConfigError(str(e), path=path) from e
	logger.info(f"Loaded configuration from {path or 'defaults'}")
	return config
