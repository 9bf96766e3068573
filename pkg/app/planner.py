"""
Coexistence planner: point evaluation, parameter sweeps and searches.

A LinkScenario bundles everything needed to evaluate one operating point
(grid, fiber, transceiver, loading, guardband, direction, mechanisms).
Sweeps vary one quantity over a LinkScenario; searches (reach, transition,
calibration, guardband recommendation) are deterministic bisections or
grid scans on top of the same evaluation.
"""

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy import optimize

from app.errors import CalibrationError, ScenarioError
from app.interference import FiberParams, MechanismToggles, total_interference
from app.keyrate import ChannelState, QkdParams, excess_noise, key_rate, transmittance
from app.scenario import (
	DEFAULT_BAND_START_HZ,
	DEFAULT_N_SLOTS,
	DEFAULT_SPACING_HZ,
	ChannelPlan,
	Placement,
	PropagationDirection,
	apply_guardband,
	build_grid,
	capacity_loss,
	load_uniform,
	place_quantum,
	resolve_slot,
	slot_frequency
)
from app.utils.units import dbm_to_watt, km_to_m

logger = logging.getLogger(__name__)

CALIBRATION_POWER_DBM = -4.5
CALIBRATION_DISTANCE_KM = 10.0
DEFAULT_CALIBRATION_WINDOW = (112e6, 124e6)
RECOMMEND_MIN_GAIN = 0.25
RECOMMEND_KNEE_GAIN = 0.025


class LinkScenario(BaseModel):
	"""One operating point of a coexistence link."""
	model_config = ConfigDict(frozen=True)

	n_slots: int = DEFAULT_N_SLOTS
	spacing: float = DEFAULT_SPACING_HZ
	band_start: float = DEFAULT_BAND_START_HZ
	fiber: FiberParams = Field(default_factory=FiberParams.from_engineering)
	qkd: QkdParams = Field(default_factory=QkdParams)
	placement: Placement = Placement.BAND_EDGE
	quantum_slot: Optional[int] = None
	power_dbm: float = -4.5
	kurtosis: float = Field(default=0.0, ge=-2.0)
	fmt: str = "gaussian"
	n_gb: int = Field(default=0, ge=0)
	direction: PropagationDirection = PropagationDirection.CO
	toggles: MechanismToggles = Field(default_factory=MechanismToggles)
	metadata: Dict[str, Any] = Field(default_factory=dict)

	@model_validator(mode="after")
	def _check_slot(self) -> "LinkScenario":
		if self.placement is Placement.CUSTOM and self.quantum_slot is None:
			raise ValueError("custom placement needs quantum_slot")
		if math.isnan(self.power_dbm) or self.power_dbm == math.inf:
			raise ValueError("power_dbm must be finite or -inf")
		return self

	@property
	def distance_km(self) -> float:
		return self.fiber.length / 1000.0

	@property
	def slot(self) -> int:
		"""Concrete 1-based quantum slot."""
		return resolve_slot(self.n_slots, self.placement, self.quantum_slot)

	def with_(self, **changes) -> "LinkScenario":
		"""
		Copy with overrides.

		Besides the model fields this accepts distance_km and raman_scale,
		which are routed into the fiber parameters.
		"""
		fiber = self.fiber
		if "distance_km" in changes:
			fiber = fiber.with_length(km_to_m(float(changes.pop("distance_km"))))
		if "raman_scale" in changes:
			fiber = fiber.model_copy(update={"raman": fiber.raman.with_scale(changes.pop("raman_scale"))})
		fields = {name: getattr(self, name) for name in type(self).model_fields}
		fields["fiber"] = fiber
		fields.update(changes)
		try:
			return LinkScenario(**fields)
		except ValidationError as e:
			raise ScenarioError(f"Invalid scenario override: {e.errors()[0]['msg']}") from e

	def build_plan(self) -> ChannelPlan:
		"""Grid -> quantum placement -> guardband -> uniform loading."""
		plan = build_grid(self.n_slots, self.spacing, self.band_start)
		plan = place_quantum(plan, self.placement, self.quantum_slot)
		plan = apply_guardband(plan, self.n_gb)
		power = dbm_to_watt(self.power_dbm)
		if power <= 0.0:
			return plan
		return load_uniform(plan, power, self.kurtosis, self.fmt)

	def qkd_for_plan(self, plan: ChannelPlan) -> QkdParams:
		"""Transceiver params with f_q set to the quantum slot frequency."""
		return self.qkd.model_copy(update={"f_q": slot_frequency(plan, plan.quantum_slot)})

	def scenario_hash(self) -> str:
		"""SHA-256 over the canonical JSON form of the scenario."""
		payload = orjson.dumps(self.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS)
		return hashlib.sha256(payload).hexdigest()


class SweepKind(str, Enum):
	SPECTRAL = "spectral"
	GUARDBAND = "guardband"
	TRADEOFF = "tradeoff"
	REACH = "reach"
	PROFILE = "profile"
	TRANSITION = "transition"


class SweepSpec(BaseModel):
	"""Ranges and switches for the sweep subcommands."""
	model_config = ConfigDict(frozen=True, extra="forbid")

	kind: SweepKind = SweepKind.GUARDBAND
	gb_max: int = Field(default=10, ge=0)
	powers_dbm: Tuple[float, ...] = (-4.5, -1.5, 0.5)
	max_km: float = Field(default=30.0, gt=0.0)
	step_km: float = Field(default=0.25, gt=0.0)
	p_min_dbm: float = -20.0
	p_max_dbm: float = 10.0
	directions: Tuple[PropagationDirection, ...] = (PropagationDirection.CO, PropagationDirection.COUNTER)
	placements: Tuple[Placement, ...] = (Placement.BAND_EDGE, Placement.BAND_CENTER)
	skr_floor: float = Field(default=0.0, ge=0.0)
	workers: int = Field(default=1, ge=1)

	@model_validator(mode="after")
	def _check_ranges(self) -> "SweepSpec":
		if not self.powers_dbm:
			raise ValueError("powers_dbm must not be empty")
		if not self.directions or not self.placements:
			raise ValueError("directions and placements must not be empty")
		if self.step_km > self.max_km:
			raise ValueError("step_km must not exceed max_km")
		if self.p_min_dbm >= self.p_max_dbm:
			raise ValueError("p_min_dbm must be below p_max_dbm")
		return self


class SweepRow(BaseModel):
	"""One evaluated point."""
	model_config = ConfigDict(frozen=True)

	x: float
	skr_bps: float
	skr_per_symbol: float
	margin: float
	xi: float
	p_fwm_degenerate: float
	p_fwm_nondegenerate: float
	p_sprs: float
	p_int: float
	capacity_loss: float
	direction: PropagationDirection


class SweepResult(BaseModel):
	"""A labeled series of rows ordered by the independent variable."""
	model_config = ConfigDict(frozen=True)

	kind: str
	label: str
	x_name: str
	skr_column: str = "SKR_bits_symbol"
	rows: Tuple[SweepRow, ...]
	metadata: Dict[str, Any] = Field(default_factory=dict)

	@model_validator(mode="after")
	def _check_rows(self) -> "SweepResult":
		xs = [row.x for row in self.rows]
		if any(b < a for a, b in zip(xs, xs[1:])):
			raise ValueError(f"rows of {self.label} are not sorted by {self.x_name}")
		for row in self.rows:
			values = (row.x, row.skr_bps, row.skr_per_symbol, row.xi, row.p_int, row.capacity_loss)
			if not all(math.isfinite(v) for v in values):
				raise ValueError(f"non-finite value in {self.label} at {self.x_name}={row.x}")
		return self

	def skr(self) -> np.ndarray:
		return np.array([row.skr_bps for row in self.rows])

	def xs(self) -> np.ndarray:
		return np.array([row.x for row in self.rows])


class TransitionResult(BaseModel):
	model_config = ConfigDict(frozen=True)

	power_dbm: Optional[float]
	in_range: bool
	distance_km: float
	n_gb: int
	p_fwm_w: float = 0.0
	p_sprs_w: float = 0.0


class CalibrationResult(BaseModel):
	model_config = ConfigDict(frozen=True)

	scale: float
	skr_bps: float
	window: Tuple[float, float]
	scenario: LinkScenario


class Recommendation(BaseModel):
	model_config = ConfigDict(frozen=True)

	n_gb: int
	skr_bps: float
	capacity_loss: float
	feasible: bool
	best_skr_bps: float
	budget_pct: float


def evaluate(scenario: LinkScenario, x: float = 0.0) -> SweepRow:
	"""
	Evaluate one operating point: plan, interference, excess noise, key rate.

	Args:
		scenario: Operating point
		x: Value of the swept variable recorded in the row

	Returns:
		SweepRow with the key rate and its diagnostics
	"""
	plan = scenario.build_plan()
	qkd = scenario.qkd_for_plan(plan)
	fiber = scenario.fiber
	breakdown = total_interference(plan, fiber, qkd.b_s, scenario.direction, scenario.toggles)
	t = transmittance(fiber.alpha, fiber.length)
	xi = excess_noise(breakdown.total, t, qkd.f_q, qkd.b_s)
	result = key_rate(qkd, ChannelState(transmittance=t, xi=xi))
	logger.debug(f"x={x}: xi={xi:.4e} SNU, SKR={result.skr_bps:.4e} bit/s")
	return SweepRow(
		x=float(x),
		skr_bps=result.skr_bps,
		skr_per_symbol=result.skr_per_symbol,
		margin=result.margin,
		xi=xi,
		p_fwm_degenerate=breakdown.p_fwm_degenerate,
		p_fwm_nondegenerate=breakdown.p_fwm_nondegenerate,
		p_sprs=breakdown.p_sprs,
		p_int=breakdown.total,
		capacity_loss=capacity_loss(plan),
		direction=scenario.direction
	)


def interference_free_skr(base: LinkScenario) -> float:
	"""Key rate (bit/s) at the base distance with no classical interference."""
	plan = base.build_plan()
	t = transmittance(base.fiber.alpha, base.fiber.length)
	return key_rate(base.qkd_for_plan(plan), ChannelState(transmittance=t, xi=0.0)).skr_bps


def _evaluate_all(points: Sequence[Tuple[LinkScenario, float]], workers: int = 1) -> List[SweepRow]:
	"""Evaluate points in input order, optionally on a thread pool."""
	def run(point: Tuple[LinkScenario, float]) -> SweepRow:
		return evaluate(*point)

	if workers <= 1:
		return [run(point) for point in points]
	with ThreadPoolExecutor(max_workers=workers) as executor:
		return list(executor.map(run, points))


def _series_metadata(base: LinkScenario, **extra) -> Dict[str, Any]:
	metadata = {
		"scenario_hash": base.scenario_hash(),
		"raman_scale": base.fiber.raman.scale,
	}
	metadata.update(extra)
	return metadata


def sweep_spectral(
	base: LinkScenario,
	power_dbm: Optional[float] = None,
	distance_km: Optional[float] = None,
	toggles: Optional[MechanismToggles] = None,
	workers: int = 1
) -> SweepResult:
	"""
	Move the quantum channel across every slot, loading all others uniformly.

	Returns:
		SweepResult indexed by Channel (1..n_slots)
	"""
	changes = {"toggles": toggles or base.toggles}
	if power_dbm is not None:
		changes["power_dbm"] = power_dbm
	if distance_km is not None:
		changes["distance_km"] = distance_km
	scenario = base.with_(**changes)
	logger.info(f"Spectral sweep: {scenario.power_dbm} dBm/ch, {scenario.distance_km} km, {scenario.toggles.label}")
	points = [
		(scenario.with_(placement=Placement.CUSTOM, quantum_slot=slot), float(slot))
		for slot in range(1, scenario.n_slots + 1)
	]
	rows = _evaluate_all(points, workers)
	return SweepResult(
		kind=SweepKind.SPECTRAL.value,
		label=scenario.toggles.label,
		x_name="Channel",
		rows=tuple(rows),
		metadata=_series_metadata(scenario, power_dbm=scenario.power_dbm, distance_km=scenario.distance_km)
	)


def sweep_guardband(
	base: LinkScenario,
	powers_dbm: Iterable[float],
	distance_km: Optional[float] = None,
	direction: Optional[PropagationDirection] = None,
	gb_max: int = 10,
	workers: int = 1
) -> List[SweepResult]:
	"""
	SKR against guardband size 0..gb_max, one series per power.

	Returns:
		List of SweepResult indexed by QSpace (guardband slots)
	"""
	scenario = base.with_(
		distance_km=base.distance_km if distance_km is None else distance_km,
		direction=direction or base.direction
	)
	skr_column = f"SKR_{scenario.distance_km:g}km"
	results = []
	for power in powers_dbm:
		logger.info(f"Guardband sweep: {power} dBm/ch, {scenario.distance_km} km, {scenario.direction.value}")
		at_power = scenario.with_(power_dbm=power)
		points = [(at_power.with_(n_gb=n), float(n)) for n in range(gb_max + 1)]
		results.append(SweepResult(
			kind=SweepKind.GUARDBAND.value,
			label=f"{power:g}dBm",
			x_name="QSpace",
			skr_column=skr_column,
			rows=tuple(_evaluate_all(points, workers)),
			metadata=_series_metadata(at_power, power_dbm=power, distance_km=scenario.distance_km)
		))
	return results


def sweep_tradeoff(
	base: LinkScenario,
	power_dbm: Optional[float] = None,
	distance_km: Optional[float] = None,
	placements: Sequence[Placement] = (Placement.BAND_EDGE, Placement.BAND_CENTER),
	directions: Sequence[PropagationDirection] = (PropagationDirection.CO, PropagationDirection.COUNTER),
	gb_max: int = 10,
	workers: int = 1
) -> List[SweepResult]:
	"""
	SKR and capacity loss against guardband size, per placement and direction.

	Returns:
		One SweepResult per (placement, direction), indexed by QSpace
	"""
	changes = {}
	if power_dbm is not None:
		changes["power_dbm"] = power_dbm
	if distance_km is not None:
		changes["distance_km"] = distance_km
	scenario = base.with_(**changes)
	results = []
	for placement in placements:
		for direction in directions:
			placed = scenario.with_(placement=Placement(placement), direction=PropagationDirection(direction))
			logger.info(f"Tradeoff sweep: {placed.placement.value}, {placed.direction.value}, {placed.power_dbm} dBm/ch")
			points = [(placed.with_(n_gb=n), float(n)) for n in range(gb_max + 1)]
			results.append(SweepResult(
				kind=SweepKind.TRADEOFF.value,
				label=f"{placed.placement.value}_{placed.direction.value}",
				x_name="QSpace",
				skr_column="SKR-Fw" if placed.direction is PropagationDirection.CO else "SKR-Bw",
				rows=tuple(_evaluate_all(points, workers)),
				metadata=_series_metadata(placed, placement=placed.placement.value, power_dbm=placed.power_dbm)
			))
	return results


def sweep_distance(
	base: LinkScenario,
	power_dbm: Optional[float] = None,
	n_gb: Optional[int] = None,
	directions: Sequence[PropagationDirection] = (PropagationDirection.CO, PropagationDirection.COUNTER),
	max_km: float = 30.0,
	step_km: float = 0.25,
	workers: int = 1
) -> List[SweepResult]:
	"""
	SKR against distance from 0 to max_km, one series per direction.

	Returns:
		List of SweepResult indexed by z (km)
	"""
	if step_km <= 0.0 or max_km <= 0.0:
		raise ScenarioError("distance sweep needs positive max_km and step_km")
	changes = {}
	if power_dbm is not None:
		changes["power_dbm"] = power_dbm
	if n_gb is not None:
		changes["n_gb"] = n_gb
	scenario = base.with_(**changes)
	grid = np.round(np.arange(0, int(round(max_km / step_km)) + 1) * step_km, 9)
	results = []
	for direction in directions:
		directed = scenario.with_(direction=PropagationDirection(direction))
		points = [(directed.with_(distance_km=float(z)), float(z)) for z in grid]
		results.append(SweepResult(
			kind=SweepKind.PROFILE.value,
			label=f"{directed.power_dbm:g}dBm_gb{directed.n_gb}_{directed.direction.value}",
			x_name="z",
			skr_column="SKR-Fw" if directed.direction is PropagationDirection.CO else "SKR-Bw",
			rows=tuple(_evaluate_all(points, workers)),
			metadata=_series_metadata(directed, power_dbm=directed.power_dbm, n_gb=directed.n_gb)
		))
	return results


def reach(
	base: LinkScenario,
	power_dbm: Optional[float] = None,
	n_gb: Optional[int] = None,
	direction: Optional[PropagationDirection] = None,
	skr_floor: float = 0.0,
	max_km: float = 30.0,
	step_km: float = 0.25
) -> float:
	"""
	Longest distance (km) with SKR above skr_floor.

	Scans step_km, 2 step_km, ... max_km and refines the first failing
	interval by bisection to 0.01 km.

	Returns:
		Reach in km; 0 if the first grid point already fails, max_km if none fails
	"""
	if skr_floor < 0.0:
		raise ScenarioError(f"skr_floor must be >= 0, got {skr_floor}")
	changes = {"direction": direction or base.direction}
	if power_dbm is not None:
		changes["power_dbm"] = power_dbm
	if n_gb is not None:
		changes["n_gb"] = n_gb
	scenario = base.with_(**changes)
	r_s = scenario.qkd.r_s

	def excess(distance: float) -> float:
		row = evaluate(scenario.with_(distance_km=distance))
		return row.margin * r_s - skr_floor

	grid = np.round(np.arange(1, int(round(max_km / step_km)) + 1) * step_km, 9)
	previous = None
	for distance in grid:
		if excess(float(distance)) <= 0.0:
			if previous is None:
				logger.info(f"Reach: no key at {distance} km ({scenario.power_dbm} dBm/ch, gb={scenario.n_gb})")
				return 0.0
			found = optimize.bisect(excess, previous, float(distance), xtol=0.01)
			logger.info(f"Reach: {found:.2f} km ({scenario.power_dbm} dBm/ch, gb={scenario.n_gb}, {scenario.direction.value})")
			return float(found)
		previous = float(distance)
	logger.info(f"Reach: key survives the whole {max_km} km grid")
	return float(max_km)


def _mechanism_powers(scenario: LinkScenario, power_dbm: float) -> Tuple[float, float]:
	at_power = scenario.with_(power_dbm=power_dbm)
	plan = at_power.build_plan()
	b_s = at_power.qkd.b_s
	fwm = total_interference(plan, at_power.fiber, b_s, at_power.direction, MechanismToggles(fwm=True, sprs=False))
	sprs = total_interference(plan, at_power.fiber, b_s, at_power.direction, MechanismToggles(fwm=False, sprs=True))
	return fwm.total, sprs.total


def find_transition_power(
	base: LinkScenario,
	distance_km: Optional[float] = None,
	n_gb: Optional[int] = None,
	p_min_dbm: float = -20.0,
	p_max_dbm: float = 10.0
) -> TransitionResult:
	"""
	Per-channel power where FWM and SpRS contribute equal interference.

	Bisects the FWM/SpRS ratio (in dB) on the dBm scale to 0.01 dB.

	Returns:
		TransitionResult; in_range is False when there is no crossing in
		[p_min_dbm, p_max_dbm]
	"""
	changes = {}
	if distance_km is not None:
		changes["distance_km"] = distance_km
	if n_gb is not None:
		changes["n_gb"] = n_gb
	scenario = base.with_(**changes)

	def ratio_db(p_dbm: float) -> float:
		fwm, sprs = _mechanism_powers(scenario, p_dbm)
		if fwm <= 0.0:
			return -math.inf
		if sprs <= 0.0:
			return math.inf
		return 10.0 * math.log10(fwm / sprs)

	low, high = ratio_db(p_min_dbm), ratio_db(p_max_dbm)
	if not (math.isfinite(low) and math.isfinite(high)) or low * high > 0.0:
		logger.info(f"Transition: no FWM/SpRS crossing in [{p_min_dbm}, {p_max_dbm}] dBm/ch")
		return TransitionResult(power_dbm=None, in_range=False, distance_km=scenario.distance_km, n_gb=scenario.n_gb)

	power = float(optimize.bisect(ratio_db, p_min_dbm, p_max_dbm, xtol=0.01))
	fwm, sprs = _mechanism_powers(scenario, power)
	logger.info(f"Transition at {power:.2f} dBm/ch ({scenario.distance_km} km, gb={scenario.n_gb})")
	return TransitionResult(
		power_dbm=power, in_range=True, distance_km=scenario.distance_km,
		n_gb=scenario.n_gb, p_fwm_w=fwm, p_sprs_w=sprs
	)


def _calibration_anchor(base: LinkScenario) -> LinkScenario:
	return base.with_(
		power_dbm=CALIBRATION_POWER_DBM,
		distance_km=CALIBRATION_DISTANCE_KM,
		placement=Placement.BAND_EDGE,
		quantum_slot=None,
		n_gb=0,
		direction=PropagationDirection.CO,
		toggles=MechanismToggles()
	)


def calibrate_raman(
	base: LinkScenario,
	window: Tuple[float, float] = DEFAULT_CALIBRATION_WINDOW,
	max_doublings: int = 60
) -> CalibrationResult:
	"""
	Fit the Raman scale so the anchor point lands at the window midpoint.

	The anchor is -4.5 dBm/ch, 10 km, band edge, no guardband,
	co-propagating, both mechanisms. SKR falls monotonically with the scale,
	so the search brackets [0, s_hi] by doubling and then bisects.

	Args:
		base: Scenario whose fiber and transceiver are calibrated
		window: Target SKR window (low, high) in bit/s

	Returns:
		CalibrationResult with the calibrated scenario

	Raises:
		CalibrationError: If the window cannot be reached
	"""
	low, high = window
	if not (0.0 <= low < high):
		raise ScenarioError(f"calibration window must satisfy 0 <= low < high, got {window}")
	target = 0.5 * (low + high)
	anchor = _calibration_anchor(base)

	def skr_at(scale: float) -> float:
		return evaluate(anchor.with_(raman_scale=scale)).skr_bps

	ceiling = skr_at(0.0)
	logger.info(f"Calibrating Raman scale to {low / 1e6:.1f}-{high / 1e6:.1f} Mbit/s (SKR without SpRS: {ceiling / 1e6:.2f} Mbit/s)")
	if ceiling < low:
		raise CalibrationError("Calibration window is above the SKR reachable without Raman noise", (0.0, ceiling))
	if ceiling <= target:
		scale = 0.0
	else:
		upper = 1.0
		for _ in range(max_doublings):
			if skr_at(upper) < target:
				break
			upper *= 2.0
		else:
			raise CalibrationError("Raman scale search did not bracket the target", (skr_at(upper), ceiling))
		scale = float(optimize.bisect(lambda s: skr_at(s) - target, 0.0, upper, xtol=1e-9 * upper, rtol=1e-12))

	achieved = skr_at(scale)
	if not low <= achieved <= high:
		raise CalibrationError("Calibrated SKR fell outside the window", (min(achieved, ceiling), ceiling))
	metadata = dict(base.metadata)
	metadata.update({
		"raman_scale": scale,
		"calibration_window_bps": [low, high],
		"calibration_skr_bps": achieved,
	})
	calibrated = base.with_(raman_scale=scale, metadata=metadata)
	logger.info(f"Raman scale {scale:.6g} gives {achieved / 1e6:.3f} Mbit/s at the anchor")
	return CalibrationResult(scale=scale, skr_bps=achieved, window=(low, high), scenario=calibrated)


def recommend_guardband(
	base: LinkScenario,
	power_dbm: Optional[float] = None,
	distance_km: Optional[float] = None,
	budget_pct: float = 5.0,
	gb_max: int = 10,
	workers: int = 1
) -> Recommendation:
	"""
	Smallest guardband past which widening stops paying off, within a capacity budget.

	Widening keeps adding roughly 1% SKR per slot even after FWM is gone,
	because every removed pump also takes its SpRS with it. The plateau is
	therefore the first n_gb whose next slot adds less than
	RECOMMEND_KNEE_GAIN. When the whole sweep gains less than
	RECOMMEND_MIN_GAIN over no guardband the curve counts as flat and the
	plateau is n_gb = 0.

	feasible is False when the plateau guardband costs more capacity than the
	budget allows (or no guardband gives any key); the returned n_gb is then
	the best-SKR guardband inside the budget, ties toward fewer slots.
	"""
	if budget_pct < 0.0:
		raise ScenarioError(f"capacity budget must be >= 0, got {budget_pct}")
	series = sweep_guardband(
		base,
		[base.power_dbm if power_dbm is None else power_dbm],
		distance_km=distance_km,
		gb_max=gb_max,
		workers=workers
	)[0]
	rows = series.rows
	overall_best = max(row.skr_bps for row in rows)
	plateau = _plateau_row(rows)
	allowed = [row for row in rows if row.capacity_loss <= budget_pct + 1e-9]
	feasible = plateau is not None and plateau.capacity_loss <= budget_pct + 1e-9
	if feasible:
		chosen = plateau
	else:
		budget_best = max(row.skr_bps for row in allowed)
		chosen = next(row for row in allowed if row.skr_bps == budget_best)
		wanted = "none" if plateau is None else int(plateau.x)
		logger.warning(f"Plateau guardband ({wanted}) is outside the {budget_pct}% capacity budget; best effort is {int(chosen.x)}")
	logger.info(
		f"Recommended guardband {int(chosen.x)} ({chosen.capacity_loss:.3f}% loss, "
		f"{chosen.skr_bps / 1e6:.2f} Mbit/s, feasible={feasible})"
	)
	return Recommendation(
		n_gb=int(chosen.x),
		skr_bps=chosen.skr_bps,
		capacity_loss=chosen.capacity_loss,
		feasible=feasible,
		best_skr_bps=overall_best,
		budget_pct=budget_pct
	)


def _plateau_row(rows: Sequence[SweepRow]) -> Optional[SweepRow]:
	"""First row of a guardband series after which SKR stops rising meaningfully."""
	overall_best = max(row.skr_bps for row in rows)
	if overall_best <= 0.0:
		return None
	if rows[0].skr_bps > 0.0 and overall_best / rows[0].skr_bps - 1.0 < RECOMMEND_MIN_GAIN:
		return rows[0]
	for row, following in zip(rows, rows[1:]):
		if row.skr_bps > 0.0 and following.skr_bps < row.skr_bps * (1.0 + RECOMMEND_KNEE_GAIN):
			return row
	return rows[-1]
