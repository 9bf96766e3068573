"""
DWDM channel plan for a fiber shared by one CV-QKD channel and classical traffic.

Slots are 1-based. Slot k sits at band_start + (k - 1) * spacing, so with the
default anchor slot 88 is the high-frequency band edge near 1530 nm and slot 1
sits near 1565 nm. Every operation returns a new ChannelPlan; plans are frozen.
"""

import logging
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.errors import ScenarioError
from app.utils.units import frequency_to_wavelength

logger = logging.getLogger(__name__)

DEFAULT_N_SLOTS = 88
DEFAULT_SPACING_HZ = 50e9
DEFAULT_BAND_START_HZ = 195.9375e12 - 87 * DEFAULT_SPACING_HZ

# Excess kurtosis of common classical constellations (uniform QAM / PSK).
FORMAT_KURTOSIS: Dict[str, float] = {
	"gaussian": 0.0,
	"ideal": 0.0,
	"qpsk": -1.0,
	"16qam": -0.68,
	"64qam": -0.619,
	"256qam": -0.605,
}


class Placement(str, Enum):
	"""Where the quantum channel sits on the grid."""
	BAND_EDGE = "edge"
	BAND_CENTER = "center"
	CUSTOM = "custom"


class PropagationDirection(str, Enum):
	"""Classical traffic direction relative to the quantum signal."""
	CO = "co"
	COUNTER = "counter"


class ClassicalChannel(BaseModel):
	"""One loaded classical slot."""
	model_config = ConfigDict(frozen=True)

	slot: int = Field(ge=1)
	power: float = Field(gt=0.0, description="Launch power in W")
	kurtosis: float = Field(default=0.0, ge=-2.0)
	fmt: str = "gaussian"


class ChannelPlan(BaseModel):
	"""The DWDM grid with its classical loading and quantum-channel slot."""
	model_config = ConfigDict(frozen=True)

	n_slots: int = DEFAULT_N_SLOTS
	spacing: float = DEFAULT_SPACING_HZ
	band_start: float = DEFAULT_BAND_START_HZ
	quantum_slot: Optional[int] = None
	classical: Tuple[ClassicalChannel, ...] = ()
	guardband: int = Field(default=0, ge=0)
	placement: Placement = Placement.CUSTOM

	@model_validator(mode="after")
	def _check_plan(self) -> "ChannelPlan":
		if self.n_slots < 2:
			raise ValueError(f"n_slots must be >= 2, got {self.n_slots}")
		if not (self.spacing > 0.0 and np.isfinite(self.spacing)):
			raise ValueError(f"spacing must be a positive frequency, got {self.spacing}")
		if not (self.band_start > 0.0 and np.isfinite(self.band_start)):
			raise ValueError(f"band_start must be a positive frequency, got {self.band_start}")
		if self.quantum_slot is not None and not 1 <= self.quantum_slot <= self.n_slots:
			raise ValueError(f"quantum_slot {self.quantum_slot} outside 1..{self.n_slots}")

		seen = set()
		for channel in self.classical:
			if channel.slot > self.n_slots:
				raise ValueError(f"classical slot {channel.slot} outside 1..{self.n_slots}")
			if channel.slot in seen:
				raise ValueError(f"slot {channel.slot} loaded twice")
			seen.add(channel.slot)
		if self.quantum_slot in seen:
			raise ValueError(f"quantum slot {self.quantum_slot} carries a classical channel")
		blocked = seen.intersection(guardband_slots(self))
		if blocked:
			raise ValueError(f"guardband slots {sorted(blocked)} carry classical channels")
		return self


def _make_plan(**fields) -> ChannelPlan:
	try:
		return ChannelPlan(**fields)
	except ValidationError as e:
		raise ScenarioError(f"Invalid channel plan: {e.errors()[0]['msg']}") from e


def _replace(plan: ChannelPlan, **changes) -> ChannelPlan:
	fields = plan.model_dump()
	fields["classical"] = plan.classical
	fields.update(changes)
	return _make_plan(**fields)


def build_grid(
	n_slots: int = DEFAULT_N_SLOTS,
	spacing: float = DEFAULT_SPACING_HZ,
	band_start: float = DEFAULT_BAND_START_HZ
) -> ChannelPlan:
	"""
	Build an empty fixed grid.

	Args:
		n_slots: Number of slots (at least 2)
		spacing: Slot spacing in Hz
		band_start: Center frequency of slot 1 in Hz

	Returns:
		Unloaded ChannelPlan without a quantum channel

	Raises:
		ScenarioError: If counts or frequencies are invalid
	"""
	plan = _make_plan(n_slots=n_slots, spacing=spacing, band_start=band_start)
	logger.debug(f"Built grid: {n_slots} slots x {spacing / 1e9:.1f} GHz from {band_start / 1e12:.4f} THz")
	return plan


def slot_frequency(plan: ChannelPlan, slot: int) -> float:
	"""Center frequency of a 1-based slot in Hz."""
	if not 1 <= slot <= plan.n_slots:
		raise ScenarioError(f"slot {slot} outside 1..{plan.n_slots}")
	return plan.band_start + (slot - 1) * plan.spacing


def slot_frequencies(plan: ChannelPlan) -> np.ndarray:
	"""Center frequencies of slots 1..n_slots in Hz."""
	return plan.band_start + np.arange(plan.n_slots, dtype=float) * plan.spacing


def slot_wavelength(plan: ChannelPlan, slot: int) -> float:
	"""Vacuum wavelength of a slot in m."""
	return frequency_to_wavelength(slot_frequency(plan, slot))


def resolve_slot(n_slots: int, placement: Placement, slot: Optional[int] = None) -> int:
	"""Map a placement to a concrete slot index."""
	placement = Placement(placement)
	if placement is Placement.BAND_EDGE:
		return n_slots
	if placement is Placement.BAND_CENTER:
		return n_slots // 2
	if slot is None:
		raise ScenarioError("custom placement needs an explicit slot")
	return slot


def place_quantum(
	plan: ChannelPlan,
	placement: Placement = Placement.BAND_EDGE,
	slot: Optional[int] = None
) -> ChannelPlan:
	"""
	Put the quantum channel on the grid.

	Any classical channel on the chosen slot, or inside the plan's current
	guardband around it, is removed.

	Args:
		plan: Grid to modify
		placement: BAND_EDGE (last slot), BAND_CENTER (n_slots // 2) or CUSTOM
		slot: Slot index, required for CUSTOM

	Returns:
		New plan with quantum_slot set
	"""
	placement = Placement(placement)
	target = resolve_slot(plan.n_slots, placement, slot)
	if not 1 <= target <= plan.n_slots:
		raise ScenarioError(f"quantum slot {target} outside 1..{plan.n_slots}")
	blocked = set(_guard_range(plan.n_slots, target, plan.guardband)) | {target}
	kept = tuple(ch for ch in plan.classical if ch.slot not in blocked)
	return _replace(plan, quantum_slot=target, placement=placement, classical=kept)


def _guard_range(n_slots: int, quantum_slot: int, n_gb: int) -> Tuple[int, ...]:
	lower = range(max(1, quantum_slot - n_gb), quantum_slot)
	upper = range(quantum_slot + 1, min(n_slots, quantum_slot + n_gb) + 1)
	return tuple(lower) + tuple(upper)


def guardband_slots(plan: ChannelPlan) -> Tuple[int, ...]:
	"""Slots reserved as guardband around the quantum channel, clipped to the grid."""
	if plan.quantum_slot is None or plan.guardband == 0:
		return ()
	return _guard_range(plan.n_slots, plan.quantum_slot, plan.guardband)


def _require_quantum(plan: ChannelPlan, operation: str) -> None:
	if plan.quantum_slot is None:
		raise ScenarioError(f"{operation} needs a plan with the quantum slot set")


def load_uniform(
	plan: ChannelPlan,
	power_per_channel: float,
	kurtosis: float = 0.0,
	fmt: str = "gaussian"
) -> ChannelPlan:
	"""
	Fill every free slot with a classical channel at the same launch power.

	Free means neither the quantum slot nor a guardband slot. Existing
	classical entries are replaced.

	Args:
		plan: Plan with quantum_slot set
		power_per_channel: Launch power per channel in W
		kurtosis: Excess kurtosis of the classical format
		fmt: Modulation-format label

	Returns:
		Loaded plan
	"""
	_require_quantum(plan, "load_uniform")
	blocked = set(guardband_slots(plan)) | {plan.quantum_slot}
	try:
		channels = tuple(
			ClassicalChannel(slot=k, power=power_per_channel, kurtosis=kurtosis, fmt=fmt)
			for k in range(1, plan.n_slots + 1) if k not in blocked
		)
	except ValidationError as e:
		raise ScenarioError(f"Invalid classical channel: {e.errors()[0]['msg']}") from e
	return _replace(plan, classical=channels)


def apply_guardband(plan: ChannelPlan, n_gb: int) -> ChannelPlan:
	"""
	Clear n_gb slots on each side of the quantum channel.

	At the band edge only the interior side exists, so the guardband is
	unilateral. Values larger than the grid are clipped. Applying a smaller
	guardband than the plan already holds leaves it unchanged.

	Args:
		plan: Plan with quantum_slot set
		n_gb: Guardband size in slots per side

	Returns:
		Plan with the guardband slots emptied
	"""
	_require_quantum(plan, "apply_guardband")
	if n_gb < 0:
		raise ScenarioError(f"guardband must be >= 0, got {n_gb}")
	n_gb = max(plan.guardband, min(n_gb, plan.n_slots - 1))
	if n_gb == plan.guardband:
		return plan
	cleared = set(_guard_range(plan.n_slots, plan.quantum_slot, n_gb))
	kept = tuple(ch for ch in plan.classical if ch.slot not in cleared)
	return _replace(plan, guardband=n_gb, classical=kept)


def capacity_loss(plan: ChannelPlan) -> float:
	"""
	Classical capacity given up for guardbands, in percent of the grid.

	Counts the actual cleared slots, so band-edge plans lose one side only.
	"""
	_require_quantum(plan, "capacity_loss")
	return 100.0 * len(guardband_slots(plan)) / plan.n_slots


def total_power(plan: ChannelPlan) -> float:
	"""Total classical launch power in W."""
	return float(sum(ch.power for ch in plan.classical))


def kurtosis_for_format(label: str) -> float:
	"""
	Excess kurtosis for a named modulation format.

	Raises:
		ScenarioError: If the format is not known
	"""
	key = label.strip().lower().replace("-", "")
	if key not in FORMAT_KURTOSIS:
		raise ScenarioError(f"Unknown modulation format '{label}'. Known: {', '.join(FORMAT_KURTOSIS)}")
	return FORMAT_KURTOSIS[key]
