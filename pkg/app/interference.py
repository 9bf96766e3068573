"""
Interference power landing in the quantum channel.

Four-wave mixing is summed over every pump/idler triple whose product falls on
the quantum slot, using the closed-form span integral of the undepleted-pump
FWM field. Spontaneous Raman scattering is a per-pump spectral density
integrated over the quantum signal bandwidth, accumulated forward or
backward depending on the traffic direction.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import constants

from app.errors import ConfigError, ScenarioError
from app.scenario import ChannelPlan, PropagationDirection, slot_frequencies
from app.utils.units import (
	db_per_km_to_per_m,
	km_to_m,
	per_w_km_to_per_w_m,
	ps2_per_km_to_s2_per_m
)
from app.utils.csv_utils import read_raman_csv

logger = logging.getLogger(__name__)

FWM_COEFFICIENT = 16.0 / 81.0
RAMAN_BANDWIDTH_HZ = 40e12

# Default spontaneous-scattering shape: (detuning THz, fraction of peak).
_DEFAULT_RAMAN_SHAPE = (
	(0.0, 0.0),
	(13.2, 1.0),
	(14.7, 0.9),
	(17.6, 0.55),
	(24.0, 0.2),
	(30.0, 0.08),
	(40.0, 0.0),
)
DEFAULT_RAMAN_PEAK = 3.0e-23  # 1/(m*Hz)


class RamanProfile(BaseModel):
	"""Tabulated spontaneous Raman density rho_R(|df|) with a calibration scale."""
	model_config = ConfigDict(frozen=True)

	detuning: Tuple[float, ...]
	density: Tuple[float, ...]
	scale: float = Field(default=1.0, ge=0.0)
	source: str = "builtin"

	@model_validator(mode="after")
	def _check_table(self) -> "RamanProfile":
		if len(self.detuning) != len(self.density) or len(self.detuning) < 2:
			raise ValueError("Raman table needs at least two (detuning, density) rows of equal length")
		detuning = np.asarray(self.detuning)
		if np.any(np.diff(detuning) <= 0.0):
			raise ValueError("Raman detuning column must be strictly increasing")
		if detuning[0] > 0.0 or detuning[-1] < RAMAN_BANDWIDTH_HZ * (1.0 - 1e-9):
			raise ValueError("Raman table must cover 0-40 THz detuning")
		if np.any(np.asarray(self.density) < 0.0) or not np.all(np.isfinite(self.density)):
			raise ValueError("Raman density must be finite and non-negative")
		return self

	def rho(self, abs_detuning) -> np.ndarray:
		"""Scaled density at |df| (Hz); zero outside the table."""
		values = np.interp(np.abs(abs_detuning), self.detuning, self.density, left=0.0, right=0.0)
		return self.scale * values

	def with_scale(self, scale: float) -> "RamanProfile":
		return self.model_copy(update={"scale": float(scale)})


def default_raman_profile(scale: float = 1.0) -> RamanProfile:
	"""Built-in silica profile: linear rise to the 13.2 THz peak, zero beyond 40 THz."""
	detuning = tuple(thz * 1e12 for thz, _ in _DEFAULT_RAMAN_SHAPE)
	density = tuple(rel * DEFAULT_RAMAN_PEAK for _, rel in _DEFAULT_RAMAN_SHAPE)
	return RamanProfile(detuning=detuning, density=density, scale=scale)


def load_raman_profile(path: str, scale: float = 1.0) -> RamanProfile:
	"""
	Load a Raman profile from a two-column CSV (detuning_Hz, density_per_m_per_Hz).

	Raises:
		ConfigError: If the file is missing or malformed
	"""
	detuning, density = read_raman_csv(path)
	try:
		profile = RamanProfile(detuning=tuple(detuning), density=tuple(density), scale=scale, source=str(path))
	except ValueError as e:
		raise ConfigError(str(e).splitlines()[-1].strip(), path=str(path)) from e
	logger.info(f"Loaded Raman profile with {len(detuning)} rows from {path}")
	return profile


class FiberParams(BaseModel):
	"""Single-span fiber in SI units."""
	model_config = ConfigDict(frozen=True)

	alpha: float = Field(gt=0.0, description="Attenuation, 1/m")
	beta2: float = Field(description="GVD, s^2/m")
	gamma: float = Field(ge=0.0, description="Nonlinear coefficient, 1/(W*m)")
	length: float = Field(ge=0.0, description="Span length, m")
	temperature: float = Field(default=300.0, gt=0.0, description="Kelvin")
	raman: RamanProfile = Field(default_factory=default_raman_profile)

	@classmethod
	def from_engineering(
		cls,
		alpha_db_km: float = 0.2,
		beta2_ps2_km: float = -21.7,
		gamma_w_km: float = 1.3,
		length_km: float = 10.0,
		temperature: float = 300.0,
		raman: Optional[RamanProfile] = None
	) -> "FiberParams":
		"""Build from dB/km, ps^2/km, 1/(W*km) and km."""
		try:
			return cls(
				alpha=db_per_km_to_per_m(alpha_db_km),
				beta2=ps2_per_km_to_s2_per_m(beta2_ps2_km),
				gamma=per_w_km_to_per_w_m(gamma_w_km),
				length=km_to_m(length_km),
				temperature=temperature,
				raman=raman if raman is not None else default_raman_profile()
			)
		except ValueError as e:
			raise ScenarioError(f"Invalid fiber parameters: {e}") from e

	def with_length(self, length_m: float) -> "FiberParams":
		return self.model_copy(update={"length": float(length_m)})


class MechanismToggles(BaseModel):
	"""Which interference mechanisms are evaluated."""
	model_config = ConfigDict(frozen=True)

	fwm: bool = True
	sprs: bool = True

	@classmethod
	def parse(cls, text: str) -> "MechanismToggles":
		"""Parse "fwm,sprs", "fwm", "sprs" or "none"."""
		names = {part.strip().lower() for part in text.split(",") if part.strip()}
		unknown = names - {"fwm", "sprs", "none"}
		if unknown:
			raise ScenarioError(f"Unknown mechanism(s): {', '.join(sorted(unknown))}")
		return cls(fwm="fwm" in names, sprs="sprs" in names)

	@property
	def label(self) -> str:
		if self.fwm and self.sprs:
			return "fwm+sprs"
		if self.fwm:
			return "fwm"
		return "sprs" if self.sprs else "none"


class InterferenceBreakdown(BaseModel):
	"""Per-mechanism interference power at the quantum receiver, in W."""
	model_config = ConfigDict(frozen=True)

	p_fwm_degenerate: float = Field(ge=0.0)
	p_fwm_nondegenerate: float = Field(ge=0.0)
	p_sprs: float = Field(ge=0.0)
	total: float = Field(ge=0.0)
	direction: PropagationDirection

	@field_validator("total")
	@classmethod
	def _finite(cls, value: float) -> float:
		if not np.isfinite(value):
			raise ValueError("interference total must be finite")
		return value

	@model_validator(mode="after")
	def _check_total(self) -> "InterferenceBreakdown":
		parts = self.p_fwm_degenerate + self.p_fwm_nondegenerate + self.p_sprs
		if abs(parts - self.total) > 1e-12 * max(parts, 1e-300):
			raise ValueError("interference total must equal the sum of its components")
		return self

	@property
	def p_fwm(self) -> float:
		return self.p_fwm_degenerate + self.p_fwm_nondegenerate


class FwmTerms(BaseModel):
	"""Contributing FWM triples for one plan, as parallel arrays (1-based slots)."""
	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	pump_h: np.ndarray
	idler_k: np.ndarray
	pump_l: np.ndarray
	delta_beta: np.ndarray
	weight: np.ndarray
	degenerate: np.ndarray

	def __len__(self) -> int:
		return int(self.pump_h.size)

	def triples(self) -> set:
		"""Set of (h, k, l) with h <= l."""
		return set(zip(self.pump_h.tolist(), self.idler_k.tolist(), self.pump_l.tolist()))


def delta_beta(f_i, f_h, f_l, beta2: float):
	"""
	Linear phase mismatch of the FWM product at f_i from pumps f_h and f_l.

	The idler sits at f_h + f_l - f_i; use f_l = f_h for the degenerate case.

	Returns:
		delta beta in 1/m (array inputs broadcast)
	"""
	return -beta2 * (2.0 * np.pi) ** 2 * (np.subtract(f_i, f_h)) * (np.subtract(f_i, f_l))


def effective_length(alpha: float, length: float) -> float:
	"""L_eff = (1 - exp(-alpha L)) / alpha in m."""
	return float(-np.expm1(-alpha * length) / alpha)


def fwm_efficiency(delta_beta_value, alpha: float, length: float):
	"""
	Span-integrated FWM efficiency |(1 - exp(-(alpha + i db) L)) / (alpha + i db)|^2.

	Written as (expm1(-aL)^2 + 4 exp(-aL) sin^2(db L / 2)) / (a^2 + db^2), which
	stays accurate at db = 0 and for short spans.

	Args:
		delta_beta_value: Phase mismatch in 1/m (scalar or array)
		alpha: Attenuation in 1/m
		length: Span length in m

	Returns:
		Efficiency in m^2
	"""
	db = np.asarray(delta_beta_value, dtype=float)
	loss = np.exp(-alpha * length)
	numerator = np.expm1(-alpha * length) ** 2 + 4.0 * loss * np.sin(0.5 * db * length) ** 2
	result = numerator / (alpha ** 2 + db ** 2)
	return float(result) if result.ndim == 0 else result


def _slot_loading(plan: ChannelPlan) -> Tuple[np.ndarray, np.ndarray]:
	"""Power (W) and excess kurtosis per slot, index 0 unused."""
	power = np.zeros(plan.n_slots + 1)
	kurtosis = np.zeros(plan.n_slots + 1)
	for channel in plan.classical:
		power[channel.slot] = channel.power
		kurtosis[channel.slot] = channel.kurtosis
	return power, kurtosis


def _empty_terms() -> FwmTerms:
	empty_int = np.zeros(0, dtype=int)
	empty = np.zeros(0)
	return FwmTerms(
		pump_h=empty_int, idler_k=empty_int, pump_l=empty_int,
		delta_beta=empty, weight=empty, degenerate=np.zeros(0, dtype=bool)
	)


def enumerate_fwm_terms(plan: ChannelPlan, fiber: FiberParams) -> FwmTerms:
	"""
	List every pump/idler triple that puts FWM power on the quantum slot.

	Degenerate triples (h = l) need the idler 2h - q loaded and carry weight
	(Phi_h + 2) P_h^2 P_k. Non-degenerate triples run over unordered pump pairs
	h < l with the idler h + l - q loaded and distinct from both pumps; their
	weight is 4 P_h P_k P_l.

	Args:
		plan: Loaded plan with quantum_slot set
		fiber: Fiber parameters (beta2 is used)

	Returns:
		FwmTerms with one entry per contributing triple
	"""
	if plan.quantum_slot is None:
		raise ScenarioError("FWM enumeration needs a plan with the quantum slot set")
	q = plan.quantum_slot
	power, kurtosis = _slot_loading(plan)
	occupied = np.flatnonzero(power > 0.0)
	if occupied.size == 0:
		return _empty_terms()
	freqs = np.concatenate(([0.0], slot_frequencies(plan)))
	f_q = freqs[q]

	# degenerate: h == l
	k_deg = 2 * occupied - q
	valid = (k_deg >= 1) & (k_deg <= plan.n_slots)
	h_deg = occupied[valid]
	k_deg = k_deg[valid]
	loaded = power[k_deg] > 0.0
	h_deg, k_deg = h_deg[loaded], k_deg[loaded]
	w_deg = (kurtosis[h_deg] + 2.0) * power[h_deg] ** 2 * power[k_deg]
	db_deg = delta_beta(f_q, freqs[h_deg], freqs[h_deg], fiber.beta2)

	# non-degenerate: unordered pairs h < l
	i_idx, j_idx = np.triu_indices(occupied.size, k=1)
	h_nd = occupied[i_idx]
	l_nd = occupied[j_idx]
	k_nd = h_nd + l_nd - q
	valid = (k_nd >= 1) & (k_nd <= plan.n_slots) & (k_nd != h_nd) & (k_nd != l_nd)
	h_nd, l_nd, k_nd = h_nd[valid], l_nd[valid], k_nd[valid]
	loaded = power[k_nd] > 0.0
	h_nd, l_nd, k_nd = h_nd[loaded], l_nd[loaded], k_nd[loaded]
	w_nd = 4.0 * power[h_nd] * power[k_nd] * power[l_nd]
	db_nd = delta_beta(f_q, freqs[h_nd], freqs[l_nd], fiber.beta2)

	return FwmTerms(
		pump_h=np.concatenate((h_deg, h_nd)),
		idler_k=np.concatenate((k_deg, k_nd)),
		pump_l=np.concatenate((h_deg, l_nd)),
		delta_beta=np.concatenate((db_deg, db_nd)),
		weight=np.concatenate((w_deg, w_nd)),
		degenerate=np.concatenate((np.ones(h_deg.size, dtype=bool), np.zeros(h_nd.size, dtype=bool)))
	)


def fwm_power(
	plan: ChannelPlan,
	fiber: FiberParams,
	direction: PropagationDirection = PropagationDirection.CO
) -> Tuple[float, float]:
	"""
	Degenerate and non-degenerate FWM power at the quantum receiver (z = L).

	Counter-propagating classical traffic is not phase matched with the
	quantum signal, so both terms are zero in that direction.

	Returns:
		(degenerate W, non-degenerate W)
	"""
	if PropagationDirection(direction) is PropagationDirection.COUNTER or fiber.gamma == 0.0:
		return 0.0, 0.0
	terms = enumerate_fwm_terms(plan, fiber)
	if len(terms) == 0:
		return 0.0, 0.0
	scale = FWM_COEFFICIENT * fiber.gamma ** 2 * np.exp(-fiber.alpha * fiber.length)
	contrib = scale * terms.weight * fwm_efficiency(terms.delta_beta, fiber.alpha, fiber.length)
	degenerate = float(np.sum(contrib[terms.degenerate]))
	nondegenerate = float(np.sum(contrib[~terms.degenerate]))
	logger.debug(f"FWM: {len(terms)} triples, degenerate={degenerate:.3e} W, non-degenerate={nondegenerate:.3e} W")
	return degenerate, nondegenerate


def raman_efficiency(delta_f_signed, profile: RamanProfile, temperature: float):
	"""
	Spontaneous Raman efficiency density at detuning f_i - f_h.

	Stokes side (quantum below the pump, df < 0) carries n_th + 1 phonons,
	the anti-Stokes side n_th, with n_th the Bose-Einstein occupancy at
	|df|. df = 0 contributes nothing.

	Args:
		delta_f_signed: f_i - f_h in Hz (scalar or array)
		profile: Raman density table
		temperature: Fiber temperature in K

	Returns:
		Efficiency in 1/(m*Hz)
	"""
	df = np.asarray(delta_f_signed, dtype=float)
	abs_df = np.abs(df)
	nonzero = abs_df > 0.0
	x = constants.h * np.where(nonzero, abs_df, 1.0) / (constants.k * temperature)
	n_th = 1.0 / np.expm1(x)
	phonons = np.where(df < 0.0, n_th + 1.0, n_th)
	result = np.where(nonzero, profile.rho(abs_df) * phonons, 0.0)
	return float(result) if result.ndim == 0 else result


def sprs_power(
	plan: ChannelPlan,
	fiber: FiberParams,
	b_s: float,
	direction: PropagationDirection = PropagationDirection.CO
) -> float:
	"""
	Spontaneous Raman power inside the quantum bandwidth at the receiver.

	Co-propagating light is attenuated together with the quantum signal
	(L exp(-alpha L)); counter-propagating light is backscattered towards the
	receiver ((1 - exp(-2 alpha L)) / (2 alpha)).

	Args:
		plan: Loaded plan with quantum_slot set
		fiber: Fiber parameters including the Raman profile
		b_s: Quantum signal bandwidth in Hz
		direction: Classical traffic direction

	Returns:
		Power in W
	"""
	if plan.quantum_slot is None:
		raise ScenarioError("SpRS needs a plan with the quantum slot set")
	if b_s <= 0.0:
		raise ScenarioError(f"quantum bandwidth must be positive, got {b_s}")
	if not plan.classical:
		return 0.0
	freqs = slot_frequencies(plan)
	f_q = freqs[plan.quantum_slot - 1]
	slots = np.array([ch.slot for ch in plan.classical])
	powers = np.array([ch.power for ch in plan.classical])
	eta = raman_efficiency(f_q - freqs[slots - 1], fiber.raman, fiber.temperature)
	scattered = float(np.sum(eta * powers)) * b_s

	alpha, length = fiber.alpha, fiber.length
	if PropagationDirection(direction) is PropagationDirection.CO:
		return scattered * length * np.exp(-alpha * length)
	return scattered * float(-np.expm1(-2.0 * alpha * length)) / (2.0 * alpha)


def total_interference(
	plan: ChannelPlan,
	fiber: FiberParams,
	b_s: float,
	direction: PropagationDirection = PropagationDirection.CO,
	toggles: Optional[MechanismToggles] = None
) -> InterferenceBreakdown:
	"""
	Sum the enabled mechanisms. Disabled ones report zero.

	Returns:
		InterferenceBreakdown with total = degenerate + non-degenerate + SpRS
	"""
	toggles = toggles or MechanismToggles()
	direction = PropagationDirection(direction)
	p_deg, p_nd = fwm_power(plan, fiber, direction) if toggles.fwm else (0.0, 0.0)
	p_sprs = sprs_power(plan, fiber, b_s, direction) if toggles.sprs else 0.0
	return InterferenceBreakdown(
		p_fwm_degenerate=p_deg,
		p_fwm_nondegenerate=p_nd,
		p_sprs=p_sprs,
		total=p_deg + p_nd + p_sprs,
		direction=direction
	)
