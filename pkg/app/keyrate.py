"""
Gaussian-modulated CV-QKD key rate with homodyne detection, reverse
reconciliation and a trusted (noisy, inefficient) detector.

Excess noise is referred to the channel input and expressed in shot-noise
units. The Holevo bound is evaluated from the four symplectic eigenvalues of
the Eve and Bob-conditioned covariance matrices.
"""

import logging
import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import constants

from app.errors import ScenarioError, UnphysicalStateError

logger = logging.getLogger(__name__)

PLANCK = constants.h
BOLTZMANN = constants.k
DISCRIMINANT_TOLERANCE = 1e-9


class QkdParams(BaseModel):
	"""Transceiver and protocol constants."""
	model_config = ConfigDict(frozen=True)

	v_a: float = Field(default=8.0, gt=0.0, description="Modulation variance, SNU")
	eta_b: float = Field(default=0.6, gt=0.0, le=1.0, description="Homodyne efficiency")
	beta_rec: float = Field(default=0.95, gt=0.0, le=1.0, description="Reconciliation efficiency")
	v_el: float = Field(default=0.01, ge=0.0, description="Electronic noise, SNU")
	b_s: float = Field(default=25e9, gt=0.0, description="Quantum signal bandwidth, Hz")
	f_q: float = Field(default=195.9375e12, gt=0.0, description="Quantum channel frequency, Hz")
	r_s: float = Field(default=5e8, gt=0.0, description="Symbol rate, symbols/s")


class ChannelState(BaseModel):
	"""Line transmittance and input-referred excess noise."""
	model_config = ConfigDict(frozen=True)

	transmittance: float = Field(gt=0.0, le=1.0)
	xi: float = Field(ge=0.0)


class KeyRateResult(BaseModel):
	"""Key rate and the quantities it was computed from."""
	model_config = ConfigDict(frozen=True)

	i_ab: float
	chi_be: float
	margin: float = Field(description="Unclamped beta I_AB - chi_BE, bits/symbol")
	skr_per_symbol: float = Field(ge=0.0)
	skr_bps: float = Field(ge=0.0)
	eigenvalues: Tuple[float, float, float, float]


def transmittance(alpha: float, length: float) -> float:
	"""Channel transmittance exp(-alpha L)."""
	if alpha <= 0.0 or length < 0.0:
		raise ScenarioError(f"need alpha > 0 and length >= 0, got alpha={alpha}, length={length}")
	return math.exp(-alpha * length)


def excess_noise(p_int: float, t: float, f_q: float, b_s: float) -> float:
	"""
	Convert interference power to input-referred excess noise.

	Args:
		p_int: Interference power in the quantum bandwidth, W
		t: Channel transmittance
		f_q: Quantum channel frequency, Hz
		b_s: Quantum signal bandwidth, Hz

	Returns:
		Excess noise in SNU, P_int / (T h f B_s)

	Raises:
		ScenarioError: On non-finite or out-of-range inputs
	"""
	values = (p_int, t, f_q, b_s)
	if not all(math.isfinite(v) for v in values):
		raise ScenarioError(f"excess_noise got non-finite input {values}")
	if p_int < 0.0 or t <= 0.0 or f_q <= 0.0 or b_s <= 0.0:
		raise ScenarioError(f"excess_noise needs p_int >= 0 and positive T, f, B_s; got {values}")
	return p_int / (t * PLANCK * f_q * b_s)


def holevo_function(x):
	"""
	G(x) = (x + 1) log2(x + 1) - x log2(x), with G(0) = 0.

	Accepts scalars or arrays; tiny negative inputs from rounding are treated as 0.
	"""
	x = np.maximum(np.asarray(x, dtype=float), 0.0)
	safe = np.where(x > 0.0, x, 1.0)
	result = (x + 1.0) * np.log2(x + 1.0) - np.where(x > 0.0, x * np.log2(safe), 0.0)
	return float(result) if result.ndim == 0 else result


def _pair_from(trace: float, det: float, label: str) -> Tuple[float, float]:
	"""Roots nu^2 of nu^4 - trace nu^2 + det, returned as nu."""
	disc = trace * trace - 4.0 * det
	if disc < 0.0:
		if disc < -DISCRIMINANT_TOLERANCE:
			raise UnphysicalStateError(f"negative {label} discriminant {disc:.3e}")
		disc = 0.0
	root = math.sqrt(disc)
	upper = 0.5 * (trace + root)
	lower = max(0.5 * (trace - root), 0.0)
	return math.sqrt(upper), math.sqrt(lower)


def symplectic_eigenvalues(params: QkdParams, state: ChannelState) -> Tuple[float, float, float, float]:
	"""
	Symplectic eigenvalues (lambda1..lambda4) for the Holevo bound.

	lambda1,2 belong to Alice-Bob's state at the channel output, lambda3,4 to
	Alice's state conditioned on Bob's homodyne outcome with the trusted
	detector noise included.

	Raises:
		UnphysicalStateError: If a discriminant is negative beyond tolerance
	"""
	t = state.transmittance
	v = params.v_a + 1.0
	chi_line = (1.0 - t) / t + state.xi
	chi_hom = (1.0 + params.v_el) / params.eta_b - 1.0
	chi_tot = chi_line + chi_hom / t

	a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line) ** 2
	b = t * t * (v * chi_line + 1.0) ** 2
	lambda1, lambda2 = _pair_from(a, b, "Alice-Bob")

	sqrt_b = math.sqrt(b)
	denominator = t * (v + chi_tot)
	c = (a * chi_hom + v * sqrt_b + t * (v + chi_line)) / denominator
	d = sqrt_b * (v + sqrt_b * chi_hom) / denominator
	lambda3, lambda4 = _pair_from(c, d, "conditional")
	return lambda1, lambda2, lambda3, lambda4


def key_rate(params: QkdParams, state: ChannelState) -> KeyRateResult:
	"""
	Asymptotic secret key rate under collective attacks.

	Args:
		params: Transceiver constants
		state: Channel transmittance and excess noise

	Returns:
		KeyRateResult with SKR = max(0, beta I_AB - chi_BE)
	"""
	t = state.transmittance
	v = params.v_a + 1.0
	chi_line = (1.0 - t) / t + state.xi
	chi_hom = (1.0 + params.v_el) / params.eta_b - 1.0
	chi_tot = chi_line + chi_hom / t

	i_ab = 0.5 * math.log2((v + chi_tot) / (1.0 + chi_tot))
	eigenvalues = symplectic_eigenvalues(params, state)
	if min(eigenvalues) < 1.0 - DISCRIMINANT_TOLERANCE:
		raise UnphysicalStateError(f"symplectic eigenvalue below the vacuum bound: {min(eigenvalues):.6f}")
	g = holevo_function((np.asarray(eigenvalues) - 1.0) / 2.0)
	chi_be = float(g[0] + g[1] - g[2] - g[3])

	skr = max(0.0, params.beta_rec * i_ab - chi_be)
	logger.debug(f"Key rate: T={t:.6f}, xi={state.xi:.6e}, I_AB={i_ab:.6f}, chi_BE={chi_be:.6f}, SKR={skr:.6f}")
	return KeyRateResult(
		i_ab=i_ab,
		chi_be=chi_be,
		margin=params.beta_rec * i_ab - chi_be,
		skr_per_symbol=skr,
		skr_bps=skr * params.r_s,
		eigenvalues=tuple(float(x) for x in eigenvalues)
	)
