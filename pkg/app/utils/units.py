"""
Unit conversions between engineering units used in configs and SI units used internally.
"""

import math
from typing import Union

import numpy as np
from scipy import constants

Number = Union[float, np.ndarray]


def dbm_to_watt(p_dbm: Number) -> Number:
	"""Convert optical power from dBm to W (scalars stay scalars)."""
	watts = 1e-3 * np.power(10.0, np.asarray(p_dbm, dtype=float) / 10.0)
	return float(watts) if np.ndim(watts) == 0 else watts


def watt_to_dbm(p_w: float) -> float:
	"""Convert optical power from W to dBm. Zero power maps to -inf."""
	if p_w <= 0.0:
		return -math.inf
	return 10.0 * math.log10(p_w / 1e-3)


def db_per_km_to_per_m(alpha_db_km: float) -> float:
	"""Attenuation in dB/km to the natural power coefficient in 1/m."""
	return math.log(10.0) / 10.0 * alpha_db_km / 1000.0


def ps2_per_km_to_s2_per_m(beta2_ps2_km: float) -> float:
	"""Group-velocity dispersion in ps²/km to s²/m."""
	return beta2_ps2_km * 1e-24 / 1000.0


def per_w_km_to_per_w_m(gamma_w_km: float) -> float:
	"""Nonlinear coefficient in 1/(W·km) to 1/(W·m)."""
	return gamma_w_km / 1000.0


def km_to_m(length_km: float) -> float:
	return length_km * 1000.0


def frequency_to_wavelength(frequency_hz: float) -> float:
	"""Vacuum wavelength in m for an optical frequency in Hz."""
	return constants.c / frequency_hz
