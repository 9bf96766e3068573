"""
Unit tests for the scenario module.
"""

import unittest
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np

from app.errors import ScenarioError
from app.scenario import (
	ChannelPlan,
	ClassicalChannel,
	Placement,
	apply_guardband,
	build_grid,
	capacity_loss,
	guardband_slots,
	kurtosis_for_format,
	load_uniform,
	place_quantum,
	slot_frequencies,
	slot_frequency,
	slot_wavelength,
	total_power
)
from app.utils.units import dbm_to_watt, watt_to_dbm


def loaded(placement=Placement.BAND_EDGE, n_gb=0, power_dbm=-4.5, slot=None):
	plan = place_quantum(build_grid(), placement, slot)
	plan = apply_guardband(plan, n_gb)
	return load_uniform(plan, dbm_to_watt(power_dbm))


class TestGrid(unittest.TestCase):
	"""Test grid construction and slot frequencies."""

	def test_default_grid_span(self):
		"""88 slots at 50 GHz span 4.35 THz inside the C band."""
		plan = build_grid()
		span = slot_frequency(plan, 88) - slot_frequency(plan, 1)
		self.assertAlmostEqual(span, 87 * 50e9, delta=1e-3)
		self.assertAlmostEqual(slot_wavelength(plan, 88) * 1e9, 1530.0, delta=0.5)
		self.assertAlmostEqual(slot_wavelength(plan, 1) * 1e9, 1565.0, delta=0.5)

	def test_smallest_grid(self):
		"""Two-slot grid has both frequencies."""
		plan = build_grid(2, 50e9, 193e12)
		np.testing.assert_allclose(slot_frequencies(plan), [193e12, 193.05e12])

	def test_slot_44_frequency(self):
		"""Slot k sits at band_start + (k - 1) spacing."""
		plan = build_grid(88, 50e9, 191e12)
		self.assertAlmostEqual(slot_frequency(plan, 44), 191e12 + 43 * 50e9, delta=1e-3)

	def test_frequencies_strictly_increasing(self):
		"""Slot frequencies step by exactly the spacing."""
		plan = build_grid(16, 100e9, 192e12)
		steps = np.diff(slot_frequencies(plan))
		np.testing.assert_allclose(steps, 100e9)

	def test_invalid_grid_rejected(self):
		"""Fewer than two slots or non-positive spacing are errors."""
		with self.assertRaises(ScenarioError):
			build_grid(1, 50e9, 193e12)
		with self.assertRaises(ScenarioError):
			build_grid(88, 0.0, 193e12)
		with self.assertRaises(ScenarioError):
			build_grid(88, 50e9, -1.0)

	def test_unloaded_without_quantum_slot(self):
		"""A fresh grid has no channels and no quantum slot."""
		plan = build_grid()
		self.assertIsNone(plan.quantum_slot)
		self.assertEqual(plan.classical, ())

	def test_slot_out_of_range(self):
		"""Slot lookups outside the grid are errors."""
		with self.assertRaises(ScenarioError):
			slot_frequency(build_grid(), 89)


class TestPlacementAndLoading(unittest.TestCase):
	"""Test quantum placement and uniform loading."""

	def test_placements(self):
		"""Band edge is the last slot, band center is n_slots // 2."""
		self.assertEqual(place_quantum(build_grid(), Placement.BAND_EDGE).quantum_slot, 88)
		self.assertEqual(place_quantum(build_grid(), Placement.BAND_CENTER).quantum_slot, 44)
		self.assertEqual(place_quantum(build_grid(), Placement.CUSTOM, 1).quantum_slot, 1)

	def test_custom_needs_slot(self):
		"""Custom placement without a slot is an error."""
		with self.assertRaises(ScenarioError):
			place_quantum(build_grid(), Placement.CUSTOM)

	def test_load_requires_quantum_slot(self):
		"""Loading before placing the quantum channel is an error."""
		with self.assertRaises(ScenarioError):
			load_uniform(build_grid(), 1e-3)

	def test_total_power_low(self):
		"""87 channels at -4.5 dBm/ch total about 14.9 dBm."""
		plan = loaded(power_dbm=-4.5)
		self.assertEqual(len(plan.classical), 87)
		self.assertAlmostEqual(watt_to_dbm(total_power(plan)), 14.9, delta=0.05)

	def test_total_power_high(self):
		"""87 channels at 0.5 dBm/ch total about 19.9 dBm."""
		plan = loaded(power_dbm=0.5)
		self.assertAlmostEqual(watt_to_dbm(total_power(plan)), 19.9, delta=0.05)

	def test_fully_guarded_grid(self):
		"""An 87-slot guardband around the center leaves nothing to load."""
		plan = loaded(Placement.BAND_CENTER, n_gb=87, power_dbm=0.5)
		self.assertEqual(plan.classical, ())
		self.assertEqual(total_power(plan), 0.0)

	def test_quantum_slot_never_loaded(self):
		"""Placing the quantum channel on a loaded slot clears it."""
		plan = load_uniform(place_quantum(build_grid(), Placement.BAND_EDGE), 1e-3)
		moved = place_quantum(plan, Placement.CUSTOM, 10)
		self.assertNotIn(10, [ch.slot for ch in moved.classical])

	def test_plan_invariants_enforced(self):
		"""A classical channel on the quantum slot is rejected."""
		with self.assertRaises(ValueError):
			ChannelPlan(quantum_slot=5, classical=(ClassicalChannel(slot=5, power=1e-3),))
		with self.assertRaises(ValueError):
			ClassicalChannel(slot=3, power=0.0)
		with self.assertRaises(ValueError):
			ClassicalChannel(slot=3, power=1e-3, kurtosis=-2.5)


class TestGuardband(unittest.TestCase):
	"""Test guardband application and capacity accounting."""

	def test_edge_guardband_unilateral(self):
		"""Band-edge guardband of 3 clears slots 85-87."""
		plan = loaded(Placement.BAND_EDGE, n_gb=3)
		self.assertEqual(guardband_slots(plan), (85, 86, 87))
		slots = {ch.slot for ch in plan.classical}
		self.assertFalse(slots & {85, 86, 87, 88})
		self.assertEqual(len(slots), 84)

	def test_center_guardband_symmetric(self):
		"""Band-center guardband of 3 clears 41-43 and 45-47."""
		plan = loaded(Placement.BAND_CENTER, n_gb=3)
		self.assertEqual(guardband_slots(plan), (41, 42, 43, 45, 46, 47))

	def test_guardband_after_loading(self):
		"""Applying a guardband to a loaded plan removes those channels."""
		plan = loaded(Placement.BAND_CENTER)
		guarded = apply_guardband(plan, 3)
		removed = {ch.slot for ch in plan.classical} - {ch.slot for ch in guarded.classical}
		self.assertEqual(removed, {41, 42, 43, 45, 46, 47})

	def test_zero_guardband_identity(self):
		"""n_gb = 0 leaves the plan unchanged."""
		plan = loaded()
		self.assertEqual(apply_guardband(plan, 0), plan)

	def test_idempotent(self):
		"""Applying the same guardband twice equals applying it once."""
		once = apply_guardband(loaded(Placement.BAND_CENTER), 4)
		self.assertEqual(apply_guardband(once, 4), once)

	def test_oversized_guardband_clipped(self):
		"""A guardband larger than the grid is clipped, not an error."""
		plan = apply_guardband(loaded(Placement.BAND_EDGE), 500)
		self.assertEqual(plan.classical, ())
		self.assertAlmostEqual(capacity_loss(plan), 100.0 * 87 / 88)

	def test_capacity_loss_reference_values(self):
		"""Edge n_gb=3 loses 3.409%, center loses 6.818%."""
		self.assertAlmostEqual(capacity_loss(loaded(Placement.BAND_EDGE, 3)), 3.409, places=3)
		self.assertAlmostEqual(capacity_loss(loaded(Placement.BAND_CENTER, 3)), 6.818, places=3)
		self.assertEqual(capacity_loss(loaded(Placement.BAND_EDGE, 0)), 0.0)

	def test_edge_loss_is_half_center_loss(self):
		"""Without clipping the edge loss is exactly half the center loss."""
		for n in range(0, 11):
			edge = capacity_loss(loaded(Placement.BAND_EDGE, n))
			center = capacity_loss(loaded(Placement.BAND_CENTER, n))
			self.assertAlmostEqual(edge, center / 2.0, places=12)

	def test_total_power_non_increasing(self):
		"""Total classical power never grows with the guardband."""
		powers = [total_power(loaded(Placement.BAND_CENTER, n)) for n in range(0, 12)]
		self.assertTrue(all(b <= a for a, b in zip(powers, powers[1:])))

	def test_negative_guardband_rejected(self):
		"""Negative guardband sizes are errors."""
		with self.assertRaises(ScenarioError):
			apply_guardband(loaded(), -1)


class TestKurtosis(unittest.TestCase):
	"""Test the modulation-format kurtosis lookup."""

	def test_known_formats(self):
		"""Gaussian is 0 and QPSK is -1."""
		self.assertEqual(kurtosis_for_format("gaussian"), 0.0)
		self.assertEqual(kurtosis_for_format("QPSK"), -1.0)
		self.assertAlmostEqual(kurtosis_for_format("16-QAM"), -0.68)

	def test_unknown_format(self):
		"""Unknown labels raise ScenarioError."""
		with self.assertRaises(ScenarioError):
			kurtosis_for_format("ook")


if __name__ == '__main__':
	unittest.main()
