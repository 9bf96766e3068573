"""
Unit tests for the planner module.

The calibrated scenario is shared by the tests that check the headline
coexistence results (guardband gain, high-power collapse, reach pattern).
"""

import unittest
import sys
import os
import math

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from app.errors import CalibrationError, ScenarioError
from app.interference import FiberParams, MechanismToggles
from app.planner import (
	DEFAULT_CALIBRATION_WINDOW,
	LinkScenario,
	SweepResult,
	SweepSpec,
	calibrate_raman,
	evaluate,
	find_transition_power,
	interference_free_skr,
	reach,
	recommend_guardband,
	sweep_distance,
	sweep_guardband,
	sweep_spectral,
	sweep_tradeoff
)
from app.scenario import Placement, PropagationDirection

FWM_ONLY = MechanismToggles(fwm=True, sprs=False)
SPRS_ONLY = MechanismToggles(fwm=False, sprs=True)


class TestLinkScenario(unittest.TestCase):
	"""Test the scenario aggregate."""

	def test_defaults(self):
		"""Default scenario is band edge, 10 km, -4.5 dBm/ch, no guardband."""
		base = LinkScenario()
		self.assertEqual(base.slot, 88)
		self.assertAlmostEqual(base.distance_km, 10.0)
		plan = base.build_plan()
		self.assertEqual(len(plan.classical), 87)

	def test_with_overrides(self):
		"""with_ routes distance and Raman scale into the fiber."""
		changed = LinkScenario().with_(distance_km=25.0, raman_scale=0.5, n_gb=3)
		self.assertAlmostEqual(changed.fiber.length, 25e3)
		self.assertEqual(changed.fiber.raman.scale, 0.5)
		self.assertEqual(changed.n_gb, 3)

	def test_invalid_override(self):
		"""Bad overrides raise ScenarioError."""
		with self.assertRaises(ScenarioError):
			LinkScenario().with_(n_gb=-1)
		with self.assertRaises(ScenarioError):
			LinkScenario().with_(placement=Placement.CUSTOM)

	def test_hash_stable(self):
		"""Equal scenarios hash equally; any change alters the hash."""
		self.assertEqual(LinkScenario().scenario_hash(), LinkScenario().scenario_hash())
		self.assertNotEqual(LinkScenario().scenario_hash(), LinkScenario(power_dbm=-1.5).scenario_hash())

	def test_quantum_frequency_follows_slot(self):
		"""The transceiver frequency is taken from the quantum slot."""
		base = LinkScenario(placement=Placement.BAND_CENTER)
		plan = base.build_plan()
		self.assertAlmostEqual(base.qkd_for_plan(plan).f_q, base.band_start + 43 * base.spacing)

	def test_sweep_spec_validation(self):
		"""Empty ranges and inverted power bounds are rejected."""
		with self.assertRaises(ValueError):
			SweepSpec(powers_dbm=())
		with self.assertRaises(ValueError):
			SweepSpec(p_min_dbm=5.0, p_max_dbm=0.0)
		with self.assertRaises(ValueError):
			SweepSpec(step_km=0.0)


class TestEvaluate(unittest.TestCase):
	"""Test single-point evaluation and series ordering."""

	def test_no_interference_equals_ceiling(self):
		"""With both mechanisms off the key rate is the interference-free value."""
		base = LinkScenario(toggles=MechanismToggles(fwm=False, sprs=False))
		row = evaluate(base)
		self.assertEqual(row.xi, 0.0)
		self.assertEqual(row.skr_bps, interference_free_skr(base))

	def test_row_fields(self):
		"""A row carries the breakdown and the capacity loss."""
		row = evaluate(LinkScenario(n_gb=3))
		self.assertAlmostEqual(row.p_int, row.p_fwm_degenerate + row.p_fwm_nondegenerate + row.p_sprs)
		self.assertAlmostEqual(row.capacity_loss, 300.0 / 88.0)
		self.assertGreater(row.skr_bps, 0.0)

	def test_unsorted_rows_rejected(self):
		"""SweepResult rows must be ordered by the independent variable."""
		row = evaluate(LinkScenario())
		rows = (row.model_copy(update={"x": 2.0}), row.model_copy(update={"x": 1.0}))
		with self.assertRaises(ValueError):
			SweepResult(kind="guardband", label="x", x_name="QSpace", rows=rows)

	def test_parallel_matches_serial(self):
		"""Thread-pool evaluation returns the same rows in the same order."""
		serial = sweep_guardband(LinkScenario(), [-1.5], gb_max=5, workers=1)[0]
		parallel = sweep_guardband(LinkScenario(), [-1.5], gb_max=5, workers=4)[0]
		self.assertEqual(serial.rows, parallel.rows)

	def test_repeatable(self):
		"""The same sweep twice gives identical rows."""
		first = sweep_spectral(LinkScenario(), toggles=FWM_ONLY)
		second = sweep_spectral(LinkScenario(), toggles=FWM_ONLY)
		self.assertEqual(first.rows, second.rows)
		self.assertEqual(first.metadata, second.metadata)


class TestSpectral(unittest.TestCase):
	"""Test the placement scan across the grid."""

	def test_fwm_center_below_edge(self):
		"""FWM-only SKR at slot 44 is 5-25% below slot 88 at -4.5 dBm/ch, 10 km."""
		result = sweep_spectral(LinkScenario(), power_dbm=-4.5, distance_km=10.0, toggles=FWM_ONLY)
		skr = result.skr()
		self.assertEqual(len(skr), 88)
		drop = 1.0 - skr[43] / skr[87]
		self.assertGreaterEqual(drop, 0.05)
		self.assertLessEqual(drop, 0.25)

	def test_sprs_broadband(self):
		"""SpRS-only SKR spread across the band stays near 10%, lowest at the low-frequency edge."""
		skr = sweep_spectral(LinkScenario(), toggles=SPRS_ONLY).skr()
		self.assertLess((skr.max() - skr.min()) / skr.max(), 0.11)
		self.assertEqual(int(np.argmin(skr)), 0)
		self.assertEqual(int(np.argmax(skr)), 87)

	def test_zero_power_flat(self):
		"""Without classical light the series is flat at the ceiling."""
		base = LinkScenario(power_dbm=-math.inf)
		skr = sweep_spectral(base).skr()
		np.testing.assert_array_equal(skr, np.full(88, interference_free_skr(base)))


@pytest.mark.slow
class TestGuardbandAndTradeoff(unittest.TestCase):
	"""Test guardband and tradeoff sweeps on the calibrated scenario."""

	@classmethod
	def setUpClass(cls):
		cls.base = calibrate_raman(LinkScenario()).scenario

	def test_headline_gain(self):
		"""At -1.5 dBm/ch a 3-slot guardband raises SKR by 70-150%."""
		series = sweep_guardband(self.base, [-1.5], distance_km=10.0)[0]
		skr = series.skr()
		gain = skr[3] / skr[0] - 1.0
		self.assertGreaterEqual(gain, 0.70)
		self.assertLessEqual(gain, 1.50)

	def test_non_decreasing_in_guardband(self):
		"""Co-propagating SKR never falls as the guardband widens."""
		for series in sweep_guardband(self.base, [-4.5, -1.5, 0.5]):
			skr = series.skr()
			self.assertTrue(np.all(np.diff(skr) >= 0.0), series.label)

	def test_high_power_collapse(self):
		"""At 0.5 dBm/ch no key without guardband, 19-76 Mbit/s with 3 slots."""
		skr = sweep_guardband(self.base, [0.5])[0].skr()
		self.assertEqual(skr[0], 0.0)
		self.assertGreaterEqual(skr[3], 19e6)
		self.assertLessEqual(skr[3], 76e6)

	def test_low_power_modest_variation(self):
		"""At -4.5 dBm/ch a 10-slot guardband adds 5-30% SKR (SpRS relief), far less than at -1.5 dBm/ch."""
		low = sweep_guardband(self.base, [-4.5])[0].skr()
		mid = sweep_guardband(self.base, [-1.5])[0].skr()
		variation = low.max() / low.min() - 1.0
		self.assertGreater(variation, 0.05)
		self.assertLess(variation, 0.30)
		self.assertLess(low.max() / low.min(), mid.max() / mid.min())

	def test_tradeoff_capacity(self):
		"""Edge vs center capacity loss at 3 slots is 3.4% vs 6.8%; 0% at 0 slots."""
		results = sweep_tradeoff(self.base, power_dbm=-1.5, directions=[PropagationDirection.CO])
		by_label = {r.label: r for r in results}
		edge = by_label["edge_co"].rows
		center = by_label["center_co"].rows
		self.assertAlmostEqual(edge[3].capacity_loss, 3.409, places=3)
		self.assertAlmostEqual(center[3].capacity_loss, 6.818, places=3)
		self.assertEqual(edge[0].capacity_loss, 0.0)
		self.assertEqual(center[0].capacity_loss, 0.0)

	def test_counter_propagation_small_gain(self):
		"""Counter-propagating SKR gains little from a guardband (no FWM)."""
		results = sweep_tradeoff(
			self.base, power_dbm=-1.5, placements=[Placement.BAND_EDGE],
			directions=[PropagationDirection.COUNTER]
		)
		skr = results[0].skr()
		gain = skr[3] / skr[0] - 1.0
		self.assertGreaterEqual(gain, 0.0)
		self.assertLess(gain, 0.1)
		self.assertEqual(results[0].rows[0].p_fwm_degenerate, 0.0)


@pytest.mark.slow
class TestReach(unittest.TestCase):
	"""Test the distance-reach search."""

	@classmethod
	def setUpClass(cls):
		cls.base = calibrate_raman(LinkScenario()).scenario

	def test_guardband_extends_reach(self):
		"""At 0.5 dBm/ch the 3-slot guardband at least doubles reach."""
		without = reach(self.base, power_dbm=0.5, n_gb=0, direction=PropagationDirection.CO)
		with_gb = reach(self.base, power_dbm=0.5, n_gb=3, direction=PropagationDirection.CO)
		self.assertLess(without, with_gb)
		self.assertLessEqual(without / with_gb, 0.5)

	def test_reach_falls_with_power(self):
		"""Reach does not grow with launch power at a fixed guardband."""
		low = reach(self.base, power_dbm=-4.5, n_gb=0)
		high = reach(self.base, power_dbm=0.5, n_gb=0)
		self.assertGreaterEqual(low, high)

	def test_reach_is_key_boundary(self):
		"""Key is positive just inside the reach and gone just beyond it."""
		distance = reach(self.base, power_dbm=0.5, n_gb=3)
		self.assertGreater(distance, 0.0)
		self.assertLess(distance, 30.0)
		self.assertGreater(evaluate(self.base.with_(power_dbm=0.5, n_gb=3, distance_km=distance - 0.05)).skr_bps, 0.0)
		self.assertEqual(evaluate(self.base.with_(power_dbm=0.5, n_gb=3, distance_km=distance + 0.05)).skr_bps, 0.0)

	def test_low_power_reach_beyond_default_grid(self):
		"""At -4.5 dBm/ch without guardband the key outlives the 30 km grid but not 80 km."""
		capped = reach(self.base, power_dbm=-4.5, n_gb=0, direction=PropagationDirection.CO)
		self.assertEqual(capped, 30.0)
		distance = reach(
			self.base, power_dbm=-4.5, n_gb=0, direction=PropagationDirection.CO, max_km=80.0, step_km=1.0
		)
		self.assertGreater(distance, 28.0)
		self.assertLess(distance, 80.0)
		self.assertEqual(evaluate(self.base.with_(power_dbm=-4.5, n_gb=0, distance_km=distance + 0.05)).skr_bps, 0.0)

	def test_unreachable_floor(self):
		"""A floor above the ceiling gives zero reach."""
		self.assertEqual(reach(self.base, skr_floor=1e12), 0.0)

	def test_distance_profile(self):
		"""The SKR-vs-z profile starts at the ceiling and has one series per direction."""
		results = sweep_distance(self.base, power_dbm=-4.5, n_gb=0, max_km=5.0, step_km=0.5)
		self.assertEqual([r.skr_column for r in results], ["SKR-Fw", "SKR-Bw"])
		self.assertEqual(len(results[0].rows), 11)
		self.assertEqual(results[0].rows[0].xi, 0.0)
		skr = results[0].skr()
		self.assertEqual(skr[0], interference_free_skr(self.base.with_(distance_km=0.0)))
		self.assertLess(skr[-1], skr[0])


@pytest.mark.slow
class TestTransition(unittest.TestCase):
	"""Test the FWM/SpRS regime transition."""

	@classmethod
	def setUpClass(cls):
		cls.base = calibrate_raman(LinkScenario()).scenario

	def test_metro_range(self):
		"""At 10 km, band edge, the crossing lies between -5 and 0 dBm/ch."""
		result = find_transition_power(self.base, distance_km=10.0, n_gb=0)
		self.assertTrue(result.in_range)
		self.assertGreaterEqual(result.power_dbm, -5.0)
		self.assertLessEqual(result.power_dbm, 0.0)
		self.assertAlmostEqual(result.p_fwm_w / result.p_sprs_w, 1.0, delta=0.01)

	def test_linear_fiber_has_no_crossing(self):
		"""Without nonlinearity FWM never catches up."""
		fiber = FiberParams.from_engineering(gamma_w_km=0.0)
		result = find_transition_power(self.base.with_(fiber=fiber))
		self.assertFalse(result.in_range)
		self.assertIsNone(result.power_dbm)

	def test_moves_with_distance(self):
		"""Phase-mismatched FWM saturates while SpRS grows with L, so the crossing rises with distance."""
		near = find_transition_power(self.base, distance_km=5.0).power_dbm
		far = find_transition_power(self.base, distance_km=25.0).power_dbm
		self.assertGreater(far, near)


@pytest.mark.slow
class TestCalibration(unittest.TestCase):
	"""Test the Raman scale calibration."""

	def test_lands_in_window(self):
		"""The anchor SKR after calibration lies in the default window."""
		result = calibrate_raman(LinkScenario())
		low, high = DEFAULT_CALIBRATION_WINDOW
		self.assertGreaterEqual(result.skr_bps, low)
		self.assertLessEqual(result.skr_bps, high)
		self.assertEqual(result.scenario.fiber.raman.scale, result.scale)
		self.assertEqual(result.scenario.metadata["raman_scale"], result.scale)
		self.assertGreater(result.scale, 0.5)
		self.assertLess(result.scale, 2.0)

	def test_scale_zero_is_fwm_only(self):
		"""Scale 0 removes SpRS, leaving the FWM-only key rate."""
		base = LinkScenario()
		zero = evaluate(base.with_(raman_scale=0.0))
		fwm_only = evaluate(base.with_(toggles=FWM_ONLY))
		self.assertEqual(zero.skr_bps, fwm_only.skr_bps)

	def test_skr_decreasing_in_scale(self):
		"""More Raman noise means less key."""
		base = LinkScenario()
		rates = [evaluate(base.with_(raman_scale=s)).skr_bps for s in np.linspace(0.0, 3.0, 13)]
		self.assertTrue(all(b < a for a, b in zip(rates, rates[1:])))

	def test_unattainable_window(self):
		"""A window above the interference-free rate reports the achievable bracket."""
		with self.assertRaises(CalibrationError) as ctx:
			calibrate_raman(LinkScenario(), (195e6, 205e6))
		self.assertLess(ctx.exception.bracket[1], 195e6)

	def test_invalid_window(self):
		"""Inverted windows are rejected."""
		with self.assertRaises(ScenarioError):
			calibrate_raman(LinkScenario(), (2e8, 1e8))


@pytest.mark.slow
class TestRecommend(unittest.TestCase):
	"""Test the guardband recommendation."""

	@classmethod
	def setUpClass(cls):
		cls.base = calibrate_raman(LinkScenario()).scenario

	def test_intermediate_power(self):
		"""At -1.5 dBm/ch with a 5% budget the plateau is 2-3 slots (100-150 GHz)."""
		result = recommend_guardband(self.base, power_dbm=-1.5, distance_km=10.0, budget_pct=5.0)
		self.assertIn(result.n_gb, (2, 3))
		self.assertLessEqual(result.capacity_loss, 5.0)
		self.assertTrue(result.feasible)
		self.assertLess(result.skr_bps, result.best_skr_bps)

	def test_low_power_needs_no_guardband(self):
		"""At -4.5 dBm/ch the guardband curve is flat enough that none is recommended."""
		result = recommend_guardband(self.base, power_dbm=-4.5, distance_km=10.0, budget_pct=5.0)
		self.assertEqual(result.n_gb, 0)
		self.assertEqual(result.capacity_loss, 0.0)
		self.assertTrue(result.feasible)

	def test_zero_budget(self):
		"""A zero budget forces no guardband and flags the plateau as out of reach."""
		result = recommend_guardband(self.base, power_dbm=-1.5, budget_pct=0.0)
		self.assertEqual(result.n_gb, 0)
		self.assertEqual(result.capacity_loss, 0.0)
		self.assertFalse(result.feasible)

	def test_collapsed_start_skipped(self):
		"""At 0.5 dBm/ch the plateau lies past the zero-key guardbands."""
		result = recommend_guardband(self.base, power_dbm=0.5, budget_pct=100.0)
		self.assertGreater(result.n_gb, 0)
		self.assertGreater(result.skr_bps, 0.0)
		self.assertTrue(result.feasible)

	def test_negative_budget(self):
		"""Negative budgets are rejected."""
		with self.assertRaises(ScenarioError):
			recommend_guardband(self.base, budget_pct=-1.0)


if __name__ == '__main__':
	unittest.main()
