"""
Demo script for the CV-QKD coexistence planner.

Calibrates the Raman scale on the default metro link and prints the headline
numbers: guardband gain, high-power collapse, regime transition, reach and a
guardband recommendation. No files are written.

Run: python demo.py
"""

from app.errors import CoexistenceError
from app.planner import (
	LinkScenario,
	calibrate_raman,
	find_transition_power,
	reach,
	recommend_guardband,
	sweep_guardband
)
from app.scenario import PropagationDirection


def section(title):
	print("\n" + "=" * 60)
	print(title)
	print("=" * 60)


def show_guardband(base, power_dbm):
	"""Print SKR at 0 and 3 guardband slots for one launch power."""
	skr = sweep_guardband(base, [power_dbm], gb_max=3)[0].skr()
	gain = skr[3] / skr[0] - 1.0 if skr[0] > 0.0 else float("inf")
	print(f"  {power_dbm:+.1f} dBm/ch: n_gb=0 {skr[0] / 1e6:7.2f} Mbit/s, "
		f"n_gb=3 {skr[3] / 1e6:7.2f} Mbit/s, gain {gain:.0%}")


def main():
	"""Run the demo."""
	print("=" * 60)
	print("CV-QKD Coexistence Planner - Demo")
	print("=" * 60)

	try:
		section("Step 1: Calibrate Raman scale (10 km, -4.5 dBm/ch, band edge)")
		calibration = calibrate_raman(LinkScenario())
		base = calibration.scenario
		print(f"✓ Raman scale {calibration.scale:.4f} gives {calibration.skr_bps / 1e6:.2f} Mbit/s")

		section("Step 2: Guardband effect at 10 km")
		for power in (-4.5, -1.5, 0.5):
			show_guardband(base, power)

		section("Step 3: FWM/SpRS transition")
		for distance in (5.0, 10.0, 25.0):
			result = find_transition_power(base, distance_km=distance)
			if result.in_range:
				print(f"  {distance:4.1f} km: {result.power_dbm:+.2f} dBm/ch")
			else:
				print(f"  {distance:4.1f} km: no crossing in the search range")

		section("Step 4: Reach (co-propagating, positive key)")
		for power in (-4.5, 0.5):
			for n_gb in (0, 3):
				distance = reach(base, power_dbm=power, n_gb=n_gb, direction=PropagationDirection.CO)
				limit = " (key survives the whole 30 km search)" if distance >= 30.0 else ""
				print(f"  {power:+.1f} dBm/ch, n_gb={n_gb}: {distance:.2f} km{limit}")

		section("Step 5: Guardband recommendation (5% capacity budget)")
		for power in (-4.5, -1.5, 0.5):
			advice = recommend_guardband(base, power_dbm=power, budget_pct=5.0)
			flag = "✓" if advice.feasible else "✗"
			print(f"  {flag} {power:+.1f} dBm/ch: n_gb={advice.n_gb}, "
				f"loss {advice.capacity_loss:.2f}%, SKR {advice.skr_bps / 1e6:.2f} Mbit/s")
	except CoexistenceError as e:
		print(f"✗ {type(e).__name__}: {e}")
		return

	print("\n" + "=" * 60)
	print("Demo Complete!")
	print("=" * 60)
	print("\nNext steps:")
	print("1. Regenerate all figure data: python -m app.main fig1 --out results/fig1")
	print("2. Try your own link: python -m app.main guardband --config samples/configs/default.toml")
	print("3. Check logs/planner.log for detailed logging")


if __name__ == "__main__":
	main()
