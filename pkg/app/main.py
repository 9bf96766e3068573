"""
Command-line entry point for the CV-QKD coexistence planner.

Each subcommand loads a run configuration, applies command-line overrides,
evaluates the requested sweep or search and writes plot-ready CSV files plus
a manifest.json into the output directory.

Usage:
	python -m app.main guardband --config samples/configs/default.toml --power -1.5
	python -m app.main fig1 --out results/fig1
"""

import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence

from app.config import RunConfig, parse_config, parse_power
from app.errors import CoexistenceError, ConfigError
from app.interference import MechanismToggles
from app.planner import (
	LinkScenario,
	SweepResult,
	SweepKind,
	calibrate_raman,
	find_transition_power,
	reach,
	recommend_guardband,
	sweep_distance,
	sweep_guardband,
	sweep_spectral,
	sweep_tradeoff
)
from app.scenario import Placement, PropagationDirection
from app.utils.csv_utils import ensure_output_dir, write_manifest, write_series

logger = logging.getLogger(__name__)

LOG_DIR = "logs"
FIG1_GUARDBAND = 3
FIG1_TRADEOFF_POWER_DBM = -1.5
DIAGNOSTIC_COLUMNS = [
	"skr_bps",
	"xi_snu",
	"p_fwm_degenerate_w",
	"p_fwm_nondegenerate_w",
	"p_sprs_w",
	"p_int_w",
	"capacity_loss_pct",
	"direction",
]
SPECTRAL_TOGGLES = (
	MechanismToggles(fwm=True, sprs=False),
	MechanismToggles(fwm=False, sprs=True),
	MechanismToggles(fwm=True, sprs=True),
)


def configure_logging(verbose: bool = False) -> None:
	"""Log to logs/planner.log and the console."""
	os.makedirs(LOG_DIR, exist_ok=True)
	logging.basicConfig(
		level=logging.DEBUG if verbose else logging.INFO,
		format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
		handlers=[
			logging.FileHandler(os.path.join(LOG_DIR, "planner.log")),
			logging.StreamHandler()
		]
	)


def build_parser() -> argparse.ArgumentParser:
	"""Argument parser with one subparser per subcommand."""
	common = argparse.ArgumentParser(add_help=False)
	common.add_argument("--config", help="TOML or JSON run configuration")
	common.add_argument("--power", help="Per-channel launch power, e.g. -1.5 or '-1.5 dBm'")
	common.add_argument("--distance", type=float, help="Fiber length in km")
	common.add_argument("--gb", type=int, help="Guardband size in slots per side")
	common.add_argument("--direction", choices=[d.value for d in PropagationDirection])
	common.add_argument("--toggles", help="Mechanisms to evaluate: fwm,sprs | fwm | sprs | none")
	common.add_argument("--placement", choices=[p.value for p in Placement])
	common.add_argument("--slot", type=int, help="Quantum slot for custom placement")
	common.add_argument("--budget", type=float, default=5.0, help="Capacity-loss budget in percent (recommend)")
	common.add_argument("--window", type=float, nargs=2, metavar=("LOW_MBPS", "HIGH_MBPS"),
		help="Calibration SKR window in Mbit/s")
	common.add_argument("--calibrate", action="store_true", help="Calibrate the Raman scale before running")
	common.add_argument("--out", help="Output directory")
	common.add_argument("--workers", type=int, help="Threads for sweep evaluation")
	common.add_argument("--seedless", action="store_true",
		help="Accepted for compatibility; every run is deterministic")
	common.add_argument("--verbose", action="store_true", help="Debug logging")

	parser = argparse.ArgumentParser(
		prog="coexistence-planner",
		description="CV-QKD / DWDM coexistence simulator and guardband planner"
	)
	subparsers = parser.add_subparsers(dest="command", required=True)
	for name, help_text in [
		("spectral", "SKR with the quantum channel on every slot"),
		("guardband", "SKR against guardband size per power"),
		("tradeoff", "SKR and capacity loss per placement and direction"),
		("reach", "Maximum distance with positive key"),
		("profile", "SKR against distance"),
		("transition", "Power where FWM overtakes SpRS"),
		("calibrate", "Fit the Raman scale to an SKR window"),
		("recommend", "Guardband where SKR plateaus, within a capacity budget"),
		("sweep", "Run the sweep named by sweep.kind in the config"),
		("fig1", "All four figure panels with calibration"),
	]:
		subparsers.add_parser(name, parents=[common], help=help_text)
	return parser


def apply_overrides(base: LinkScenario, args: argparse.Namespace) -> LinkScenario:
	"""Apply command-line flags on top of the configured scenario."""
	changes = {}
	if args.power is not None:
		try:
			changes["power_dbm"] = parse_power(args.power)
		except ValueError as e:
			raise ConfigError(str(e), path="--power") from e
	if args.distance is not None:
		changes["distance_km"] = args.distance
	if args.gb is not None:
		changes["n_gb"] = args.gb
	if args.direction is not None:
		changes["direction"] = PropagationDirection(args.direction)
	if args.toggles is not None:
		changes["toggles"] = MechanismToggles.parse(args.toggles)
	if args.placement is not None:
		changes["placement"] = Placement(args.placement)
	if args.slot is not None:
		changes["quantum_slot"] = args.slot
		changes.setdefault("placement", Placement.CUSTOM)
	return base.with_(**changes) if changes else base


def _file_label(label: str) -> str:
	return label.replace("+", "_").replace(".", "p")


def series_rows(result: SweepResult, extra_capacity: bool = False) -> List[list]:
	"""CSV rows: independent variable, plot SKR column(s), then diagnostics."""
	integral = result.x_name in ("Channel", "QSpace")
	rows = []
	for row in result.rows:
		values = [int(row.x) if integral else row.x, row.skr_per_symbol]
		if extra_capacity:
			values.append(row.capacity_loss)
		values += [
			row.skr_bps,
			row.xi,
			row.p_fwm_degenerate,
			row.p_fwm_nondegenerate,
			row.p_sprs,
			row.p_int,
			row.capacity_loss,
			row.direction.value,
		]
		rows.append(values)
	return rows


def write_result(result: SweepResult, out_dir: str, prefix: str, precision: int) -> str:
	"""Write one SweepResult as <prefix>_<label>.csv."""
	capacity = result.kind == "tradeoff"
	columns = [result.x_name, result.skr_column] + (["CapacityLoss"] if capacity else []) + DIAGNOSTIC_COLUMNS
	path = os.path.join(out_dir, f"{prefix}_{_file_label(result.label)}.csv")
	return write_series(path, columns, series_rows(result, capacity), precision)


class Runner:
	"""Executes subcommands for one configuration and output directory."""

	def __init__(self, config: RunConfig, base: LinkScenario, args: argparse.Namespace):
		self.config = config
		self.base = base
		self.args = args
		self.spec = config.sweep.to_spec()
		self.workers = args.workers or self.spec.workers
		self.precision = config.output.precision
		self.out_dir = ensure_output_dir(args.out or config.output.directory)
		self.files: List[str] = []

	def _write(self, results: Sequence[SweepResult], prefix: str) -> None:
		for result in results:
			self.files.append(write_result(result, self.out_dir, prefix, self.precision))

	def _table(self, name: str, columns: List[str], rows: List[list]) -> None:
		path = os.path.join(self.out_dir, f"{name}.csv")
		self.files.append(write_series(path, columns, rows, self.precision))

	def _window(self):
		if self.args.window:
			return self.args.window[0] * 1e6, self.args.window[1] * 1e6
		return self.config.sweep.calibration_window_bps

	def _powers(self) -> List[float]:
		if self.args.power is not None:
			return [self.base.power_dbm]
		return list(self.spec.powers_dbm)

	def _extreme_powers(self) -> List[float]:
		if self.args.power is not None:
			return [self.base.power_dbm]
		return sorted({min(self.spec.powers_dbm), max(self.spec.powers_dbm)})

	def _guardbands(self) -> List[int]:
		return [self.base.n_gb] if self.args.gb is not None else [0, FIG1_GUARDBAND]

	def _directions(self) -> List[PropagationDirection]:
		if self.args.direction is not None:
			return [self.base.direction]
		return list(self.spec.directions)

	def spectral(self, prefix: str = "spectral") -> None:
		toggles = [MechanismToggles.parse(self.args.toggles)] if self.args.toggles else SPECTRAL_TOGGLES
		self._write([sweep_spectral(self.base, toggles=t, workers=self.workers) for t in toggles], prefix)

	def guardband(self, prefix: str = "guardband") -> None:
		results = sweep_guardband(self.base, self._powers(), gb_max=self.spec.gb_max, workers=self.workers)
		self._write(results, prefix)

	def tradeoff(self, prefix: str = "tradeoff", power_dbm: Optional[float] = None) -> None:
		placements = [self.base.placement] if self.args.placement else list(self.spec.placements)
		results = sweep_tradeoff(
			self.base,
			power_dbm=power_dbm,
			placements=placements,
			directions=self._directions(),
			gb_max=self.spec.gb_max,
			workers=self.workers
		)
		self._write(results, prefix)

	def profile(self, prefix: str = "profile") -> None:
		for power in self._extreme_powers():
			for n_gb in self._guardbands():
				results = sweep_distance(
					self.base,
					power_dbm=power,
					n_gb=n_gb,
					directions=self._directions(),
					max_km=self.spec.max_km,
					step_km=self.spec.step_km,
					workers=self.workers
				)
				self._write(results, prefix)

	def reach(self, name: str = "reach") -> None:
		rows = []
		for power in self._extreme_powers():
			for n_gb in self._guardbands():
				for direction in self._directions():
					distance = reach(
						self.base,
						power_dbm=power,
						n_gb=n_gb,
						direction=direction,
						skr_floor=self.spec.skr_floor,
						max_km=self.spec.max_km,
						step_km=self.spec.step_km
					)
					# capped: key survives the whole search grid, so reach_km is a lower bound
					capped = distance >= self.spec.max_km
					rows.append([power, n_gb, direction.value, distance, capped, self.spec.skr_floor])
		self._table(name, ["power_dbm", "n_gb", "direction", "reach_km", "capped", "skr_floor_bps"], rows)

	def transition(self, name: str = "transition") -> None:
		result = find_transition_power(
			self.base, p_min_dbm=self.spec.p_min_dbm, p_max_dbm=self.spec.p_max_dbm
		)
		power = result.power_dbm if result.in_range else float("nan")
		self._table(
			name,
			["distance_km", "n_gb", "transition_dbm", "in_range", "p_fwm_w", "p_sprs_w"],
			[[result.distance_km, result.n_gb, power, result.in_range, result.p_fwm_w, result.p_sprs_w]]
		)

	def calibrate(self, name: str = "calibration") -> None:
		result = calibrate_raman(self.base, self._window())
		self.base = result.scenario
		self._table(
			name,
			["window_low_bps", "window_high_bps", "raman_scale", "skr_bps"],
			[[result.window[0], result.window[1], result.scale, result.skr_bps]]
		)

	def recommend(self, name: str = "recommend") -> None:
		result = recommend_guardband(
			self.base, budget_pct=self.args.budget, gb_max=self.spec.gb_max, workers=self.workers
		)
		self._table(
			name,
			["power_dbm", "distance_km", "budget_pct", "n_gb", "capacity_loss_pct", "skr_bps", "best_skr_bps", "feasible"],
			[[
				self.base.power_dbm, self.base.distance_km, result.budget_pct, result.n_gb,
				result.capacity_loss, result.skr_bps, result.best_skr_bps, result.feasible
			]]
		)

	def sweep(self) -> None:
		"""Dispatch on the configured sweep kind."""
		kinds: Dict[SweepKind, Callable[[], None]] = {
			SweepKind.SPECTRAL: self.spectral,
			SweepKind.GUARDBAND: self.guardband,
			SweepKind.TRADEOFF: self.tradeoff,
			SweepKind.REACH: self.reach,
			SweepKind.PROFILE: self.profile,
			SweepKind.TRANSITION: self.transition,
		}
		logger.info(f"Configured sweep kind: {self.spec.kind.value}")
		kinds[self.spec.kind]()

	def fig1(self) -> None:
		"""Calibrate, then regenerate panels (a) to (d)."""
		self.calibrate("fig1_calibration")
		self.spectral("fig1a_spectral")
		self.guardband("fig1b_guardband")
		self.tradeoff("fig1c_tradeoff", power_dbm=FIG1_TRADEOFF_POWER_DBM)
		self.profile("fig1d_profile")
		self.reach("fig1d_reach")

	def manifest(self, command: str) -> str:
		payload = {
			"command": command,
			"config": self.config.echo(),
			"overrides": {
				key: value for key, value in sorted(vars(self.args).items())
				if key not in ("command", "config", "out", "verbose", "seedless", "workers") and value not in (None, False)
			},
			"scenario_hash": self.base.scenario_hash(),
			"raman_scale": self.base.fiber.raman.scale,
			"files": sorted(os.path.basename(path) for path in self.files),
		}
		return write_manifest(os.path.join(self.out_dir, "manifest.json"), payload)


def run(argv: Optional[Sequence[str]] = None) -> int:
	"""
	Parse arguments, run the subcommand and return the process exit code.

	Exit codes: 0 success, 2 configuration, 3 model, 4 output, 1 unexpected.
	"""
	args = build_parser().parse_args(argv)
	configure_logging(args.verbose)
	logger.info(f"Starting '{args.command}'")
	try:
		config = parse_config(args.config)
		base = apply_overrides(config.to_scenario(), args)
		runner = Runner(config, base, args)
		if args.calibrate and args.command not in ("calibrate", "fig1"):
			runner.calibrate()
		handlers: Dict[str, Callable[[], None]] = {
			"spectral": runner.spectral,
			"guardband": runner.guardband,
			"tradeoff": runner.tradeoff,
			"reach": runner.reach,
			"profile": runner.profile,
			"transition": runner.transition,
			"calibrate": runner.calibrate,
			"recommend": runner.recommend,
			"sweep": runner.sweep,
			"fig1": runner.fig1,
		}
		handlers[args.command]()
		runner.manifest(args.command)
	except CoexistenceError as e:
		logger.error(f"{type(e).__name__}: {e}")
		return e.exit_code
	except Exception as e:
		logger.error(f"Unexpected error in '{args.command}': {e}", exc_info=True)
		return 1
	logger.info(f"Finished '{args.command}': {len(runner.files)} file(s) in {runner.out_dir}")
	return 0


def main() -> None:
	sys.exit(run())


if __name__ == "__main__":
	main()
