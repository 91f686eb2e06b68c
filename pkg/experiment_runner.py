import logging
from pathlib import Path
from typing import Any, Callable, Dict, List

from models.config import Command, RunConfig
from models.errors import AcceptanceError, ConfigError, GflameError
from models.flow import CellRegion, CellularFlow, RegionKind
from models.game import GameParams
from models.hbar_estimate import Method, Resolution
from models.run_outcome import RunOutcome
from models.state import CorrectorState
from services import appendix_geometry, homogenize, levelset_pde, tables, trajectory
from services.audit import AuditLog
from services.config import ConfigManager, config_items, parse_config
from services.flowfield import stream
from services.ntfy import NtfyNotifier
from services.snapshot import write_snapshot, write_value_snapshot
from services.strategies import (
    Descent,
    Exit,
    Fixed,
    FollowFlow,
    MaxSign,
    MinSign,
    OpposeAxis,
    StrategyI,
    StrategyII,
    WorstCaseEnum,
    cell_distance,
    cell_transition_strategy,
)
from services.summary import SummaryWriter

logger = logging.getLogger(__name__)

HORIZONTAL_NEIGHBOUR = {1: 2, 2: 1, 3: 4, 4: 3}
VERTICAL_NEIGHBOUR = {1: 3, 3: 1, 2: 4, 4: 2}


class ExperimentRunner:
    """Runs one experiment file end to end: compute, write artifacts, record the run."""

    def __init__(self, config_path: str = "config.yaml"):
        """Load solver defaults and set up the run records.

        Args:
            config_path: Location of config.yaml.
        """
        self.config = ConfigManager(config_path).config

        # Set up the audit trail and human-readable summary
        self.audit = AuditLog(self.config.audit.log_path)
        self.summary = SummaryWriter(self.config.audit.summary_path)

        # Set up push notifications (no-op unless enabled and configured)
        self.ntfy = NtfyNotifier(self.config.ntfy)

    def load_run(self, run_path: str) -> RunConfig:
        """Read and validate a key=value run file.

        Raises:
            ConfigError: If the file cannot be read or does not validate.
        """
        try:
            text = Path(run_path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as error:
            raise ConfigError(f"cannot read {run_path}: {error}") from error
        return parse_config(text, self.config.numerics)

    def execute(self, run: RunConfig) -> RunOutcome:
        """Run the experiment named by run.command.

        Artifacts are written before any acceptance check, so a rejected run
        still leaves its tables behind for inspection.

        Returns:
            RunOutcome: The artifacts written and the results behind them.

        Raises:
            AcceptanceError: If an acceptance check rejects the results.
            GflameError: Numerical, admissibility or configuration failures, unchanged.
        """
        handlers: Dict[Command, Callable[[RunConfig, RunOutcome], None]] = {
            Command.EVOLVE: self._evolve,
            Command.HBAR: self._hbar,
            Command.GAME: self._game,
            Command.TRAJECTORY: self._trajectory,
            Command.SWEEP: self._sweep,
            Command.APPENDIX_CHECK: self._appendix_check,
        }
        outcome = RunOutcome(command=run.command)
        logger.info(f"Running {run.command.value} with A={run.A:g}, d={run.d:g}, p=({run.p1:g}, {run.p2:g})")

        try:
            handlers[run.command](run, outcome)
        except AcceptanceError:
            self._record(outcome, "rejected")
            self.ntfy.notify(outcome, failed=True)
            raise
        except GflameError as error:
            self.audit.record_run(run.command.value, "error", outcome.outputs, {"error": str(error)})
            raise

        self._record(outcome, "ok")
        self.ntfy.notify(outcome)
        return outcome

    def _record(self, outcome: RunOutcome, status: str) -> None:
        command = outcome.command.value
        for estimate in outcome.estimates:
            self.audit.record_estimate(estimate, command)
        for report in outcome.reaches:
            self.audit.record_reach(report, command)
        if outcome.containment is not None:
            self.audit.record_containment(outcome.containment, command)
        self.audit.record_run(command, status, outcome.outputs, outcome.notes)
        self.summary.write(outcome)

    def _output_path(self, run: RunConfig) -> str:
        return run.output or str(Path(self.config.output_dir) / f"{run.command.value}.csv")

    def _provenance(self, run: RunConfig, **extra: Any) -> Dict[str, Any]:
        provenance: Dict[str, Any] = {key: text for key, text in config_items(run) if key not in ("output", "snapshot")}
        provenance.update(extra)
        return provenance

    @staticmethod
    def _resolution(run: RunConfig) -> Resolution:
        return Resolution(
            grid=run.grid,
            T=run.T,
            burn_in=run.burn_in,
            checkpoint_every=run.checkpoint_every,
            eps_factor=run.eps_factor,
            lambdas=run.lambdas,
            tol=run.tol,
            max_iterations=run.max_iterations,
            tau=run.tau,
            game_T=run.game_T,
            game_burn_in=run.game_burn_in,
            game_grid=run.game_grid,
            n_angles=run.n_angles,
            n_radii=run.n_radii,
        )

    def _evolve(self, run: RunConfig, outcome: RunOutcome) -> None:
        state = CorrectorState.flat(run.grid, run.p, run.d, CellularFlow(run.A))
        final, checkpoints = levelset_pde.evolve(
            state, run.T, run.checkpoint_every, eps=run.eps_factor * state.w.h, progress=True
        )
        path = tables.write_table(self._output_path(run), tables.checkpoint_frame(checkpoints), self._provenance(run))
        outcome.outputs.append(str(path))
        if run.snapshot:
            outcome.outputs.append(str(write_snapshot(run.snapshot, final.w)))
        outcome.notes["t_final"] = final.t
        outcome.notes["osc_final"] = checkpoints[-1].osc

    def _hbar(self, run: RunConfig, outcome: RunOutcome) -> None:
        estimates = homogenize.sweep(
            run.p, run.d, [run.A], run.methods, self._resolution(run), self.config.numerics.workers
        )
        outcome.estimates.extend(estimates)
        disagreement = homogenize.relative_disagreement(estimates)
        if len(estimates) > 1:
            outcome.notes["disagreement"] = disagreement
        path = tables.write_table(
            self._output_path(run),
            tables.estimate_frame(estimates),
            self._provenance(run, disagreement=f"{disagreement!r}"),
        )
        outcome.outputs.append(str(path))

        if run.acceptance_tol is not None and disagreement > run.acceptance_tol:
            raise AcceptanceError(
                f"estimators disagree by {disagreement:.3%}, above acceptance_tol {run.acceptance_tol:.3%}",
                "homogenize",
            )

    def _game(self, run: RunConfig, outcome: RunOutcome) -> None:
        estimate = homogenize.hbar_game(
            run.p,
            run.A,
            run.d,
            run.tau,
            run.game_T,
            run.game_grid,
            run.n_angles,
            run.n_radii,
            progress=True,
            burn_in=run.game_burn_in,
        )
        outcome.estimates.append(estimate)
        path = tables.write_table(self._output_path(run), tables.estimate_frame([estimate]), self._provenance(run))
        outcome.outputs.append(str(path))
        if run.snapshot:
            value = estimate.extras["value_grid"]
            outcome.outputs.append(str(write_value_snapshot(run.snapshot, value.base, value.p, value.k)))

    def _trajectory(self, run: RunConfig, outcome: RunOutcome) -> None:
        flow = CellularFlow(run.A)
        params = GameParams(run.tau, run.d, 0, flow, run.n_angles, run.n_radii)
        start = (run.x1, run.x2)

        if run.target == "level":
            target = CellRegion(RegionKind.LEVEL_BELOW, run.mu)

            def objective(y):
                return float(stream(y))
        else:
            index = int(run.target[1])
            target = CellRegion(RegionKind.TRANSLATED_CELL, index=index)

            def objective(y):
                return cell_distance(y, index)

        strategy_i = self._strategy_i(run, flow, start)
        strategy_ii = self._strategy_ii(run, objective)
        report = trajectory.measure_reach(start, target, strategy_i, strategy_ii, params, run.budget)
        outcome.reaches.append(report)
        outcome.notes["reach_time"] = report.time_used

        output = self._output_path(run)
        provenance = self._provenance(run, player_i=strategy_i.name, player_ii=strategy_ii.name)
        path = tables.write_table(output, tables.trajectory_frame(report.trajectory), provenance)
        reach_path = tables.write_table(
            str(Path(output).with_suffix(".reach.csv")), tables.reach_frame([report]), provenance
        )
        outcome.outputs.extend([str(path), str(reach_path)])

    def _strategy_i(self, run: RunConfig, flow: CellularFlow, start) -> StrategyI:
        if run.target != "level":
            source = next(
                (i for i in (1, 2, 3, 4) if CellRegion(RegionKind.TRANSLATED_CELL, index=i).contains(start)), None
            )
            if source is None:
                raise ConfigError("trajectory start must lie inside a cell for a cell target")
            target = int(run.target[1])
            if source == target:
                return FollowFlow()
            path: List[int] = [source]
            if HORIZONTAL_NEIGHBOUR[source] != target and VERTICAL_NEIGHBOUR[source] != target:
                path.append(HORIZONTAL_NEIGHBOUR[source])
            path.append(target)
            return cell_transition_strategy(flow, path)

        if run.strategy_i == "descent":
            return Descent(flow)
        if run.strategy_i == "follow_flow":
            return FollowFlow()
        if run.strategy_i == "exit":
            return Exit()
        raise ConfigError("strategy_i=composite needs a cell target (U2, U3 or U4)")

    @staticmethod
    def _strategy_ii(run: RunConfig, objective) -> StrategyII:
        if run.strategy_ii == "worst_case":
            return WorstCaseEnum(objective)
        if run.strategy_ii == "max_sign":
            return MaxSign()
        if run.strategy_ii == "min_sign":
            return MinSign()
        if run.strategy_ii == "oppose_axis":
            return OpposeAxis((1.0, 0.0))
        return Fixed(1)

    def _sweep(self, run: RunConfig, outcome: RunOutcome) -> None:
        estimates = homogenize.sweep(
            run.p, run.d, run.A_list, run.methods, self._resolution(run), self.config.numerics.workers
        )
        outcome.estimates.extend(estimates)
        extra: Dict[str, Any] = {}
        primary = [estimate for estimate in estimates if estimate.method is Method(run.methods[0])]
        try:
            fit = homogenize.fit_growth_law(primary)
        except ValueError:
            logger.info("Growth-law fit skipped: fewer than two amplitudes above 1")
        else:
            outcome.growth_law = fit
            extra = {"growth_c1": repr(fit.c_lower), "growth_c2": repr(fit.c_upper), "trend_slope": repr(fit.slope)}
        path = tables.write_table(self._output_path(run), tables.estimate_frame(estimates), self._provenance(run, **extra))
        outcome.outputs.append(str(path))

    def _appendix_check(self, run: RunConfig, outcome: RunOutcome) -> None:
        flow = CellularFlow(run.A)
        params = appendix_geometry.derive_supersolution_params(run.delta, flow)
        margin = appendix_geometry.supersolution_margin(params, flow)
        report = appendix_geometry.containment_check(flow, run.d, run.delta, run.grid, thetas=run.thetas)
        outcome.containment = report
        outcome.notes["supersolution_margin"] = margin

        provenance = self._provenance(
            run,
            a0=repr(params.a0),
            b0=repr(params.b0),
            L=repr(params.L),
            t_max=repr(params.t_max),
            supersolution_margin=repr(margin),
            **{f"G_edge_{theta:g}": repr(value) for theta, value in report.boundary_values.items()},
        )
        path = tables.write_table(self._output_path(run), tables.containment_frame(report), provenance)
        outcome.outputs.append(str(path))

        if margin <= 0 or not report.passed:
            raise AcceptanceError(
                f"appendix check failed: margin={margin:.4g}, "
                f"{len(report.offending_nodes)} offending nodes, edge burnt={report.boundary_burnt}",
                "appendix_geometry",
            )
