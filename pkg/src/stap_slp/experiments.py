"""Seeded end-to-end runs, parameter sweeps and ambiguity maps."""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
import polars as pl
from tqdm import tqdm

from .clutter import ClutterScene, clutter_cells, generate_scene, scene_ccms
from .comm import CommSetup, SerEstimate, estimate_ser, make_comm_setup
from .config import ScenarioConfig
from .decorators import resultify
from .designer import CommMode, DesignResult, Scenario, design_line
from .exceptions import InfeasibleScenarioError, StapSlpError, ValidationError
from .geometry import ArrayConfig, ComplexVector, db_to_linear, target_steering
from .operators import OperatorSet, build_target_operator
from .radar import ambiguity_frame
from .result import Err, Result, partition
from .waveforms import ConstraintVariant, VariantKind

logger = logging.getLogger(__name__)

SWEEP_SCHEMA = {
    "axis": pl.String,
    "value": pl.Float64,
    "variant": pl.String,
    "mode": pl.String,
    "line": pl.String,
    "sinr_db": pl.Float64,
    "iterations": pl.Int64,
    "admm_iterations": pl.Int64,
    "status": pl.String,
    "min_ci_margin": pl.Float64,
    "feasible": pl.Boolean,
    "error": pl.String,
}


class SweepAxis(StrEnum):
    QOS_DB = "qos_db"
    POWER = "power"
    N_USERS = "n_users"
    N_ANTENNAS = "n_antennas"
    DOPPLER = "doppler"
    PAPR_EPS = "papr_eps"
    SIMILARITY_XI = "similarity_xi"

    @property
    def descending(self) -> bool:
        """Axes whose feasible set shrinks as the value grows run from the top down."""
        return self in (SweepAxis.QOS_DB, SweepAxis.N_USERS)


@dataclass(frozen=True, slots=True)
class RunOutcome:
    """Primary design plus baselines; failed baselines are kept in ``errors``."""

    config: ScenarioConfig
    scene: ClutterScene
    comm: CommSetup | None
    primary: DesignResult
    lines: dict[str, DesignResult]
    errors: dict[str, StapSlpError] = field(default_factory=dict)
    ser: list[SerEstimate] = field(default_factory=list)


def build_scene(config: ScenarioConfig) -> ClutterScene:
    c = config.clutter
    return generate_scene(
        config.array,
        c.half_width_cells,
        c.patches_per_cell,
        db_to_linear(c.patch_power_db),
        c.doppler_model,
        config.seeds.scene,
        azimuth_mode=c.azimuth_mode,
        ridge_slope=c.ridge_slope,
    )


def build_scenario(config: ScenarioConfig, scene: ClutterScene | None = None) -> Scenario:
    """Operators and communication setup for one configuration; deterministic in the seeds."""
    cfg = config.array
    scene = scene or build_scene(config)
    target = config.target.model()
    ccms = scene_ccms(cfg, scene, config.clutter.rank_threshold)
    ops = OperatorSet.from_factors(
        cfg, target_steering(cfg, target), clutter_cells(ccms), config.target.receiver_noise
    )
    comm = None
    if config.comm.n_users:
        comm = make_comm_setup(
            cfg,
            config.comm.n_users,
            config.comm.psk_order,
            config.comm.noise_power,
            config.comm.qos(),
            channel_seed=config.seeds.channel,
            symbol_seed=config.seeds.symbol,
        )
    logger.info(
        "scenario %s waveform_len=%d clutter_factors=%d users=%d",
        config.name, cfg.waveform_len, ops.n_factors, config.comm.n_users,
    )  # fmt: skip
    return Scenario(cfg=cfg, operators=ops, comm=comm, target_power=target.power)


def _modes(config: ScenarioConfig, primary: CommMode) -> list[CommMode]:
    modes = {primary, *config.outputs.baselines}
    return sorted(modes, key=lambda m: m.strictness)


def design_modes(
    variant: ConstraintVariant,
    scenario: Scenario,
    config: ScenarioConfig,
    modes: Sequence[CommMode],
    warm_starts: Sequence[ComplexVector] = (),
) -> tuple[dict[CommMode, DesignResult], dict[CommMode, StapSlpError]]:
    """Design each mode from the smallest feasible set to the largest.

    With ``outputs.chain`` every finished line's waveform is a warm-start
    candidate for the following, larger sets.
    """
    outcomes: list[tuple[CommMode, Result[DesignResult, StapSlpError]]] = []
    candidates = list(warm_starts)
    for mode in sorted(modes, key=lambda m: m.strictness):
        outcome = design_line(variant, scenario, config.solver, mode, tuple(candidates))
        outcome.inspect_err(
            lambda e, m=mode: logger.warning("line %s/%s failed: %s", variant.kind, m, e)
        )
        outcomes.append((mode, outcome))
        if outcome.is_ok() and config.outputs.chain:
            candidates.append(outcome.unwrap().waveform)
    return partition(outcomes)


def run(
    config: ScenarioConfig, mode: CommMode = CommMode.CI, *, jobs: int = 1
) -> Result[RunOutcome, StapSlpError]:
    """Generate the scenario, design the configured variant and its baselines.

    ``jobs`` workers share the SER Monte Carlo; the estimate does not depend on it.
    """

    @resultify(step="run")
    def _run() -> RunOutcome:
        if jobs < 1:
            raise ValidationError("must be >= 1", field="jobs", value=jobs)
        scene = build_scene(config)
        scenario = build_scenario(config, scene)
        if scenario.comm is None and mode is not CommMode.NONE:
            raise ValidationError("communication design needs comm.n_users >= 1", field="comm")
        variant = config.variant.build(config.array)
        done, failed = design_modes(variant, scenario, config, _modes(config, mode))
        if mode not in done:
            raise failed[mode]
        primary = done[mode]
        ser = []
        if config.comm.ser_trials and scenario.comm is not None:
            ser = estimate_ser(
                scenario.comm,
                primary.waveform,
                config.comm.ser_trials,
                seed=config.seeds.ser,
                jobs=jobs,
            )
        return RunOutcome(
            config=config,
            scene=scene,
            comm=scenario.comm,
            primary=primary,
            lines={r.label: r for r in done.values()},
            errors={f"{variant.kind}/{m}": e for m, e in failed.items()},
            ser=ser,
        )

    return _run()


def trace_table(outcome: RunOutcome) -> pl.DataFrame:
    return pl.concat([r.trace_frame() for r in outcome.lines.values()])


# ---- Sweeps ----------------------------------------------------------------


def apply_axis(config: ScenarioConfig, axis: SweepAxis, value: float) -> ScenarioConfig:
    """The configuration at one sweep point."""
    replace = dataclasses.replace
    match axis:
        case SweepAxis.QOS_DB:
            return replace(config, comm=replace(config.comm, qos_db=float(value)))
        case SweepAxis.POWER:
            return replace(config, variant=replace(config.variant, total_power=float(value)))
        case SweepAxis.N_USERS:
            qos = config.comm.qos_db
            if isinstance(qos, tuple):
                qos = qos[: int(value)]
            return replace(config, comm=replace(config.comm, n_users=int(value), qos_db=qos))
        case SweepAxis.N_ANTENNAS:
            array = replace(config.array, n_tx=int(value), n_rx=int(value))
            return replace(config, array=array)
        case SweepAxis.DOPPLER:
            target = replace(config.target, normalized_doppler=float(value))
            return replace(config, target=target)
        case SweepAxis.PAPR_EPS:
            return replace(config, variant=replace(config.variant, papr_eps=float(value)))
        case SweepAxis.SIMILARITY_XI:
            return replace(config, variant=replace(config.variant, similarity_xi=float(value)))


def ordered_values(axis: SweepAxis, values: Sequence[float]) -> list[float]:
    """Sweep order in which each point's set contains the previous point's set."""
    return sorted(values, reverse=axis.descending)


def _warm_from(
    axis: SweepAxis, prev: ComplexVector, prev_value: float, value: float
) -> ComplexVector:
    if axis is SweepAxis.POWER:
        return prev * math.sqrt(value / prev_value)
    return prev


def _row(
    axis: SweepAxis,
    value: float,
    kind: VariantKind,
    mode: CommMode,
    result: Result[DesignResult, StapSlpError],
) -> dict[str, object]:
    row: dict[str, object] = {
        "axis": str(axis),
        "value": float(value),
        "variant": str(kind),
        "mode": str(mode),
        "line": f"{kind}/{mode}",
        "sinr_db": None,
        "iterations": None,
        "admm_iterations": None,
        "status": "error",
        "min_ci_margin": None,
        "feasible": False,
        "error": None,
    }
    if result.is_err():
        err = result.unwrap_err()
        row["status"] = "infeasible" if isinstance(err, InfeasibleScenarioError) else "error"
        row["error"] = f"{type(err).__name__}: {err}"
        return row
    r = result.unwrap()
    margin = r.feasibility.min_ci_margin
    row.update(
        sinr_db=r.sinr_db,
        iterations=r.iterations,
        admm_iterations=r.admm_iterations,
        status=str(r.status),
        min_ci_margin=margin,
        feasible=margin is None or margin >= -1e-6,
    )
    return row


def sweep_line(
    config: ScenarioConfig,
    axis: SweepAxis,
    values: Sequence[float],
    kinds: Sequence[VariantKind],
    mode: CommMode,
) -> list[dict[str, object]]:
    """All points of one communication mode, run sequentially with warm starts.

    At each point the variants run from the smallest set (CMS) to the largest
    (PAPR); each design is offered the previous variant's waveform at this
    point and its own waveform at the previous point.
    """
    rows = []
    previous: dict[VariantKind, tuple[float, ComplexVector]] = {}
    for value in ordered_values(axis, values):
        point = apply_axis(config, axis, value)
        try:
            scenario = build_scenario(point)
        except StapSlpError as e:
            for kind in kinds:
                rows.append(_row(axis, value, kind, mode, Err(e)))
            continue
        here: list[ComplexVector] = []
        for kind in sorted(kinds, key=lambda k: k.strictness):
            section = dataclasses.replace(point.variant, kind=kind)
            variant = section.build(point.array)
            candidates = list(here)
            if kind in previous and point.outputs.chain:
                prev_value, prev_x = previous[kind]
                candidates.append(_warm_from(axis, prev_x, prev_value, value))
            if not point.outputs.chain:
                candidates = []
            result = design_line(variant, scenario, point.solver, mode, tuple(candidates))
            rows.append(_row(axis, value, kind, mode, result))
            if result.is_ok():
                here.append(result.unwrap().waveform)
                previous[kind] = (value, result.unwrap().waveform)
    return rows


def sweep_chunks(
    axis: SweepAxis, values: Sequence[float], n_modes: int, jobs: int
) -> list[list[float]]:
    """Contiguous runs of the ordered values, enough to keep ``jobs`` workers busy.

    Examples:
        >>> sweep_chunks(SweepAxis.POWER, [4.0, 1.0, 3.0, 2.0], 1, 2)
        [[1.0, 2.0], [3.0, 4.0]]
    """
    ordered = ordered_values(axis, values)
    n_chunks = max(1, min(len(ordered), jobs // max(n_modes, 1)))
    size = math.ceil(len(ordered) / n_chunks)
    return [ordered[i : i + size] for i in range(0, len(ordered), size)]


def sweep(
    config: ScenarioConfig,
    axis: SweepAxis | str,
    values: Sequence[float],
    kinds: Sequence[VariantKind] = (VariantKind.CM,),
    modes: Sequence[CommMode] = (CommMode.CI,),
    *,
    jobs: int = 1,
    progress: bool = True,
) -> pl.DataFrame:
    """One row per (point, variant, mode); failed points are recorded, not raised.

    Seeds are shared across variants and modes, so rows at the same point
    compare designs on the same scenario. With ``jobs > 1`` every mode's
    ordered points are split into contiguous chunks (:func:`sweep_chunks`)
    that run in parallel; warm starts chain within a chunk. Rows come back in
    a fixed order regardless.
    """
    axis = SweepAxis(axis)
    if not values:
        raise ValidationError("sweep needs at least one value", field="values")
    if jobs < 1:
        raise ValidationError("must be >= 1", field="jobs", value=jobs)
    chunks = sweep_chunks(axis, values, len(modes), jobs)
    tasks = [(mode, chunk) for mode in modes for chunk in chunks]
    results: dict[int, list[dict[str, object]]] = {}
    with tqdm(total=len(tasks), desc=f"sweep {axis}", unit="chunk", disable=not progress) as bar:
        if jobs == 1 or len(tasks) == 1:
            for i, (mode, chunk) in enumerate(tasks):
                results[i] = sweep_line(config, axis, chunk, kinds, mode)
                bar.update()
        else:
            with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
                futures = {
                    pool.submit(sweep_line, config, axis, chunk, kinds, mode): i
                    for i, (mode, chunk) in enumerate(tasks)
                }
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
                    bar.update()
    rows = [row for i in range(len(tasks)) for row in results[i]]
    return pl.DataFrame(rows, schema=SWEEP_SCHEMA).sort(
        ["value", "mode", "variant"], maintain_order=True
    )


# ---- Ambiguity -------------------------------------------------------------


def ambiguity_map(
    cfg: ArrayConfig,
    result: DesignResult | tuple[ComplexVector, ComplexVector],
    points: int = 101,
    *,
    target_steering_vec: ComplexVector | None = None,
) -> pl.DataFrame:
    """Cross-ambiguity map in dB over normalized Doppler and spatial frequency.

    Values are relative to the target response ``|wᴴA₀x|²`` when the target
    steering vector is given; otherwise relative to 1, which is the target
    response of an MVDR filter.
    """
    x, w = (result.waveform, result.filter) if isinstance(result, DesignResult) else result
    reference = None
    if target_steering_vec is not None:
        echo = build_target_operator(cfg, target_steering_vec).apply(x)
        reference = float(abs(np.vdot(w, echo)) ** 2)
    return ambiguity_frame(cfg, x, w, points, reference=reference)
