"""MM + nonlinear-equality ADMM design of the transmit waveform and MVDR filter.

Outer loop (MM): at ``x_t`` build the quadratic majorizer of ``-g(x)``.
Inner loop (ADMM): split ``x = y``, keep the convex part of the constraints
(CI halfspaces or ZF equalities, disks, similarity disks, power ball) on
``x`` and the nonconvex modulus / sphere equality on ``y``:

* x-update: a :class:`~stap_slp.socp.ConvexSubproblem` (dominant cost);
* y-update: closed form, ``O(MNNₜ)``;
* dual update: ``λ += ρ(x - y)`` and, for constant modulus, ``μ += ρ(|y| - r)``.

Duals are reset at every outer iteration and ``y`` starts from ``x_t``. An
outer step is accepted only when ADMM ends within the primal tolerance
(restarting with a larger ρ otherwise) and its projection onto the exact
nonconvex set passes a :class:`FeasibilityAudit`. The SINR trace is evaluated
at accepted (variant-feasible) iterates only. A step that lowers ``g`` ends the
loop, and a run with no accepted iterate raises :class:`SolverError`.

The x-update uses slightly tightened constraints (``snap_backoff`` κ):
CI thresholds ``γᵢ + κr‖h̃ᵢ‖₁``, similarity radius ``ξ - κr``, PAPR peak
``max((1 - κ)r_ε, r)`` and ZF amplitude ``+κr‖h_k‖₁/sin Φ``. A modulus snap that
moves no coordinate by more than κr then keeps every CI and similarity
constraint satisfied.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import StrEnum

import numpy as np
import polars as pl
from numpy.typing import NDArray

from .comm import (
    CIConstraintSet,
    CommSetup,
    ZFConstraintSet,
    build_ci_constraints,
    build_zf_constraints,
    ci_margins,
)
from .decorators import resultify
from .exceptions import InfeasibleScenarioError, SolverError, StapSlpError, ValidationError
from .geometry import ArrayConfig, ComplexVector, linear_to_db
from .operators import OperatorSet
from .radar import concentrated_objective, mvdr_filter, output_sinr
from .result import Result
from .socp import (
    ConvexSubproblem,
    InnerSettings,
    SolveStatus,
    find_interior_point,
    maximize_min_margin,
    solve,
)
from .surrogate import SurrogateCoeffs, build_surrogate
from .waveforms import (
    ConstraintVariant,
    FeasibilityReport,
    VariantKind,
    build_reference_lfm,
    feasibility_report,
    satisfies_variant,
    snap_to_variant,
)

logger = logging.getLogger(__name__)

SNAP_CI_TOL = 1e-6


class CommMode(StrEnum):
    """Communication constraint applied to the design."""

    CI = "ci"
    ZF = "zf"
    NONE = "radar_only"

    @property
    def strictness(self) -> int:
        """Smaller means a smaller feasible set: ZF ⊂ CI ⊂ radar-only."""
        return {CommMode.ZF: 0, CommMode.CI: 1, CommMode.NONE: 2}[self]


class DesignStatus(StrEnum):
    CONVERGED = "converged"
    STALLED = "stalled"
    MAX_ITER = "max_iter"


@dataclass(frozen=True, slots=True)
class SolverConfig:
    """Outer/inner loop settings.

    ``rho`` is the ADMM penalty on the normalized surrogate. An inner run that
    ends outside the primal tolerance is restarted up to ``admm_restarts``
    times with ``rho`` multiplied by ``rho_growth``.
    """

    rho: float = 1.0
    mm_tol: float = 1e-3
    mm_max_iter: int = 100
    admm_primal_tol: float = 1e-4
    admm_dual_tol: float = 1e-4
    admm_max_iter: int = 300
    adaptive_rho: bool = False
    admm_restarts: int = 2
    rho_growth: float = 10.0
    snap_backoff: float = 1e-3
    inner: InnerSettings = field(default_factory=InnerSettings)
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("rho", "mm_tol", "admm_primal_tol", "admm_dual_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError("must be positive", field=f"solver.{name}")
        for name in ("mm_max_iter", "admm_max_iter"):
            if getattr(self, name) < 1:
                raise ValidationError("must be >= 1", field=f"solver.{name}")
        if self.admm_restarts < 0:
            raise ValidationError("must be >= 0", field="solver.admm_restarts")
        if not self.rho_growth > 1:
            raise ValidationError("must exceed 1", field="solver.rho_growth")
        if not 0 <= self.snap_backoff < 1:
            raise ValidationError("must lie in [0, 1)", field="solver.snap_backoff")


@dataclass(frozen=True, slots=True)
class Scenario:
    """Everything a design run consumes besides the variant and solver settings."""

    cfg: ArrayConfig
    operators: OperatorSet
    comm: CommSetup | None
    target_power: float


@dataclass(frozen=True, slots=True)
class InitialPoint:
    waveform: ComplexVector
    margin: float


@dataclass(frozen=True, slots=True)
class AdmmOutcome:
    x: ComplexVector
    iterations: int
    primal: float
    modulus: float
    dual: float
    converged: bool
    rho: float

    def within(self, tol: float) -> bool:
        """Primal and modulus residuals both at most ``tol``."""
        return self.primal <= tol and self.modulus <= tol


@dataclass(frozen=True, slots=True)
class DesignResult:
    variant: ConstraintVariant
    mode: CommMode
    waveform: ComplexVector
    filter: ComplexVector
    sinr_db: float
    sinr_trace: tuple[tuple[int, float], ...]
    feasibility: FeasibilityReport
    wall_time: float
    status: DesignStatus
    admm_iterations: int = 0
    backoff: float = 0.0
    init_margin: float | None = None
    warnings: tuple[str, ...] = ()

    @property
    def label(self) -> str:
        return f"{self.variant.kind}/{self.mode}"

    @property
    def iterations(self) -> int:
        return self.sinr_trace[-1][0]

    def trace_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {
                "line": [self.label] * len(self.sinr_trace),
                "iteration": [i for i, _ in self.sinr_trace],
                "sinr_db": [s for _, s in self.sinr_trace],
            },
            schema={"line": pl.String, "iteration": pl.Int64, "sinr_db": pl.Float64},
        )

    def to_dict(self) -> dict[str, object]:
        def cplx(a: NDArray) -> list[list[float]]:
            return np.stack([np.real(a), np.imag(a)], axis=-1).tolist()

        return {
            "variant": str(self.variant.kind),
            "mode": str(self.mode),
            "total_power": self.variant.total_power,
            "papr_eps": self.variant.papr_eps,
            "similarity_xi": None
            if math.isinf(self.variant.similarity_xi)
            else self.variant.similarity_xi,
            "status": str(self.status),
            "sinr_db": self.sinr_db,
            "sinr_trace": [list(p) for p in self.sinr_trace],
            "feasibility": self.feasibility.to_dict(),
            "wall_time": self.wall_time,
            "admm_iterations": self.admm_iterations,
            "backoff": self.backoff,
            "init_margin": self.init_margin,
            "warnings": list(self.warnings),
            "waveform": cplx(self.waveform),
            "filter": cplx(self.filter),
        }


# ---- Closed-form block updates ---------------------------------------------


def y_update_cm(a: ComplexVector, b: NDArray) -> ComplexVector:
    """``y_i = max(0, (|a_i| + Re b_i)/2) e^{j∠a_i}``, phase 0 where ``a_i = 0``.

    ``a = x + λ/ρ`` and ``b = r - μ/ρ``.

    Examples:
        >>> y_update_cm(np.array([2.0 + 0j]), np.array([4.0]))
        array([3.+0.j])
    """
    mag = np.abs(a)
    phase = np.where(mag > 0, a / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
    return np.maximum(0.0, 0.5 * (mag + np.real(b))) * phase


def y_update_papr(
    x: ComplexVector, lam: ComplexVector, rho: float, total_power: float
) -> ComplexVector:
    """Radial projection of ``x + λ/ρ`` onto the sphere ``‖y‖² = P``."""
    a = x + lam / rho
    norm = float(np.linalg.norm(a))
    if norm == 0:
        y = np.zeros_like(a)
        y[0] = math.sqrt(total_power)
        return y
    return math.sqrt(total_power) * a / norm


def dual_update(
    lam: ComplexVector,
    mu: NDArray[np.float64],
    rho: float,
    x: ComplexVector,
    y: ComplexVector,
    total_power: float,
    *,
    update_mu: bool = True,
) -> tuple[ComplexVector, NDArray[np.float64]]:
    """``λ += ρ(x - y)``; ``μ += ρ(|y| - √(P/n))`` for constant-modulus variants."""
    lam = lam + rho * (x - y)
    if update_mu:
        mu = mu + rho * (np.abs(y) - math.sqrt(total_power / x.shape[0]))
    return lam, mu


# ---- Constraint assembly ---------------------------------------------------


def constraint_template(
    variant: ConstraintVariant, n: int, rho: float, backoff: float
) -> ConvexSubproblem:
    """The x-update set without communication rows and with a zero objective."""
    r = variant.modulus(n)
    disk: float = r
    ball = None
    center = radius = None
    if variant.kind is VariantKind.PAPR:
        disk = max(variant.peak_modulus(n) * (1.0 - backoff), r)
        ball = math.sqrt(variant.total_power)
    if variant.kind is VariantKind.CMS:
        radius = variant.similarity_xi - backoff * r
        if radius <= 0:
            raise InfeasibleScenarioError(
                "similarity radius does not exceed the snap backoff", margin=radius
            )
        center = variant.reference
    zeros = np.zeros(n, dtype=complex)
    return ConvexSubproblem(
        quad=np.zeros((n, n), dtype=complex),
        linear=zeros,
        prox_weight=rho,
        prox_center=zeros,
        disk_radius=disk,
        ball_radius=ball,
        similarity_center=center,
        similarity_radius=radius,
    )


def _with_ci(p: ConvexSubproblem, cset: CIConstraintSet, extra: NDArray) -> ConvexSubproblem:
    return replace(
        p,
        halfspace_rows=cset.dense_rows(),
        halfspace_thresholds=cset.thresholds + extra,
        interior_point=None,
    )


def _with_zf(p: ConvexSubproblem, zf: ZFConstraintSet) -> ConvexSubproblem:
    return replace(
        p, equality_rows=zf.dense_rows(), equality_targets=zf.targets, interior_point=None
    )


@resultify(step="initialization")
def initialize_waveform(
    cset: CIConstraintSet,
    variant: ConstraintVariant,
    *,
    backoff: float = 0.0,
    settings: InnerSettings | None = None,
) -> InitialPoint:
    """Maximize the smallest CI margin ``min_i(Re{h̃ᵢᴴx} - γᵢ)`` over the convex set.

    Constant-modulus variants use disks ``|x_j| <= √(P/n)`` (plus the
    similarity disks for CMS); PAPR uses its peak disks and the power ball.
    A negative optimum means the QoS targets cannot be met.
    """
    n = cset.n_slots * cset.n_tx
    p = _with_ci(constraint_template(variant, n, 1.0, backoff), cset, np.zeros(len(cset)))
    found = maximize_min_margin(p, settings)
    if found is None:
        raise InfeasibleScenarioError("waveform constraint set has an empty interior")
    x, margin = found
    if margin < 0:
        raise InfeasibleScenarioError(
            f"QoS targets unreachable: best minimum CI margin {margin:.3e}", margin=margin
        )
    return InitialPoint(x, margin)


# ---- Inner ADMM ------------------------------------------------------------


def _run_admm(
    template: ConvexSubproblem,
    coeffs: SurrogateCoeffs,
    variant: ConstraintVariant,
    solver: SolverConfig,
    rho: float,
) -> AdmmOutcome:
    x_t = coeffs.iterate
    n = x_t.shape[0]
    r = variant.modulus(n)
    cm = variant.kind is not VariantKind.PAPR
    D, b = coeffs.d_matrix, coeffs.b_vector
    lam = np.zeros(n, dtype=complex)
    mu = np.zeros(n)
    x, y = x_t.copy(), x_t.copy()
    primal = modulus = dual = math.inf
    for k in range(1, solver.admm_max_iter + 1):
        p = template.with_objective(D, b, rho, y - lam / rho)
        report = solve(p, solver.inner, warm_start=x)
        if report.status is SolveStatus.INFEASIBLE:
            raise SolverError("x-update subproblem infeasible", step="x-update")
        x = report.solution
        y_prev = y
        if cm:
            y = y_update_cm(x + lam / rho, r - mu / rho)
        else:
            y = y_update_papr(x, lam, rho, variant.total_power)
        lam, mu = dual_update(lam, mu, rho, x, y, variant.total_power, update_mu=cm)

        primal = float(np.max(np.abs(x - y))) / r
        modulus = float(np.max(np.abs(np.abs(y) - r))) / r if cm else 0.0
        dual = rho * float(np.max(np.abs(y - y_prev))) / r
        logger.debug(
            "admm iter=%d primal=%.2e modulus=%.2e dual=%.2e rho=%.3g newton=%d",
            k, primal, modulus, dual, rho, report.iterations,
        )  # fmt: skip
        if (
            primal <= solver.admm_primal_tol
            and modulus <= solver.admm_primal_tol
            and dual <= solver.admm_dual_tol
        ):
            return AdmmOutcome(x, k, primal, modulus, dual, True, rho)
        if solver.adaptive_rho:
            if primal > 10.0 * dual:
                rho *= 2.0
            elif dual > 10.0 * primal:
                rho /= 2.0
    return AdmmOutcome(x, solver.admm_max_iter, primal, modulus, dual, False, rho)


def _solve_surrogate(
    template: ConvexSubproblem,
    coeffs: SurrogateCoeffs,
    variant: ConstraintVariant,
    solver: SolverConfig,
) -> tuple[AdmmOutcome, int]:
    """ADMM on the normalized surrogate, restarted with a larger ρ until within tolerance.

    Returns the last outcome and the inner iterations spent over all restarts.
    """
    coeffs = coeffs.normalized()
    rho, spent = solver.rho, 0
    for attempt in range(solver.admm_restarts + 1):
        outcome = _run_admm(template, coeffs, variant, solver, rho)
        spent += outcome.iterations
        if outcome.within(solver.admm_primal_tol):
            return outcome, spent
        logger.info(
            "admm attempt=%d rho=%.3g ended at primal=%.2e modulus=%.2e",
            attempt, rho, outcome.primal, outcome.modulus,
        )  # fmt: skip
        rho = outcome.rho * solver.rho_growth
    return outcome, spent


# ---- Design driver ---------------------------------------------------------


def _sinr_db(scenario: Scenario, g: float) -> float:
    return linear_to_db(scenario.target_power * g)


@dataclass(frozen=True, slots=True)
class FeasibilityAudit:
    """Exact-set membership of a projected waveform.

    CI margins must stay above ``-SNAP_CI_TOL`` and ZF residuals inside
    ``zf_tube``, the distance the projection may move ``h_kᴴx_j``.
    """

    variant: ConstraintVariant
    cset: CIConstraintSet | None = None
    zf: ZFConstraintSet | None = None
    zf_tube: NDArray[np.float64] | None = None

    def problems(self, x: ComplexVector) -> list[str]:
        found = []
        if not satisfies_variant(self.variant, x):
            found.append(f"not on the {self.variant.kind} set")
        if self.cset is not None and len(self.cset):
            worst = float(np.min(ci_margins(self.cset, x)))
            if worst < -SNAP_CI_TOL:
                found.append(f"CI margin {worst:.3e}")
        if self.zf is not None and self.zf_tube is not None:
            excess = float(np.max(np.abs(self.zf.residuals(x)) - self.zf_tube))
            if excess > 0:
                found.append(f"ZF residual {excess:.3e} outside the tube")
        return found


def _start_point(
    scenario: Scenario,
    audit: FeasibilityAudit,
    start: ComplexVector,
    candidates: Sequence[ComplexVector],
) -> tuple[ComplexVector, bool]:
    """The best projected candidate passing the audit, or ``start`` flagged infeasible."""
    best: ComplexVector | None = None
    best_g = -math.inf
    for c in (start, *candidates):
        if c.shape != start.shape:
            continue
        x = snap_to_variant(audit.variant, c)
        if audit.problems(x):
            continue
        g = concentrated_objective(scenario.operators, x)
        if g > best_g:
            best, best_g = x, g
    if best is None:
        return start, False
    return best, True


def _ci_template(
    template: ConvexSubproblem,
    cset: CIConstraintSet,
    variant: ConstraintVariant,
    solver: SolverConfig,
    warnings: list[str],
) -> tuple[ConvexSubproblem, InitialPoint, float]:
    point = initialize_waveform(
        cset, variant, backoff=solver.snap_backoff, settings=solver.inner
    ).unwrap_or_raise()
    scale = variant.modulus(point.waveform.shape[0]) * cset.l1_norms()
    kappa = solver.snap_backoff
    if len(cset):
        headroom = 0.5 * float(np.min(ci_margins(cset, point.waveform) / scale))
        if headroom < kappa:
            msg = f"CI backoff reduced from {kappa:.1e} to {headroom:.1e}"
            logger.warning(msg)
            warnings.append(msg)
            kappa = max(headroom, 0.0)
    return _with_ci(template, cset, kappa * scale), point, kappa


def _design(
    variant: ConstraintVariant,
    scenario: Scenario,
    solver: SolverConfig,
    mode: CommMode,
    warm_starts: Sequence[ComplexVector],
) -> DesignResult:
    t_start = time.perf_counter()
    cfg, ops = scenario.cfg, scenario.operators
    n = cfg.waveform_len
    r = variant.modulus(n)
    kappa = solver.snap_backoff
    warnings: list[str] = []
    if mode is not CommMode.NONE and scenario.comm is None:
        raise ValidationError("communication mode needs a CommSetup", field="comm")

    template = constraint_template(variant, n, solver.rho, kappa)
    audit = FeasibilityAudit(variant)
    cset: CIConstraintSet | None = None
    zf: ZFConstraintSet | None = None
    start: ComplexVector | None = None
    init_margin: float | None = None
    if scenario.comm is not None and mode is not CommMode.NONE:
        cset = build_ci_constraints(scenario.comm, cfg)
    if mode is CommMode.CI and cset is not None:
        template, init, kappa = _ci_template(template, cset, variant, solver, warnings)
        start, init_margin = init.waveform, init.margin
        audit = FeasibilityAudit(variant, cset=cset)
    elif mode is CommMode.ZF and scenario.comm is not None:
        comm = scenario.comm
        boost = kappa * r * np.sum(np.abs(comm.channels), axis=1)
        zf = build_zf_constraints(comm, cfg, amplitude_boost=boost / math.sin(comm.half_angle))
        template = _with_zf(template, zf)
        tube = max(kappa, 2.0 * solver.admm_primal_tol) * r * np.sum(np.abs(zf.channels), axis=1)
        audit = FeasibilityAudit(variant, cset=cset, zf=zf, zf_tube=tube)

    anchor = find_interior_point(template, solver.inner)
    if anchor is None:
        raise InfeasibleScenarioError(f"no strictly feasible waveform for {variant.kind}/{mode}")
    template = replace(template, interior_point=anchor)
    if start is None and mode is CommMode.NONE:
        start = build_reference_lfm(cfg, variant.total_power)
    if start is None:
        start = anchor
    x_t, feasible = _start_point(scenario, audit, start, warm_starts)

    g_t = concentrated_objective(ops, x_t)
    trace: list[tuple[int, float]] = [(0, _sinr_db(scenario, g_t))] if feasible else []
    status = DesignStatus.MAX_ITER
    admm_total = 0
    logger.info(
        "design start line=%s/%s sinr_db=%.4f feasible=%s",
        variant.kind, mode, _sinr_db(scenario, g_t), feasible,
    )  # fmt: skip
    for it in range(1, solver.mm_max_iter + 1):
        outcome, spent = _solve_surrogate(template, build_surrogate(ops, x_t), variant, solver)
        admm_total += spent
        if not outcome.within(solver.admm_primal_tol):
            msg = (
                f"mm iter={it}: inner loop left primal={outcome.primal:.2e} "
                f"modulus={outcome.modulus:.2e} after {solver.admm_restarts} restarts"
            )
            logger.warning(msg)
            warnings.append(msg)
            status = DesignStatus.STALLED
            break
        x_new = snap_to_variant(variant, outcome.x)
        problems = audit.problems(x_new)
        if problems:
            msg = f"mm iter={it}: projected step rejected ({', '.join(problems)})"
            logger.warning(msg)
            warnings.append(msg)
            status = DesignStatus.STALLED
            break
        g_new = concentrated_objective(ops, x_new)
        if feasible and g_new < g_t:
            logger.info("mm iter=%d rejected: objective fell %.6e -> %.6e", it, g_t, g_new)
            status = DesignStatus.STALLED
            break
        rel = (g_new - g_t) / g_t if feasible else math.inf
        x_t, g_t, feasible = x_new, g_new, True
        trace.append((it, _sinr_db(scenario, g_t)))
        logger.info("mm iter=%d sinr_db=%.4f rel=%.2e admm=%d", it, trace[-1][1], rel, spent)
        if rel < solver.mm_tol:
            status = DesignStatus.CONVERGED
            break

    if not feasible:
        raise SolverError(
            f"no iterate of {variant.kind}/{mode} passed the feasibility audit", step="mm"
        )
    w = mvdr_filter(ops, x_t)
    sinr = linear_to_db(output_sinr(ops, scenario.target_power, x_t, w))
    elapsed = time.perf_counter() - t_start
    logger.info(
        "design done line=%s/%s sinr_db=%.4f status=%s time=%.2fs",
        variant.kind, mode, sinr, status, elapsed,
    )  # fmt: skip
    return DesignResult(
        variant=variant,
        mode=mode,
        waveform=x_t,
        filter=w,
        sinr_db=sinr,
        sinr_trace=tuple(trace),
        feasibility=feasibility_report(variant, x_t, cset, zf),
        wall_time=elapsed,
        status=status,
        admm_iterations=admm_total,
        backoff=kappa,
        init_margin=init_margin,
        warnings=tuple(warnings),
    )


def design_line(
    variant: ConstraintVariant,
    scenario: Scenario,
    solver: SolverConfig,
    mode: CommMode = CommMode.CI,
    warm_starts: Sequence[ComplexVector] = (),
) -> Result[DesignResult, StapSlpError]:
    """Run one design; fallible outcomes come back as ``Err``."""
    return resultify(step="design")(_design)(variant, scenario, solver, mode, warm_starts)


def design(
    variant: ConstraintVariant,
    scenario: Scenario,
    solver: SolverConfig,
    *,
    warm_starts: Sequence[ComplexVector] = (),
) -> Result[DesignResult, StapSlpError]:
    """Constructive-interference design for one waveform variant."""
    return design_line(variant, scenario, solver, CommMode.CI, warm_starts)


def design_zf_baseline(
    variant: ConstraintVariant,
    scenario: Scenario,
    solver: SolverConfig,
    *,
    warm_starts: Sequence[ComplexVector] = (),
) -> Result[DesignResult, StapSlpError]:
    """Same pipeline with exact symbol reproduction (zero-forcing equalities)."""
    return design_line(variant, scenario, solver, CommMode.ZF, warm_starts)


def design_radar_only(
    variant: ConstraintVariant,
    scenario: Scenario,
    solver: SolverConfig,
    *,
    warm_starts: Sequence[ComplexVector] = (),
) -> Result[DesignResult, StapSlpError]:
    """Same pipeline without communication constraints, started from the LFM reference."""
    return design_line(variant, scenario, solver, CommMode.NONE, warm_starts)
