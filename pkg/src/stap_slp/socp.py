"""Interior-point solver for the waveform x-update.

Each subproblem minimizes the strongly convex real quadratic

    xᴴDx - Re{bᴴx} + (ρ/2)‖x - v‖²

over halfspaces ``Re{hᵢᴴx} >= γᵢ``, per-coordinate disks ``|x_j| <= r_j``,
similarity disks ``|x_j - x₀_j| <= ξ``, an optional power ball ``‖x‖² <= P``
and optional complex equalities ``eᵢᴴx = tᵢ``. Everything is solved on the
real embedding ``z = [Re x; Im x]`` with a log-barrier method: damped Newton
centering steps, backtracking that first restores strict feasibility and then
enforces an Armijo decrease, and a barrier weight multiplied by 10 per
centering. Equalities are eliminated through a null-space basis.

All constraint Hessians are diagonal in ``z`` (disks and the ball), so the
barrier Hessian is ``t∇²f₀ + Jᵀdiag(1/f²)J + diag(curvature)``. Near the
boundary its entries span many decades; Newton systems are solved after a
symmetric diagonal rescaling, with a growing ridge when the Cholesky factor
still fails. If no usable step remains the barrier loop stops and accepts
the point when the duality gap is below ``feas_tol``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import StrEnum
from pathlib import Path
from typing import Protocol

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .exceptions import SolverError, ValidationError
from .geometry import ComplexVector

logger = logging.getLogger(__name__)

type RealVector = NDArray[np.float64]
type RealMatrix = NDArray[np.float64]

_EMPTY_ROWS = np.zeros((0, 0), dtype=complex)


@dataclass(frozen=True, slots=True)
class InnerSettings:
    """Tolerances and limits of the barrier solver.

    ``kkt_tol`` bounds the scaled residual of :func:`kkt_residual`;
    ``gap_tol`` is relative to ``max(1, |objective|)``.
    """

    feas_tol: float = 1e-6
    kkt_tol: float = 1e-6
    gap_tol: float = 1e-8
    max_newton: int = 200
    barrier_factor: float = 10.0
    newton_tol: float = 1e-14
    newton_ridge: float = 1e-12
    armijo: float = 0.01
    backtrack: float = 0.5
    warm_t_boost: float = 100.0
    phase1_gap: float = 1e-6
    phase1_ridge: float = 1e-8

    def __post_init__(self) -> None:
        names = ("feas_tol", "kkt_tol", "gap_tol", "newton_tol", "newton_ridge", "phase1_gap")
        for name in names:
            if not getattr(self, name) > 0:
                raise ValidationError("tolerance must be positive", field=f"solver.inner.{name}")
        if self.max_newton < 1:
            raise ValidationError("must be >= 1", field="solver.inner.max_newton")
        if not self.barrier_factor > 1:
            raise ValidationError("must exceed 1", field="solver.inner.barrier_factor")


class SolveStatus(StrEnum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, slots=True)
class ConvexSubproblem:
    """One x-update: quadratic objective plus convex constraint families.

    ``halfspace_rows[i]`` is hᵢ (the row enters as ``Re{hᵢᴴx}``);
    ``equality_rows[i]`` is eᵢ with ``eᵢᴴx = equality_targets[i]``.
    ``interior_point`` caches a strictly feasible point for the constraint
    set; it stays valid while only the objective changes.
    """

    quad: NDArray[np.complex128]
    linear: ComplexVector
    prox_weight: float
    prox_center: ComplexVector
    halfspace_rows: NDArray[np.complex128] = field(default_factory=lambda: _EMPTY_ROWS)
    halfspace_thresholds: RealVector = field(default_factory=lambda: np.zeros(0))
    disk_radius: float | RealVector | None = None
    ball_radius: float | None = None
    similarity_center: ComplexVector | None = None
    similarity_radius: float | None = None
    equality_rows: NDArray[np.complex128] = field(default_factory=lambda: _EMPTY_ROWS)
    equality_targets: ComplexVector = field(default_factory=lambda: np.zeros(0, dtype=complex))
    interior_point: ComplexVector | None = None

    def __post_init__(self) -> None:
        if not self.prox_weight > 0:
            raise ValidationError("prox weight must be positive", field="rho")
        n = self.n
        if self.quad.shape != (n, n):
            raise ValidationError("quadratic term shape mismatch", field="quad")
        if self.halfspace_rows.size and self.halfspace_rows.shape[1] != n:
            raise ValidationError("halfspace row length mismatch", field="halfspace_rows")
        if self.halfspace_rows.shape[0] != self.halfspace_thresholds.shape[0] and (
            self.halfspace_rows.size or self.halfspace_thresholds.size
        ):
            raise ValidationError("halfspace rows and thresholds disagree", field="halfspaces")
        if self.equality_rows.size and self.equality_rows.shape[1] != n:
            raise ValidationError("equality row length mismatch", field="equality_rows")
        if (self.similarity_center is None) != (self.similarity_radius is None):
            raise ValidationError("similarity needs both center and radius", field="similarity")

    @property
    def n(self) -> int:
        return int(self.linear.shape[0])

    @property
    def n_halfspaces(self) -> int:
        return int(self.halfspace_thresholds.shape[0])

    @property
    def n_equalities(self) -> int:
        return int(self.equality_targets.shape[0])

    def objective(self, x: ComplexVector) -> float:
        return (
            float(np.real(np.vdot(x, self.quad @ x)))
            - float(np.real(np.vdot(self.linear, x)))
            + 0.5 * self.prox_weight * float(np.sum(np.abs(x - self.prox_center) ** 2))
        )

    def with_objective(
        self,
        quad: NDArray[np.complex128],
        linear: ComplexVector,
        prox_weight: float,
        prox_center: ComplexVector,
    ) -> ConvexSubproblem:
        return replace(
            self, quad=quad, linear=linear, prox_weight=prox_weight, prox_center=prox_center
        )

    def without_halfspaces(self) -> ConvexSubproblem:
        return replace(
            self,
            halfspace_rows=_EMPTY_ROWS,
            halfspace_thresholds=np.zeros(0),
            interior_point=None,
        )

    def to_dict(self) -> dict[str, object]:
        def cplx(a: NDArray | None) -> object:
            if a is None:
                return None
            return np.stack([np.real(a), np.imag(a)], axis=-1).tolist()

        radius = self.disk_radius
        return {
            "n": self.n,
            "quad": cplx(self.quad),
            "linear": cplx(self.linear),
            "prox_weight": self.prox_weight,
            "prox_center": cplx(self.prox_center),
            "halfspace_rows": cplx(self.halfspace_rows),
            "halfspace_thresholds": self.halfspace_thresholds.tolist(),
            "disk_radius": None if radius is None else np.broadcast_to(radius, (self.n,)).tolist(),
            "ball_radius": self.ball_radius,
            "similarity_center": cplx(self.similarity_center),
            "similarity_radius": self.similarity_radius,
            "equality_rows": cplx(self.equality_rows),
            "equality_targets": cplx(self.equality_targets),
        }

    def to_json(self, path: Path) -> None:
        """Dump the subproblem for offline comparison against another solver."""
        path.write_text(json.dumps(self.to_dict()))


@dataclass(frozen=True, slots=True)
class SolveReport:
    solution: ComplexVector
    primal_infeasibility: float
    objective_value: float
    iterations: int
    status: SolveStatus
    duals: RealVector = field(default_factory=lambda: np.zeros(0))
    eq_duals: RealVector = field(default_factory=lambda: np.zeros(0))
    kkt: float = math.nan

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


# ---- Real embedding ------------------------------------------------------


def embed(x: ComplexVector) -> RealVector:
    return np.concatenate([np.real(x), np.imag(x)])


def unembed(z: RealVector) -> ComplexVector:
    n = z.shape[0] // 2
    return z[:n] + 1j * z[n : 2 * n]


def _real_rows(rows: NDArray[np.complex128]) -> RealMatrix:
    """Rows c with ``cᵀz = Re{hᴴx}``."""
    return np.hstack([np.real(rows), np.imag(rows)])


def _equality_system(p: ConvexSubproblem) -> tuple[RealMatrix, RealVector]:
    e = p.equality_rows
    re_rows = np.hstack([np.real(e), np.imag(e)])
    im_rows = np.hstack([-np.imag(e), np.real(e)])
    t = p.equality_targets
    return np.vstack([re_rows, im_rows]), np.concatenate([np.real(t), np.imag(t)])


class _Objective(Protocol):
    def value(self, z: RealVector) -> float: ...
    def grad(self, z: RealVector) -> RealVector: ...
    def hess(self, z: RealVector) -> RealMatrix: ...


class _Quadratic:
    """``½zᵀHz - hᵀz + c``."""

    def __init__(self, p: ConvexSubproblem) -> None:
        Dr, Di = np.real(p.quad), np.imag(p.quad)
        Q = np.block([[Dr, -Di], [Di, Dr]])
        zv = embed(p.prox_center)
        self.H = 2.0 * Q + p.prox_weight * np.eye(2 * p.n)
        self.H = 0.5 * (self.H + self.H.T)
        self.h = embed(p.linear) + p.prox_weight * zv
        self.c = 0.5 * p.prox_weight * float(zv @ zv)

    def value(self, z: RealVector) -> float:
        return float(0.5 * z @ (self.H @ z) - self.h @ z + self.c)

    def grad(self, z: RealVector) -> RealVector:
        return self.H @ z - self.h

    def hess(self, z: RealVector) -> RealMatrix:
        return self.H


class _SlackObjective:
    """``s + (δ/2)‖z - z_ref‖²`` on ``[z; s]``; δ keeps the problem bounded."""

    def __init__(self, z_ref: RealVector, ridge: float) -> None:
        self.z_ref = z_ref
        self.ridge = ridge
        self.dim = z_ref.shape[0] + 1

    def value(self, z: RealVector) -> float:
        d = z[:-1] - self.z_ref
        return float(z[-1] + 0.5 * self.ridge * d @ d)

    def grad(self, z: RealVector) -> RealVector:
        g = np.empty(self.dim)
        g[:-1] = self.ridge * (z[:-1] - self.z_ref)
        g[-1] = 1.0
        return g

    def hess(self, z: RealVector) -> RealMatrix:
        H = np.zeros((self.dim, self.dim))
        H[np.arange(self.dim - 1), np.arange(self.dim - 1)] = self.ridge
        return H


class _Constraints(Protocol):
    @property
    def count(self) -> int: ...
    def values(self, z: RealVector) -> RealVector: ...
    def jacobian(self, z: RealVector) -> RealMatrix: ...
    def curvature(self, w: RealVector) -> RealVector: ...


class _Inequalities:
    """All inequality families as ``f(z) <= 0``, ordered halfspaces, disks, ball."""

    def __init__(self, p: ConvexSubproblem) -> None:
        n = p.n
        self.n = n
        self.C = _real_rows(p.halfspace_rows) if p.n_halfspaces else np.zeros((0, 2 * n))
        self.gamma = np.asarray(p.halfspace_thresholds, dtype=float)
        idx, centers, r2 = [], [], []
        if p.disk_radius is not None:
            idx.append(np.arange(n))
            centers.append(np.zeros(n, dtype=complex))
            r2.append(np.broadcast_to(np.asarray(p.disk_radius, dtype=float) ** 2, (n,)))
        if p.similarity_center is not None and p.similarity_radius is not None:
            idx.append(np.arange(n))
            centers.append(np.asarray(p.similarity_center, dtype=complex))
            r2.append(np.full(n, p.similarity_radius**2))
        self.idx = np.concatenate(idx) if idx else np.zeros(0, dtype=np.int64)
        c = np.concatenate(centers) if centers else np.zeros(0, dtype=complex)
        self.cr, self.ci = np.real(c), np.imag(c)
        self.r2 = np.concatenate(r2) if r2 else np.zeros(0)
        self.ball = None if p.ball_radius is None else p.ball_radius**2
        self.n_half = self.C.shape[0]
        self.n_disk = self.idx.shape[0]

    @property
    def count(self) -> int:
        return self.n_half + self.n_disk + (self.ball is not None)

    def values(self, z: RealVector) -> RealVector:
        parts = [self.gamma - self.C @ z]
        dr = z[self.idx] - self.cr
        di = z[self.n + self.idx] - self.ci
        parts.append(dr * dr + di * di - self.r2)
        if self.ball is not None:
            parts.append(np.array([z @ z - self.ball]))
        return np.concatenate(parts)

    def jacobian(self, z: RealVector) -> RealMatrix:
        J = np.zeros((self.count, 2 * self.n))
        J[: self.n_half] = -self.C
        rows = self.n_half + np.arange(self.n_disk)
        J[rows, self.idx] = 2.0 * (z[self.idx] - self.cr)
        J[rows, self.n + self.idx] = 2.0 * (z[self.n + self.idx] - self.ci)
        if self.ball is not None:
            J[-1] = 2.0 * z
        return J

    def curvature(self, w: RealVector) -> RealVector:
        diag = np.zeros(2 * self.n)
        wd = 2.0 * w[self.n_half : self.n_half + self.n_disk]
        np.add.at(diag, self.idx, wd)
        np.add.at(diag, self.n + self.idx, wd)
        if self.ball is not None:
            diag += 2.0 * w[-1]
        return diag


class _WithSlack:
    """Constraints ``f_i(z) - a_i s <= 0`` on ``[z; s]``, optionally ``s >= -floor``."""

    def __init__(self, base: _Inequalities, weights: RealVector, floor: float | None) -> None:
        self.base = base
        self.a = weights
        self.floor = floor

    @property
    def count(self) -> int:
        return self.base.count + (self.floor is not None)

    def values(self, z: RealVector) -> RealVector:
        v = self.base.values(z[:-1]) - self.a * z[-1]
        if self.floor is not None:
            v = np.append(v, -self.floor - z[-1])
        return v

    def jacobian(self, z: RealVector) -> RealMatrix:
        J = np.hstack([self.base.jacobian(z[:-1]), -self.a[:, None]])
        if self.floor is not None:
            row = np.zeros(J.shape[1])
            row[-1] = -1.0
            J = np.vstack([J, row])
        return J

    def curvature(self, w: RealVector) -> RealVector:
        return np.append(self.base.curvature(w[: self.base.count]), 0.0)


# ---- Barrier core --------------------------------------------------------


class _Centering(StrEnum):
    CENTERED = "centered"
    BUDGET = "budget"
    BREAKDOWN = "breakdown"


@dataclass(slots=True)
class _BarrierOutcome:
    z: RealVector
    duals: RealVector
    iterations: int
    converged: bool


def _barrier_value(obj: _Objective, cons: _Constraints, z: RealVector, t: float) -> float:
    f = cons.values(z)
    if f.size and np.max(f) >= 0:
        return math.inf
    return t * obj.value(z) - float(np.sum(np.log(-f)))


def newton_direction(
    H: RealMatrix, grad: RealVector, ridge: float = 1e-12, attempts: int = 5
) -> RealVector | None:
    """Solve ``H d = -grad`` for symmetric positive (semi)definite ``H``.

    ``H`` is rescaled to unit diagonal before the Cholesky factorization; a
    failed factorization is retried with a ridge growing by 100 per attempt.
    Returns None when every attempt fails or the step is not finite.
    """
    scale = 1.0 / np.sqrt(np.maximum(np.diag(H), np.finfo(float).tiny))
    Hs = H * scale[:, None] * scale[None, :]
    rhs = -grad * scale
    diag = np.diag_indices_from(Hs)
    shift = 0.0
    for _ in range(attempts):
        M = Hs.copy()
        M[diag] += shift
        try:
            factor = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            shift = ridge if shift == 0.0 else 100.0 * shift
            continue
        step = scipy.linalg.cho_solve(factor, rhs, check_finite=False) * scale
        return step if np.all(np.isfinite(step)) else None
    return None


def _centering(
    obj: _Objective,
    cons: _Constraints,
    z: RealVector,
    t: float,
    basis: RealMatrix | None,
    settings: InnerSettings,
    budget: int,
) -> tuple[RealVector, int, _Centering]:
    for k in range(budget):
        f = cons.values(z)
        inv = 1.0 / -f
        J = cons.jacobian(z)
        grad = t * obj.grad(z) + J.T @ inv
        H = t * obj.hess(z) + (J.T * inv**2) @ J + np.diag(cons.curvature(inv))
        if basis is not None:
            grad_r, H_r = basis.T @ grad, basis.T @ H @ basis
        else:
            grad_r, H_r = grad, H
        step = newton_direction(H_r, grad_r, settings.newton_ridge)
        if step is None:
            return z, k, _Centering.BREAKDOWN
        decrement = float(-grad_r @ step)
        if not decrement > 0:
            return z, k, _Centering.BREAKDOWN
        if decrement / 2.0 <= settings.newton_tol:
            return z, k, _Centering.CENTERED
        dz = basis @ step if basis is not None else step

        alpha = 1.0
        while cons.count and np.max(cons.values(z + alpha * dz)) >= 0:
            alpha *= settings.backtrack
            if alpha < 1e-20:
                raise SolverError("line search cannot keep strict feasibility", step="barrier")
        phi0 = _barrier_value(obj, cons, z, t)
        while (
            _barrier_value(obj, cons, z + alpha * dz, t)
            > phi0 - settings.armijo * alpha * decrement
        ):
            alpha *= settings.backtrack
            if alpha < 1e-20:
                # flat to double precision
                return z, k + 1, _Centering.CENTERED
        z = z + alpha * dz
    return z, budget, _Centering.BUDGET


def _barrier(
    obj: _Objective,
    cons: _Constraints,
    z0: RealVector,
    basis: RealMatrix | None,
    settings: InnerSettings,
    *,
    t0: float,
    gap_tol: float,
) -> _BarrierOutcome:
    m = cons.count
    z, t, used = z0.copy(), t0, 0
    while True:
        z, k, state = _centering(obj, cons, z, t, basis, settings, settings.max_newton - used)
        used += k
        duals = 1.0 / (-t * cons.values(z)) if m else np.zeros(0)
        scale = max(1.0, abs(obj.value(z)))
        if state is _Centering.BREAKDOWN:
            accepted = m / t <= settings.feas_tol * scale
            logger.debug("barrier stopped t=%.3e gap=%.2e accepted=%s", t, m / t, accepted)
            return _BarrierOutcome(z, duals, used, accepted)
        centered = state is _Centering.CENTERED
        if centered and m / t <= gap_tol * scale:
            return _BarrierOutcome(z, duals, used, True)
        if used >= settings.max_newton:
            return _BarrierOutcome(z, duals, used, False)
        t *= settings.barrier_factor
        logger.debug("barrier t=%.3e newton=%d", t, used)


def _affine(
    p: ConvexSubproblem, settings: InnerSettings
) -> tuple[RealVector, RealMatrix | None] | None:
    """Particular solution and null-space basis of the equalities (None if inconsistent)."""
    n2 = 2 * p.n
    if not p.n_equalities:
        return np.zeros(n2), None
    E, e = _equality_system(p)
    z_p, *_ = np.linalg.lstsq(E, e, rcond=None)
    if np.linalg.norm(E @ z_p - e) > settings.feas_tol:
        return None
    return z_p, scipy.linalg.null_space(E)


def _project_affine(
    z: RealVector, z_p: RealVector, basis: RealMatrix | None
) -> RealVector:
    if basis is None:
        return z
    return z_p + basis @ (basis.T @ (z - z_p))


def _strictly_feasible(cons: _Inequalities, z: RealVector) -> bool:
    return cons.count == 0 or bool(np.max(cons.values(z)) < 0)


def _phase_one(
    p: ConvexSubproblem, settings: InnerSettings
) -> tuple[RealVector | None, RealVector, RealMatrix | None]:
    affine = _affine(p, settings)
    if affine is None:
        return None, np.zeros(2 * p.n), None
    z_p, basis = affine
    ineq = _Inequalities(p)
    if ineq.count == 0:
        return z_p, z_p, basis
    s0 = max(float(np.max(ineq.values(z_p))), 0.0) + 1.0
    cons = _WithSlack(ineq, np.ones(ineq.count), floor=1.0)
    obj = _SlackObjective(z_p, settings.phase1_ridge)
    basis_ext = None if basis is None else scipy.linalg.block_diag(basis, np.ones((1, 1)))
    out = _barrier(
        obj, cons, np.append(z_p, s0), basis_ext, settings, t0=1.0, gap_tol=settings.phase1_gap
    )
    z = out.z[:-1]
    if not _strictly_feasible(ineq, z):
        logger.debug("phase one: no strictly feasible point, s=%.3e", out.z[-1])
        return None, z_p, basis
    return z, z_p, basis


def find_interior_point(
    p: ConvexSubproblem, settings: InnerSettings | None = None
) -> ComplexVector | None:
    """A strictly feasible point of the constraint set, or None when none exists."""
    z, _, _ = _phase_one(p, settings or InnerSettings())
    return None if z is None else unembed(z)


def _infeasibility(p: ConvexSubproblem, ineq: _Inequalities, z: RealVector) -> float:
    worst = float(np.max(ineq.values(z), initial=0.0))
    if p.n_equalities:
        E, e = _equality_system(p)
        worst = max(worst, float(np.max(np.abs(E @ z - e))))
    return max(worst, 0.0)


def solve(
    p: ConvexSubproblem,
    settings: InnerSettings | None = None,
    warm_start: ComplexVector | None = None,
) -> SolveReport:
    """Solve one x-update subproblem.

    Starts from ``warm_start`` blended toward the cached interior point (the
    smallest blend weight that is strictly feasible) or from the interior
    point itself. Deterministic given its inputs.
    """
    settings = settings or InnerSettings()
    ineq = _Inequalities(p)
    obj = _Quadratic(p)

    affine = _affine(p, settings)
    anchor = None if p.interior_point is None else embed(p.interior_point)
    if affine is not None and anchor is not None:
        z_p, basis = affine
        anchor = _project_affine(anchor, z_p, basis)
        if not _strictly_feasible(ineq, anchor):
            anchor = None
    if anchor is None:
        anchor, z_p, basis = _phase_one(p, settings)
    if anchor is None or affine is None:
        return SolveReport(
            solution=p.prox_center.copy(),
            primal_infeasibility=math.inf,
            objective_value=math.nan,
            iterations=0,
            status=SolveStatus.INFEASIBLE,
        )

    start, warm = anchor, False
    if warm_start is not None:
        w = _project_affine(embed(warm_start), z_p, basis)
        for alpha in (0.0, 1e-3, 1e-2, 1e-1, 0.5):
            candidate = (1.0 - alpha) * w + alpha * anchor
            if _strictly_feasible(ineq, candidate):
                start, warm = candidate, True
                break

    m = ineq.count
    t0 = max(m, 1) / max(1.0, abs(obj.value(start)))
    if warm:
        t0 *= settings.warm_t_boost
    out = _barrier(obj, ineq, start, basis, settings, t0=t0, gap_tol=settings.gap_tol)
    x = unembed(out.z)
    value = p.objective(x)
    infeas = _infeasibility(p, ineq, out.z)
    kkt = kkt_residual(p, x, out.duals)
    status = SolveStatus.OPTIMAL
    if not (out.converged and infeas <= settings.feas_tol and kkt <= settings.kkt_tol):
        status = SolveStatus.MAX_ITER
        logger.debug(
            "x-update not optimal newton=%d infeas=%.2e kkt=%.2e", out.iterations, infeas, kkt
        )
    eq_duals = _equality_duals(p, ineq, out.z, out.duals) if p.n_equalities else np.zeros(0)
    return SolveReport(
        solution=x,
        primal_infeasibility=infeas,
        objective_value=value,
        iterations=out.iterations,
        status=status,
        duals=out.duals,
        eq_duals=eq_duals,
        kkt=kkt,
    )


def _stationarity(
    p: ConvexSubproblem, ineq: _Inequalities, z: RealVector, duals: RealVector
) -> RealVector:
    r = _Quadratic(p).grad(z)
    if ineq.count:
        r = r + ineq.jacobian(z).T @ duals
    return r


def _equality_duals(
    p: ConvexSubproblem, ineq: _Inequalities, z: RealVector, duals: RealVector
) -> RealVector:
    E, _ = _equality_system(p)
    nu, *_ = np.linalg.lstsq(E.T, -_stationarity(p, ineq, z, duals), rcond=None)
    return nu


def kkt_residual(
    p: ConvexSubproblem,
    x: ComplexVector,
    duals: RealVector,
    eq_duals: RealVector | None = None,
) -> float:
    """Scaled KKT residual: stationarity, complementary slackness, sign and feasibility.

    Stationarity is divided by ``1 + max(‖∇f₀‖, ‖Jᵀλ‖)`` and complementary
    slackness by ``1 + |f₀|``; dual sign and primal violations are absolute.
    ``duals`` follow the inequality order halfspaces, disks, similarity
    disks, ball. Missing equality multipliers are fitted by least squares.
    """
    ineq = _Inequalities(p)
    z = embed(x)
    duals = np.asarray(duals, dtype=float)
    if duals.shape != (ineq.count,):
        raise ValidationError(
            f"expected {ineq.count} inequality multipliers", field="duals", value=duals.shape
        )
    quad = _Quadratic(p)
    grad = quad.grad(z)
    pull = ineq.jacobian(z).T @ duals if ineq.count else np.zeros_like(grad)
    r = grad + pull
    if p.n_equalities:
        E, _ = _equality_system(p)
        nu = _equality_duals(p, ineq, z, duals) if eq_duals is None else eq_duals
        r = r + E.T @ nu
    stationarity = float(np.linalg.norm(r)) / (
        1.0 + max(float(np.linalg.norm(grad)), float(np.linalg.norm(pull)))
    )
    f = ineq.values(z) if ineq.count else np.zeros(0)
    complementary = float(np.sum(np.abs(duals * f))) / (1.0 + abs(quad.value(z)))
    dual_infeas = float(np.sum(np.maximum(-duals, 0.0)))
    return stationarity + complementary + dual_infeas + _infeasibility(p, ineq, z)


def maximize_min_margin(
    p: ConvexSubproblem, settings: InnerSettings | None = None
) -> tuple[ComplexVector, float] | None:
    """Maximize ``min_i(Re{hᵢᴴx} - γᵢ)`` over the non-halfspace constraints of ``p``.

    Solved in epigraph form ``min s`` s.t. ``γᵢ - Re{hᵢᴴx} <= s``. Returns the
    maximizer and the achieved minimum margin, or None when the remaining
    constraints have no interior.
    """
    settings = settings or InnerSettings()
    if p.disk_radius is None and p.ball_radius is None and p.similarity_center is None:
        raise ValidationError("maximin needs a bounded set (disks or ball)", field="constraints")
    if not p.n_halfspaces:
        raise ValidationError("maximin needs at least one halfspace row", field="halfspaces")
    base = p.without_halfspaces()
    anchor, _, basis = _phase_one(base, settings)
    if anchor is None:
        return None
    ineq = _Inequalities(p)
    weights = np.zeros(ineq.count)
    weights[: ineq.n_half] = 1.0
    cons = _WithSlack(ineq, weights, floor=None)
    s0 = float(np.max(ineq.values(anchor)[: ineq.n_half])) + 1.0
    obj = _SlackObjective(anchor, settings.phase1_ridge)
    basis_ext = None if basis is None else scipy.linalg.block_diag(basis, np.ones((1, 1)))
    out = _barrier(
        obj, cons, np.append(anchor, s0), basis_ext, settings, t0=1.0, gap_tol=settings.gap_tol
    )
    z = out.z[:-1]
    margin = float(np.min(-ineq.values(z)[: ineq.n_half]))
    logger.debug("maximin margin=%.4e newton=%d", margin, out.iterations)
    return unembed(z), margin


def constraint_violation(p: ConvexSubproblem, x: ComplexVector) -> float:
    """Largest violation of any constraint of ``p`` at ``x`` (0 when feasible)."""
    return _infeasibility(p, _Inequalities(p), embed(x))
