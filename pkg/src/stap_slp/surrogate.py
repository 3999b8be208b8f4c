"""Majorizer of the negated concentrated objective ``f(x) = -(A₀x)ᴴW(x)⁻¹(A₀x)``.

``(s, W) ↦ sᴴW⁻¹s`` is jointly convex, so its first-order expansion at
``(s_t, W_t)`` lower-bounds it everywhere. With ``q = W_t⁻¹A₀x_t`` and
``g_f = A_fᴴ q`` this gives the convex quadratic upper bound

    f(x) <= xᴴD_t x - Re{b_tᴴ x} + c₂,
    D_t = Σ_f g_f g_fᴴ,   b_t = 2A₀ᴴq,   c₂ = σ_r²‖q‖²,

tight at ``x_t``. X_t = x_t x_tᴴ is rank one, so D_t is assembled from the F
vectors g_f and one Cholesky solve; the cost per MM iteration is
``O(K³ + F·K·MNNₜ + F·(MNNₜ)²)`` with K = MNN_r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .geometry import ComplexVector
from .operators import OperatorSet
from .radar import solve_echo


@dataclass(frozen=True, slots=True)
class SurrogateCoeffs:
    d_matrix: NDArray[np.complex128]
    b_vector: ComplexVector
    const_offset: float
    iterate: ComplexVector

    def curvature_scale(self) -> float:
        """``max(λ_max(D_t), ‖b_t‖ / 2‖x_t‖)``; 1 when both vanish."""
        n = self.d_matrix.shape[0]
        top = 0.0
        if n and np.any(self.d_matrix):
            top = float(
                scipy.linalg.eigvalsh(
                    self.d_matrix, subset_by_index=[n - 1, n - 1], check_finite=False
                )[0]
            )
        norm_x = float(np.linalg.norm(self.iterate))
        slope = float(np.linalg.norm(self.b_vector)) / (2.0 * norm_x) if norm_x > 0 else 0.0
        scale = max(top, slope)
        return scale if scale > 0 and math.isfinite(scale) else 1.0

    def normalized(self) -> SurrogateCoeffs:
        """The surrogate divided by :meth:`curvature_scale`.

        Positive scaling leaves the minimizers over any set unchanged and puts
        the ADMM penalty on a scale-free footing.
        """
        s = self.curvature_scale()
        return replace(
            self,
            d_matrix=self.d_matrix / s,
            b_vector=self.b_vector / s,
            const_offset=self.const_offset / s,
        )


def build_surrogate(ops: OperatorSet, x_t: ComplexVector) -> SurrogateCoeffs:
    sol = solve_echo(ops, x_t)
    G = ops.adjoint_clutter(sol.whitened)  # (F, MNNt), row f = g_f
    D = G.T @ G.conj()
    D = 0.5 * (D + D.conj().T)
    b = 2.0 * ops.a0.adjoint(sol.whitened)
    quad = float(np.real(np.vdot(x_t, D @ x_t)))
    lin = float(np.real(np.vdot(b, x_t)))
    return SurrogateCoeffs(
        d_matrix=D,
        b_vector=b,
        const_offset=-sol.objective - (quad - lin),
        iterate=x_t.copy(),
    )


def surrogate_value(c: SurrogateCoeffs, x: ComplexVector) -> float:
    """``xᴴD_t x - Re{b_tᴴ x} + c₂``."""
    return (
        float(np.real(np.vdot(x, c.d_matrix @ x)))
        - float(np.real(np.vdot(c.b_vector, x)))
        + c.const_offset
    )


def surrogate_gradient(c: SurrogateCoeffs, x: ComplexVector) -> ComplexVector:
    """Gradient ``2D_t x - b_t`` in the convention ``∇ = ∂/∂Re + j ∂/∂Im``."""
    return 2.0 * (c.d_matrix @ x) - c.b_vector


def mm_objective(ops: OperatorSet, x: ComplexVector) -> float:
    """``f(x) = -g(x)``, the quantity the MM iterations decrease."""
    return -solve_echo(ops, x).objective
