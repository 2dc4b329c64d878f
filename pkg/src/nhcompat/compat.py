"""Pointwise compatibility of the d'Alembert and multiplier-rule equations.

Coinciding solutions force M qdot = Gamma a at every point of the motion.
Contracting with a^A trades Gamma for

    R(q, qdot) = a^A M_AB qdot^B = +/- |a| |M qdot|,

so M qdot must equal +/- (|M qdot| / |a|) a. The functions below evaluate
that condition, its kernel/span case split, and the counts of extra
conditions it imposes on the initial data. Passing the screen is necessary
but not sufficient for coinciding solutions.
"""
import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry, skew
from .constraint import curl, require_nonvanishing
from .exceptions import PreconditionError

DEFAULT_TOL = 1e-8


class Case(str, enum.Enum):
    TRIVIALLY_COMPATIBLE = "TriviallyCompatible"
    KERNEL = "KernelCase"
    SPAN = "SpanCase"

    def __str__(self):
        return self.value


def capital_R(a_at_q, M_at_q, g_at_q, qdot):
    """R = sum a^A M_AB qdot^B with a^A raised by g."""
    a_up = geometry.raise_index(g_at_q, a_at_q)
    return float(a_up @ np.asarray(M_at_q, dtype=float) @ np.asarray(qdot, dtype=float))


def compat_residual(a_at_q, M_at_q, g_at_q, qdot):
    """min over s = +1, -1 of | M qdot - s (|M qdot| / |a|) a |, all norms in g."""
    a = np.asarray(a_at_q, dtype=float)
    a_norm = require_nonvanishing(g_at_q, a)
    v = np.asarray(M_at_q, dtype=float) @ np.asarray(qdot, dtype=float)
    c = geometry.norm(g_at_q, v) / a_norm
    return min(geometry.norm(g_at_q, v - s * c * a) for s in (1.0, -1.0))


def three_dim_obstruction(a_at_q, M_at_q):
    """a1 M23 + a2 M31 + a3 M12; nonzero means no admissible solution for N = 3."""
    a = np.asarray(a_at_q, dtype=float)
    M = np.asarray(M_at_q, dtype=float)
    if a.shape != (3,) or M.shape != (3, 3):
        raise ValueError("three_dim_obstruction is defined for N = 3 only")
    return float(a[0] * M[1, 2] + a[1] * M[2, 0] + a[2] * M[0, 1])


def kernel_direction_3d(M_at_q):
    """(M23, M31, M12): spans the kernel of a nonzero skew 3x3 matrix."""
    M = np.asarray(M_at_q, dtype=float)
    return np.array([M[1, 2], M[2, 0], M[0, 1]])


@dataclass(frozen=True)
class ConsistencyCounts:
    velocity_conditions: int
    orthogonality_conditions: int
    total: int


def consistency_counts(n, p, full_rank=None):
    """Extra conditions on (q0, qdot0) demanded by coinciding solutions.

    2p < N: 2p - 1 velocity conditions plus N - 2p orthogonality conditions;
    2p = N: N - 1 velocity conditions. For N = 3 the lone orthogonality
    condition is the integrating-factor condition itself (a condition on q0
    that a genuinely non-holonomic form always violates), so it is not counted
    and the total is 2p - 1 = 1.
    """
    if p < 1 or 2 * p > n:
        raise ValueError(f"need 1 <= p and 2p <= N, got N={n}, p={p}")
    is_full = 2 * p == n
    if full_rank is not None and bool(full_rank) != is_full:
        raise ValueError(f"full_rank={full_rank} inconsistent with N={n}, p={p}")
    if is_full:
        return ConsistencyCounts(n - 1, 0, n - 1)
    if n == 3:
        return ConsistencyCounts(1, 0, 1)
    return ConsistencyCounts(2 * p - 1, n - 2 * p, n - 1)


@dataclass(frozen=True)
class VelocityFamily:
    """General solution of M qdot = (|M qdot| / |a|) a at a point.

    ``span_direction`` is the contravariant coefficient of |M qdot| in the
    span part; the kernel part is any combination of ``kernel_vectors``
    restricted by a . qdot = 0, leaving ``admissible_kernel_dims`` free
    parameters.
    """

    span_direction: np.ndarray
    kernel_basis: np.ndarray
    kernel_vectors: np.ndarray
    kernel_a_components: np.ndarray
    admissible_kernel_dims: int
    a_components: np.ndarray


def velocity_family(a_at_q, M_at_q, g_at_q, spectrum, tol=DEFAULT_TOL):
    if not spectrum.has_b_basis:
        raise PreconditionError("velocity_family needs a spectrum with its b-basis")
    a = np.asarray(a_at_q, dtype=float)
    a_norm = require_nonvanishing(g_at_q, a)
    # (b_mu, a) = b_mu^A a_A
    omega = spectrum.b_vectors @ a
    z = np.zeros(spectrum.dim)
    for v, kappa in enumerate(spectrum.pair_kappas):
        i, j = 2 * v, 2 * v + 1
        z += (omega[j] * spectrum.b_vectors[i] - omega[i] * spectrum.b_vectors[j]) / kappa
    z /= a_norm
    k_dims = spectrum.dim - spectrum.rank
    kern = omega[spectrum.rank:]
    restricted = k_dims > 0 and np.linalg.norm(kern) > tol * a_norm
    return VelocityFamily(
        span_direction=z,
        kernel_basis=spectrum.kernel_basis,
        kernel_vectors=spectrum.kernel_vectors,
        kernel_a_components=kern,
        admissible_kernel_dims=k_dims - 1 if restricted else k_dims,
        a_components=omega,
    )


@dataclass(frozen=True)
class CompatVerdict:
    case: Case
    constraint_residual: float
    compat_residual: float
    compat_residual_normalized: float
    R: float
    rank: int
    kernel_coefficients: np.ndarray = field(repr=False)
    representation_residual: float = 0.0
    orthogonality_residual: float = 0.0
    n_velocity_conditions: int = 0
    n_orthogonality_conditions: int = 0
    n_total_conditions: int = 0
    compatible_at_point: bool = True
    obstruction_3d: Optional[float] = None
    # passing is only a necessary condition for coinciding solutions
    necessary_only: bool = True

    def summary(self):
        return {
            "case": str(self.case),
            "compatible_at_point": bool(self.compatible_at_point),
            "necessary_only": self.necessary_only,
            "constraint_residual": self.constraint_residual,
            "compat_residual": self.compat_residual,
            "compat_residual_normalized": self.compat_residual_normalized,
            "R": self.R,
            "rank": self.rank,
            "representation_residual": self.representation_residual,
            "orthogonality_residual": self.orthogonality_residual,
            "kernel_coefficients": [float(x) for x in self.kernel_coefficients],
            "consistency_conditions": {
                "velocity": self.n_velocity_conditions,
                "orthogonality": self.n_orthogonality_conditions,
                "total": self.n_total_conditions,
            },
            "obstruction_3d": self.obstruction_3d,
        }


def verdict_at_point(a_at_q, M_at_q, g_at_q, qdot0, spectrum=None, tol=DEFAULT_TOL):
    """Case analysis of the compatibility equations at fixed initial data.

    Residuals are compared with ``tol * (|M| |qdot| + |a|)``. Raises
    PreconditionError if qdot0 violates the constraint.
    """
    a = np.asarray(a_at_q, dtype=float)
    M = np.asarray(M_at_q, dtype=float)
    g = np.asarray(g_at_q, dtype=float)
    qdot = np.asarray(qdot0, dtype=float)
    n = len(a)
    a_norm = require_nonvanishing(g, a)
    qd_norm = geometry.vector_norm(g, qdot)
    cons = abs(float(a @ qdot))
    if cons > tol * a_norm * qd_norm:
        raise PreconditionError(f"initial velocity violates the constraint: |a.qdot| = {cons:.3g}")
    m_norm = geometry.operator_norm(M, g)
    scale = m_norm * qd_norm + a_norm
    res = compat_residual(a, M, g, qdot)
    R = capital_R(a, M, g, qdot)
    obst = three_dim_obstruction(a, M) if n == 3 else None
    common = dict(
        constraint_residual=cons,
        compat_residual=res,
        compat_residual_normalized=res / scale,
        R=R,
        obstruction_3d=obst,
    )
    if m_norm <= tol:
        return CompatVerdict(case=Case.TRIVIALLY_COMPATIBLE, rank=0,
                             kernel_coefficients=np.array([]), compatible_at_point=True, **common)

    if spectrum is None or not spectrum.has_b_basis:
        spectrum = skew.decompose(M, g) if spectrum is None else skew.build_b_basis(spectrum, M, g)
    counts = consistency_counts(n, spectrum.p)
    counts_kw = dict(
        n_velocity_conditions=counts.velocity_conditions,
        n_orthogonality_conditions=counts.orthogonality_conditions,
        n_total_conditions=counts.total,
    )
    k = spectrum.rank
    gamma = spectrum.b_basis[k:] @ qdot
    mq_norm = geometry.norm(g, M @ qdot)
    if mq_norm <= tol * scale:
        rep = geometry.vector_norm(g, qdot - gamma @ spectrum.b_vectors[k:]) if n > k else qd_norm
        condam = abs(float(gamma @ (spectrum.b_vectors[k:] @ a))) if n > k else 0.0
        ok = rep <= tol * scale and condam <= tol * scale
        return CompatVerdict(case=Case.KERNEL, rank=k, kernel_coefficients=gamma,
                             representation_residual=rep, orthogonality_residual=condam,
                             compatible_at_point=bool(ok), **counts_kw, **common)

    orth = float(np.max(np.abs(spectrum.b_vectors[k:] @ a), initial=0.0))
    ok = res <= tol * scale and orth <= tol * a_norm
    return CompatVerdict(case=Case.SPAN, rank=k, kernel_coefficients=gamma,
                         orthogonality_residual=orth, compatible_at_point=bool(ok),
                         **counts_kw, **common)


def initial_data_verdict(a, g, q0, qdot0, tol=DEFAULT_TOL, spectrum=None):
    """verdict_at_point for a ConstraintForm and MetricField at q0."""
    q0 = np.asarray(q0, dtype=float)
    M = curl(a, q0)
    return verdict_at_point(a(q0), M, g(q0), qdot0, spectrum=spectrum, tol=tol)
