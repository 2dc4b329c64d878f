"""Constraint one-forms a_A(q), their curl M_AB(q), and integrability tests."""
import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import geometry
from .exceptions import DegeneratePointError

DEFAULT_TOL = 1e-7
VANISHING_NORM = 1e-10


@dataclass(frozen=True)
class ConstraintForm:
    """Covector field a_A(q) defining the constraint sum_A a_A(q) qdot^A = 0.

    ``jacobian(q)[A, B]`` is d a_A / d q^B, analytic if ``jacobian_fn`` is
    given and central differences otherwise.
    """

    dim: int
    eval_fn: Callable[[np.ndarray], np.ndarray]
    jacobian_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}, got shape {q.shape}")
        return np.asarray(self.eval_fn(q), dtype=float)

    def jacobian(self, q):
        q = np.asarray(q, dtype=float)
        if self.jacobian_fn is not None:
            return np.asarray(self.jacobian_fn(q), dtype=float)
        return geometry.central_jacobian(self.eval_fn, q)

    def scaled(self, factor, factor_grad):
        """The form phi(q) * a(q), given phi and its gradient as callables."""
        def ev(q):
            return factor(q) * self(q)

        def jac(q):
            return factor(q) * self.jacobian(q) + np.outer(self(q), factor_grad(q))

        return ConstraintForm(self.dim, ev, jac)


def curl(a, q):
    """M_AB = d a_A/d q^B - d a_B/d q^A, explicitly antisymmetrized."""
    J = a.jacobian(q)
    M = J - J.T
    return 0.5 * (M - M.T)


def condition_count(n):
    """Number of independent integrating-factor conditions, (N-1)(N-2)/2."""
    if int(n) != n or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n}")
    n = int(n)
    return (n - 1) * (n - 2) // 2


def frobenius_triples(a):
    """Index triples (k, B, C) spanning the integrating-factor conditions.

    With pivot k = argmax |a_k| (nonzero) every condition on (A, B, C) is a
    linear combination of the ones containing k, so these are independent
    and there are condition_count(N) of them.
    """
    a = np.asarray(a)
    k = int(np.argmax(np.abs(a)))
    rest = [i for i in range(a.size) if i != k]
    return [(k, b, c) for b, c in itertools.combinations(rest, 2)]


def frobenius_terms(a, M):
    """|a_A M_BC + a_B M_CA + a_C M_AB| for every A < B < C."""
    n = len(a)
    out = []
    for A, B, C in itertools.combinations(range(n), 3):
        out.append(a[A] * M[B, C] + a[B] * M[C, A] + a[C] * M[A, B])
    return np.abs(np.array(out))


@dataclass(frozen=True)
class IntegrabilityReport:
    max_closedness_residual: float
    max_frobenius_residual: float
    max_closedness_normalized: float
    max_frobenius_normalized: float
    n_conditions: int
    n_samples: int
    n_skipped: int


def integrability_report(a, g, chart, n_samples=64, n_random=0, seed=0):
    """Residuals of the closedness and integrating-factor conditions on a chart.

    Raw maxima are max |M_AB| and max over triples of
    |a_A M_BC + a_B M_CA + a_C M_AB|. The normalized maxima divide by
    max(|dA|, 1e-30) (Frobenius norm of the Jacobian) and by
    max(|a| |M|, 1e-30) respectively, so they are invariant under a -> c a.
    Points where |a| <= 1e-10 are skipped.
    """
    if chart.dim != a.dim:
        raise ValueError(f"chart dimension {chart.dim} does not match constraint dimension {a.dim}")
    pts = chart.sample(n_samples, n_random=n_random, seed=seed)
    closed = frob = closed_n = frob_n = 0.0
    skipped = 0
    for q in pts:
        gq = g(q)
        aq = a(q)
        a_norm = geometry.norm(gq, aq)
        if a_norm <= VANISHING_NORM:
            skipped += 1
            continue
        J = a.jacobian(q)
        M = J - J.T
        m_abs = np.max(np.abs(M))
        closed = max(closed, m_abs)
        closed_n = max(closed_n, m_abs / max(np.linalg.norm(J), 1e-30))
        if a.dim >= 3:
            f = np.max(frobenius_terms(aq, M))
            frob = max(frob, f)
            frob_n = max(frob_n, f / max(a_norm * geometry.operator_norm(M, gq), 1e-30))
    return IntegrabilityReport(
        max_closedness_residual=float(closed),
        max_frobenius_residual=float(frob),
        max_closedness_normalized=float(closed_n),
        max_frobenius_normalized=float(frob_n),
        n_conditions=condition_count(a.dim),
        n_samples=len(pts),
        n_skipped=skipped,
    )


class ConstraintClass(str, enum.Enum):
    HOLONOMIC_EXACT = "HolonomicExact"
    INTEGRABLE_WITH_FACTOR = "IntegrableWithFactor"
    GENUINELY_NONHOLONOMIC = "GenuinelyNonholonomic"
    INDETERMINATE = "Indeterminate"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Classification:
    """Sample-certified class label: the residuals only certify the
    necessary conditions at the sampled points."""

    label: ConstraintClass
    report: IntegrabilityReport
    tol: float


def classify(a, g, chart, tol=DEFAULT_TOL, n_samples=64, n_random=0, seed=0):
    if tol <= 0:
        raise ValueError("tol must be positive")
    rep = integrability_report(a, g, chart, n_samples=n_samples, n_random=n_random, seed=seed)
    if rep.n_skipped == rep.n_samples:
        label = ConstraintClass.INDETERMINATE
    elif rep.max_closedness_normalized <= tol:
        label = ConstraintClass.HOLONOMIC_EXACT
    elif rep.max_frobenius_normalized <= tol:
        label = ConstraintClass.INTEGRABLE_WITH_FACTOR
    else:
        label = ConstraintClass.GENUINELY_NONHOLONOMIC
    return Classification(label, rep, tol)


def require_nonvanishing(g, a_at_q):
    n = geometry.norm(g, a_at_q)
    if n <= VANISHING_NORM:
        raise DegeneratePointError(f"constraint covector vanishes (|a| = {n:.3g})")
    return n


__all__ = [
    "ConstraintForm", "ConstraintClass", "Classification", "IntegrabilityReport",
    "curl", "condition_count", "frobenius_triples", "frobenius_terms",
    "integrability_report", "classify", "require_nonvanishing",
]
