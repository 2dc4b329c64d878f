"""Equations of motion for a natural Lagrangian L = T - V under a_A(q) qdot^A = 0.

Both systems are written as g qddot = f + (constraint force), where
f_A = -(dg_AB/dq^C - 1/2 dg_BC/dq^A) qdot^B qdot^C - dV/dq^A collects the
unconstrained Euler-Lagrange terms.

    d'Alembert:     constraint force = lambda a
    multiplier rule: constraint force = mudot a + mu M qdot

The multipliers lambda and mudot come from differentiating the constraint
once: C + a . qddot = 0 with C = (da_A/dq^B) qdot^B qdot^A. mu itself is a
state integrated alongside (q, qdot).
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import geometry
from .constraint import VANISHING_NORM
from .exceptions import DegeneratePointError, PreconditionError

DALEMBERT = "dalembert"
VAKONOMIC = "vakonomic"


@dataclass(frozen=True)
class Potential:
    """Velocity-independent potential V(q) with optional analytic gradient."""

    eval_fn: Callable[[np.ndarray], float]
    grad_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, q):
        return float(self.eval_fn(np.asarray(q, dtype=float)))

    def grad(self, q):
        q = np.asarray(q, dtype=float)
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(q), dtype=float)
        return geometry.central_jacobian(lambda x: np.array(self.eval_fn(x)), q)

    @classmethod
    def zero(cls):
        return cls(lambda q: 0.0, lambda q: np.zeros_like(q))

    @classmethod
    def harmonic(cls, k=1.0):
        return cls(lambda q: 0.5 * k * float(q @ q), lambda q: k * q)


@dataclass(frozen=True)
class NaturalLagrangian:
    metric: geometry.MetricField
    potential: Potential

    @property
    def dim(self):
        return self.metric.dim


@dataclass
class State:
    t: float
    q: np.ndarray
    qdot: np.ndarray
    mu: Optional[float] = None


def force_term(sys, q, qdot):
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    dg = sys.metric.partials(q)
    # dg[A, B, C] = d g_AB / d q^C
    t1 = np.einsum("abc,b,c->a", dg, qdot, qdot)
    t2 = np.einsum("bca,b,c->a", dg, qdot, qdot)
    return -(t1 - 0.5 * t2) - sys.potential.grad(q)


def _prepare(sys, a, q, qdot):
    g = np.asarray(sys.metric.eval_fn(q), dtype=float)
    geometry.cholesky(g)
    # g is small and validated SPD; one explicit inverse per call is cheapest
    ginv = np.linalg.inv(g)
    aq = a(q)
    a_up = ginv @ aq
    denom = float(aq @ a_up)
    if denom <= VANISHING_NORM ** 2:
        raise DegeneratePointError(f"constraint covector vanishes at q = {q}")
    J = a.jacobian(q)
    # J[A, B] qdot^B qdot^A; the contraction is symmetric in the two indices
    C = float(qdot @ J @ qdot)
    return ginv, aq, a_up, denom, C, J, force_term(sys, q, qdot)


@dataclass(frozen=True)
class RhsResult:
    qddot: np.ndarray
    multiplier: float


def dalembert_rhs(sys, a, state):
    """qddot and lambda for g qddot = f + lambda a."""
    q, qdot = np.asarray(state.q, float), np.asarray(state.qdot, float)
    ginv, aq, a_up, denom, C, _, f = _prepare(sys, a, q, qdot)
    f_up = ginv @ f
    lam = -(C + aq @ f_up) / denom
    return RhsResult(f_up + lam * a_up, float(lam))


def vakonomic_rhs(sys, a, state, M_at_q=None):
    """qddot and mudot for g qddot = f + mudot a + mu M qdot."""
    q, qdot = np.asarray(state.q, float), np.asarray(state.qdot, float)
    if state.mu is None:
        raise PreconditionError("vakonomic_rhs needs a state with mu")
    ginv, aq, a_up, denom, C, J, f = _prepare(sys, a, q, qdot)
    if M_at_q is None:
        M_at_q = J - J.T
    force = f + state.mu * (np.asarray(M_at_q, dtype=float) @ qdot)
    force_up = ginv @ force
    mudot = -(C + aq @ force_up) / denom
    return RhsResult(force_up + mudot * a_up, float(mudot))


def energy(sys, state):
    g = sys.metric(state.q)
    qdot = np.asarray(state.qdot, dtype=float)
    return float(0.5 * qdot @ g @ qdot + sys.potential(state.q))


def drift(a, state):
    return float(a(state.q) @ np.asarray(state.qdot, dtype=float))


@dataclass
class Trajectory:
    system: str
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    multiplier: np.ndarray
    energy: np.ndarray
    drift: np.ndarray
    mu: Optional[np.ndarray] = None
    error: Optional[str] = None

    def __len__(self):
        return len(self.t)

    @property
    def ok(self):
        return self.error is None

    def state(self, i):
        mu = None if self.mu is None else float(self.mu[i])
        return State(float(self.t[i]), self.q[i], self.qdot[i], mu)


def project_velocity(g, a_at_q, qdot):
    """qdot - (a.qdot / a^T g^-1 a) g^-1 a."""
    a_up = geometry.raise_index(g, a_at_q)
    return qdot - (a_at_q @ qdot) / (a_at_q @ a_up) * a_up


def integrate(sys, a, which, q0, qdot0, mu0=0.0, T=1.0, h=1e-3, project=False):
    """Classic fixed-step RK4 on (q, qdot[, mu]).

    The multiplier column holds lambda (d'Alembert) or mudot (multiplier
    rule). A degenerate constraint mid-run stops the integration and returns
    the samples so far with ``error`` set.
    """
    if which not in (DALEMBERT, VAKONOMIC):
        raise ValueError(f"unknown system {which!r}")
    if h <= 0 or T < h:
        raise ValueError("need h > 0 and T >= h")
    n = sys.dim
    q0 = np.asarray(q0, dtype=float)
    qdot0 = np.asarray(qdot0, dtype=float)
    if q0.shape != (n,) or qdot0.shape != (n,):
        raise ValueError(f"initial data must have dimension {n}")
    g0 = sys.metric(q0)
    a0 = a(q0)
    scale = geometry.norm(g0, a0) * geometry.vector_norm(g0, qdot0)
    if abs(a0 @ qdot0) > 1e-10 * scale:
        raise PreconditionError(f"initial velocity violates the constraint: a.qdot = {a0 @ qdot0:.3g}")

    vak = which == VAKONOMIC

    def rhs(y):
        q, qd = y[:n], y[n:2 * n]
        if vak:
            r = vakonomic_rhs(sys, a, State(0.0, q, qd, y[2 * n]))
            return np.concatenate([qd, r.qddot, [r.multiplier]]), r.multiplier
        r = dalembert_rhs(sys, a, State(0.0, q, qd))
        return np.concatenate([qd, r.qddot]), r.multiplier

    steps = int(round(T / h))
    y = np.concatenate([q0, qdot0, [mu0]]) if vak else np.concatenate([q0, qdot0])
    ys, mults = [], []
    error = None
    try:
        k1, m = rhs(y)
        ys.append(y.copy())
        mults.append(m)
        for _ in range(steps):
            k2, _ = rhs(y + 0.5 * h * k1)
            k3, _ = rhs(y + 0.5 * h * k2)
            k4, _ = rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if project:
                q = y[:n]
                y[n:2 * n] = project_velocity(sys.metric(q), a(q), y[n:2 * n])
            k1, m = rhs(y)
            ys.append(y.copy())
            mults.append(m)
    except DegeneratePointError as exc:
        error = str(exc)

    Y = np.array(ys).reshape(len(ys), -1)
    t = h * np.arange(len(ys))
    q, qd = Y[:, :n], Y[:, n:2 * n]
    mu = Y[:, 2 * n] if vak else None
    states = [State(t[i], q[i], qd[i]) for i in range(len(t))]
    return Trajectory(
        system=which,
        t=t,
        q=q,
        qdot=qd,
        multiplier=np.array(mults),
        energy=np.array([energy(sys, s) for s in states]),
        drift=np.array([drift(a, s) for s in states]),
        mu=mu,
        error=error,
    )


@dataclass(frozen=True)
class Comparison:
    sup_q_distance: float
    first_crossing: Optional[float]
    epsilon: float
    t: np.ndarray
    distance: np.ndarray

    def table(self, every=1):
        return [(float(t), float(d)) for t, d in zip(self.t[::every], self.distance[::every])]


def compare(traj_a, traj_b, metric=None, epsilon=1e-2):
    """Pointwise distance between two q-curves on the same time grid.

    The distance at each sample is the g-norm of the coordinate difference,
    with g evaluated on ``traj_a``; Euclidean when ``metric`` is None.
    """
    if len(traj_a.t) != len(traj_b.t) or not np.allclose(traj_a.t, traj_b.t, rtol=0, atol=1e-12):
        raise ValueError("trajectories are not on the same time grid")
    diff = traj_a.q - traj_b.q
    if metric is None:
        dist = np.linalg.norm(diff, axis=1)
    else:
        dist = np.array([geometry.vector_norm(metric(q), d) for q, d in zip(traj_a.q, diff)])
    over = np.nonzero(dist > epsilon)[0]
    return Comparison(
        sup_q_distance=float(np.max(dist)) if len(dist) else 0.0,
        first_crossing=float(traj_a.t[over[0]]) if len(over) else None,
        epsilon=epsilon,
        t=traj_a.t.copy(),
        distance=dist,
    )
