"""Metric fields on a single coordinate chart.

Covectors (lower-index objects such as the constraint ``a_A``) and vectors
(upper-index objects such as velocities) are both plain 1-D arrays; the
functions here convert between the two with the metric ``g_AB(q)``.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from .exceptions import FactorizationError

SYMMETRY_RTOL = 1e-12


def fd_step(x):
    """Central-difference step for coordinate value(s) ``x``."""
    return 1e-6 * np.maximum(1.0, np.abs(x))


def central_jacobian(fun, q):
    """d fun / d q by central differences; the derivative axis is appended last."""
    q = np.asarray(q, dtype=float)
    h = fd_step(q)
    cols = []
    for c in range(q.size):
        dq = np.zeros_like(q)
        dq[c] = h[c]
        cols.append((np.asarray(fun(q + dq)) - np.asarray(fun(q - dq))) / (2.0 * h[c]))
    return np.stack(cols, axis=-1)


def cholesky(g):
    """Lower Cholesky factor of ``g``; raises FactorizationError if g is not SPD."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise FactorizationError(f"metric must be square, got shape {g.shape}")
    if np.abs(g - g.T).max() > SYMMETRY_RTOL * np.abs(g).max():
        raise FactorizationError("metric is not symmetric")
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError("metric is not positive definite") from exc


def inverse(g):
    """g^{AB}, computed through the Cholesky factor."""
    L = cholesky(g)
    Linv = linalg.solve_triangular(L, np.eye(len(g)), lower=True)
    return Linv.T @ Linv


def raise_index(g, a):
    """Covariant -> contravariant: solve g x = a."""
    a = _check_vec(g, a)
    return linalg.cho_solve((cholesky(g), True), a)


def lower_index(g, x):
    """Contravariant -> covariant: g x."""
    x = _check_vec(g, x)
    cholesky(g)
    return np.asarray(g, dtype=float) @ x


def raise_lower(g, direction, components):
    if direction == "raise":
        return raise_index(g, components)
    if direction == "lower":
        return lower_index(g, components)
    raise ValueError(f"direction must be 'raise' or 'lower', got {direction!r}")


def inner(g, u, v):
    """Inner product of two covectors, sum g^{AB} u_A v_B."""
    u = _check_vec(g, u)
    v = _check_vec(g, v)
    return float(u @ raise_index(g, v))


def norm(g, u):
    return float(np.sqrt(max(inner(g, u, u), 0.0)))


def vector_norm(g, x):
    """g-norm of a contravariant vector, sqrt(g_AB x^A x^B)."""
    x = _check_vec(g, x)
    return float(np.sqrt(max(x @ np.asarray(g, dtype=float) @ x, 0.0)))


def operator_norm(M, g):
    """sup over unit-g-norm vectors x of the g-norm of the covector M x."""
    L = cholesky(g)
    Linv = linalg.solve_triangular(L, np.eye(len(g)), lower=True)
    return float(np.linalg.norm(Linv @ np.asarray(M, dtype=float) @ Linv.T, 2))


def _check_vec(g, v):
    v = np.asarray(v, dtype=float)
    n = np.shape(g)[0]
    if v.shape != (n,):
        raise ValueError(f"expected a length-{n} vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class MetricField:
    """Metric tensor g_AB(q) given as an evaluation callback.

    ``partials(q)`` returns ``dg[A, B, C] = d g_AB / d q^C``. When no analytic
    partials are supplied they are taken by central differences.
    """

    dim: int
    eval_fn: Callable[[np.ndarray], np.ndarray]
    partials_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}, got shape {q.shape}")
        g = np.asarray(self.eval_fn(q), dtype=float)
        cholesky(g)
        return g

    def partials(self, q):
        q = np.asarray(q, dtype=float)
        if self.partials_fn is not None:
            return np.asarray(self.partials_fn(q), dtype=float)
        return central_jacobian(self.eval_fn, q)

    @classmethod
    def identity(cls, dim):
        eye = np.eye(dim)
        zero = np.zeros((dim, dim, dim))
        return cls(dim, lambda q: eye, lambda q: zero)

    @classmethod
    def constant(cls, g):
        g = np.array(g, dtype=float)
        cholesky(g)
        n = len(g)
        zero = np.zeros((n, n, n))
        return cls(n, lambda q: g, lambda q: zero)


@dataclass(frozen=True)
class Chart:
    """Coordinate box D_q, one closed interval per coordinate."""

    bounds: tuple

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        for i, (lo, hi) in enumerate(b):
            if not lo < hi:
                raise ValueError(f"chart interval {i} is degenerate: [{lo}, {hi}]")
        object.__setattr__(self, "bounds", b)

    @property
    def dim(self):
        return len(self.bounds)

    @property
    def lower(self):
        return np.array([lo for lo, _ in self.bounds])

    @property
    def upper(self):
        return np.array([hi for _, hi in self.bounds])

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    @classmethod
    def box(cls, lo, hi, dim):
        return cls(((lo, hi),) * dim)

    def sample(self, n_samples, n_random=0, seed=0):
        """Deterministic lattice (ceil(n^(1/N)) points per axis) plus the centre,
        followed by ``n_random`` uniform points drawn from ``seed``."""
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        k = int(np.ceil(n_samples ** (1.0 / self.dim) - 1e-12))
        if k == 1:
            pts = self.center[None, :]
        else:
            axes = [np.linspace(lo, hi, k) for lo, hi in self.bounds]
            grid = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([x.ravel() for x in grid], axis=1)
            pts = np.vstack([pts, self.center])
        if n_random:
            rng = np.random.default_rng(seed)
            pts = np.vstack([pts, rng.uniform(self.lower, self.upper, size=(n_random, self.dim))])
        return pts
