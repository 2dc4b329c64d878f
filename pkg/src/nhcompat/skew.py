"""Spectral decomposition of a skew tensor M_AB relative to a metric g_AB.

The generalized problem (M^2)_AB e^B = lambda g_AB e^B, with
(M^2)_BD = M_BA g^{AC} M_CD, is reduced with the Cholesky factor g = L L^T
to the standard symmetric problem for S = A A, A = L^{-1} M L^{-T}. A is an
ordinary skew matrix, so all pairing work is done in that frame and mapped
back: covariant components are L y, contravariant ones L^{-T} y.

All basis arrays store one vector per row.
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import linalg

from . import geometry
from .exceptions import PairingError, PreconditionError, RankParityError

DEFAULT_TOL_RANK = 1e-10
# consecutive kappa^2 closer than this (relative to the largest) are one eigenspace
CLUSTER_RTOL = 1e-8


def jacobi_eigh(S, tol=1e-15, max_sweeps=64):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with ``S V = V diag(w)`` and orthogonal ``V``; the
    eigenvalues are not sorted.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if n < 2 or scale == 0.0:
        return np.diag(A).copy(), V
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def metric_square(M, g):
    """(M^2)_BD = sum M_BA g^{AC} M_CD; symmetric and negative semi-definite."""
    M = np.asarray(M, dtype=float)
    K = M @ geometry.inverse(g) @ M
    return 0.5 * (K + K.T)


def quadratic_form(M, g, x):
    """Q(x) = sum (M^2)_BD x^B x^D."""
    x = np.asarray(x, dtype=float)
    return float(x @ metric_square(M, g) @ x)


def image_norm(M, g, x):
    """g-norm of the covector M x for a contravariant x."""
    return geometry.norm(g, np.asarray(M, dtype=float) @ np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SkewSpectrum:
    dim: int
    eigenvalues: np.ndarray
    kappas: np.ndarray
    rank: int
    eigenvectors: np.ndarray
    b_basis: Optional[np.ndarray] = None
    b_vectors: Optional[np.ndarray] = None
    pair_kappas: Optional[np.ndarray] = None

    @property
    def p(self):
        return self.rank // 2

    @property
    def has_b_basis(self):
        return self.b_basis is not None

    @property
    def kernel_basis(self):
        """Covariant kernel vectors b_{2p+1..N} (eigenvectors if no b-basis yet)."""
        src = self.b_basis if self.b_basis is not None else self.eigenvectors
        return src[self.rank:]

    @property
    def kernel_vectors(self):
        """Contravariant form of ``kernel_basis``."""
        if self.b_vectors is None:
            raise PreconditionError("b-basis has not been built")
        return self.b_vectors[self.rank:]


def _reduce(M, g):
    M = np.asarray(M, dtype=float)
    g = np.asarray(g, dtype=float)
    n = len(g)
    if M.shape != (n, n):
        raise ValueError(f"M has shape {M.shape}, metric has dimension {n}")
    if np.max(np.abs(M + M.T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(M), initial=0.0)):
        raise PreconditionError("M is not antisymmetric")
    L = geometry.cholesky(g)
    Linv = linalg.solve_triangular(L, np.eye(n), lower=True)
    A = Linv @ M @ Linv.T
    A = 0.5 * (A - A.T)
    return L, Linv, A


def _orient(y, L):
    """Flip y so the largest-magnitude covariant component is positive."""
    low = L @ y
    return -y if low[np.argmax(np.abs(low))] < 0 else y


def skew_spectrum(M, g, tol_rank=DEFAULT_TOL_RANK):
    """Eigenvalues lambda = -kappa^2 of M^2 relative to g, sorted by descending kappa.

    kappa^2 at or below ``tol_rank * max(kappa_max^2, 1)`` is set to zero;
    an odd number of survivors raises RankParityError.
    """
    L, _, A = _reduce(M, g)
    n = len(A)
    w, Y = jacobi_eigh(A @ A)
    k2 = np.maximum(-w, 0.0)
    order = np.argsort(-k2, kind="stable")
    k2 = k2[order]
    Y = Y[:, order]
    cutoff = tol_rank * max(k2[0] if n else 0.0, 1.0)
    k2[k2 <= cutoff] = 0.0
    rank = int(np.count_nonzero(k2))
    if rank % 2:
        raise RankParityError(
            f"{rank} nonzero eigenvalues after thresholding at {cutoff:.3g}; adjust tol_rank")
    for j in range(n):
        Y[:, j] = _orient(Y[:, j], L)
    evecs = (L @ Y).T
    return SkewSpectrum(
        dim=n,
        eigenvalues=np.where(k2 > 0.0, -k2, 0.0),
        kappas=np.sqrt(k2),
        rank=rank,
        eigenvectors=evecs,
    )


def _clusters(k2, rank):
    """Index groups of (numerically) equal nonzero kappa^2."""
    if rank == 0:
        return []
    tol = CLUSTER_RTOL * k2[0]
    groups = [[0]]
    for i in range(1, rank):
        if k2[groups[-1][-1]] - k2[i] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def build_b_basis(spec, M, g):
    """Attach the g-orthonormal b-basis adapted to M.

    Odd members b_{2v-1} are eigenvectors; b_{2v} = M b_{2v-1} / kappa_v;
    kernel members are the zero-eigenvalue eigenvectors. Inside a degenerate
    eigenspace the representative is chosen greedily: take the dominant
    eigenvector of the remaining subspace, pair it with its image under M,
    project both out, and repeat.
    """
    L, Linv, A = _reduce(M, g)
    n = spec.dim
    # reduced-frame eigenvectors: y = L^{-1} e_low
    Y = Linv @ spec.eigenvectors.T
    S = A @ A
    k2 = spec.kappas ** 2
    cols = []
    pair_kappas = []
    for group in _clusters(k2, spec.rank):
        if len(group) % 2:
            raise PairingError(f"eigenspace of kappa^2 = {k2[group[0]]:.6g} has odd dimension {len(group)}")
        W = Y[:, group]
        W, _ = np.linalg.qr(W)
        while W.shape[1] > 0:
            w_loc, V_loc = jacobi_eigh(W.T @ S @ W)
            y = W @ V_loc[:, np.argmin(w_loc)]
            y /= np.linalg.norm(y)
            y = _orient(y, L)
            z = W @ (W.T @ (A @ y))
            z -= (y @ z) * y
            kappa = np.linalg.norm(z)
            if kappa == 0.0:
                raise PairingError("vanishing image M b inside a nonzero eigenspace")
            z /= kappa
            cols += [y, z]
            pair_kappas.append(kappa)
            P = np.eye(n) - np.outer(y, y) - np.outer(z, z)
            U, sv, _ = np.linalg.svd(P @ W, full_matrices=False)
            keep = W.shape[1] - 2
            if keep and np.min(sv[:keep]) < 0.5:
                raise PairingError("re-orthogonalization inside a degenerate eigenspace failed")
            W = U[:, :keep]
    cols += [Y[:, j] for j in range(spec.rank, n)]
    B = np.column_stack(cols) if cols else np.zeros((n, 0))
    if np.max(np.abs(B.T @ B - np.eye(n)), initial=0.0) > 1e-8:
        raise PairingError("constructed b-basis is not orthonormal")
    return replace(
        spec,
        b_basis=(L @ B).T,
        b_vectors=(Linv.T @ B).T,
        pair_kappas=np.array(pair_kappas),
    )


def decompose(M, g, tol_rank=DEFAULT_TOL_RANK):
    """skew_spectrum followed by build_b_basis."""
    return build_b_basis(skew_spectrum(M, g, tol_rank), M, g)


@dataclass(frozen=True)
class BasisResiduals:
    ortho: float
    meq_odd: float
    meq_even: float
    eigen: float

    @property
    def worst(self):
        return max(self.ortho, self.meq_odd, self.meq_even, self.eigen)


def verify_basis(spec, M, g):
    """Max residuals of orthonormality, M b_odd = k b_even, M b_even = -k b_odd,
    and (M^2)_A^B b_B = -k^2 b_A, each evaluated directly."""
    if not spec.has_b_basis:
        raise PreconditionError("b-basis has not been built")
    M = np.asarray(M, dtype=float)
    ginv = geometry.inverse(g)
    B = spec.b_basis
    Bup = B @ ginv
    ortho = np.max(np.abs(B @ ginv @ B.T - np.eye(spec.dim)), initial=0.0)
    odd = even = 0.0
    lam = np.zeros(spec.dim)
    for v, kappa in enumerate(spec.pair_kappas):
        i, j = 2 * v, 2 * v + 1
        odd = max(odd, np.max(np.abs(M @ Bup[i] - kappa * B[j])))
        even = max(even, np.max(np.abs(M @ Bup[j] + kappa * B[i])))
        lam[i] = lam[j] = -kappa ** 2
    K_mixed = M @ ginv @ M @ ginv
    eig = np.max(np.abs(B @ K_mixed.T - lam[:, None] * B), initial=0.0)
    return BasisResiduals(float(ortho), float(odd), float(even), float(eig))
