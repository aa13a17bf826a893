"""Lowest eigenpairs of A v = lambda M v with diagonal M, plus clustering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import IndeterminateKernelError, SolverError, ValidationError
from ..report import csv_text

DENSE_LIMIT = 500
GAP = 0.15
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    clusters: list  # list of index lists

    @property
    def cluster_means(self) -> list[float]:
        return [float(np.mean(self.values[c])) for c in self.clusters]

    @property
    def cluster_sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]

    def to_csv(self) -> str:
        label = {i: k for k, c in enumerate(self.clusters) for i in c}
        rows = [(i, float(v), float(r), label[i]) for i, (v, r) in
                enumerate(zip(self.values, self.residuals))]
        return csv_text(["index", "lambda", "residual", "cluster"], rows)

    def to_dict(self) -> dict:
        return {
            "values": [float(v) for v in self.values],
            "residuals": [float(r) for r in self.residuals],
            "cluster_means": self.cluster_means,
            "cluster_sizes": self.cluster_sizes,
        }


def cluster(values, gap: float = GAP) -> list[list[int]]:
    """Split sorted values where the jump exceeds ``gap`` relative to the local scale.

    The scale floor 1e-3*max|lambda| keeps near-zero eigenvalues together.
    """
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return []
    floor = 1e-3 * max(float(np.max(np.abs(values))), 1e-300)
    groups, cur = [], [0]
    for i in range(1, len(values)):
        a, b = values[i - 1], values[i]
        if b - a > gap * max(abs(a), abs(b), floor):
            groups.append(cur)
            cur = []
        cur.append(i)
    groups.append(cur)
    return groups


def _residuals(A, mass, vals, vecs):
    R = A @ vecs - vecs * vals[None, :] * mass[:, None]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(vecs, axis=0)


def solve_lowest(A, mass, k: int, *, dense_limit: int = DENSE_LIMIT, gap: float = GAP,
                 lower_bound: float | None = None, maxiter: int | None = None) -> EigenResult:
    """k smallest eigenpairs of the Hermitian pencil (A, diag(mass))."""
    n = A.shape[0]
    if k < 1 or k >= n:
        raise ValidationError("k must satisfy 1 <= k < dimension")
    mass = np.asarray(mass, dtype=float)
    if np.any(mass <= 0):
        raise ValidationError("mass weights must be positive")
    s = 1 / np.sqrt(mass)
    if n < dense_limit:
        Ad = A.toarray() if sp.issparse(A) else np.asarray(A)
        vals, y = la.eigh(Ad * s[:, None] * s[None, :], subset_by_index=[0, k - 1])
        vecs = y * s[:, None]
    else:
        S = sp.diags(s)
        H = (S @ A @ S).tocsc()
        if lower_bound is None:
            # Gershgorin bound for the scaled matrix
            Hd = H.diagonal().real
            off = np.asarray(abs(H).sum(axis=1)).ravel() - np.abs(Hd)
            lower_bound = float(np.min(Hd - off))
        sigma = lower_bound - 1e-3 * (1 + abs(lower_bound))
        try:
            vals, y = spla.eigsh(H, k=k, sigma=sigma, which="LM", tol=0, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"eigsh did not converge: {len(exc.eigenvalues)} of {k} pairs") from exc
        order = np.argsort(vals)
        vals, y = vals[order], y[:, order]
        vecs = y * s[:, None]
    vals = np.real(vals)
    res = _residuals(A, mass, vals, vecs)
    bad = res > RESIDUAL_TOL * max(1.0, float(np.max(np.abs(vals))))
    if np.any(bad):
        raise SolverError(f"residual check failed: max residual {res.max():.3e}")
    return EigenResult(values=vals, vectors=vecs, residuals=res, clusters=cluster(vals, gap))


def lowest_eigs(op, k: int, **kw) -> EigenResult:
    """Lowest eigenpairs of a DiscreteMagneticOperator."""
    if k >= op.dimension / 4:
        raise ValidationError("k must be below dimension/4")
    # the magnetic form is non-negative, so min(U, 0) bounds the spectrum from below
    kw.setdefault("lower_bound", min(float(np.min(op.potential)), 0.0))
    return solve_lowest(op.matrix, op.mass, k, **kw)


def kernel_dimension(op, gap_tol: float = 0.1, k: int = 16, result: EigenResult | None = None) -> int:
    """Size of the lowest cluster if it sits at zero relative to the next cluster.

    Returns 0 when the lowest cluster is clearly positive.  Raises
    IndeterminateKernelError when no gap is visible or the spectrum dips
    clearly below zero.
    """
    res = result if result is not None else lowest_eigs(op, min(k, op.dimension // 4 - 1))
    means = res.cluster_means
    if len(means) < 2:
        raise IndeterminateKernelError("no spectral gap among the computed eigenvalues")
    m0, m1 = means[0], means[1]
    if m1 <= 0:
        raise IndeterminateKernelError("second cluster is not positive")
    if abs(m0) <= gap_tol * m1:
        return len(res.clusters[0])
    if m0 > 0:
        return 0
    raise IndeterminateKernelError(f"lowest cluster {m0:.3e} lies below zero")
