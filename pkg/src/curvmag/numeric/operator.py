"""Discrete magnetic Schrodinger operators on gauged meshes.

The quadratic form is sum_e w_e |psi_i - exp(i theta_e) psi_j|^2 plus the
lumped potential sum_i m_i U_i |psi_i|^2.  Eigenpairs solve the
generalised problem A v = lambda M v with the diagonal mass matrix M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import ValidationError
from .gauged import GaugedMesh, gauge_mesh
from .mesh import Mesh, sphere_mesh, torus_mesh


@dataclass(frozen=True, eq=False)
class DiscreteMagneticOperator:
    matrix: sp.csr_matrix
    mass: np.ndarray
    gauged: GaugedMesh
    potential: np.ndarray
    meta: dict

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def mesh(self) -> Mesh:
        return self.gauged.mesh

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.getH()
        return float(abs(d).max()) if d.nnz else 0.0

    def to_dict(self) -> dict:
        coo = self.matrix.tocoo()
        return {
            "meta": self.meta,
            "mesh": self.gauged.to_dict(),
            "potential": self.potential.tolist(),
            "matrix": {
                "shape": list(coo.shape),
                "row": coo.row.tolist(),
                "col": coo.col.tolist(),
                "re": coo.data.real.tolist(),
                "im": coo.data.imag.tolist(),
            },
        }


def assemble(gauged: GaugedMesh, potential=0.0, meta=None) -> DiscreteMagneticOperator:
    mesh = gauged.mesh
    n = mesh.n_vertices
    U = np.broadcast_to(np.asarray(potential, dtype=float), (n,)).copy()
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    w = mesh.weights
    link = w * np.exp(1j * gauged.phase)
    diag = np.bincount(i, w, n) + np.bincount(j, w, n) + mesh.masses * U
    rows = np.concatenate([i, j, np.arange(n)])
    cols = np.concatenate([j, i, np.arange(n)])
    vals = np.concatenate([-link, -np.conj(link), diag.astype(complex)])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return DiscreteMagneticOperator(matrix=A, mass=mesh.masses.copy(), gauged=gauged,
                                    potential=U, meta=dict(meta or {}))


def build_sphere_monopole(q: int, refinement: int, potential=0.0) -> DiscreteMagneticOperator:
    """Unit sphere with uniform field B = q/2, i.e. total flux 2*pi*q."""
    if refinement < 2:
        raise ValidationError("sphere refinement must be >= 2")
    if int(q) != q:
        raise ValidationError("monopole charge q must be an integer")
    mesh = sphere_mesh(refinement)
    g = gauge_mesh(mesh, int(q))
    return assemble(g, potential, {"surface": "sphere", "q": int(q), "B": q / 2,
                                   "refinement": refinement})


def build_torus_landau(b: int, n: int, bloch=(0.0, 0.0), side: float = 2 * np.pi,
                       potential=0.0) -> DiscreteMagneticOperator:
    """Flat torus [0, side)^2 with b flux quanta spread uniformly over n*n plaquettes."""
    if int(b) != b:
        raise ValidationError("flux b must be an integer")
    if n * n <= 4 * abs(b):
        raise ValidationError("resolution guard violated: need n^2 > 4|b|")
    mesh = torus_mesh(n, side)
    g = gauge_mesh(mesh, int(b), bloch)
    B = 2 * np.pi * b / side ** 2
    return assemble(g, potential, {"surface": "torus", "b": int(b), "B": B, "n": n,
                                   "side": side, "bloch": [float(t) for t in bloch]})


def gauge_transform(op: DiscreteMagneticOperator, chi: np.ndarray) -> sp.csr_matrix:
    """Matrix of the operator after the vertex gauge change psi -> exp(i chi) psi."""
    G = sp.diags(np.exp(1j * np.asarray(chi, dtype=float)))
    return (G @ op.matrix @ G.getH()).tocsr()
