"""U(1) link phases realising prescribed face fluxes on a closed mesh.

Face fluxes are integers in units of 2*pi/D with D = 2**32, so the flux
ledger (sum of face fluxes = 2*pi*b) holds exactly in integer arithmetic.
Phases are found in a spanning-tree gauge: primal tree links carry phase
zero, the remaining links are fixed face by face along a dual spanning
tree, and the 2g leftover links (non-contractible cycles) start at zero.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .mesh import Mesh

DENOM = 2 ** 32


def assign_face_fluxes(weights: np.ndarray, quanta: int, denom: int = DENOM) -> np.ndarray:
    """Split ``quanta * denom`` into integer face fluxes proportional to ``weights``.

    Largest-remainder rounding; ties resolve by face index.
    """
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ValidationError("face weights must be non-negative with positive sum")
    total = int(quanta) * denom
    sign = 1 if total >= 0 else -1
    ideal = abs(total) * weights / weights.sum()
    base = np.floor(ideal).astype(np.int64)
    short = abs(total) - int(base.sum())
    order = np.lexsort((np.arange(len(ideal)), -(ideal - base)))
    base[order[:short]] += 1
    return sign * base


def _primal_tree(mesh: Mesh) -> np.ndarray:
    n = mesh.n_vertices
    adj = [[] for _ in range(n)]
    for k, (i, j) in enumerate(mesh.edges.tolist()):
        adj[i].append((j, k))
        adj[j].append((i, k))
    in_tree = np.zeros(mesh.n_edges, dtype=bool)
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u, k in sorted(adj[v]):
            if not seen[u]:
                seen[u] = True
                in_tree[k] = True
                queue.append(u)
    if not seen.all():
        raise ValidationError("mesh is not connected")
    return in_tree


def _dual_tree(mesh: Mesh, in_tree: np.ndarray):
    """BFS over faces through non-tree edges; returns (order, parent edge)."""
    edge_faces = [[] for _ in range(mesh.n_edges)]
    for f, row in enumerate(mesh.face_edges.tolist()):
        for k in row:
            edge_faces[k].append(f)
    parent = np.full(mesh.n_faces, -1)
    seen = np.zeros(mesh.n_faces, dtype=bool)
    seen[0] = True
    order = [0]
    queue = deque([0])
    while queue:
        f = queue.popleft()
        for k in sorted(mesh.face_edges[f].tolist()):
            if in_tree[k]:
                continue
            a, b = edge_faces[k]
            g = b if a == f else a
            if not seen[g]:
                seen[g] = True
                parent[g] = k
                order.append(g)
                queue.append(g)
    return order, parent


def tree_cotree_phases(mesh: Mesh, face_flux: np.ndarray, denom: int = DENOM) -> np.ndarray:
    """Integer edge phases (mod denom) whose face holonomies equal ``face_flux``."""
    face_flux = np.asarray(face_flux, dtype=np.int64)
    if int(face_flux.sum()) % denom:
        raise ValidationError("total flux must be an integer number of quanta")
    in_tree = _primal_tree(mesh)
    order, parent = _dual_tree(mesh, in_tree)
    phase = np.zeros(mesh.n_edges, dtype=np.int64)
    for f in reversed(order[1:]):
        e = parent[f]
        edges, signs = mesh.face_edges[f], mesh.face_signs[f]
        pos = int(np.flatnonzero(edges == e)[0])
        rest = int(np.dot(np.delete(signs, pos), np.delete(phase[edges], pos)))
        phase[e] = (int(signs[pos]) * (int(face_flux[f]) - rest)) % denom
    return phase


def holonomies(mesh: Mesh, phase: np.ndarray, denom: int = DENOM) -> np.ndarray:
    """Face holonomies of integer phases, reduced to [0, denom)."""
    return (mesh.face_signs * phase[mesh.face_edges]).sum(axis=1) % denom


@dataclass(frozen=True, eq=False)
class GaugedMesh:
    """Mesh with link phases; ``int_phase`` is exact, ``phase`` in radians."""

    mesh: Mesh
    face_flux: np.ndarray
    int_phase: np.ndarray
    phase: np.ndarray
    quanta: int
    bloch: tuple = (0.0, 0.0)
    denom: int = DENOM

    @property
    def total_flux(self) -> float:
        """Total flux divided by 2*pi; an exact integer by construction."""
        return int(self.face_flux.sum()) // self.denom

    def check(self) -> bool:
        return bool(np.all(holonomies(self.mesh, self.int_phase, self.denom)
                           == np.mod(self.face_flux, self.denom)))

    def to_dict(self) -> dict:
        d = self.mesh.to_dict()
        d["phases"] = np.stack([np.cos(self.phase), np.sin(self.phase)], axis=1).tolist()
        d["face_flux_units"] = self.face_flux.tolist()
        d["flux_denominator"] = self.denom
        d["total_flux"] = self.total_flux
        d["bloch"] = list(self.bloch)
        return d


def gauge_mesh(mesh: Mesh, quanta: int, bloch=(0.0, 0.0)) -> GaugedMesh:
    """Uniform field: face flux proportional to face area, total 2*pi*quanta."""
    flux = assign_face_fluxes(mesh.face_areas, quanta)
    ip = tree_cotree_phases(mesh, flux)
    phase = 2 * np.pi * ip.astype(float) / DENOM
    bloch = tuple(float(b) for b in bloch)
    if any(bloch):
        if mesh.genus != 1 or not mesh.seams:
            raise ValidationError("Bloch phases are only defined on the torus")
        phase = phase.copy()
        for name, theta in zip(("x", "y"), bloch):
            ks, sg = mesh.seams[name]
            phase[ks] += sg * theta
    return GaugedMesh(mesh=mesh, face_flux=flux, int_phase=ip, phase=phase,
                      quanta=int(quanta), bloch=bloch)
