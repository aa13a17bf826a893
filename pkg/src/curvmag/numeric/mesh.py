"""Polygonal meshes with cotangent weights and lumped vertex masses.

Three families are built here: the subdivided icosahedron on the unit
sphere, a periodic square grid on the flat torus, and a scaled icosphere
for the ellipsoid.  Every mesh stores its edges once in canonical
orientation ``i < j`` together with the face/edge incidence needed for
link-phase assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import ValidationError


@dataclass(frozen=True, eq=False)
class Mesh:
    """Closed oriented polygonal surface.

    ``faces`` are vertex cycles (counter-clockwise seen from outside),
    ``weights`` the cotangent edge weights and ``masses`` the dual areas.
    ``curvature`` holds a Gaussian curvature value per vertex chosen so
    that ``sum(masses * curvature) == 2*pi*chi`` up to rounding.
    """

    kind: str
    positions: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    masses: np.ndarray
    face_areas: np.ndarray
    curvature: np.ndarray
    genus: int
    # face -> (edge index, sign relative to canonical orientation)
    face_edges: np.ndarray = field(repr=False, default=None)
    face_signs: np.ndarray = field(repr=False, default=None)
    # torus only: edges crossing the x and y seams with the sign of the +x/+y direction
    seams: dict = field(default_factory=dict, repr=False)
    params: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.masses)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def total_area(self) -> float:
        return float(self.masses.sum())

    def stiffness(self) -> sp.csr_matrix:
        """Symmetric positive semi-definite cotangent stiffness matrix W."""
        n = self.n_vertices
        i, j = self.edges[:, 0], self.edges[:, 1]
        w = self.weights
        rows = np.concatenate([i, j, i, j])
        cols = np.concatenate([j, i, i, j])
        vals = np.concatenate([-w, -w, w, w])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Discrete Laplace-Beltrami operator, Delta f = -M^{-1} W f."""
        return -(self.stiffness() @ f) / self.masses

    def integrate(self, f: np.ndarray) -> float:
        return float(np.dot(self.masses, f))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "genus": self.genus,
            "vertices": self.positions.tolist(),
            "masses": self.masses.tolist(),
            "faces": self.faces.tolist(),
            "edges": self.edges.tolist(),
            "weights": self.weights.tolist(),
        }


def _edge_table(faces: np.ndarray):
    k = faces.shape[1]
    a = faces.reshape(-1)
    b = np.roll(faces, -1, axis=1).reshape(-1)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    pairs = np.stack([lo, hi], axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    face_edges = inverse.reshape(-1, k)
    face_signs = np.where(a < b, 1, -1).reshape(-1, k)
    counts = np.bincount(inverse, minlength=len(edges))
    if np.any(counts != 2):
        raise ValidationError("mesh is not a closed manifold surface")
    return edges, face_edges, face_signs


def _cotan_weights(positions, faces, edges, face_edges):
    """w_ij = (cot a + cot b)/2 summed over the two triangles sharing ij."""
    w = np.zeros(len(edges))
    p = positions
    for k in range(3):
        i, j, o = faces[:, k], faces[:, (k + 1) % 3], faces[:, (k + 2) % 3]
        u = p[i] - p[o]
        v = p[j] - p[o]
        cot = np.einsum("ij,ij->i", u, v) / np.linalg.norm(np.cross(u, v), axis=1)
        np.add.at(w, face_edges[:, k], 0.5 * cot)
    return w


def _flat_areas(positions, faces):
    p = positions
    return 0.5 * np.linalg.norm(np.cross(p[faces[:, 1]] - p[faces[:, 0]],
                                         p[faces[:, 2]] - p[faces[:, 0]]), axis=1)


def _spherical_areas(positions, faces):
    # Van Oosterom-Strackee solid angle of each triangle on the unit sphere
    a, b, c = positions[faces[:, 0]], positions[faces[:, 1]], positions[faces[:, 2]]
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2 * np.arctan2(num, den)


def _lumped(faces, areas, n):
    m = np.zeros(n)
    for k in range(faces.shape[1]):
        np.add.at(m, faces[:, k], areas / faces.shape[1])
    return m


def _angle_defect(positions, faces, n):
    ang = np.zeros(n)
    p = positions
    for k in range(3):
        i, j, o = faces[:, k], faces[:, (k + 1) % 3], faces[:, (k + 2) % 3]
        u = p[i] - p[o]
        v = p[j] - p[o]
        cosang = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        np.add.at(ang, o, np.arccos(np.clip(cosang, -1, 1)))
    return 2 * np.pi - ang


_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def _icosahedron():
    t = (1 + 5 ** 0.5) / 2
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True), _ICO_FACES.copy()


def _subdivide(verts, faces):
    verts = list(map(tuple, verts))
    cache = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in cache:
            m = np.add(verts[a], verts[b])
            m = m / np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(tuple(m))
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.array(verts), np.array(out)


def icosphere_points(level: int):
    if level < 0:
        raise ValidationError("refinement level must be non-negative")
    v, f = _icosahedron()
    for _ in range(level):
        v, f = _subdivide(v, f)
    return v, f


def _triangle_mesh(kind, positions, faces, masses, face_areas, curvature, genus, params):
    edges, fe, fs = _edge_table(faces)
    w = _cotan_weights(positions, faces, edges, fe)
    return Mesh(kind=kind, positions=positions, faces=faces, edges=edges, weights=w,
                masses=masses, face_areas=face_areas, curvature=curvature, genus=genus,
                face_edges=fe, face_signs=fs, params=params)


def sphere_mesh(level: int) -> Mesh:
    """Unit-sphere icosphere with 10*4**level + 2 vertices.

    Masses are one third of the adjacent spherical triangle areas, so the
    total area is 4*pi to rounding and K = 1 integrates to 4*pi.
    """
    v, f = icosphere_points(level)
    areas = _spherical_areas(v, f)
    m = _lumped(f, areas, len(v))
    return _triangle_mesh("sphere", v, f, m, areas, np.ones(len(v)), 0, {"level": level})


def ellipsoid_mesh(a: float, b: float, c: float, level: int) -> Mesh:
    """Scaled icosphere; vertex curvature is angle defect over dual area."""
    if min(a, b, c) <= 0:
        raise ValidationError("ellipsoid semi-axes must be positive")
    v, f = icosphere_points(level)
    v = v * np.array([a, b, c])
    areas = _flat_areas(v, f)
    m = _lumped(f, areas, len(v))
    K = _angle_defect(v, f, len(v)) / m
    return _triangle_mesh("ellipsoid", v, f, m, areas, K, 0,
                          {"a": a, "b": b, "c": c, "level": level})


def torus_mesh(n: int, side: float = 2 * np.pi) -> Mesh:
    """Periodic n x n square grid on the flat torus [0, side)^2.

    The cotangent weights of the right-triangle split reduce to the
    five-point stencil, so faces are kept as squares with unit weights on
    axis edges and mass h^2 per vertex.
    """
    if n < 3:
        raise ValidationError("torus grid needs n >= 3")
    h = side / n
    idx = np.arange(n * n).reshape(n, n)  # idx[j, i] = i + n*j
    i = np.tile(np.arange(n), n)
    j = np.repeat(np.arange(n), n)
    pos = np.stack([i * h, j * h, np.zeros(n * n)], axis=1)
    v00 = idx[j, i]
    v10 = idx[j, (i + 1) % n]
    v11 = idx[(j + 1) % n, (i + 1) % n]
    v01 = idx[(j + 1) % n, i]
    faces = np.stack([v00, v10, v11, v01], axis=1)
    edges, fe, fs = _edge_table(faces)
    w = np.ones(len(edges))
    masses = np.full(n * n, h * h)
    lookup = {tuple(e): k for k, e in enumerate(edges.tolist())}

    def seam(pairs):
        ks, sg = [], []
        for a, b in pairs:  # directed a -> b in the + direction
            ks.append(lookup[(min(a, b), max(a, b))])
            sg.append(1 if a < b else -1)
        return np.array(ks), np.array(sg)

    seams = {
        "x": seam([(idx[r, n - 1], idx[r, 0]) for r in range(n)]),
        "y": seam([(idx[n - 1, col], idx[0, col]) for col in range(n)]),
    }
    return Mesh(kind="torus", positions=pos, faces=faces, edges=edges, weights=w,
                masses=masses, face_areas=np.full(n * n, h * h), curvature=np.zeros(n * n),
                genus=1, face_edges=fe, face_signs=fs, seams=seams,
                params={"n": n, "side": side})
