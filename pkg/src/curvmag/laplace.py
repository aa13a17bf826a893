"""Laplace transformations of gauge classes, quasi-cyclic chains and the
curved sinh-Poisson type equation Delta_h phi = c + 2K - 4 exp(phi).

One Laplace step sends (B, U) to
    B~ = B + (1/2) Delta_h ln|U - B| - K,    U~ = U - B - B~,
and shifts the flux by 2g - 2.  Sampled fields use the cotangent-FEM
Laplacian of their mesh; closed-form fields with constant U - B need no
discretisation at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla
import sympy as sp

from .errors import (ChainBreakdownError, DegenerateLevelError, InadmissibleConstantError,
                     IntegralObstructionError, PreconditionError, QuantisationError, StagnationError,
                     ValidationError)
from .gauge import GaugeClass, ScalarField, flux
from .surface import ConformalChart, ConformalSurface, x_sym, y_sym

FLUX_TOL = 1e-4


def _mesh_for(cls: GaugeClass, surface: ConformalSurface, mesh=None):
    m = cls.mesh or mesh
    return m if m is not None else surface.mesh()


def laplace_step(cls: GaugeClass, surface: ConformalSurface, mesh=None) -> GaugeClass:
    """One Laplace transformation; the shift is carried unchanged.

    U - B must be nonzero with one sign everywhere; the logarithm uses its
    absolute value.
    """
    diff = cls.U - cls.B
    if diff.tagged and diff.is_constant(surface):
        if diff.is_zero(surface):
            raise DegenerateLevelError("U - B vanishes: the Laplace transformation is undefined")
        B_new = cls.B - ScalarField.curvature(1, 0)
        return GaugeClass(B_new, cls.U - cls.B - B_new, cls.shift)
    m = _mesh_for(cls, surface, mesh)
    d = diff.on_mesh(m)
    if np.any(d == 0) or (d.min() < 0 < d.max()):
        raise DegenerateLevelError("U - B changes sign or vanishes on the mesh")
    K = ScalarField.sampled(m.curvature, m)
    lap = ScalarField.sampled(0.5 * m.laplacian(np.log(np.abs(d))), m)
    B_new = cls.B + lap - K
    return GaugeClass(B_new, cls.U - cls.B - B_new, cls.shift)


def quasi_cyclic_constant(b0: int, N: int, genus: int, area: float | None = None, *,
                          area_over_2pi: Fraction | None = None, check: bool = True):
    """c with c A / (2 pi) = 2 N b0 + N (N - 1)(2g - 2).

    Exact (a Fraction) when ``area_over_2pi`` is rational.
    """
    if N < 1:
        raise ValidationError("N must be at least 1")
    if int(b0) != b0:
        raise ValidationError("b0 must be an integer")
    rhs = 2 * N * int(b0) + N * (N - 1) * (2 * genus - 2)
    if area_over_2pi is not None:
        c = Fraction(rhs) / Fraction(area_over_2pi)
    elif area is not None:
        c = 2 * np.pi * rhs / float(area)
    else:
        raise ValidationError("area or area_over_2pi is required")
    if check and not c > 0:
        raise InadmissibleConstantError(f"c = {c} is not positive")
    return c


def quasi_cyclic_feasible(b0: int, N: int, genus: int) -> bool:
    return b0 > genus - 1 and b0 + 2 * N * (genus - 1) > genus - 1


def predicted_dimensions(b0: int, N: int, genus: int):
    """Dimensions of the levels -c and 0, or None outside the feasible range."""
    if not quasi_cyclic_feasible(b0, N, genus):
        return None
    return {"level_minus_c": b0 + (2 * N - 1) * (genus - 1), "level_zero": b0 - genus + 1}


@dataclass(frozen=True, eq=False)
class LaplaceChain:
    classes: list
    fluxes: list
    c: Fraction | float
    genus: int
    area: float
    b0: int
    end_residuals: tuple = (None, None)
    quasi_cyclic: bool = False
    feasible: bool = True
    levels: dict = field(default_factory=dict)

    @property
    def flux_increments(self) -> list:
        return [b - a for a, b in zip(self.fluxes, self.fluxes[1:])]

    def to_dict(self, surface: ConformalSurface | None = None) -> dict:
        per_step = []
        for k, cls in enumerate(self.classes):
            entry = {"k": k, "flux": self.fluxes[k]}
            if cls.B.tagged and cls.U.tagged:
                entry.update(cls.to_dict())
            else:
                m = cls.mesh
                idx = np.linspace(0, m.n_vertices - 1, 16).astype(int)
                entry["diagnostic_vertices"] = idx.tolist()
                entry["B"] = cls.B.on_mesh(m)[idx].tolist()
                entry["U"] = cls.U.on_mesh(m)[idx].tolist()
            per_step.append(entry)
        return {"b0": self.b0, "c": self.c, "genus": self.genus, "area": self.area,
                "steps": per_step, "flux_increments": self.flux_increments,
                "end_residuals": list(self.end_residuals), "quasi_cyclic": self.quasi_cyclic,
                "feasible": self.feasible, "levels": self.levels}


def _flux_value(B, surface):
    f = flux(B, surface)
    return f.exact if f.exact is not None else f.value


def _end_residual(field_: ScalarField, target, surface):
    d = field_ + target  # field + c should vanish
    if d.tagged and d.is_constant(surface):
        v = d.constant_value(surface)
        return v if isinstance(v, Fraction) else abs(float(v))
    vals = d.on_mesh(d.mesh) if not d.tagged else d.on_mesh(field_.mesh)
    return float(np.max(np.abs(vals)))


def run_quasi_cyclic(b0: int, N: int, surface: ConformalSurface, B0, *, mesh=None,
                     tol: float = 1e-6) -> LaplaceChain:
    """Apply N Laplace steps from (B0, -B0) and check the quasi-cyclic end conditions."""
    if not surface.closed:
        raise ValidationError("quasi-cyclic chains need a closed surface")
    g = surface.genus
    if not quasi_cyclic_feasible(b0, N, g):
        raise PreconditionError(f"b0 = {b0} is not feasible for N = {N}, genus {g}")
    B0 = B0 if isinstance(B0, ScalarField) else ScalarField.constant(B0)
    fb = flux(B0, surface)
    if abs(fb.value - b0) > FLUX_TOL:
        raise QuantisationError(f"flux of B0 is {fb.value}, expected {b0}")
    c = quasi_cyclic_constant(b0, N, g, surface.total_area, area_over_2pi=surface.area_over_2pi)
    classes = [GaugeClass(B0, -B0)]
    for k in range(N):
        try:
            classes.append(laplace_step(classes[-1], surface, mesh))
        except DegenerateLevelError as exc:
            raise ChainBreakdownError(k, str(exc)) from None
    fluxes = [_flux_value(cl.B, surface) for cl in classes]
    last, prev = classes[-1], classes[-2]
    r_end = _end_residual(last.U + last.B, c, surface)
    r_prev = _end_residual(prev.U - prev.B, c, surface)

    def small(r):
        return r == 0 if isinstance(r, Fraction) else r <= tol

    return LaplaceChain(classes=classes, fluxes=fluxes, c=c, genus=g, area=surface.total_area,
                        b0=int(b0), end_residuals=(r_end, r_prev),
                        quasi_cyclic=small(r_end) and small(r_prev), feasible=True,
                        levels={"energies": [-c, 0], **predicted_dimensions(b0, N, g)})


# ---- sinh-Poisson type equation -------------------------------------------------


@dataclass(frozen=True, eq=False)
class SinhPoissonState:
    phi: np.ndarray
    mesh: object
    c: float
    residual: float
    iterations: int
    b0: int
    history: list = field(default_factory=list)

    @property
    def B0(self) -> ScalarField:
        return ScalarField.sampled(np.exp(self.phi), self.mesh)

    @property
    def flux(self) -> float:
        return self.mesh.integrate(np.exp(self.phi)) / (2 * np.pi)

    def to_dict(self) -> dict:
        return {"c": self.c, "b0": self.b0, "residual": self.residual, "iterations": self.iterations,
                "flux": self.flux, "phi_min": float(self.phi.min()), "phi_max": float(self.phi.max()),
                "residual_history": self.history}


def sinh_poisson_residual(mesh, phi: np.ndarray, c: float) -> np.ndarray:
    return mesh.laplacian(phi) - c - 2 * mesh.curvature + 4 * np.exp(phi)


def admissible_b0(c: float, surface: ConformalSurface, tol: float = 1e-8) -> int:
    """b0 = (c A / 2 pi + 2 chi) / 4, which must be a positive integer."""
    val = (c * surface.total_area / (2 * np.pi) + 2 * surface.euler_characteristic) / 4
    b0 = round(val)
    if abs(val - b0) > tol or b0 <= 0:
        raise IntegralObstructionError(f"c = {c} gives b0 = {val}, not a positive integer")
    return int(b0)


def solve_sinh_poisson(surface: ConformalSurface, c: float, *, mesh=None, phi0=None,
                       tol: float = 1e-10, maxiter: int = 60) -> SinhPoissonState:
    """Damped Newton iteration for Delta_h phi = c + 2K - 4 exp(phi) on a mesh."""
    c = float(c)
    b0 = admissible_b0(c, surface)
    mesh = mesh if mesh is not None else surface.mesh()
    W = mesh.stiffness().tocsc()
    M = mesh.masses
    K = mesh.curvature
    if phi0 is None:
        Kbar = mesh.integrate(K) / mesh.total_area
        phi = np.full(mesh.n_vertices, np.log(max(c + 2 * Kbar, 1e-6) / 4))
    else:
        phi = np.broadcast_to(np.asarray(phi0, dtype=float), (mesh.n_vertices,)).copy()

    def res(p):
        return sinh_poisson_residual(mesh, p, c)

    def merit(r):
        return float(np.sqrt(np.dot(M, r * r)))

    r = res(phi)
    history = [float(np.max(np.abs(r)))]
    it = 0
    while history[-1] > tol:
        if it >= maxiter:
            raise StagnationError("Newton iteration cap reached", history[-1], it)
        J = (-W + sps.diags(4 * M * np.exp(phi))).tocsc()
        try:
            step = spla.spsolve(J, -(M * r))
        except RuntimeError as exc:
            raise StagnationError(f"singular Jacobian: {exc}", history[-1], it) from None
        if not np.all(np.isfinite(step)):
            raise StagnationError("singular Jacobian", history[-1], it)
        f0, t = merit(r), 1.0
        while True:
            trial = phi + t * step
            rt = res(trial)
            if merit(rt) <= (1 - 1e-4 * t) * f0 or t < 1e-10:
                break
            t *= 0.5
        if t < 1e-10:
            raise StagnationError("line search failed", history[-1], it)
        phi, r = trial, rt
        it += 1
        history.append(float(np.max(np.abs(r))))
    return SinhPoissonState(phi=phi, mesh=mesh, c=c, residual=history[-1], iterations=it, b0=b0,
                            history=history)


# ---- Liouville reduction (c = 0) ------------------------------------------------


def liouville_gauge_reduce(phi, chart: ConformalChart) -> np.ndarray:
    """phi~ = phi - 2 ln h at the chart nodes."""
    phi = np.asarray(phi, dtype=float)
    return phi - 2 * np.log(chart.h(chart.nodes_x, chart.nodes_y))


def liouville_residual(phi_tilde, points) -> float:
    """max |phi~_{z z_bar} + exp(phi~)| at ``points`` for a sympy expression in x, y."""
    e = sp.sympify(phi_tilde, locals={"x": x_sym, "y": y_sym})
    r = (sp.diff(e, x_sym, 2) + sp.diff(e, y_sym, 2)) / 4 + sp.exp(e)
    fn = sp.lambdify((x_sym, y_sym), r, "numpy")
    pts = np.asarray(points, dtype=float)
    return float(np.max(np.abs(fn(pts[:, 0], pts[:, 1]))))
