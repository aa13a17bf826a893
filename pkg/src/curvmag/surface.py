"""Surfaces in conformal charts, curvature formulas and Gauss-Bonnet integrals.

Metric convention: ds^2 = dz dz_bar / h^2, so the area element is
dx dy / h^2 and the Gaussian curvature is K = h^2 (d_x^2 + d_y^2) ln h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable

import numpy as np
import sympy as sp

from .errors import ConfigurationError, DomainError, InvalidChartError, ValidationError

x_sym, y_sym = sp.symbols("x y", real=True)
u_sym, v_sym = sp.symbols("u v", real=True)
z_sym = sp.Symbol("z", real=True)

DEFAULT_NODES = 128
FD_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class ConformalChart:
    """A chart with conformal factor h and a weighted node set.

    ``weights`` integrate against dx dy (partition weights included), so
    ``area_weights`` = weights / h^2 integrates against the surface measure.
    Either ``h_expr`` (sympy, in x and y) or ``h_func`` must be given.
    """

    name: str
    domain: str
    nodes_x: np.ndarray
    nodes_y: np.ndarray
    weights: np.ndarray
    h_expr: sp.Expr | None = None
    h_func: Callable | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.h_expr is None and self.h_func is None:
            raise ValidationError("chart needs a conformal factor")

    @cached_property
    def _h(self) -> Callable:
        if self.h_expr is not None:
            return sp.lambdify((x_sym, y_sym), self.h_expr, "numpy")
        return self.h_func

    def h(self, x, y) -> np.ndarray:
        return np.broadcast_to(np.asarray(self._h(x, y), dtype=float), np.shape(x))

    @property
    def closed_form(self) -> bool:
        return self.h_expr is not None

    @cached_property
    def h_nodes(self) -> np.ndarray:
        hv = self.h(self.nodes_x, self.nodes_y)
        if np.any(~np.isfinite(hv)) or np.any(hv <= 0):
            raise InvalidChartError(f"conformal factor of chart {self.name!r} is not positive")
        return hv

    @property
    def area_weights(self) -> np.ndarray:
        return self.weights / self.h_nodes ** 2


@dataclass(frozen=True)
class CurvatureField:
    values: np.ndarray
    exact: bool
    units: str = "1/length^2"

    def deviation_from(self, K0: float) -> float:
        return float(np.max(np.abs(self.values - K0))) if len(self.values) else 0.0


@dataclass(frozen=True, eq=False)
class ParametricPatch:
    """Embedded parametrised surface sampled at quadrature nodes."""

    points: np.ndarray  # (n, 3)
    area_weights: np.ndarray
    curvature: np.ndarray


@dataclass(frozen=True, eq=False)
class ConformalSurface:
    kind: str
    charts: tuple
    genus: int | None
    total_area: float | None
    constant_curvature: Fraction | float | None = None
    area_over_2pi: Fraction | None = None
    parametric: ParametricPatch | None = None
    has_quadrature: bool = True
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.genus is not None and self.genus < 0:
            raise ValidationError("genus must be non-negative")

    @property
    def closed(self) -> bool:
        return self.genus is not None

    @property
    def euler_characteristic(self) -> int:
        if self.genus is None:
            raise ConfigurationError(f"{self.kind} patch is not a closed surface")
        return 2 - 2 * self.genus

    @cached_property
    def _nodes(self):
        if not self.has_quadrature:
            raise ConfigurationError(f"surface {self.kind!r} carries no quadrature")
        if self.parametric is not None:
            return self.parametric.area_weights, self.parametric.curvature
        w = np.concatenate([c.area_weights for c in self.charts])
        K = np.concatenate([curvature_conformal(c).values for c in self.charts])
        return w, K

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """(area weights, curvature) at all quadrature nodes."""
        return self._nodes

    def quadrature_area(self) -> float:
        return float(self._nodes[0].sum())

    def integrate(self, values) -> float:
        w, _ = self._nodes
        return float(np.dot(w, np.broadcast_to(values, w.shape)))

    def mesh(self, refinement: int | None = None):
        """Cotangent-FEM mesh of the same surface (module numeric)."""
        from .numeric.mesh import ellipsoid_mesh, sphere_mesh, torus_mesh

        if self.kind == "sphere":
            m = sphere_mesh(4 if refinement is None else refinement)
            R = self.params.get("radius", 1.0)
            if R != 1.0:
                m = _scale_mesh(m, R)
            return m
        if self.kind == "torus":
            return torus_mesh(32 if refinement is None else refinement, self.params["side"])
        if self.kind == "ellipsoid":
            p = self.params
            return ellipsoid_mesh(p["a"], p["b"], p["c"], 4 if refinement is None else refinement)
        raise ConfigurationError(f"no mesh available for surface {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def _scale_mesh(m, R):
    from dataclasses import replace

    return replace(m, positions=m.positions * R, masses=m.masses * R * R,
                   face_areas=m.face_areas * R * R, curvature=m.curvature / (R * R))


# ---- curvature formulas ---------------------------------------------------------


def _fd_log_laplacian(h: Callable, x, y, step: float):
    def lnh(a, b):
        v = np.asarray(h(a, b), dtype=float)
        return np.log(v)

    c = [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]
    acc = 0
    for k, ck in enumerate(c):
        d = (k - 2) * step
        acc = acc + ck * (lnh(x + d, y) + lnh(x, y + d))
    return acc / step ** 2


def curvature_conformal(chart: ConformalChart) -> CurvatureField:
    """K = h^2 (d_x^2 + d_y^2) ln h at the chart nodes.

    Closed-form charts are differentiated symbolically; tabulated ones use
    fourth-order central differences with step FD_STEP * chart.scale.
    """
    hv = chart.h_nodes
    if chart.closed_form:
        lnh = sp.log(chart.h_expr)
        K = sp.simplify(chart.h_expr ** 2 * (sp.diff(lnh, x_sym, 2) + sp.diff(lnh, y_sym, 2)))
        fn = sp.lambdify((x_sym, y_sym), K, "numpy")
        vals = np.broadcast_to(np.asarray(fn(chart.nodes_x, chart.nodes_y), dtype=float),
                               chart.nodes_x.shape).copy()
        return CurvatureField(vals, exact=True)
    vals = hv ** 2 * _fd_log_laplacian(chart.h, chart.nodes_x, chart.nodes_y,
                                       FD_STEP * chart.scale)
    return CurvatureField(np.asarray(vals, dtype=float), exact=False)


def ellipsoid_curvature(a: float, b: float, c: float, point) -> float:
    """K = (abc)^-2 (x^2/a^4 + y^2/b^4 + z^2/c^4)^-2 on x^2/a^2 + y^2/b^2 + z^2/c^2 = 1."""
    if min(a, b, c) <= 0:
        raise DomainError("ellipsoid semi-axes must be positive")
    x, y, z = (float(t) for t in point)
    if abs(x * x / a ** 2 + y * y / b ** 2 + z * z / c ** 2 - 1) > 1e-12:
        raise DomainError("point is not on the ellipsoid")
    return 1.0 / ((a * b * c) ** 2 * (x * x / a ** 4 + y * y / b ** 4 + z * z / c ** 4) ** 2)


def _profile(fn, var):
    """(value, first, second derivative) callables for an expression or a callable."""
    if callable(fn) and not isinstance(fn, sp.Basic):
        d = FD_STEP

        def d1(t):
            return (-fn(t + 2 * d) + 8 * fn(t + d) - 8 * fn(t - d) + fn(t - 2 * d)) / (12 * d)

        def d2(t):
            return (-fn(t + 2 * d) + 16 * fn(t + d) - 30 * fn(t) + 16 * fn(t - d) - fn(t - 2 * d)) / (12 * d * d)

        return fn, d1, d2
    expr = sp.sympify(fn, locals={var.name: var})
    return tuple(sp.lambdify(var, sp.diff(expr, var, k), "math") for k in range(3))


def liouville_curvature(f, g, u: float, v: float) -> float:
    """Curvature of the Liouville metric with functions f(u), g(v).

    K = (f - g) / (2 (u - v)^3) - (f' + g') / (4 (u - v)^2).
    ``f`` and ``g`` are sympy-parsable expressions in u and v or callables.
    """
    if u == v:
        raise DomainError("Liouville coordinates are singular on u = v")
    f0, f1, _ = _profile(f, u_sym)
    g0, g1, _ = _profile(g, v_sym)
    d = u - v
    return float((f0(u) - g0(v)) / (2 * d ** 3) - (f1(u) + g1(v)) / (4 * d ** 2))


def revolution_curvature(rho, z: float, variant: str = "standard") -> float:
    """Curvature of the surface of revolution with profile radius rho(z).

    ``variant="standard"`` gives -rho''/(rho (1 + rho'^2)^2); ``variant="alternative"``
    gives the alternative numerator rho' rho'' kept for comparison.
    """
    r0, r1, r2 = _profile(rho, z_sym)
    r, dr, ddr = float(r0(z)), float(r1(z)), float(r2(z))
    if not r > 0:
        raise InvalidChartError("profile radius must be positive")
    den = r * (1 + dr * dr) ** 2
    if variant == "standard":
        return -ddr / den
    if variant == "alternative":
        return dr * ddr / den
    raise ValidationError(f"unknown variant {variant!r}")


def revolution_curvature_report(rho, z: float) -> dict:
    return {"standard": revolution_curvature(rho, z), "alternative": revolution_curvature(rho, z, "alternative")}


def gauss_bonnet(surface: ConformalSurface) -> float:
    """(1/2 pi) * integral of K over the surface."""
    if not surface.closed or not surface.has_quadrature:
        raise ConfigurationError(f"surface {surface.kind!r} has no quadrature covering")
    if surface.constant_curvature == 0:
        return 0.0
    w, K = surface.quadrature()
    return float(np.dot(w, K) / (2 * np.pi))


# ---- built-in surfaces ----------------------------------------------------------


def _disc_nodes(n_r: int, n_t: int, radius: float = 1.0):
    """Gauss-Legendre in r times the trapezoid rule in the angle, weights for dx dy."""
    t, wt = np.polynomial.legendre.leggauss(n_r)
    r = radius * (t + 1) / 2
    wr = radius * wt / 2 * r
    th = 2 * np.pi * np.arange(n_t) / n_t
    R, TH = np.meshgrid(r, th, indexing="ij")
    W = np.repeat(wr, n_t) * (2 * np.pi / n_t)
    return (R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel(), W


def sphere(radius: float = 1.0, nodes: int = DEFAULT_NODES) -> ConformalSurface:
    """Round sphere from two stereographic charts, each restricted to |z| <= 1."""
    if radius <= 0:
        raise ValidationError("radius must be positive")
    R = sp.nsimplify(radius)
    h = (1 + x_sym ** 2 + y_sym ** 2) / (2 * R)
    xs, ys, w = _disc_nodes(nodes, nodes)
    charts = tuple(ConformalChart(name, "|z| <= 1", xs, ys, w, h_expr=h) for name in ("north", "south"))
    Rf = Fraction(str(radius)) if isinstance(radius, (int, float)) else Fraction(radius)
    return ConformalSurface(kind="sphere", charts=charts, genus=0, total_area=4 * np.pi * radius ** 2,
                            constant_curvature=1 / Rf ** 2, area_over_2pi=2 * Rf ** 2,
                            params={"radius": float(radius)})


def torus(side: float = 2 * np.pi, nodes: int = DEFAULT_NODES) -> ConformalSurface:
    """Flat square torus [0, side)^2 with h = 1."""
    if side <= 0:
        raise ValidationError("side must be positive")
    g = (np.arange(nodes) + 0.5) * side / nodes
    X, Y = np.meshgrid(g, g, indexing="ij")
    w = np.full(X.size, (side / nodes) ** 2)
    chart = ConformalChart("square", "[0, side)^2", X.ravel(), Y.ravel(), w, h_expr=sp.Integer(1),
                           scale=side)
    return ConformalSurface(kind="torus", charts=(chart,), genus=1, total_area=side * side,
                            constant_curvature=Fraction(0), area_over_2pi=None,
                            params={"side": float(side)})


def hyperbolic(genus: int = 2, nodes: int = 16) -> ConformalSurface:
    """Compact quotient of the hyperbolic disc (K = -1, area 4 pi (g - 1)).

    The single chart samples the Poincare disc model for curvature checks;
    there is no quadrature covering of the quotient, so integrals use the
    closed-form area.
    """
    if genus < 2:
        raise ValidationError("hyperbolic quotients need genus >= 2")
    xs, ys, w = _disc_nodes(nodes, nodes, radius=0.9)
    chart = ConformalChart("poincare", "|z| < 1", xs, ys, w, h_expr=(1 - x_sym ** 2 - y_sym ** 2) / 2)
    return ConformalSurface(kind="disc", charts=(chart,), genus=genus,
                            total_area=4 * np.pi * (genus - 1), constant_curvature=Fraction(-1),
                            area_over_2pi=Fraction(2 * (genus - 1)), has_quadrature=False,
                            params={"genus": genus})


def ellipsoid(a: float, b: float, c: float, nodes: int = DEFAULT_NODES) -> ConformalSurface:
    """Triaxial ellipsoid in (theta, phi) parametrisation with tensor quadrature."""
    if min(a, b, c) <= 0:
        raise ValidationError("semi-axes must be positive")
    t, wt = np.polynomial.legendre.leggauss(nodes)
    th = np.pi * (t + 1) / 2
    wth = np.pi * wt / 2
    ph = 2 * np.pi * np.arange(nodes) / nodes
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    st, ct, sf, cf = np.sin(TH), np.cos(TH), np.sin(PH), np.cos(PH)
    P = np.stack([a * st * cf, b * st * sf, c * ct], axis=-1)
    r_t = np.stack([a * ct * cf, b * ct * sf, -c * st], axis=-1)
    r_p = np.stack([-a * st * sf, b * st * cf, np.zeros_like(st)], axis=-1)
    dA = np.linalg.norm(np.cross(r_t, r_p), axis=-1)
    W = (dA * wth[:, None] * (2 * np.pi / nodes)).ravel()
    pts = P.reshape(-1, 3)
    K = 1.0 / ((a * b * c) ** 2 * ((pts[:, 0] / a ** 2) ** 2 + (pts[:, 1] / b ** 2) ** 2
                                   + (pts[:, 2] / c ** 2) ** 2) ** 2)
    patch = ParametricPatch(points=pts, area_weights=W, curvature=K)
    const = Fraction(1) / Fraction(a) ** 2 if a == b == c else None
    return ConformalSurface(kind="ellipsoid", charts=(), genus=0, total_area=float(W.sum()),
                            constant_curvature=const, parametric=patch,
                            params={"a": float(a), "b": float(b), "c": float(c)})


def liouville_patch(f: str, g: str) -> ConformalSurface:
    """Local Liouville-metric patch; curvature via liouville_curvature."""
    return ConformalSurface(kind="liouville", charts=(), genus=None, total_area=None,
                            has_quadrature=False, params={"f": str(f), "g": str(g)})


def revolution_patch(rho: str) -> ConformalSurface:
    return ConformalSurface(kind="revolution", charts=(), genus=None, total_area=None,
                            has_quadrature=False, params={"rho": str(rho)})


_SURFACE_KEYS = {
    "sphere": {"radius", "nodes"},
    "torus": {"side", "nodes"},
    "disc": {"genus", "nodes"},
    "ellipsoid": {"a", "b", "c", "nodes"},
    "liouville": {"f", "g"},
    "revolution": {"rho"},
}


def surface_from_spec(spec: dict) -> ConformalSurface:
    """Build a surface from {"kind": ..., parameters...}; unknown keys are rejected."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("surface spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind not in _SURFACE_KEYS:
        raise ValidationError(f"unknown surface kind {kind!r}")
    extra = set(spec) - _SURFACE_KEYS[kind] - {"kind"}
    if extra:
        raise ValidationError(f"unknown surface keys: {sorted(extra)}")
    p = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "sphere":
        return sphere(float(p.get("radius", 1.0)), int(p.get("nodes", DEFAULT_NODES)))
    if kind == "torus":
        return torus(float(p.get("side", 2 * np.pi)), int(p.get("nodes", DEFAULT_NODES)))
    if kind == "disc":
        return hyperbolic(int(p.get("genus", 2)), int(p.get("nodes", 16)))
    if kind == "ellipsoid":
        try:
            return ellipsoid(float(p["a"]), float(p["b"]), float(p["c"]), int(p.get("nodes", DEFAULT_NODES)))
        except KeyError as exc:
            raise ValidationError(f"ellipsoid needs {exc.args[0]!r}") from None
    if kind == "liouville":
        return liouville_patch(p.get("f", "u"), p.get("g", "v"))
    return revolution_patch(p.get("rho", "sqrt(1 - z**2)"))
