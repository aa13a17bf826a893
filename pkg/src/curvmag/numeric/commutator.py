"""Finite-difference commutator checks for second-order operators on a chart.

A GridOperator is sum_ab c_ab(x, y) d_x^a d_y^b with a + b <= 2 and
closed-form coefficients sampled on a tensor grid.  Derivatives use
sixth-order central stencils; points whose stencil leaves the grid become
NaN, so nested applications shrink the valid region automatically.
Products of operators are applied right to left without symbolic
composition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from ..errors import ValidationError

_D1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0
_D2 = np.array([2, -27, 270, -490, 270, -27, 2]) / 180.0


def _stencil(f: np.ndarray, axis: int, weights: np.ndarray, h: float, power: int) -> np.ndarray:
    out = np.full(f.shape, np.nan, dtype=np.result_type(f, float))
    n = f.shape[axis]
    core = [slice(None)] * f.ndim
    core[axis] = slice(3, n - 3)
    acc = 0
    for k, w in enumerate(weights):
        if w == 0:
            continue
        sl = [slice(None)] * f.ndim
        sl[axis] = slice(k, n - 6 + k)
        acc = acc + w * f[tuple(sl)]
    out[tuple(core)] = acc / h ** power
    return out


@dataclass(frozen=True, eq=False)
class Grid:
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def box(cls, x0, x1, y0, y1, n: int = 121) -> "Grid":
        return cls(np.linspace(x0, x1, n), np.linspace(y0, y1, n))

    @property
    def hx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def hy(self) -> float:
        return float(self.y[1] - self.y[0])

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def derivative(self, f, a: int, b: int) -> np.ndarray:
        for axis, order, h in ((0, a, self.hx), (1, b, self.hy)):
            while order >= 2:
                f = _stencil(f, axis, _D2, h, 2)
                order -= 2
            if order == 1:
                f = _stencil(f, axis, _D1, h, 1)
        return f


@dataclass(frozen=True, eq=False)
class GridOperator:
    """Differential operator with coefficients sampled on ``grid``."""

    grid: Grid
    coeffs: dict = field(default_factory=dict)  # (a, b) -> array
    name: str = ""

    @classmethod
    def from_sympy(cls, grid: Grid, terms: dict, x: sp.Symbol, y: sp.Symbol, name: str = ""):
        X, Y = grid.mesh()
        coeffs = {}
        for ab, expr in terms.items():
            fn = sp.lambdify((x, y), expr, "numpy")
            coeffs[ab] = np.broadcast_to(np.asarray(fn(X, Y), dtype=complex), X.shape).copy()
        return cls(grid, coeffs, name)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros(f.shape, dtype=complex)
        for (a, b), c in self.coeffs.items():
            out = out + c * (f if a == b == 0 else self.grid.derivative(f, a, b))
        return out


def apply_product(ops: Sequence[Callable], f: np.ndarray) -> np.ndarray:
    """Apply ops[0] @ ops[1] @ ... to f (rightmost first)."""
    for op in reversed(ops):
        f = op(f)
    return f


def bump_polynomial(grid: Grid, rng: np.random.Generator, degree: int = 3, width: float = 0.18):
    """Random polynomial of the given degree times a Gaussian bump centred in the box."""
    X, Y = grid.mesh()
    cx, cy = grid.x.mean(), grid.y.mean()
    sx, sy = np.ptp(grid.x), np.ptp(grid.y)
    xi, eta = (X - cx) / sx, (Y - cy) / sy
    poly = np.zeros_like(X)
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            poly = poly + rng.uniform(-1, 1) * xi ** i * eta ** j
    return poly * np.exp(-(xi ** 2 + eta ** 2) / (2 * width ** 2))


def commutator_residual(opA, opB, trials: int = 5, seed: int = 0, grid: Grid | None = None) -> float:
    """max over trials of |(AB - BA) f|_inf / max(|ABf|_inf, |BAf|_inf).

    Each operand is a GridOperator or a sequence of them read as a product.
    Norms are taken over the interior where every stencil fits.
    """
    A = list(opA) if isinstance(opA, (list, tuple)) else [opA]
    B = list(opB) if isinstance(opB, (list, tuple)) else [opB]
    grid = grid or A[0].grid
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = bump_polynomial(grid, rng)
        ab = apply_product(A + B, f)
        ba = apply_product(B + A, f)
        ok = np.isfinite(ab) & np.isfinite(ba)
        if not ok.any():
            raise ValidationError("grid too small for the requested operator orders")
        scale = max(np.abs(ab[ok]).max(), np.abs(ba[ok]).max())
        if scale == 0:
            continue
        worst = max(worst, float(np.abs(ab[ok] - ba[ok]).max() / scale))
    return worst


# ---- built-in Liouville operators -------------------------------------------------

_u, _v = sp.symbols("u v", real=True)
_x, _y = sp.symbols("x y", real=True)


def _second_order(grid, a, b, s, x, y, name):
    """Coefficients of s d_x (a/s) d_x + s d_y (b/s) d_y."""
    terms = {
        (2, 0): a,
        (1, 0): sp.simplify(s * sp.diff(a / s, x)),
        (0, 2): b,
        (0, 1): sp.simplify(s * sp.diff(b / s, y)),
    }
    return GridOperator.from_sympy(grid, terms, x, y, name)


def liouville_uv_operators(f_expr, g_expr, grid: Grid):
    """(Delta_h, F) for ds^2 = (u - v)(du^2/f(u) - dv^2/g(v)).

    F is the quadratic integral with the u-part weighted by v and the
    v-part weighted by u; both are written in divergence form.
    """
    f = sp.sympify(f_expr, locals={"u": _u})
    g = sp.sympify(g_expr, locals={"v": _v})
    a = f / (_u - _v)
    b = -g / (_u - _v)
    s = sp.sqrt(sp.Abs(f * g)) / (_u - _v)
    lap = _second_order(grid, a, b, s, _u, _v, "Delta_h")
    F = _second_order(grid, _v * a, _u * b, s, _u, _v, "F")
    return lap, F


def liouville_conformal_operators(U_expr, V_expr, grid: Grid):
    """Operators for the conformal Liouville chart ds^2 = (U(x) + V(y))(dx^2 + dy^2).

    Returns a dict with D = d_x + i d_y, D* = -h^2 (d_x - i d_y),
    L = D* D = -Delta_h, F = h^2 (V d_x^2 - U d_y^2), and the operator products
    L~ = D D* and F~ = D F D* as tuples (rightmost factor applied first).
    """
    U = sp.sympify(U_expr, locals={"x": _x})
    V = sp.sympify(V_expr, locals={"y": _y})
    h2 = 1 / (U + V)
    D = GridOperator.from_sympy(grid, {(1, 0): sp.Integer(1), (0, 1): sp.I}, _x, _y, "D")
    Ds = GridOperator.from_sympy(grid, {(1, 0): -h2, (0, 1): sp.I * h2}, _x, _y, "D*")
    L = GridOperator.from_sympy(grid, {(2, 0): -h2, (0, 2): -h2}, _x, _y, "L")
    F = GridOperator.from_sympy(grid, {(2, 0): h2 * V, (0, 2): -h2 * U}, _x, _y, "F")
    return {"D": D, "D_star": Ds, "L": L, "F": F,
            "L_tilde": (D, Ds), "F_tilde": (D, F, Ds)}
