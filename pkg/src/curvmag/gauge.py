"""Gauge classes (B, U), factorisation steps, chain classification and flux.

A scalar field is either a closed-form tag r*K + x (r, x rational or
float, K the Gaussian curvature of the surface) or a vector of samples on
the vertices of a mesh.  Tags let constancy be decided exactly; samples
carry everything else.

Chains: an alpha step is available from (B, U) when U + B is constant
(the constant becomes the energy shift s), and maps (B, U, s) to
(B + K, B + K + s, s).  A beta step needs U - B = s constant and maps to
(B - K, K - B + s, s).  The two steps are mutually inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Number, Rational

import numpy as np
import sympy as sp

from .errors import PreconditionError, ValidationError
from .surface import ConformalSurface, x_sym, y_sym

TAG_TOL = 1e-10
SAMPLE_TOL = 1e-8


def _num(v):
    if isinstance(v, bool):
        raise ValidationError("booleans are not numbers")
    if isinstance(v, Rational):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, Number):
        return float(v)
    raise ValidationError(f"expected a number, got {v!r}")


def _is_zero(v, tol):
    return v == 0 if isinstance(v, Fraction) else abs(v) <= tol


@dataclass(frozen=True, eq=False)
class ScalarField:
    """r*K + x in closed form, or ``samples`` on ``mesh`` vertices."""

    curvature_multiple: Fraction | float = Fraction(0)
    const: Fraction | float = Fraction(0)
    samples: np.ndarray | None = None
    mesh: object = None

    def __post_init__(self):
        if self.samples is None:
            object.__setattr__(self, "curvature_multiple", _num(self.curvature_multiple))
            object.__setattr__(self, "const", _num(self.const))
        else:
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 1 or not np.all(np.isfinite(s)):
                raise ValidationError("samples must be a finite real vector")
            if self.mesh is not None and len(s) != self.mesh.n_vertices:
                raise ValidationError("sample count does not match the mesh")
            object.__setattr__(self, "samples", s)

    @classmethod
    def constant(cls, x) -> "ScalarField":
        return cls(Fraction(0), x)

    @classmethod
    def curvature(cls, r=1, x=0) -> "ScalarField":
        return cls(r, x)

    @classmethod
    def sampled(cls, values, mesh) -> "ScalarField":
        return cls(samples=values, mesh=mesh)

    @property
    def tagged(self) -> bool:
        return self.samples is None

    # -- arithmetic ---------------------------------------------------------------
    def _combine(self, other, sign):
        if isinstance(other, Number) and not isinstance(other, bool):
            other = ScalarField.constant(other)
        if not isinstance(other, ScalarField):
            return NotImplemented
        if self.tagged and other.tagged:
            return ScalarField(self.curvature_multiple + sign * other.curvature_multiple,
                               self.const + sign * other.const)
        mesh = self.mesh if self.mesh is not None else other.mesh
        if self.mesh is not None and other.mesh is not None and self.mesh is not other.mesh:
            raise ValidationError("sampled fields live on different meshes")
        return ScalarField.sampled(self.on_mesh(mesh) + sign * other.on_mesh(mesh), mesh)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self)._combine(other, 1)

    def __neg__(self):
        if self.tagged:
            return ScalarField(-self.curvature_multiple, -self.const)
        return ScalarField.sampled(-self.samples, self.mesh)

    def __mul__(self, k):
        if not isinstance(k, Number) or isinstance(k, bool):
            return NotImplemented
        k = _num(k)
        if self.tagged:
            return ScalarField(k * self.curvature_multiple, k * self.const)
        return ScalarField.sampled(float(k) * self.samples, self.mesh)

    __rmul__ = __mul__

    # -- evaluation ---------------------------------------------------------------
    def on_mesh(self, mesh) -> np.ndarray:
        if not self.tagged:
            if mesh is not None and self.mesh is not None and mesh is not self.mesh:
                raise ValidationError("sampled field lives on a different mesh")
            return self.samples
        if mesh is None:
            raise ValidationError("a mesh is needed to sample a closed-form field")
        return float(self.curvature_multiple) * mesh.curvature + float(self.const)

    def on_surface(self, surface: ConformalSurface) -> np.ndarray:
        """Values at the quadrature nodes of ``surface``."""
        if not self.tagged:
            raise ValidationError("sampled fields are defined on mesh vertices only")
        _, K = surface.quadrature()
        return float(self.curvature_multiple) * K + float(self.const)

    def is_constant(self, surface: ConformalSurface | None = None) -> bool:
        if self.tagged:
            if self.curvature_multiple == 0:
                return True
            if surface is not None and surface.constant_curvature is not None:
                return True
            if self.mesh is not None:
                return _const_samples(self.on_mesh(self.mesh))
            return False
        return _const_samples(self.samples)

    def constant_value(self, surface: ConformalSurface | None = None):
        if not self.is_constant(surface):
            raise PreconditionError("field is not constant")
        if self.tagged:
            if self.curvature_multiple == 0:
                return self.const
            return self.curvature_multiple * surface.constant_curvature + self.const
        return float(np.mean(self.samples))

    def is_zero(self, surface: ConformalSurface | None = None, tol: float | None = None) -> bool:
        if self.tagged:
            t = TAG_TOL if tol is None else tol
            if _is_zero(self.curvature_multiple, t) and _is_zero(self.const, t):
                return True
            if surface is not None and surface.constant_curvature is not None:
                return _is_zero(self.constant_value(surface), t)
            return False
        t = SAMPLE_TOL if tol is None else tol
        return float(np.max(np.abs(self.samples))) <= t

    def to_dict(self) -> dict:
        if not self.tagged:
            return {"samples": self.samples.tolist()}
        if self.curvature_multiple == 0:
            return {"const": self.const}
        return {"curvature_multiple": self.curvature_multiple, "const": self.const}

    @classmethod
    def from_dict(cls, spec: dict, mesh=None) -> "ScalarField":
        if not isinstance(spec, dict):
            raise ValidationError("field spec must be an object")
        keys = set(spec)
        if keys == {"samples"}:
            return cls.sampled(spec["samples"], mesh)
        if keys and keys <= {"curvature_multiple", "const"}:
            return cls(spec.get("curvature_multiple", 0), spec.get("const", 0))
        raise ValidationError(f"bad field spec keys {sorted(keys)}")

    def __repr__(self):
        if self.tagged:
            return f"ScalarField({self.curvature_multiple}*K + {self.const})"
        return f"ScalarField(samples[{len(self.samples)}])"


def _const_samples(v) -> bool:
    v = np.asarray(v)
    return float(v.max() - v.min()) <= SAMPLE_TOL * (1 + float(np.max(np.abs(v))))


def _as_field(v) -> ScalarField:
    return v if isinstance(v, ScalarField) else ScalarField.constant(v)


@dataclass(frozen=True, eq=False)
class GaugeClass:
    """Magnetic field B, potential U and the accumulated energy shift."""

    B: ScalarField
    U: ScalarField
    shift: Fraction | float = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "B", _as_field(self.B))
        object.__setattr__(self, "U", _as_field(self.U))
        object.__setattr__(self, "shift", _num(self.shift))

    @property
    def mesh(self):
        return self.B.mesh if self.B.mesh is not None else self.U.mesh

    def equals(self, other: "GaugeClass", surface=None, tol: float = TAG_TOL) -> bool:
        return ((self.B - other.B).is_zero(surface, tol) and (self.U - other.U).is_zero(surface, tol)
                and _is_zero(_num(self.shift - other.shift), tol))

    def to_dict(self) -> dict:
        return {"B": self.B.to_dict(), "U": self.U.to_dict(), "shift": self.shift}

    @classmethod
    def from_dict(cls, spec: dict, mesh=None) -> "GaugeClass":
        extra = set(spec) - {"B", "U", "shift"}
        if extra or not {"B", "U"} <= set(spec):
            raise ValidationError("gauge class needs exactly B, U and optional shift")
        return cls(ScalarField.from_dict(spec["B"], mesh), ScalarField.from_dict(spec["U"], mesh),
                   spec.get("shift", 0))


class Factorisability(str, Enum):
    ALPHA = "alpha"
    BETA = "beta"
    BOTH = "both"
    NONE = "none"


def factorisability(cls: GaugeClass, tol: float | None = None,
                    surface: ConformalSurface | None = None) -> Factorisability:
    """Alpha iff U - shift = -B, beta iff U - shift = B (within tol)."""
    base = cls.U - cls.shift
    a = (base + cls.B).is_zero(surface, tol)
    b = (base - cls.B).is_zero(surface, tol)
    if a and b:
        return Factorisability.BOTH
    if a:
        return Factorisability.ALPHA
    if b:
        return Factorisability.BETA
    return Factorisability.NONE


def _K(cls: GaugeClass) -> ScalarField:
    mesh = cls.mesh
    if mesh is None:
        return ScalarField.curvature(1, 0)
    return ScalarField.sampled(mesh.curvature, mesh)


def factorisation_step(cls: GaugeClass, kind: str, surface: ConformalSurface | None = None) -> GaugeClass:
    """One factor swap: alpha (B, s - B) -> (B + K, B + K + s); beta (B, B + s) -> (B - K, K - B + s)."""
    kind = _kind(kind)
    f = factorisability(cls, surface=surface)
    ok = f is Factorisability.BOTH or f.value == kind
    if not ok:
        raise PreconditionError(f"class is not {kind}-factorisable")
    K = _K(cls)
    s = cls.shift
    if kind == "alpha":
        B = cls.B + K
        return GaugeClass(B, B + s, s)
    B = cls.B - K
    return GaugeClass(B, K - cls.B + s, s)


def _kind(kind) -> str:
    k = {"alpha": "alpha", "a": "alpha", "α": "alpha", "beta": "beta", "b": "beta", "β": "beta"}.get(
        str(kind).lower())
    if k is None:
        raise ValidationError(f"unknown step kind {kind!r}")
    return k


@dataclass(frozen=True)
class ChainStep:
    cls: GaugeClass
    kind: str | None  # step that produced this class from the previous one
    shift: Fraction | float

    def to_dict(self):
        return {"class": self.cls.to_dict(), "kind": self.kind, "shift": self.shift}


@dataclass(frozen=True)
class ChainReport:
    steps: list
    classification: str
    terminal_reason: str
    origin: int = 0  # position of the starting class in ``steps``
    anchor: Fraction | float | None = None  # c of the closed-form m-th term (infinite chains)
    curvature: Fraction | float | None = None

    def forward(self, m: int) -> GaugeClass:
        """Class reached after m + 1 alpha steps from the start (the m-th closed-form term)."""
        return self.steps[self.origin + 1 + m].cls

    def term(self, m: int, kind: str = "alpha"):
        if self.classification != "infinite":
            raise PreconditionError("closed-form terms exist only for infinite chains")
        return chain_term(self.anchor, self.curvature, m, kind)

    def verify(self, surface: ConformalSurface | None = None, tol: float = TAG_TOL) -> bool:
        """Consecutive classes obey the alpha/beta transformation rules."""
        for prev, cur in zip(self.steps, self.steps[1:]):
            start = GaugeClass(prev.cls.B, prev.cls.U, cur.shift)
            nxt = factorisation_step(start, cur.kind, surface)
            if not ((nxt.B - cur.cls.B).is_zero(surface, tol) and (nxt.U - cur.cls.U).is_zero(surface, tol)):
                return False
        return True

    def to_dict(self) -> dict:
        return {"classification": self.classification, "terminal_reason": self.terminal_reason,
                "origin": self.origin, "anchor": self.anchor, "curvature": self.curvature,
                "steps": [s.to_dict() for s in self.steps]}


def chain_term(c, K0, m: int, kind: str = "alpha"):
    """m-th term (B_m, U_m) of the infinite chain on a constant-curvature surface.

    alpha: (c + m K0, (2m + 1) c + m^2 K0); beta: (c - m K0, -(2m + 1) c + m^2 K0).
    """
    if _kind(kind) == "alpha":
        return c + m * K0, (2 * m + 1) * c + m * m * K0
    return c - m * K0, -(2 * m + 1) * c + m * m * K0


def _next(cls: GaugeClass, kind: str, surface):
    """Re-shift to make ``kind`` available, then step; None when the shift is not constant."""
    rel = cls.U + cls.B if kind == "alpha" else cls.U - cls.B
    if not rel.is_constant(surface):
        return None
    s = rel.constant_value(surface)
    return factorisation_step(GaugeClass(cls.B, cls.U, s), kind, surface), s


def chain_classify(cls: GaugeClass, surface: ConformalSurface | None = None,
                   max_terms: int = 8) -> ChainReport:
    """Maximal factorisation chain through ``cls``.

    Extends forward with alpha steps and backward with beta steps while the
    required shift is constant.  Reaching ``max_terms`` in either direction
    is only possible for constant B and K and is reported as infinite.
    """
    if factorisability(cls, surface=surface) is Factorisability.NONE:
        raise PreconditionError("chain start is not factorisable")
    fwd, cur, reason_f = [], cls, ""
    while len(fwd) < max_terms:
        nxt = _next(cur, "alpha", surface)
        if nxt is None:
            reason_f = "alpha continuation needs U + B constant"
            break
        cur = nxt[0]
        fwd.append(ChainStep(cur, "alpha", nxt[1]))
    back, cur, reason_b = [], cls, ""  # (class reached, beta shift used)
    while len(back) < max_terms:
        nxt = _next(cur, "beta", surface)
        if nxt is None:
            reason_b = "beta continuation needs U - B constant"
            break
        back.append(nxt)
        cur = nxt[0]
    # walking the backward part in forward order undoes each beta step by an
    # alpha step with the same shift
    classes = [y for y, _ in reversed(back)] + [cls]
    shifts = [t for _, t in reversed(back)]
    steps = [ChainStep(classes[0], None, classes[0].shift)]
    steps += [ChainStep(classes[k], "alpha", shifts[k - 1]) for k in range(1, len(classes))]
    steps += fwd
    infinite = len(fwd) >= max_terms or len(back) >= max_terms
    if infinite:
        K0 = surface.constant_curvature if surface is not None else None
        anchor = fwd[0].cls.B.constant_value(surface) if fwd else None
        return ChainReport(steps, "infinite", "constant B and K: every step is available",
                           origin=len(back), anchor=anchor, curvature=K0)
    n = len(steps)
    label = {2: "two-term", 3: "three-term"}.get(n, f"{n}-term")
    return ChainReport(steps, label, f"{reason_b}; {reason_f}", origin=len(back))


# ---- flux and Chern bookkeeping -------------------------------------------------


@dataclass(frozen=True)
class FluxResult:
    value: float
    integer: int | None
    exact: Fraction | None = None

    @property
    def quantised(self) -> bool:
        return self.integer is not None

    def to_dict(self):
        return {"value": self.value, "integer": self.integer, "quantised": self.quantised}


def flux(B, surface: ConformalSurface | None = None, tol: float = 1e-6) -> FluxResult:
    """(1/2 pi) * integral of B, with its integer when quantised within tol."""
    B = _as_field(B)
    if B.tagged:
        if surface is None:
            raise ValidationError("closed-form flux needs a surface")
        chi = surface.euler_characteristic
        r, x = B.curvature_multiple, B.const
        if surface.area_over_2pi is not None and isinstance(x, Fraction) and isinstance(r, Fraction):
            exact = r * chi + x * surface.area_over_2pi
            val = float(exact)
        else:
            exact = None
            val = float(r) * chi + float(x) * surface.total_area / (2 * np.pi)
    else:
        exact = None
        val = B.mesh.integrate(B.samples) / (2 * np.pi)
    n = round(val)
    integer = int(n) if abs(val - n) <= tol else None
    if exact is not None:
        integer = int(exact) if exact.denominator == 1 else None
    return FluxResult(val, integer, exact)


def chern_after_step(b: int, genus: int, kind: str) -> int:
    chi = 2 - 2 * genus
    return b + chi if _kind(kind) == "alpha" else b - chi


def index_prediction(b: int, genus: int):
    """(dim Ker D, dim Ker D*) = (b - g + 1, 0) when b > 2g - 2, else None."""
    if b > 2 * genus - 2:
        return b - genus + 1, 0
    return None


# ---- connections ----------------------------------------------------------------

_z = x_sym + sp.I * y_sym
_zb = x_sym - sp.I * y_sym


def _dz(e):
    return (sp.diff(e, x_sym) - sp.I * sp.diff(e, y_sym)) / 2


def _dzb(e):
    return (sp.diff(e, x_sym) + sp.I * sp.diff(e, y_sym)) / 2


@dataclass(frozen=True, eq=False)
class Connection:
    """Per-chart potentials A (the dz part of the real form A dz + conj(A) dz_bar)."""

    potentials: tuple  # sympy expressions in x, y
    conformal_factors: tuple
    genus: int
    transition_charge: int | None = None
    bloch_phases: tuple | None = None

    def __post_init__(self):
        if (self.bloch_phases is not None) != (self.genus == 1):
            raise ValidationError("Bloch phases are present exactly when genus = 1")
        if self.bloch_phases is not None:
            object.__setattr__(self, "bloch_phases",
                               tuple(float(t) % (2 * np.pi) for t in self.bloch_phases))

    def field_strength(self, chart: int = 0) -> sp.Expr:
        """B = 2i h^2 (d_zbar A - d_z conj(A))."""
        A = self.potentials[chart]
        h = self.conformal_factors[chart]
        return sp.simplify(2 * sp.I * h ** 2 * (_dzb(A) - _dz(sp.conjugate(A))))

    def check_field(self, B, points=None, tol: float = 1e-8) -> bool:
        if points is None:
            rng = np.random.default_rng(0)
            points = rng.uniform(-0.6, 0.6, size=(16, 2))
        target = sp.sympify(B)
        for k in range(len(self.potentials)):
            fn = sp.lambdify((x_sym, y_sym), self.field_strength(k) - target, "numpy")
            vals = np.array([complex(fn(px, py)) for px, py in points])
            if np.max(np.abs(vals)) > tol:
                return False
        return True

    def to_dict(self):
        return {"potentials": [str(a) for a in self.potentials],
                "conformal_factors": [str(h) for h in self.conformal_factors],
                "genus": self.genus, "transition_charge": self.transition_charge,
                "bloch_phases": list(self.bloch_phases) if self.bloch_phases else None}


def _loop_integral(A, n: int = 64) -> float:
    """Integral of the real form A dz + conj(A) dz_bar over the unit circle."""
    fn = sp.lambdify((x_sym, y_sym), A, "numpy")
    t = 2 * np.pi * np.arange(n) / n
    zz = np.exp(1j * t)
    vals = np.asarray(fn(zz.real, zz.imag), dtype=complex) * 1j * zz
    return float(2 * np.real(vals).sum() * 2 * np.pi / n)


def monopole_connection(q: int) -> Connection:
    """Sphere, B = q/2: A = -i (q/2) z_bar / (1 + z z_bar) in both stereographic charts."""
    A = -sp.I * sp.Rational(q, 2) * _zb / (1 + _z * _zb)
    h = (1 + x_sym ** 2 + y_sym ** 2) / 2
    total = 2 * _loop_integral(sp.expand(A)) / (2 * np.pi)
    return Connection((A, A), (h, h), 0, transition_charge=int(round(total)))


def disc_connection(B) -> Connection:
    """Hyperbolic disc, constant B: A = -i B z_bar / (1 - z z_bar)."""
    A = -sp.I * sp.nsimplify(B) * _zb / (1 - _z * _zb)
    return Connection((A,), ((1 - x_sym ** 2 - y_sym ** 2) / 2,), 2)


def torus_connection(b: int, side: float = 2 * np.pi, bloch=(0.0, 0.0)) -> Connection:
    """Flat torus, Landau gauge A dz + c.c. = -B y dx with B = 2 pi b / side^2."""
    B = 2 * sp.pi * b / sp.nsimplify(side) ** 2
    A = -B * y_sym / 2
    return Connection((A,), (sp.Integer(1),), 1, bloch_phases=tuple(bloch))
