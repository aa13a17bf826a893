"""Dirac monopole ladder, monopole harmonics and closed-form Landau spectra.

The exact part works on the unit sphere (curvature 1) in the stereographic
chart and on the Poincare disc, with operators

    L_N  = -(1+z zb)^2 d dzb - N z (1+z zb) d + N zb (1+z zb) dzb + N^2 (1+z zb)
    D_N  =  (1+z zb) dzb + N z
    D*_N = -(1+z zb) d + (N+1) zb

and the monopole Hamiltonian H_q = L_{q/2} - (q/2)^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, IdentityError, NormalisabilityError, QuantisationError, ValidationError
from .exactring import DiffOp, GaussianRational, RationalSection, apply, operator_equal

__all__ = [
    "MonopoleLadder",
    "SpectrumRow",
    "SpectrumTable",
    "DeformationParams",
    "sphere_L",
    "sphere_D",
    "sphere_D_star",
    "monopole_hamiltonian",
    "monopole_ops",
    "verify_factorisation",
    "verify_intertwining",
    "ground_basis",
    "harmonic_eigenvalue",
    "monopole_harmonic",
    "monopole_spectrum",
    "spherical_intertwiner",
    "deformed_ops",
    "deformed_verify",
    "hyperbolic_landau_op",
    "hyperbolic_ground_state",
    "hyperbolic_levels",
    "flat_landau_levels",
]


def as_number(x):
    """Keep exact inputs exact: ints and rational strings become Fractions."""
    if isinstance(x, bool):
        raise ValidationError("booleans are not numbers here")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            return float(x)
    return float(x)


# -- the sphere ladder --

def _s(sigma=1):
    return RationalSection.one_plus(sigma)


def sphere_D(N: int) -> DiffOp:
    s, z = _s(), RationalSection.z()
    return DiffOp({(0, 1): s, (0, 0): N * z})


def sphere_D_star(N: int) -> DiffOp:
    s, zb = _s(), RationalSection.zb()
    return DiffOp({(1, 0): -s, (0, 0): (N + 1) * zb})


def sphere_L(N: int) -> DiffOp:
    s, z, zb = _s(), RationalSection.z(), RationalSection.zb()
    return DiffOp({
        (1, 1): -(s * s),
        (1, 0): -N * z * s,
        (0, 1): N * zb * s,
        (0, 0): N * N * s,
    })


def monopole_hamiltonian(q: int) -> DiffOp:
    """H_q = L_{q/2} - (q/2)^2 for even charge q."""
    if q % 2:
        raise ValidationError("odd charge has half-integer N; use the closed form or the numeric module")
    n = q // 2
    return sphere_L(n) - n * n


@dataclass(frozen=True)
class MonopoleLadder:
    N: int
    L: DiffOp
    D: DiffOp
    D_star: DiffOp

    @property
    def charge(self):
        return 2 * self.N


def verify_factorisation(N: int) -> tuple[bool, bool]:
    """(L_N = D*_N D_N + N(N+1), L_N = D_{N-1} D*_{N-1} + N(N-1)), decided exactly.

    At N = 0 the second identity uses D_{-1} = (1+z zb) dzb - z, which the
    general formula produces.
    """
    L = sphere_L(N)
    first = operator_equal(L, sphere_D_star(N) @ sphere_D(N) + N * (N + 1))
    second = operator_equal(L, sphere_D(N - 1) @ sphere_D_star(N - 1) + N * (N - 1))
    return first, second


def monopole_ops(N: int) -> MonopoleLadder:
    if N < 0:
        raise DomainError("N must be non-negative")
    first, second = verify_factorisation(N)
    if not (first and second):
        raise IdentityError(f"factorisation identities fail at N={N}: {first}, {second}")
    return MonopoleLadder(N, sphere_L(N), sphere_D(N), sphere_D_star(N))


def verify_intertwining(N: int, *, D: DiffOp | None = None, D_star: DiffOp | None = None) -> bool:
    """L_{N+1} D_N = D_N L_N and L_N D*_N = D*_N L_{N+1}.

    ``D`` and ``D_star`` override the ladder operators, which is how
    mutation tests inject broken operators.
    """
    D = sphere_D(N) if D is None else D
    D_star = sphere_D_star(N) if D_star is None else D_star
    lo, hi = sphere_L(N), sphere_L(N + 1)
    return operator_equal(hi @ D, D @ lo) and operator_equal(lo @ D_star, D_star @ hi)


def ground_basis(N: int) -> list[RationalSection]:
    """z^k / (1+z zb)^N for k = 0..2N, the normalisable kernel of D_N."""
    if N < 0:
        raise DomainError("N must be non-negative")
    basis = [RationalSection.monomial(k, 0, N) for k in range(2 * N + 1)]
    D = sphere_D(N)
    for psi in basis:
        if not apply(D, psi).is_zero():
            raise IdentityError(f"D_{N} does not annihilate {psi}")
    return basis


def harmonic_eigenvalue(q, m: int, K=1):
    """(2m+1) q/2 + m(m+1) K."""
    q, K = as_number(q), as_number(K)
    return (2 * m + 1) * q / 2 + m * (m + 1) * K


def monopole_harmonic(q: int, m: int, f: Sequence) -> RationalSection:
    """D*_{N-m} ... D*_{N-1} (f(z) / (1+z zb)^N) with N = m + q/2.

    ``f`` lists polynomial coefficients, constant term first.  The result is
    checked to satisfy H_q psi = lambda psi exactly before it is returned.
    """
    if q < 0 or m < 0:
        raise DomainError("q and m must be non-negative")
    if q % 2:
        raise ValidationError("odd charge needs half-integer N; use monopole_spectrum or the numeric module")
    N = m + q // 2
    coeffs = [GaussianRational.coerce(c) for c in f]
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    if len(coeffs) - 1 > 2 * N:
        raise NormalisabilityError(f"deg f = {len(coeffs) - 1} exceeds 2N = {2 * N}")
    psi = RationalSection.holomorphic(coeffs, N)
    for k in range(N - 1, N - m - 1, -1):
        psi = apply(sphere_D_star(k), psi)
    lam = harmonic_eigenvalue(q, m)
    if apply(monopole_hamiltonian(q), psi) != psi * GaussianRational(lam):
        raise IdentityError(f"monopole harmonic q={q}, m={m} is not an eigensection")
    return psi


# -- spectrum tables --

@dataclass(frozen=True)
class SpectrumRow:
    m: int
    eigenvalue: object
    degeneracy: int | None


@dataclass(frozen=True)
class SpectrumTable:
    rows: tuple[SpectrumRow, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        values = [float(r.eigenvalue) for r in self.rows]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise IdentityError("spectrum table must be strictly increasing")

    @property
    def eigenvalues(self):
        return [r.eigenvalue for r in self.rows]

    @property
    def degeneracies(self):
        return [r.degeneracy for r in self.rows]

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        from .report import csv_text

        return csv_text(["m", "lambda", "degeneracy"],
                        ((r.m, r.eigenvalue, r.degeneracy) for r in self.rows))

    def to_dict(self):
        return {
            "metadata": dict(self.metadata),
            "rows": [{"m": r.m, "lambda": r.eigenvalue, "degeneracy": r.degeneracy}
                     for r in self.rows],
        }


def monopole_spectrum(q: int, K=1, m_max: int = 5) -> SpectrumTable:
    if q < 0:
        raise DomainError("charge must be non-negative")
    K = as_number(K)
    if K <= 0:
        raise DomainError("sphere curvature must be positive")
    rows = tuple(SpectrumRow(m, harmonic_eigenvalue(q, m, K), q + 2 * m + 1)
                 for m in range(m_max + 1))
    return SpectrumTable(rows, {"surface": "sphere", "q": q, "K": K})


def flat_landau_levels(B, m_max: int = 5, flux: int | None = None) -> SpectrumTable:
    """(2m+1) B; on a torus with integer flux b every level has degeneracy b."""
    B = as_number(B)
    if B <= 0:
        raise DomainError("B must be positive")
    rows = tuple(SpectrumRow(m, (2 * m + 1) * B, flux) for m in range(m_max + 1))
    return SpectrumTable(rows, {"surface": "torus", "B": B, "flux": flux})


def hyperbolic_levels(B, genus: int, with_dims: bool = True) -> SpectrumTable:
    """Levels (2m+1)B - m(m+1) for m <= [B - 1/2] on a genus >= 2 quotient.

    The degeneracy (2g-2)(B - m - 1/2) is only asserted for m < B - 1;
    later rows carry ``None``.
    """
    B = as_number(B)
    if genus < 2:
        raise DomainError("hyperbolic quotients need genus >= 2")
    if B <= 0:
        raise DomainError("B must be positive")
    flux = (2 * genus - 2) * B
    if not isinstance(B, Fraction) or flux.denominator != 1:
        if not (isinstance(flux, float) and flux.is_integer()):
            raise QuantisationError(f"(2g-2)B = {flux} is not an integer")
    m_top = math.floor(B - Fraction(1, 2)) if isinstance(B, Fraction) else math.floor(B - 0.5)
    rows = []
    for m in range(m_top + 1):
        lam = (2 * m + 1) * B - m * (m + 1)
        dim = None
        if with_dims and m < B - 1:
            dim = int((2 * genus - 2) * (B - m - Fraction(1, 2)))
        rows.append(SpectrumRow(m, lam, dim))
    return SpectrumTable(tuple(rows), {"surface": "hyperbolic", "B": B, "genus": genus})


# -- intertwiner with the Laplace-Beltrami operator --

def spherical_intertwiner(N: int) -> DiffOp:
    """D = D_{N-1} ... D_1 D_0, with H_{2N} D = D (L_0 - N^2) checked exactly."""
    if N < 1:
        raise DomainError("N must be at least 1")
    D = sphere_D(0)
    for k in range(1, N):
        D = sphere_D(k) @ D
    if not operator_equal(monopole_hamiltonian(2 * N) @ D, D @ (sphere_L(0) - N * N)):
        raise IdentityError(f"spherical intertwiner fails at N={N}")
    return D


# -- deformed intertwining family --

@dataclass(frozen=True)
class DeformationParams:
    """phi = q + p z - conj(q) z^2 and P = phi' - 2 zb phi / (1 + z zb)."""

    p: GaussianRational
    q: GaussianRational

    def __post_init__(self):
        object.__setattr__(self, "p", GaussianRational.coerce(self.p))
        object.__setattr__(self, "q", GaussianRational.coerce(self.q))
        if self.p.im:
            raise DomainError("p must be real")
        closed = (RationalSection({(0, 0): self.p, (1, 1): -self.p}, 1)
                  - RationalSection({(1, 0): 2 * self.q.conjugate(), (0, 1): 2 * self.q}, 1))
        if self.P != closed:
            raise IdentityError("P does not match its closed form")

    @property
    def phi(self) -> RationalSection:
        return RationalSection.holomorphic([self.q, self.p, -self.q.conjugate()])

    @property
    def P(self) -> RationalSection:
        phi = self.phi
        return phi.d_z() - RationalSection.zb() * phi * RationalSection.monomial(0, 0, 1, coeff=2)


def deformed_ops(N: int, params: DeformationParams):
    """(L~_N, L~_{N+1}, D~_N)."""
    P = params.P
    quarter = GaussianRational(Fraction(1, 4))
    V = P * P * quarter
    L_lo = sphere_L(N) - DiffOp.multiplication(V + P * (N + 1))
    L_hi = sphere_L(N + 1) - DiffOp.multiplication(V + P * N)
    D = sphere_D(N) + DiffOp.multiplication(params.phi * RationalSection.monomial(0, 0, 1))
    return L_lo, L_hi, D


def deformed_verify(N: int, params: DeformationParams, *, D: DiffOp | None = None) -> bool:
    """L~_{N+1} D~_N = D~_N L~_N, decided exactly."""
    L_lo, L_hi, D_t = deformed_ops(N, params)
    D_t = D_t if D is None else D
    return operator_equal(L_hi @ D_t, D_t @ L_lo)


# -- hyperbolic Landau operator --

def _hyperbolic_nablas(B: int):
    sig = -1
    inv = RationalSection.monomial(0, 0, 1, sig)
    nabla = DiffOp.derivative(1, 0, sig) - DiffOp.multiplication(B * RationalSection.zb(sig) * inv)
    nabla_bar = DiffOp.derivative(0, 1, sig) + DiffOp.multiplication(B * RationalSection.z(sig) * inv)
    return nabla, nabla_bar


def hyperbolic_landau_op(B: int, form: str = "canonical") -> DiffOp:
    """Landau operator with constant field B on the Poincare disc.

    ``canonical``: -2h^2 (nabla nablabar + nablabar nabla), h = (1 - z zb)/2,
    whose ground family has eigenvalue B.
    ``literal``: -(1 - z zb)^2 (nabla nablabar + nablabar nabla), twice the
    canonical operator.
    ``expanded``: the explicit second-order expression
    -(1-z zb)^2 d dzb + B zb (1-z zb) dzb - B z (1-z zb) d + B^2 z zb,
    which coincides with ``canonical``.
    """
    if isinstance(B, bool) or int(B) != B:
        raise DomainError("the exact engine needs integer B")
    B = int(B)
    if B < 1:
        raise DomainError("B must be at least 1")
    sig = -1
    s = RationalSection.one_plus(sig)
    z, zb = RationalSection.z(sig), RationalSection.zb(sig)
    if form == "expanded":
        return DiffOp({
            (1, 1): -(s * s),
            (0, 1): B * zb * s,
            (1, 0): -B * z * s,
            (0, 0): B * B * z * zb,
        }, sig)
    nabla, nabla_bar = _hyperbolic_nablas(B)
    sym = nabla @ nabla_bar + nabla_bar @ nabla
    if form == "literal":
        return (-(s * s)) * sym
    if form == "canonical":
        return (-(s * s) * GaussianRational(Fraction(1, 2))) * sym
    raise ValidationError(f"unknown form {form!r}")


def hyperbolic_ground_state(B: int, k: int = 0) -> RationalSection:
    """z^k (1 - z zb)^B, annihilated by nablabar."""
    psi = RationalSection.monomial(k, 0, sigma=-1) * RationalSection.one_plus(-1) ** int(B)
    _, nabla_bar = _hyperbolic_nablas(int(B))
    if not apply(nabla_bar, psi).is_zero():
        raise IdentityError("ground state not annihilated by nablabar")
    return psi
