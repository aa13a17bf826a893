"""Exact sections p(z, zb)/(1 + s z zb)^N and differential operators over them.

Coefficients live in Q(i).  ``z`` and ``zb`` are treated as independent
variables, so every identity checked here is a formal identity of polynomial
differential operators, which is stronger than equality on the real chart.

Every operator that appears in the monopole and hyperbolic ladders preserves
the ring of sections whose denominators are powers of ``1 + s z zb``
(``s = +1`` sphere, ``s = -1`` disc).  General rational functions are not
representable on purpose.
"""
from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping

from .errors import SignatureMismatchError, ValidationError

__all__ = [
    "GaussianRational",
    "RationalSection",
    "DiffOp",
    "section_arith",
    "apply",
    "compose",
    "operator_equal",
    "coefficient_equal",
    "exact_rank",
]


class GaussianRational:
    """Element of Q(i), stored as two Fractions."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational):
            self.re, self.im = re.re, re.im + Fraction(im)
            return
        if isinstance(re, complex):
            raise TypeError("floating complex numbers are not exact; pass parts explicitly")
        if isinstance(re, float) or isinstance(im, float):
            raise TypeError("floats are not exact; use Fraction or str")
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def _make(cls, re: Fraction, im: Fraction) -> "GaussianRational":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, str):
            return cls.parse(value)
        return cls(value)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational._make(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational._make(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __neg__(self):
        return GaussianRational._make(-self.re, -self.im)

    def __mul__(self, other):
        other = GaussianRational.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussianRational._make(a * c, b)
        return GaussianRational._make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GaussianRational.coerce(other)
        den = other.re * other.re + other.im * other.im
        if not den:
            raise ZeroDivisionError("division by zero in Q(i)")
        num = self * other.conjugate()
        return GaussianRational._make(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return GaussianRational(1) / self ** (-n)
        result = GaussianRational._make(Fraction(1), Fraction(0))
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self):
        return GaussianRational._make(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        if not self.im:
            return str(self.re)
        imag = f"{abs(self.im)} i"
        if not self.re:
            return f"-{imag}" if self.im < 0 else imag
        return f"{self.re}{'-' if self.im < 0 else '+'}{imag}"

    def __repr__(self):
        return f"GaussianRational('{self}')"

    @classmethod
    def parse(cls, text: str) -> "GaussianRational":
        """Parse ``"p/q+r/s i"`` and its abbreviations (``"3"``, ``"-i"``, ``"1-2/3 i"``)."""
        s = text.replace(" ", "")
        if not s:
            raise ValidationError("empty Gaussian rational")
        try:
            if not s.endswith("i"):
                return cls(Fraction(s))
            body = s[:-1]
            cut = max(body.rfind("+"), body.rfind("-"))
            if cut <= 0:
                real, imag = "", body
            else:
                real, imag = body[:cut], body[cut:]
            if imag in ("", "+"):
                imag = "1"
            elif imag == "-":
                imag = "-1"
            return cls(Fraction(real) if real else 0, Fraction(imag))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse Gaussian rational {text!r}") from exc


_ZERO = GaussianRational(0)
_ONE = GaussianRational(1)

# -- polynomials in (z, zb): dict {(a, b): GaussianRational}, no zero entries --


def _padd(p, q, sign=1):
    out = dict(p)
    for m, c in q.items():
        v = out.get(m)
        v = (c if sign > 0 else -c) if v is None else (v + c if sign > 0 else v - c)
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pmul(p, q):
    out = {}
    for (a, b), c in p.items():
        for (i, j), d in q.items():
            m = (a + i, b + j)
            v = out.get(m)
            out[m] = c * d if v is None else v + c * d
    return {m: c for m, c in out.items() if c}


def _pscale(p, c):
    if not c:
        return {}
    return {m: v * c for m, v in p.items()}


def _pdz(p):
    return {(a - 1, b): c * a for (a, b), c in p.items() if a}


def _pdzb(p):
    return {(a, b - 1): c * b for (a, b), c in p.items() if b}


@lru_cache(maxsize=None)
def _one_plus_pow(sigma: int, k: int):
    """(1 + sigma z zb)^k, expanded."""
    s = Fraction(sigma)
    return tuple(((j, j), GaussianRational(comb(k, j) * s**j)) for j in range(k + 1))


def _divide_one_plus(p, sigma):
    """Return p / (1 + sigma z zb) if exact, else None."""
    groups: dict[int, dict[int, GaussianRational]] = {}
    for (a, b), c in p.items():
        groups.setdefault(a - b, {})[min(a, b)] = c
    out = {}
    for d, coeffs in groups.items():
        n = max(coeffs)
        if n == 0:
            return None
        q = [_ZERO] * n
        q[n - 1] = coeffs[n] * sigma
        for k in range(n - 1, 0, -1):
            q[k - 1] = (coeffs.get(k, _ZERO) - q[k]) * sigma
        if coeffs.get(0, _ZERO) != q[0]:
            return None
        for k, c in enumerate(q):
            if c:
                out[(k + d, k) if d >= 0 else (k, k - d)] = c
    return out


def _deglex_key(m):
    a, b = m
    return (a + b, -a)


class RationalSection:
    """Immutable exact section ``numerator / (1 + sigma z zb)^power``.

    Always stored in canonical form: the numerator is not divisible by
    ``1 + sigma z zb`` unless ``power == 0``, and the zero section has power 0.
    """

    __slots__ = ("_num", "power", "sigma", "_hash")

    def __init__(self, numerator: Mapping | None = None, power: int = 0, sigma: int = 1):
        if sigma not in (1, -1):
            raise ValidationError(f"sigma must be +1 or -1, got {sigma!r}")
        if power < 0:
            raise ValidationError("denominator power must be non-negative")
        num = {}
        for m, c in (numerator or {}).items():
            a, b = m
            if a < 0 or b < 0:
                raise ValidationError(f"negative exponent in monomial {m}")
            c = GaussianRational.coerce(c)
            if c:
                num[(int(a), int(b))] = c
        self._init(num, power, sigma, canonical=False)

    def _init(self, num, power, sigma, canonical):
        if not num:
            power = 0
        if not canonical:
            while power > 0:
                q = _divide_one_plus(num, sigma)
                if q is None:
                    break
                num, power = q, power - 1
        self._num = num
        self.power = power
        self.sigma = sigma
        self._hash = None

    @classmethod
    def _raw(cls, num, power, sigma, canonical=False):
        obj = object.__new__(cls)
        obj._init(num, power, sigma, canonical)
        return obj

    # -- constructors --
    @classmethod
    def constant(cls, value, sigma=1):
        c = GaussianRational.coerce(value)
        return cls._raw({(0, 0): c} if c else {}, 0, sigma, canonical=True)

    @classmethod
    def monomial(cls, a, b, power=0, sigma=1, coeff=1):
        return cls({(a, b): coeff}, power, sigma)

    @classmethod
    def z(cls, sigma=1):
        return cls.monomial(1, 0, sigma=sigma)

    @classmethod
    def zb(cls, sigma=1):
        return cls.monomial(0, 1, sigma=sigma)

    @classmethod
    def one_plus(cls, sigma=1):
        """The conformal polynomial 1 + sigma z zb."""
        return cls._raw(dict(_one_plus_pow(sigma, 1)), 0, sigma, canonical=True)

    @classmethod
    def holomorphic(cls, coeffs: Iterable, power=0, sigma=1):
        """sum_k coeffs[k] z^k / (1 + sigma z zb)^power."""
        return cls({(k, 0): c for k, c in enumerate(coeffs)}, power, sigma)

    # -- inspection --
    @property
    def numerator(self):
        return dict(self._num)

    def is_zero(self):
        return not self._num

    def degree(self):
        return max((a + b for a, b in self._num), default=-1)

    def __eq__(self, other):
        if not isinstance(other, RationalSection):
            return NotImplemented
        return (self.sigma == other.sigma and self.power == other.power
                and self._num == other._num)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.sigma, self.power, frozenset(self._num.items())))
        return self._hash

    def _check(self, other):
        if not isinstance(other, RationalSection):
            other = RationalSection.constant(other, self.sigma)
        if other.sigma != self.sigma:
            raise SignatureMismatchError("cannot combine sphere (+1) and disc (-1) sections")
        return other

    # -- arithmetic --
    def _lift(self, power):
        """Numerator over (1 + sigma z zb)^power, power >= self.power."""
        if power == self.power:
            return self._num
        return _pmul(self._num, dict(_one_plus_pow(self.sigma, power - self.power)))

    def __add__(self, other):
        other = self._check(other)
        if not other._num:
            return self
        if not self._num:
            return other
        n = max(self.power, other.power)
        return RationalSection._raw(_padd(self._lift(n), other._lift(n)), n, self.sigma)

    __radd__ = __add__

    def __neg__(self):
        return RationalSection._raw({m: -c for m, c in self._num.items()}, self.power,
                                    self.sigma, canonical=True)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        if isinstance(other, RationalSection):
            other = self._check(other)
            # 1 + s z zb is irreducible: two canonical factors with positive
            # powers have coprime numerators, so only a power-0 factor can cancel
            power = self.power + other.power
            return RationalSection._raw(_pmul(self._num, other._num), power, self.sigma,
                                        canonical=(self.power > 0) == (other.power > 0))
        try:
            c = GaussianRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        if not c:
            return RationalSection._raw({}, 0, self.sigma, canonical=True)
        return RationalSection._raw(_pscale(self._num, c), self.power, self.sigma, canonical=True)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValidationError("negative powers leave the section ring")
        out = RationalSection.constant(1, self.sigma)
        for _ in range(n):
            out = out * self
        return out

    def d_z(self):
        p, n, s = self._num, self.power, self.sigma
        if n == 0:
            return RationalSection._raw(_pdz(p), 0, s, canonical=True)
        # (p_z (1 + s z zb) - n s zb p) / (1 + s z zb)^(n+1)
        num = _padd(_pmul(_pdz(p), dict(_one_plus_pow(s, 1))),
                    _pmul(p, {(0, 1): GaussianRational(n * s)}), sign=-1)
        return RationalSection._raw(num, n + 1, s)

    def d_zbar(self):
        p, n, s = self._num, self.power, self.sigma
        if n == 0:
            return RationalSection._raw(_pdzb(p), 0, s, canonical=True)
        num = _padd(_pmul(_pdzb(p), dict(_one_plus_pow(s, 1))),
                    _pmul(p, {(1, 0): GaussianRational(n * s)}), sign=-1)
        return RationalSection._raw(num, n + 1, s)

    def conjugate(self):
        """Complex conjugate on the real chart: swaps z and zb, conjugates coefficients."""
        return RationalSection._raw({(b, a): c.conjugate() for (a, b), c in self._num.items()},
                                    self.power, self.sigma, canonical=True)

    def evaluate(self, z, zb=None):
        """Evaluate at (z, zb); exact for Gaussian rationals, float for complex input."""
        if zb is None:
            zb = z.conjugate()
        exact = isinstance(z, GaussianRational)
        if exact:
            zb = GaussianRational.coerce(zb)
            total = _ZERO
            for (a, b), c in self._num.items():
                total = total + c * z**a * zb**b
            return total / (1 + self.sigma * z * zb) ** self.power
        total = 0j
        for (a, b), c in self._num.items():
            total += complex(c) * z**a * zb**b
        return total / (1 + self.sigma * z * zb) ** self.power

    # -- text form --
    def to_text(self):
        if not self._num:
            body = "0"
        else:
            body = " + ".join(f"({self._num[m]})*z^{m[0]}*zb^{m[1]}"
                              for m in sorted(self._num, key=_deglex_key))
        return f"{{{body}}}/(1{'+' if self.sigma > 0 else '-'}z*zb)^{self.power}"

    __str__ = to_text

    def __repr__(self):
        return f"RationalSection('{self.to_text()}')"

    _SECTION_RE = re.compile(r"^\{(.*)\}/\(1([+-])z\*zb\)\^(\d+)$")
    _TERM_RE = re.compile(r"\(([^()]*)\)\*z\^(\d+)\*zb\^(\d+)")

    @classmethod
    def parse(cls, text: str) -> "RationalSection":
        m = cls._SECTION_RE.match(text.strip())
        if not m:
            raise ValidationError(f"not a section: {text!r}")
        body, sign, power = m.groups()
        num = {}
        if body.strip() != "0":
            terms = cls._TERM_RE.findall(body)
            leftover = cls._TERM_RE.sub("", body).replace("+", "").strip()
            if not terms or leftover:
                raise ValidationError(f"cannot parse section numerator {body!r}")
            for coeff, a, b in terms:
                key = (int(a), int(b))
                num[key] = num.get(key, _ZERO) + GaussianRational.parse(coeff)
        return cls(num, int(power), 1 if sign == "+" else -1)


def section_arith(op: str, *args: RationalSection) -> RationalSection:
    """Dispatch ``add``, ``mul``, ``d_z`` or ``d_zbar`` on sections."""
    if op == "add":
        out = args[0]
        for s in args[1:]:
            out = out + s
        return out
    if op == "mul":
        out = args[0]
        for s in args[1:]:
            out = out * s
        return out
    if op == "d_z":
        (s,) = args
        return s.d_z()
    if op == "d_zbar":
        (s,) = args
        return s.d_zbar()
    raise ValidationError(f"unknown section operation {op!r}")


def _derivatives(s: RationalSection, cache: dict, a: int, b: int) -> RationalSection:
    key = (a, b)
    got = cache.get(key)
    if got is not None:
        return got
    if b > 0:
        got = _derivatives(s, cache, a, b - 1).d_zbar()
    elif a > 0:
        got = _derivatives(s, cache, a - 1, 0).d_z()
    else:
        got = s
    cache[key] = got
    return got


class DiffOp:
    """Finite sum of ``coeff(a, b) * d_z^a d_zb^b`` with section coefficients."""

    __slots__ = ("terms", "sigma")

    def __init__(self, terms: Mapping | None = None, sigma: int = 1):
        clean = {}
        for (a, b), c in (terms or {}).items():
            if not isinstance(c, RationalSection):
                c = RationalSection.constant(c, sigma)
            if c.sigma != sigma:
                raise SignatureMismatchError("operator coefficient has the wrong signature")
            if not c.is_zero():
                clean[(int(a), int(b))] = c
        self.terms = clean
        self.sigma = sigma

    @classmethod
    def identity(cls, sigma=1):
        return cls({(0, 0): RationalSection.constant(1, sigma)}, sigma)

    @classmethod
    def zero(cls, sigma=1):
        return cls({}, sigma)

    @classmethod
    def derivative(cls, a=0, b=0, sigma=1):
        return cls({(a, b): RationalSection.constant(1, sigma)}, sigma)

    @classmethod
    def multiplication(cls, section: RationalSection):
        return cls({(0, 0): section}, section.sigma)

    @property
    def max_order(self):
        return max((a + b for a, b in self.terms), default=0)

    def order_in_zbar(self):
        return max((b for _, b in self.terms), default=0)

    def order_in_z(self):
        return max((a for a, _ in self.terms), default=0)

    def is_zero(self):
        return not self.terms

    def _coerce(self, other):
        if isinstance(other, DiffOp):
            if other.sigma != self.sigma:
                raise SignatureMismatchError("cannot combine operators of different signature")
            return other
        if isinstance(other, RationalSection):
            return DiffOp.multiplication(self._check_section(other))
        return DiffOp({(0, 0): RationalSection.constant(other, self.sigma)}, self.sigma)

    def _check_section(self, s):
        if s.sigma != self.sigma:
            raise SignatureMismatchError("section and operator signatures differ")
        return s

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return DiffOp(out, self.sigma)

    __radd__ = __add__

    def __neg__(self):
        return DiffOp({k: -c for k, c in self.terms.items()}, self.sigma)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __rmul__(self, other):
        """Left multiplication by a scalar or section."""
        if isinstance(other, RationalSection):
            self._check_section(other)
        return DiffOp({k: other * c for k, c in self.terms.items()}, self.sigma)

    def __matmul__(self, other):
        return compose(self, other)

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.sigma == other.sigma and self.terms == other.terms

    def __hash__(self):
        return hash((self.sigma, frozenset(self.terms.items())))

    def __call__(self, s: RationalSection) -> RationalSection:
        return apply(self, s)

    def to_text(self):
        keys = sorted(self.terms, key=_deglex_key)
        if not keys:
            return f"{RationalSection.constant(0, self.sigma).to_text()}*D(0,0)"
        return " + ".join(f"{self.terms[k].to_text()}*D({k[0]},{k[1]})" for k in keys)

    __str__ = to_text

    def __repr__(self):
        return f"DiffOp('{self.to_text()}')"

    _TERM_RE = re.compile(r"(\{[^{}]*\}/\(1[+-]z\*zb\)\^\d+)\*D\((\d+),(\d+)\)")

    @classmethod
    def parse(cls, text: str) -> "DiffOp":
        found = cls._TERM_RE.findall(text)
        leftover = cls._TERM_RE.sub("", text).replace("+", "").strip()
        if not found or leftover:
            raise ValidationError(f"cannot parse operator {text!r}")
        sections = [(RationalSection.parse(s), int(a), int(b)) for s, a, b in found]
        sigma = sections[0][0].sigma
        terms: dict = {}
        for s, a, b in sections:
            if s.sigma != sigma:
                raise SignatureMismatchError("mixed signatures in operator text")
            terms[(a, b)] = terms[(a, b)] + s if (a, b) in terms else s
        return cls(terms, sigma)


def apply(op: DiffOp, s: RationalSection) -> RationalSection:
    """sum coeff * d_z^a d_zb^b s, exactly."""
    if s.sigma != op.sigma:
        raise SignatureMismatchError("operator and section signatures differ")
    cache: dict = {}
    out = RationalSection.constant(0, op.sigma)
    for (a, b), c in op.terms.items():
        out = out + c * _derivatives(s, cache, a, b)
    return out


def compose(op_a: DiffOp, op_b: DiffOp) -> DiffOp:
    """Operator product op_a o op_b by Leibniz expansion."""
    if op_a.sigma != op_b.sigma:
        raise SignatureMismatchError("cannot compose operators of different signature")
    out: dict = {}
    caches = {k: {} for k in op_b.terms}
    for (a, b), c in op_a.terms.items():
        for (i, j), d in op_b.terms.items():
            cache = caches[(i, j)]
            for r in range(a + 1):
                for s in range(b + 1):
                    dd = _derivatives(d, cache, r, s)
                    if dd.is_zero():
                        continue
                    term = c * dd * (comb(a, r) * comb(b, s))
                    key = (a - r + i, b - s + j)
                    out[key] = out[key] + term if key in out else term
    return DiffOp(out, op_a.sigma)


def _product_order(op):
    if isinstance(op, DiffOp):
        return op.max_order, op.sigma
    factors = list(op)
    sigmas = {f.sigma for f in factors}
    if len(sigmas) != 1:
        raise SignatureMismatchError("mixed signatures in operator product")
    return sum(f.max_order for f in factors), factors[0].sigma


def _apply_product(op, s):
    if isinstance(op, DiffOp):
        return apply(op, s)
    for factor in reversed(list(op)):
        s = apply(factor, s)
    return s


def operator_equal(op_a, op_b) -> bool:
    """Decide op_a == op_b by probing monomials z^a zb^b, 0 <= a, b <= order + 1.

    An operator of order <= k is fixed by its action on these monomials:
    its action on z^a zb^b involves coefficients (i, j) with i <= a, j <= b
    only, and (a, b) itself with weight a! b!, so the system is triangular.
    Either side may also be a sequence of DiffOps read as a product
    (rightmost factor applied first), which avoids forming the composition.
    """
    order_a, sigma_a = _product_order(op_a)
    order_b, sigma_b = _product_order(op_b)
    if sigma_a != sigma_b:
        raise SignatureMismatchError("cannot compare operators of different signature")
    k = max(order_a, order_b) + 1
    for a in range(k + 1):
        for b in range(k + 1):
            probe = RationalSection.monomial(a, b, sigma=sigma_a)
            if _apply_product(op_a, probe) != _apply_product(op_b, probe):
                return False
    return True


def coefficient_equal(op_a: DiffOp, op_b: DiffOp) -> bool:
    """Coefficient-by-coefficient comparison of canonical forms."""
    return (op_a - op_b).is_zero()


def exact_rank(sections: Iterable[RationalSection]) -> int:
    """Rank over Q(i) of a family of sections."""
    sections = list(sections)
    if not sections:
        return 0
    sigma = sections[0].sigma
    if any(s.sigma != sigma for s in sections):
        raise SignatureMismatchError("mixed signatures in rank computation")
    n = max(s.power for s in sections)
    rows = [dict(s._lift(n)) for s in sections]
    rank = 0
    pivots: list[tuple[tuple[int, int], dict]] = []
    # pivot rows are normalised to -1 at their pivot, so row + c * prow clears it
    for row in rows:
        for key, prow in pivots:
            c = row.get(key)
            if c:
                row = _padd(row, _pscale(prow, c))
        if row:
            key = min(row, key=_deglex_key)
            inv = GaussianRational(-1) / row[key]
            pivots.append((key, _pscale(row, inv)))
            rank += 1
    return rank
