"""Exact integer matrix algebra for 4x4 toral automorphisms.

Everything here works on Python integers and :class:`fractions.Fraction`;
no floating point enters the classification path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import isqrt
from typing import Optional, Sequence

import numpy as np

from .errors import NotUnimodular

__all__ = [
    "IntegerMatrix",
    "IntPolynomial",
    "JordanClassification",
    "SmithForm",
    "BlockFormVerdict",
    "Verdict",
    "char_poly",
    "classify",
    "power_minus_identity_det",
    "smith_form",
    "verify_block_form",
    "BASE_MATRIX",
    "BLOCK_MATRIX",
]


@dataclass(frozen=True)
class IntegerMatrix:
    """Square matrix with arbitrary-precision integer entries (immutable)."""

    rows: tuple

    def __init__(self, rows):
        rows = tuple(tuple(int(v) for v in r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("IntegerMatrix must be square")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def identity(cls, n: int = 4) -> "IntegerMatrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def from_flat(cls, values: Sequence[int]) -> "IntegerMatrix":
        n = isqrt(len(values))
        if n * n != len(values):
            raise ValueError("flat matrix length must be a perfect square")
        return cls([values[i * n:(i + 1) * n] for i in range(n)])

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def flat(self) -> list:
        return [v for r in self.rows for v in r]

    def transpose(self) -> "IntegerMatrix":
        return IntegerMatrix(list(zip(*self.rows)))

    def __add__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        return IntegerMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        return IntegerMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def scale(self, c: int) -> "IntegerMatrix":
        return IntegerMatrix([[c * a for a in r] for r in self.rows])

    def __matmul__(self, other):
        if isinstance(other, IntegerMatrix):
            cols = list(zip(*other.rows))
            return IntegerMatrix([[sum(a * b for a, b in zip(r, c)) for c in cols] for r in self.rows])
        # integer (or Fraction) vector
        return [sum(a * b for a, b in zip(r, other)) for r in self.rows]

    def __pow__(self, k: int) -> "IntegerMatrix":
        if k < 0:
            return self.inverse() ** (-k)
        result = IntegerMatrix.identity(self.n)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def is_zero(self) -> bool:
        return all(v == 0 for r in self.rows for v in r)

    def trace(self) -> int:
        return sum(self.rows[i][i] for i in range(self.n))

    def det(self) -> int:
        """Bareiss fraction-free elimination."""
        a = [list(r) for r in self.rows]
        n = self.n
        sign, prev = 1, 1
        for k in range(n - 1):
            if a[k][k] == 0:
                swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
                if swap is None:
                    return 0
                a[k], a[swap] = a[swap], a[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return sign * a[n - 1][n - 1]

    def adjugate(self) -> "IntegerMatrix":
        n = self.n
        out = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                minor = IntegerMatrix([[self.rows[r][c] for c in range(n) if c != j]
                                       for r in range(n) if r != i]) if n > 1 else None
                cof = minor.det() if minor is not None else 1
                out[j][i] = (-1) ** (i + j) * cof
        return IntegerMatrix(out)

    def inverse(self) -> "IntegerMatrix":
        d = self.det()
        if d not in (1, -1):
            raise NotUnimodular(f"det = {d}, matrix is not invertible over Z")
        return self.adjugate().scale(d)

    def to_numpy(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)

    def block(self, i: int, j: int, size: int = 2) -> "IntegerMatrix":
        return IntegerMatrix([r[j * size:(j + 1) * size] for r in self.rows[i * size:(i + 1) * size]])

    def __repr__(self) -> str:
        return f"IntegerMatrix({[list(r) for r in self.rows]})"


BASE_MATRIX = IntegerMatrix([[2, 1, 1, 0], [1, 1, 0, 1], [0, 0, 2, 1], [0, 0, 1, 1]])
BLOCK_MATRIX = IntegerMatrix([[3, 2, 1, 0], [4, 3, 0, 1], [0, 0, 0, 1], [0, 0, -1, 6]])


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients in ascending degree."""

    coeffs: tuple

    def __init__(self, coeffs):
        c = [int(v) for v in coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return IntPolynomial(out)

    def at_matrix(self, m: IntegerMatrix) -> IntegerMatrix:
        acc = IntegerMatrix([[0] * m.n for _ in range(m.n)])
        eye = IntegerMatrix.identity(m.n)
        for c in reversed(self.coeffs):
            acc = acc @ m + eye.scale(c)
        return acc

    def __str__(self) -> str:
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
            if mono and abs(c) == 1:
                body = mono
            else:
                body = f"{abs(c)}{mono}"
            terms.append((c < 0, body))
        if not terms:
            return "0"
        neg, body = terms[0]
        out = ("-" if neg else "") + body
        for neg, body in terms[1:]:
            out += (" - " if neg else " + ") + body
        return out


class Verdict(str, Enum):
    JORDAN_ANOSOV = "JordanAnosov"
    DIAGONALIZABLE_ANOSOV = "DiagonalizableAnosov"
    NOT_ANOSOV = "NotAnosov"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class JordanClassification:
    verdict: Verdict
    is_hyperbolic: Optional[bool]
    has_jordan_block: bool
    char_poly: IntPolynomial
    q: Optional[IntPolynomial] = None
    # rational interval around the root of q with modulus > 1
    lambda_bounds: Optional[tuple] = None

    @property
    def lam(self) -> float:
        lo, hi = self.lambda_bounds
        return float((lo + hi) / 2)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "is_hyperbolic": self.is_hyperbolic,
            "has_jordan_block": self.has_jordan_block,
            "char_poly": list(self.char_poly.coeffs),
            "q": None if self.q is None else list(self.q.coeffs),
            "q_str": None if self.q is None else str(self.q),
            "lambda_bounds": None if self.lambda_bounds is None
            else [str(self.lambda_bounds[0]), str(self.lambda_bounds[1])],
        }


def char_poly(m: IntegerMatrix) -> IntPolynomial:
    """det(tI - M) via Faddeev-LeVerrier (all divisions are exact)."""
    n = m.n
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    mk = IntegerMatrix([[0] * n for _ in range(n)])
    eye = IntegerMatrix.identity(n)
    c = 1
    for k in range(1, n + 1):
        mk = m @ (mk + eye.scale(c))
        tr = mk.trace()
        assert tr % k == 0
        c = -tr // k
        coeffs[n - k] = c
    return IntPolynomial(coeffs)


def power_minus_identity_det(m: IntegerMatrix, n: int) -> int:
    if n < 1:
        raise ValueError("n must be positive")
    return ((m ** n) - IntegerMatrix.identity(m.n)).det()


def _square_root_poly(p: IntPolynomial) -> Optional[IntPolynomial]:
    """Return monic integer q with q^2 == p, if p is monic quartic and such q exists."""
    if p.degree != 4 or p.coeffs[4] != 1:
        return None
    p0, p1, p2, p3, _ = p.coeffs
    if p3 % 2:
        return None
    b = p3 // 2
    if (p2 - b * b) % 2:
        return None
    c = (p2 - b * b) // 2
    q = IntPolynomial([c, b, 1])
    return q if q * q == p else None


def _root_interval(q: IntPolynomial, width: Fraction) -> tuple:
    """Rational interval of width <= ``width`` around the root of the monic quadratic
    ``q`` with the larger modulus. Assumes positive discriminant."""
    c, b, _ = q.coeffs
    # larger-modulus root is (-b + s*sqrt(D))/2 with s = sign(-b) (s=+1 when b == 0)
    s = 1 if b <= 0 else -1
    disc = b * b - 4 * c
    r = isqrt(disc)
    lo, hi = Fraction(r), Fraction(r + 1)  # sqrt(disc) in [r, r+1]
    if r * r == disc:
        hi = lo
    target = width * 2
    while hi - lo > target:
        mid = (lo + hi) / 2
        if mid * mid <= disc:
            lo = mid
        else:
            hi = mid
    ends = sorted([(-b + s * lo) / 2, (-b + s * hi) / 2])
    return ends[0], ends[1]


def classify(m: IntegerMatrix, width: Fraction = Fraction(1, 10 ** 12)) -> JordanClassification:
    d = m.det()
    if d not in (1, -1):
        raise NotUnimodular(f"det = {d}")
    p = char_poly(m)
    q = _square_root_poly(p)
    if q is None:
        return JordanClassification(Verdict.NOT_APPLICABLE, None, False, p)
    c, b, _ = q.coeffs
    disc = b * b - 4 * c
    hyperbolic = disc > 0 and q(1) != 0 and q(-1) != 0
    jordan = not q.at_matrix(m).is_zero()
    if not hyperbolic:
        return JordanClassification(Verdict.NOT_ANOSOV, False, jordan, p, q)
    bounds = _root_interval(q, width)
    verdict = Verdict.JORDAN_ANOSOV if jordan else Verdict.DIAGONALIZABLE_ANOSOV
    return JordanClassification(verdict, True, jordan, p, q, bounds)


@dataclass(frozen=True)
class SmithForm:
    d: tuple
    U: IntegerMatrix
    V: IntegerMatrix

    def check(self, m: IntegerMatrix) -> bool:
        n = m.n
        diag = IntegerMatrix([[self.d[i] if i == j else 0 for j in range(n)] for i in range(n)])
        return (self.U @ m @ self.V) == diag


def smith_form(m: IntegerMatrix) -> SmithForm:
    """Smith normal form with unimodular transforms, U @ M @ V = diag(d)."""
    n = m.n
    a = [list(r) for r in m.rows]
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in a:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]

    def add_row(dst, src, k):  # row_dst += k * row_src
        a[dst] = [x + k * y for x, y in zip(a[dst], a[src])]
        U[dst] = [x + k * y for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, k):
        for r in a:
            r[dst] += k * r[src]
        for r in V:
            r[dst] += k * r[src]

    for t in range(n):
        nonzero = [(abs(a[i][j]), i, j) for i in range(t, n) for j in range(t, n) if a[i][j]]
        if not nonzero:
            break
        _, i, j = min(nonzero)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            done = True
            for i in range(t + 1, n):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // a[t][t]))
                    if a[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // a[t][t]))
                    if a[t][j]:
                        swap_cols(t, j)
                        done = False
            if not done:
                continue
            # divisibility of the remaining block
            bad = next(((i, j) for i in range(t + 1, n) for j in range(t + 1, n)
                        if a[i][j] % a[t][t]), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            U[t] = [-x for x in U[t]]
    d = tuple(a[i][i] for i in range(n))
    # zeros last, already guaranteed by the pivot search; keep nonnegative
    return SmithForm(d, IntegerMatrix(U), IntegerMatrix(V))


@dataclass(frozen=True)
class BlockFormVerdict:
    passed: bool
    reasons: tuple
    A: IntegerMatrix
    B: IntegerMatrix
    C: IntegerMatrix
    lower_left: IntegerMatrix
    conjugated: IntegerMatrix = field(repr=False)


def verify_block_form(m: IntegerMatrix, p: IntegerMatrix) -> BlockFormVerdict:
    """Check that P^-1 M P = [[A, C], [0, B]] with char A == char B having two
    distinct real roots and C != 0."""
    pinv = p.inverse()
    conj = pinv @ m @ p
    a, c = conj.block(0, 0), conj.block(0, 1)
    ll, b = conj.block(1, 0), conj.block(1, 1)
    reasons = []
    if not ll.is_zero():
        reasons.append("lower-left block nonzero")
    pa, pb = char_poly(a), char_poly(b)
    if pa != pb:
        reasons.append("diagonal blocks have different characteristic polynomials")
    cc, bb, _ = pa.coeffs
    if bb * bb - 4 * cc <= 0:
        reasons.append("diagonal block lacks two distinct real roots")
    if a.det() not in (1, -1) or b.det() not in (1, -1):
        reasons.append("diagonal blocks not in GL(2,Z)")
    if c.is_zero():
        reasons.append("upper-right block is zero")
    return BlockFormVerdict(not reasons, tuple(reasons), a, b, c, ll, conj)
