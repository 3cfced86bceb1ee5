"""Monic matrix orthogonal polynomials from moment tables.

Families are indexed by a shift l: P_n^{(l)} is monic of degree n and
orthogonal to lower degrees in the bilinear form <f, g>_l =
sum f_i m_{l+i+j} g_j^T.  All coefficient data (Hankel quasi-determinants
H_n, recurrence matrices a_n, b_n, spectral transformation matrices)
comes out of bordered quasi-determinants of the same moment tables, and
everything works verbatim over jet entries, carrying exact time
derivatives along.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import SingularMatrix, SingularMoment, SingularSubmatrix
from .exactalg import (
    RingElement,
    Scalar,
    identity_like,
    jet_derivative,
    value_part,
    zero_like,
)
from .moments import MomentTable, even_reduction
from .quaside import BlockMatrix, quasidet, ring_solve, submatrix


class MatPoly:
    """Polynomial with square ring-element coefficients, lowest degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[RingElement]):
        tup = tuple(coeffs)
        if not tup:
            raise ValueError("polynomial needs at least one coefficient")
        while len(tup) > 1 and tup[-1].is_zero():
            tup = tup[:-1]
        object.__setattr__(self, "coeffs", tup)

    def __setattr__(self, name, value):
        raise AttributeError("MatPoly is immutable")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, k: int) -> RingElement:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return zero_like(self.coeffs[0])

    def __eq__(self, other):
        if not isinstance(other, MatPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __repr__(self):
        return f"MatPoly(degree={self.degree})"

    def __add__(self, other: "MatPoly") -> "MatPoly":
        top = max(len(self.coeffs), len(other.coeffs))
        return MatPoly(
            [self.coefficient(k) + other.coefficient(k) for k in range(top)]
        )

    def __sub__(self, other: "MatPoly") -> "MatPoly":
        return self + (-other)

    def __neg__(self) -> "MatPoly":
        return MatPoly([-c for c in self.coeffs])

    def left_mul(self, m: RingElement) -> "MatPoly":
        return MatPoly([m * c for c in self.coeffs])

    def mul_x(self, k: int = 1) -> "MatPoly":
        if self.is_zero():
            return self
        return MatPoly([zero_like(self.coeffs[0])] * k + list(self.coeffs))

    def scale(self, s: Scalar) -> "MatPoly":
        return MatPoly([c.scale(s) for c in self.coeffs])

    def compose_square(self) -> "MatPoly":
        """Substitute x -> x^2."""
        zero = zero_like(self.coeffs[0])
        out: list = []
        for c in self.coeffs:
            out.append(c)
            out.append(zero)
        return MatPoly(out[:-1])

    def eval(self, x: Scalar) -> RingElement:
        acc = zero_like(self.coeffs[0])
        power = Fraction(1)
        for c in self.coeffs:
            acc = acc + c.scale(power)
            power = power * x
        return acc

    def map(self, fn: Callable[[RingElement], RingElement]) -> "MatPoly":
        return MatPoly([fn(c) for c in self.coeffs])

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def max_abs(self) -> Fraction:
        return max(c.max_abs() for c in self.coeffs)


def poly_value(poly: MatPoly) -> MatPoly:
    """Coefficient-wise value part of a jet polynomial."""
    return poly.map(value_part)


def poly_derivative(poly: MatPoly, k: int = 1) -> MatPoly:
    """Coefficient-wise k-th time derivative of a jet polynomial."""
    return poly.map(lambda c: jet_derivative(c, k))


def _hankel_block(table: MomentTable, l: int, rows: Sequence[int], cols: Sequence[int]) -> BlockMatrix:
    return BlockMatrix([[table.m(l + i + j) for j in cols] for i in rows])


def build_poly(table: MomentTable, l: int, n: int) -> MatPoly:
    """Monic orthogonal polynomial P_n^{(l)} by one exact block Hankel solve."""
    if n < 0:
        raise ValueError("polynomial index must be nonnegative")
    template = table.m(l)
    if n == 0:
        return MatPoly([identity_like(template)])
    lam = _hankel_block(table, l, range(n), range(n))
    rhs = BlockMatrix([[-table.m(l + j + n)] for j in range(n)])
    try:
        x = ring_solve(lam.flatten(), rhs.flatten())
    except SingularMatrix as exc:
        raise SingularMoment(
            f"block Hankel of size {n} at shift {l} is singular"
        ) from exc
    p = table.p
    coeffs = []
    for i in range(n):
        rows = list(range(i * p, i * p + p))
        coeffs.append(submatrix(x, rows, list(range(p))).transpose())
    coeffs.append(identity_like(template))
    return MatPoly(coeffs)


def inner_product(f: MatPoly, g: MatPoly, table: MomentTable, l: int = 0) -> RingElement:
    """Bilinear pairing <f, g>_l = sum_{i,j} f_i m_{l+i+j} g_j^T."""
    acc = zero_like(f.coeffs[0])
    for i, fi in enumerate(f.coeffs):
        for j, gj in enumerate(g.coeffs):
            acc = acc + fi * table.m(l + i + j) * gj.transpose()
    return acc


def hankel_H(table: MomentTable, l: int, n: int) -> RingElement:
    """Quasi-determinant H_n^{(l)} of the (n+1) x (n+1) block Hankel matrix."""
    if n < 0:
        raise ValueError("Hankel index must be nonnegative")
    block = _hankel_block(table, l, range(n + 1), range(n + 1))
    try:
        return quasidet(block, n, n)
    except SingularSubmatrix as exc:
        raise SingularMoment(
            f"Hankel quasi-determinant H_{n} at shift {l} is undefined"
        ) from exc


def recurrence_coeffs(table: MomentTable, l: int, n: int) -> tuple:
    """Recurrence matrices (a_n, b_n) with x P_n = P_{n+1} + a_n P_n + b_n P_{n-1}.

    a_n comes from the two bordered Hankel quasi-determinants of the
    time-derivative identity for H_n; b_n = H_n H_{n-1}^{-1}; b_0 = 0.
    """
    if n < 0:
        raise ValueError("site index must be nonnegative")
    template = table.m(l)
    if n == 0:
        try:
            a = table.m(l + 1) * table.m(l).inv()
        except SingularMatrix as exc:
            raise SingularMoment(f"moment m_{l} is singular") from exc
        return a, zero_like(template)
    ident = identity_like(template)
    zero = zero_like(template)
    rows_shifted = list(range(n)) + [n + 1]
    m1 = _hankel_block(table, l, rows_shifted, range(n + 1))
    term1 = _moment_quasidet(m1, n, l)
    m2_rows = [
        [table.m(l + i + j) for j in range(n)]
        + [ident if i == n - 1 else zero]
        for i in range(n)
    ]
    m2_rows.append([table.m(l + n + j) for j in range(n)] + [zero])
    term2 = _moment_quasidet(BlockMatrix(m2_rows), n, l)
    h_n = hankel_H(table, l, n)
    h_prev = hankel_H(table, l, n - 1)
    try:
        h_n_inv = h_n.inv()
        h_prev_inv = h_prev.inv()
    except SingularMatrix as exc:
        raise SingularMoment(f"Hankel quasi-determinant at site {n} is singular") from exc
    a = (term1 + term2 * h_n) * h_n_inv
    b = h_n * h_prev_inv
    return a, b


def _moment_quasidet(block: BlockMatrix, corner: int, l: int) -> RingElement:
    try:
        return quasidet(block, corner, corner)
    except SingularSubmatrix as exc:
        raise SingularMoment(
            f"bordered Hankel quasi-determinant at shift {l} is undefined"
        ) from exc


def christoffel_A(table: MomentTable, l: int, n: int) -> RingElement:
    """Connection matrix A_n^{(l)} with P_n^{(l)} = x P_{n-1}^{(l+2)} - A_n^{(l)} P_{n-1}^{(l+1)}."""
    if n < 1:
        raise ValueError("Christoffel connection starts at n = 1")
    h_mid = hankel_H(table, l + 1, n - 1)
    try:
        acc = hankel_H(table, l, n - 1).inv()
        if n >= 2:
            acc = acc - hankel_H(table, l + 2, n - 2).inv()
    except SingularMatrix as exc:
        raise SingularMoment(f"Hankel inverse missing for shift {l}") from exc
    return h_mid * acc


def geronimus_B(table: MomentTable, l: int, n: int) -> RingElement:
    """Connection matrix B_n^{(l)} with x P_n^{(l+1)} = P_{n+1}^{(l)} + B_n^{(l)} P_n^{(l)}."""
    if n < 0:
        raise ValueError("site index must be nonnegative")
    try:
        return hankel_H(table, l + 1, n) * hankel_H(table, l, n).inv()
    except SingularMatrix as exc:
        raise SingularMoment(f"Hankel inverse missing for shift {l}") from exc


@dataclass(frozen=True)
class FamilyData:
    """Hankel, recurrence, and polynomial data of one shifted family."""

    ell: int
    H: tuple
    a: tuple
    b: tuple
    polys: tuple


def build_family(
    table: MomentTable,
    l: int,
    h_max: int,
    rec_max: Optional[int] = None,
    poly_max: Optional[int] = None,
) -> FamilyData:
    """Assemble H_0..H_{h_max} plus optional recurrence and polynomial rows."""
    hs = tuple(hankel_H(table, l, n) for n in range(h_max + 1))
    a_list: list = []
    b_list: list = []
    if rec_max is not None:
        for n in range(rec_max + 1):
            a, b = recurrence_coeffs(table, l, n)
            a_list.append(a)
            b_list.append(b)
    polys: list = []
    if poly_max is not None:
        polys = [build_poly(table, l, n) for n in range(poly_max + 1)]
    return FamilyData(ell=l, H=hs, a=tuple(a_list), b=tuple(b_list), polys=tuple(polys))


@dataclass(frozen=True)
class VolterraData:
    """Symmetrized-family data: factor chain, lattice fields, Hankel rows."""

    xi: tuple
    zeta: tuple
    gamma: tuple
    alpha: tuple
    beta: tuple
    h0: tuple
    h1: tuple


def build_symmetric_family(table: MomentTable, n_max: int) -> tuple:
    """Q-family and lattice fields of an even measure via its d-moments.

    table holds the even-measure moments m_i (odd entries zero); the
    construction runs over d_i = m_{2i}.  Returns (Q, data) with
    Q_0..Q_{2 n_max + 1}, Q_{2n}(x) = P_n^{(0)}(x^2) and Q_{2n+1}(x) =
    x P_n^{(1)}(x^2), and data holding xi, zeta, gamma, alpha, beta and
    the H rows of both d-families.
    """
    d = even_reduction(table)
    h0 = tuple(hankel_H(d, 0, n) for n in range(n_max + 2))
    h1 = tuple(hankel_H(d, 1, n) for n in range(n_max + 1))
    zero = zero_like(h0[0])
    xi = [zero]
    for n in range(1, n_max + 1):
        xi.append(h0[n] * h1[n - 1].inv())
    zeta = [zero]
    for n in range(n_max + 1):
        zeta.append(h1[n] * h0[n].inv())
    gamma = []
    for n in range(2 * n_max + 2):
        gamma.append(xi[n // 2] if n % 2 == 0 else zeta[n // 2 + 1])
    alpha = [zero]
    beta = [zero]
    for n in range(1, n_max + 1):
        alpha.append(-(h0[n] * h0[n - 1].inv()))
        beta.append(-(h1[n] * h1[n - 1].inv()))
    qs = []
    for n in range(n_max + 1):
        qs.append(build_poly(d, 0, n).compose_square())
        qs.append(build_poly(d, 1, n).compose_square().mul_x())
    data = VolterraData(
        xi=tuple(xi),
        zeta=tuple(zeta),
        gamma=tuple(gamma),
        alpha=tuple(alpha),
        beta=tuple(beta),
        h0=h0,
        h1=h1,
    )
    return tuple(qs), data
