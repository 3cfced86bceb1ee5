"""Exact rational matrices and truncated Taylor jets.

Everything here is computed over fractions.Fraction, so equalities that
should hold, hold exactly: a residual is either the zero matrix or a
genuine counterexample.  Floating point never enters this module.

MatrixP is the non-commutative ring element carrying all p x p
quantities.  Rectangular shapes are allowed because flattened block
computations need row and column borders; the square case is the one
with algebraic meaning.  Jet wraps a MatrixP-coefficient Taylor
expansion truncated at a fixed order and propagates exact derivatives
through sums, products and inverses.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import OrderExceeded, SingularMatrix

Rational = Fraction
Scalar = Union[int, Fraction]


def _as_rational(value: Scalar) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected int or Fraction, got {type(value).__name__}")


class MatrixP:
    """Dense matrix of exact rationals.

    Immutable after construction: entries are stored as a tuple of row
    tuples and all arithmetic returns new instances.
    """

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries: Iterable[Iterable[Scalar]]):
        rows = tuple(tuple(_as_rational(v) for v in row) for row in entries)
        if not rows or not rows[0]:
            raise ValueError("matrix needs at least one row and one column")
        width = len(rows[0])
        if any(len(row) != width for row in rows):
            raise ValueError("ragged rows")
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "rows", len(rows))
        object.__setattr__(self, "cols", width)

    def __setattr__(self, name, value):
        raise AttributeError("MatrixP is immutable")

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> "MatrixP":
        cols = rows if cols is None else cols
        zero = Fraction(0)
        return cls([[zero] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, p: int) -> "MatrixP":
        return cls([[Fraction(1 if i == j else 0) for j in range(p)] for i in range(p)])

    @property
    def dim(self) -> int:
        if self.rows != self.cols:
            raise ValueError("dim is defined for square matrices only")
        return self.rows

    def __getitem__(self, idx: tuple) -> Fraction:
        i, j = idx
        return self.entries[i][j]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MatrixP)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(v) for v in row) for row in self.entries)
        return f"MatrixP[{body}]"

    def __add__(self, other: "MatrixP") -> "MatrixP":
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch in add")
        return MatrixP(
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ]
        )

    def __sub__(self, other: "MatrixP") -> "MatrixP":
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch in sub")
        return MatrixP(
            [
                [a - b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ]
        )

    def __neg__(self) -> "MatrixP":
        return MatrixP([[-v for v in row] for row in self.entries])

    def __mul__(self, other):
        if isinstance(other, MatrixP):
            return self._matmul(other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def _matmul(self, other: "MatrixP") -> "MatrixP":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in mul")
        cols_of_other = tuple(zip(*other.entries))
        return MatrixP(
            [
                [
                    sum(a * b for a, b in zip(row, col))
                    for col in cols_of_other
                ]
                for row in self.entries
            ]
        )

    def scale(self, factor: Scalar) -> "MatrixP":
        f = _as_rational(factor)
        return MatrixP([[f * v for v in row] for row in self.entries])

    def transpose(self) -> "MatrixP":
        return MatrixP(list(zip(*self.entries)))

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.entries for v in row)

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.rows)
            for j in range(i)
        )

    def max_abs(self) -> Fraction:
        return max(abs(v) for row in self.entries for v in row)

    def solve(self, rhs: "MatrixP") -> "MatrixP":
        """Exact solution X of self * X = rhs.

        Raises SingularMatrix if the system has no unique solution.
        """
        if self.rows != self.cols:
            raise SingularMatrix("solve needs a square matrix")
        if rhs.rows != self.rows:
            raise ValueError("rhs row count mismatch")
        return MatrixP(_eliminate(self.entries, rhs.entries))

    def inv(self) -> "MatrixP":
        return mat_inverse(self)

    def to_float(self) -> list:
        return [[float(v) for v in row] for row in self.entries]


def _eliminate(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> list:
    """Forward elimination plus back substitution over Fraction.

    Pivot choice is the first row with a nonzero entry, which keeps the
    whole computation deterministic across runs and platforms.
    """
    n = len(a)
    width = len(b[0])
    aug = [list(ra) + list(rb) for ra, rb in zip(a, b)]
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if aug[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            raise SingularMatrix("matrix is not invertible")
        if pivot != col:
            aug[col], aug[pivot] = aug[pivot], aug[col]
        prow = aug[col]
        pinv = 1 / prow[col]
        for r in range(col + 1, n):
            factor = aug[r][col]
            if factor == 0:
                continue
            factor *= pinv
            row = aug[r]
            for c in range(col + 1, n + width):
                row[c] -= factor * prow[c]
            row[col] = Fraction(0)
    out = [[Fraction(0)] * width for _ in range(n)]
    for r in range(n - 1, -1, -1):
        row = aug[r]
        pinv = 1 / row[r]
        for c in range(width):
            acc = row[n + c]
            for k in range(r + 1, n):
                acc -= row[k] * out[k][c]
            out[r][c] = acc * pinv
    return out


def mat_inverse(m: MatrixP) -> MatrixP:
    """Exact inverse of a square rational matrix."""
    if m.rows != m.cols:
        raise SingularMatrix("inverse needs a square matrix")
    return m.solve(MatrixP.identity(m.rows))


class Jet:
    """Truncated Taylor expansion sum_r coeffs[r] * eps^r with matrix coefficients.

    The order is fixed at construction; all arithmetic truncates there.
    Mixed-order arithmetic is a bug upstream, so it raises.
    """

    __slots__ = ("order", "coeffs")

    def __init__(self, coeffs: Sequence[MatrixP]):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise ValueError("jet needs at least the constant coefficient")
        shape = (coeffs[0].rows, coeffs[0].cols)
        if any((c.rows, c.cols) != shape for c in coeffs):
            raise ValueError("jet coefficients must share one shape")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "order", len(coeffs) - 1)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    @classmethod
    def constant(cls, m: MatrixP, order: int) -> "Jet":
        zero = MatrixP.zeros(m.rows, m.cols)
        return cls([m] + [zero] * order)

    @classmethod
    def identity(cls, p: int, order: int) -> "Jet":
        return cls.constant(MatrixP.identity(p), order)

    @classmethod
    def zeros(cls, rows: int, cols: int, order: int) -> "Jet":
        return cls.constant(MatrixP.zeros(rows, cols), order)

    @property
    def rows(self) -> int:
        return self.coeffs[0].rows

    @property
    def cols(self) -> int:
        return self.coeffs[0].cols

    def value(self) -> MatrixP:
        return self.coeffs[0]

    def _require_same_order(self, other: "Jet") -> None:
        if self.order != other.order:
            raise ValueError("jet order mismatch")

    def __eq__(self, other) -> bool:
        return isinstance(other, Jet) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, value={self.coeffs[0]!r})"

    def __add__(self, other: "Jet") -> "Jet":
        self._require_same_order(other)
        return Jet([a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "Jet") -> "Jet":
        self._require_same_order(other)
        return Jet([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "Jet":
        return Jet([-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._require_same_order(other)
            out = []
            for k in range(self.order + 1):
                acc = self.coeffs[0] * other.coeffs[k]
                for j in range(1, k + 1):
                    acc = acc + self.coeffs[j] * other.coeffs[k - j]
                out.append(acc)
            return Jet(out)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def scale(self, factor: Scalar) -> "Jet":
        return Jet([c.scale(factor) for c in self.coeffs])

    def transpose(self) -> "Jet":
        return Jet([c.transpose() for c in self.coeffs])

    def inv(self) -> "Jet":
        return jet_inverse(self)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def max_abs(self) -> Fraction:
        return max(c.max_abs() for c in self.coeffs)


def jet_inverse(j: Jet) -> Jet:
    """Multiplicative inverse in the truncated jet ring.

    Needs an invertible constant term; the higher coefficients follow
    from the recursion g_k = -c_0^{-1} sum_{r=1..k} c_r g_{k-r}.
    """
    g0 = mat_inverse(j.coeffs[0])
    out = [g0]
    for k in range(1, j.order + 1):
        acc = j.coeffs[1] * out[k - 1]
        for r in range(2, k + 1):
            acc = acc + j.coeffs[r] * out[k - r]
        out.append(-(g0 * acc))
    return Jet(out)


def jet_derivative(j: Jet, k: int) -> MatrixP:
    """k-th derivative at the expansion point: k! times coefficient k."""
    if k < 0 or k > j.order:
        raise OrderExceeded(f"derivative order {k} exceeds jet order {j.order}")
    return j.coeffs[k].scale(math.factorial(k))


def jet_diff(j: Jet) -> Jet:
    """Jet of the time derivative; the order drops by one."""
    if j.order < 1:
        raise OrderExceeded("cannot differentiate an order-0 jet")
    return Jet([j.coeffs[r + 1].scale(r + 1) for r in range(j.order)])


def jet_truncate(j: Jet, order: int) -> Jet:
    """Forget coefficients above the requested order."""
    if order < 0 or order > j.order:
        raise OrderExceeded(f"truncation order {order} is outside 0..{j.order}")
    return Jet(j.coeffs[: order + 1])


RingElement = Union[MatrixP, Jet]


def zero_like(e: RingElement) -> RingElement:
    if isinstance(e, Jet):
        return Jet.zeros(e.rows, e.cols, e.order)
    return MatrixP.zeros(e.rows, e.cols)


def identity_like(e: RingElement) -> RingElement:
    if isinstance(e, Jet):
        return Jet.identity(e.rows, e.order)
    return MatrixP.identity(e.rows)


def value_part(e: RingElement) -> MatrixP:
    """Constant term of a jet; a plain matrix passes through."""
    return e.value() if isinstance(e, Jet) else e
