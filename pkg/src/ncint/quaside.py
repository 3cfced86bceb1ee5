"""Block matrices over a ring and the quasi-determinant engine.

A quasi-determinant |A|_{i,j} of a block matrix A is the Schur
complement a_{i,j} - r_i^j (A^{i,j})^{-1} c_j^i, where A^{i,j} deletes
block row i and block column j and r, c are the corresponding borders.
It is computed here by one flattened exact solve instead of the
recursive definition: same value, cubic instead of exponential cost.
Equality with the recursion is asserted by tests at small sizes.

Entries are either all MatrixP or all Jet; in the jet case every
operation propagates exact time derivatives.
"""

from __future__ import annotations

from typing import Callable, Sequence

from .errors import SingularMatrix, SingularSubmatrix
from .exactalg import Jet, MatrixP, RingElement, identity_like, jet_derivative, value_part, zero_like


def _submatrix_mat(m: MatrixP, rows: Sequence[int], cols: Sequence[int]) -> MatrixP:
    return MatrixP([[m.entries[r][c] for c in cols] for r in rows])


def submatrix(e: RingElement, rows: Sequence[int], cols: Sequence[int]) -> RingElement:
    if isinstance(e, Jet):
        return Jet([_submatrix_mat(c, rows, cols) for c in e.coeffs])
    return _submatrix_mat(e, rows, cols)


def ring_solve(a: RingElement, b: RingElement) -> RingElement:
    """Exact X with a * X = b, over MatrixP or over the jet ring."""
    if isinstance(a, Jet):
        if not isinstance(b, Jet) or a.order != b.order:
            raise ValueError("jet solve needs matching orders")
        a0 = a.coeffs[0]
        out = [a0.solve(b.coeffs[0])]
        for k in range(1, a.order + 1):
            acc = b.coeffs[k]
            for r in range(1, k + 1):
                acc = acc - a.coeffs[r] * out[k - r]
            out.append(a0.solve(acc))
        return Jet(out)
    return a.solve(b)


def ring_inverse(e: RingElement) -> RingElement:
    return e.inv()


class BlockMatrix:
    """Rectangular array of same-shape ring elements (all MatrixP or all Jet)."""

    __slots__ = ("nrows", "ncols", "blocks", "p")

    def __init__(self, blocks: Sequence[Sequence[RingElement]]):
        rows = tuple(tuple(row) for row in blocks)
        if not rows or not rows[0]:
            raise ValueError("block matrix needs at least one block")
        first = rows[0][0]
        p = first.rows
        is_jet = isinstance(first, Jet)
        order = first.order if is_jet else None
        for row in rows:
            if len(row) != len(rows[0]):
                raise ValueError("ragged block rows")
            for blk in row:
                if blk.rows != p or blk.cols != p:
                    raise ValueError("all blocks must be square of one dimension")
                if isinstance(blk, Jet) is not is_jet:
                    raise ValueError("blocks must not mix MatrixP and Jet")
                if is_jet and blk.order != order:
                    raise ValueError("jet blocks must share one order")
        object.__setattr__(self, "blocks", rows)
        object.__setattr__(self, "nrows", len(rows))
        object.__setattr__(self, "ncols", len(rows[0]))
        object.__setattr__(self, "p", p)

    def __setattr__(self, name, value):
        raise AttributeError("BlockMatrix is immutable")

    def block(self, i: int, j: int) -> RingElement:
        return self.blocks[i][j]

    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def map(self, fn: Callable[[RingElement], RingElement]) -> "BlockMatrix":
        return BlockMatrix([[fn(b) for b in row] for row in self.blocks])

    def replace_row(self, i: int, row: Sequence[RingElement]) -> "BlockMatrix":
        rows = [list(r) for r in self.blocks]
        rows[i] = list(row)
        return BlockMatrix(rows)

    def replace_col(self, j: int, col: Sequence[RingElement]) -> "BlockMatrix":
        rows = [list(r) for r in self.blocks]
        for i, blk in enumerate(col):
            rows[i][j] = blk
        return BlockMatrix(rows)

    def without(self, i: int, j: int) -> "BlockMatrix":
        rows = [
            [blk for jj, blk in enumerate(row) if jj != j]
            for ii, row in enumerate(self.blocks)
            if ii != i
        ]
        return BlockMatrix(rows)

    def unit_column(self, k: int) -> list:
        """Block column e_k^T: identity at block row k, zero elsewhere."""
        template = self.blocks[0][0]
        return [
            identity_like(template) if i == k else zero_like(template)
            for i in range(self.nrows)
        ]

    def unit_row(self, k: int) -> list:
        template = self.blocks[0][0]
        return [
            identity_like(template) if j == k else zero_like(template)
            for j in range(self.ncols)
        ]

    def flatten(self) -> RingElement:
        """Scalar matrix of shape (nrows*p) x (ncols*p), jet-coefficient-wise."""
        if isinstance(self.blocks[0][0], Jet):
            order = self.blocks[0][0].order
            coeffs = []
            for r in range(order + 1):
                coeffs.append(self._flatten_coeff(r))
            return Jet(coeffs)
        return self._flatten_coeff(None)

    def _flatten_coeff(self, r) -> MatrixP:
        rows = []
        for brow in self.blocks:
            mats = [blk.coeffs[r] if r is not None else blk for blk in brow]
            for local in range(self.p):
                rows.append([v for m in mats for v in m.entries[local]])
        return MatrixP(rows)

    def transpose(self) -> "BlockMatrix":
        return BlockMatrix(
            [
                [self.blocks[i][j].transpose() for i in range(self.nrows)]
                for j in range(self.ncols)
            ]
        )


def quasidet(a: BlockMatrix, i: int, j: int) -> RingElement:
    """Quasi-determinant |a|_{i,j} (0-indexed block position).

    Raises SingularSubmatrix when the deleted flattened submatrix has no
    exact inverse, i.e. when the quasi-determinant is not defined.
    """
    if not a.is_square():
        raise ValueError("quasi-determinants need a square block matrix")
    n, p = a.nrows, a.p
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError("quasi-determinant position out of range")
    if n == 1:
        return a.block(0, 0)
    flat = a.flatten()
    keep_rows = [r for br in range(n) if br != i for r in range(br * p, br * p + p)]
    keep_cols = [c for bc in range(n) if bc != j for c in range(bc * p, bc * p + p)]
    self_rows = list(range(i * p, i * p + p))
    self_cols = list(range(j * p, j * p + p))
    sub = submatrix(flat, keep_rows, keep_cols)
    row_border = submatrix(flat, self_rows, keep_cols)
    col_border = submatrix(flat, keep_rows, self_cols)
    corner = submatrix(flat, self_rows, self_cols)
    try:
        x = ring_solve(sub, col_border)
    except SingularMatrix as exc:
        raise SingularSubmatrix(
            f"quasi-determinant ({i},{j}) is not defined: deleted submatrix is singular"
        ) from exc
    return corner - row_border * x


def qd_solve(a: BlockMatrix, rhs: Sequence[RingElement]) -> list:
    """Solve the block system a * x = rhs by one flattened exact solve.

    Agrees with the quasi-determinant formula x_i = sum_j |a|_{j,i}^{-1} rhs_j,
    which the tests assert instance by instance.
    """
    if not a.is_square():
        raise ValueError("qd_solve needs a square block matrix")
    if len(rhs) != a.nrows:
        raise ValueError("rhs block count mismatch")
    n, p = a.nrows, a.p
    flat = a.flatten()
    stacked = BlockMatrix([[blk] for blk in rhs]).flatten()
    x = ring_solve(flat, stacked)
    return [
        submatrix(x, list(range(i * p, i * p + p)), list(range(p)))
        for i in range(n)
    ]


def _qd_last(a: BlockMatrix) -> RingElement:
    return quasidet(a, a.nrows - 1, a.nrows - 1)


def check_nc_jacobi(a: BlockMatrix) -> RingElement:
    """Residual of the three-block-bordered non-commutative Jacobi identity.

    Partition: the last two block rows/columns carry (f, g; h, i); the
    leading (n-2) x (n-2) corner is the shared block A.  Returns the
    difference of the two sides; the zero element on success.
    """
    n = a.nrows
    if not a.is_square() or n < 2:
        raise ValueError("need a square block matrix with n >= 2")
    lhs = quasidet(a, n - 1, n - 1)
    qd_i = _qd_last(a.without(n - 2, n - 2))
    qd_h = _qd_last(a.without(n - 2, n - 1))
    qd_f = _qd_last(a.without(n - 1, n - 1))
    qd_g = _qd_last(a.without(n - 1, n - 2))
    try:
        f_inv = ring_inverse(qd_f)
    except SingularMatrix as exc:
        raise SingularSubmatrix("inner quasi-determinant f is not invertible") from exc
    return lhs - (qd_i - qd_h * f_inv * qd_g)


def check_homological(a: BlockMatrix) -> tuple:
    """Residuals of the row and column homological relations.

    Row: |...|_{n-1,n-2} = |...|_{n-1,n-1} * |a with last row -> (0,..,0,I)|_{n-1,n-2}
    Col: |...|_{n-2,n-1} = |a with last col -> (0,..,0,I)^T|_{n-2,n-1} * |...|_{n-1,n-1}
    """
    n = a.nrows
    if not a.is_square() or n < 2:
        raise ValueError("need a square block matrix with n >= 2")
    qd_corner = quasidet(a, n - 1, n - 1)

    lhs_row = quasidet(a, n - 1, n - 2)
    normalized_row = a.replace_row(n - 1, a.unit_row(n - 1))
    row_factor = quasidet(normalized_row, n - 1, n - 2)
    residual_row = lhs_row - qd_corner * row_factor

    lhs_col = quasidet(a, n - 2, n - 1)
    normalized_col = a.replace_col(n - 1, a.unit_column(n - 1))
    col_factor = quasidet(normalized_col, n - 2, n - 1)
    residual_col = lhs_col - col_factor * qd_corner

    return residual_row, residual_col


def random_block_matrix(
    n: int,
    p: int,
    seed: int,
    order: int | None = None,
    bound: int = 9,
    max_tries: int = 64,
    require: str = "jacobi",
) -> BlockMatrix:
    """Seeded random block matrix with small integer entries in [-bound, bound].

    Redraws (bounded) until the instance supports the requested checks:
    "jacobi" keeps every quasi-determinant of the Jacobi and homological
    identities defined, "solve" keeps the flattened matrix and every
    block of its quasi-determinant inverse invertible, None skips
    validation.  order=None draws MatrixP entries, otherwise jets whose
    coefficients are drawn the same way.
    """
    import random as _random

    rng = _random.Random(seed)

    def draw_matrix() -> MatrixP:
        return MatrixP(
            [[rng.randint(-bound, bound) for _ in range(p)] for _ in range(p)]
        )

    def draw_block() -> RingElement:
        if order is None:
            return draw_matrix()
        return Jet([draw_matrix() for _ in range(order + 1)])

    for _ in range(max_tries):
        a = BlockMatrix([[draw_block() for _ in range(n)] for _ in range(n)])
        probe = a.map(value_part) if order is not None else a
        try:
            if require == "jacobi":
                if n >= 2:
                    check_nc_jacobi(probe)
                    check_homological(probe)
                else:
                    quasidet(probe, 0, 0)
            elif require == "solve":
                ring_inverse(probe.flatten())
                for i in range(n):
                    for j in range(n):
                        ring_inverse(quasidet(probe, i, j))
            elif require is not None:
                raise ValueError(f"unknown validation mode {require!r}")
        except SingularMatrix:
            continue
        return a
    raise SingularSubmatrix(
        f"no valid instance after {max_tries} draws (n={n}, p={p}, seed={seed})"
    )


def check_qd_derivative(a: BlockMatrix) -> tuple:
    """Residuals of both expansion lines for d/dt of a bordered quasi-determinant.

    Input is a square BlockMatrix of jets (order >= 1) with the
    quasi-determinant taken at the last position.  The derivative of
    |A B; C d| expands either over rows,
        |A B; C' d'| + sum_k |A e_k^T; C 0| * |A B; (A^k)' (B^k)'|,
    or over columns,
        |A B'; C d'| + sum_k |A (A_k)'; C (C_k)'| * |A B; e_k 0|;
    both are compared against the exact jet derivative.
    """
    n = a.nrows
    if not a.is_square() or n < 2:
        raise ValueError("need a square block matrix with n >= 2")
    if not isinstance(a.block(0, 0), Jet) or a.block(0, 0).order < 1:
        raise ValueError("need jet entries of order >= 1")
    last = n - 1
    lhs = jet_derivative(quasidet(a, last, last), 1)

    values = a.map(value_part)
    derivs = a.map(lambda blk: jet_derivative(blk, 1))

    term_row = _qd_last(values.replace_row(last, derivs.blocks[last]))
    line1 = term_row
    for k in range(n - 1):
        factor1 = _qd_last(values.replace_col(last, values.unit_column(k)))
        factor2 = _qd_last(values.replace_row(last, derivs.blocks[k]))
        line1 = line1 + factor1 * factor2

    term_col = _qd_last(
        values.replace_col(last, [derivs.block(i, last) for i in range(n)])
    )
    line2 = term_col
    for k in range(n - 1):
        factor1 = _qd_last(
            values.replace_col(last, [derivs.block(i, k) for i in range(n)])
        )
        factor2 = _qd_last(values.replace_row(last, values.unit_row(k)))
        line2 = line2 + factor1 * factor2

    return lhs - line1, lhs - line2
