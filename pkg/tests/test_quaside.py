"""Quasi-determinant engine over exact matrices and jets."""

import random
from fractions import Fraction as F

import pytest

from ncint.errors import SingularSubmatrix
from ncint.exactalg import Jet, MatrixP, mat_inverse
from ncint.moments import build_jet_table, random_measure
from ncint.quaside import (
    BlockMatrix,
    check_homological,
    check_nc_jacobi,
    check_qd_derivative,
    qd_solve,
    quasidet,
    random_block_matrix,
)


def scalar_block(n, rng, bound=9):
    blocks = [
        [MatrixP([[rng.randint(-bound, bound)]]) for _ in range(n)] for _ in range(n)
    ]
    return BlockMatrix(blocks)


def det(m):
    """Fraction determinant by cofactor expansion, independent of the library."""
    size = m.rows
    if size == 1:
        return m[0, 0]
    total = F(0)
    for j in range(size):
        minor = MatrixP(
            [[m[r, c] for c in range(size) if c != j] for r in range(1, size)]
        )
        total += (-1) ** j * m[0, j] * det(minor)
    return total


class TestQuasidetValues:
    def test_single_block(self):
        a = BlockMatrix([[MatrixP([[3, 1], [0, 2]])]])
        assert quasidet(a, 0, 0) == MatrixP([[3, 1], [0, 2]])

    def test_two_by_two_scalar(self):
        a = BlockMatrix(
            [
                [MatrixP([[2]]), MatrixP([[3]])],
                [MatrixP([[4]]), MatrixP([[5]])],
            ]
        )
        assert quasidet(a, 1, 1) == MatrixP([[-1]])
        assert quasidet(a, 0, 0) == MatrixP([[2 - F(12, 5)]])
        assert quasidet(a, 0, 1) == MatrixP([[3 - F(2 * 5, 4)]])
        assert quasidet(a, 1, 0) == MatrixP([[4 - F(5 * 2, 3)]])

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_scalar_determinant_ratio(self, n):
        # For p = 1 the (n-1, n-1) quasi-determinant is det(A)/det(A minor).
        rng = random.Random(100 + n)
        for _ in range(5):
            a = scalar_block(n, rng)
            flat = a.flatten()
            minor = a.without(n - 1, n - 1).flatten()
            if det(minor) == 0:
                continue
            expected = det(flat) / det(minor)
            assert quasidet(a, n - 1, n - 1) == MatrixP([[expected]])

    @pytest.mark.parametrize("n,p", [(2, 1), (2, 2), (3, 1), (3, 2)])
    def test_inverse_block_relation(self, n, p):
        # Block (j, i) of the inverse matrix equals the inverse of the
        # (i, j) quasi-determinant.
        a = random_block_matrix(n, p, seed=40 + 10 * n + p, require=None)
        try:
            big_inv = mat_inverse(a.flatten())
        except Exception:
            pytest.skip("matrix not invertible for this seed")
        for i in range(n):
            for j in range(n):
                block = MatrixP(
                    [
                        [big_inv[j * p + r, i * p + c] for c in range(p)]
                        for r in range(p)
                    ]
                )
                try:
                    qd = quasidet(a, i, j)
                except SingularSubmatrix:
                    continue
                if block.max_abs() == 0:
                    continue
                assert mat_inverse(block) == qd

    def test_singular_submatrix_raises(self):
        zero = MatrixP.zeros(1, 1)
        one = MatrixP.identity(1)
        a = BlockMatrix([[zero, one], [one, one]])
        with pytest.raises(SingularSubmatrix):
            quasidet(a, 1, 1)


class TestQdSolve:
    def test_identity_system(self):
        n, p = 3, 2
        blocks = [
            [MatrixP.identity(p) if i == j else MatrixP.zeros(p, p) for j in range(n)]
            for i in range(n)
        ]
        a = BlockMatrix(blocks)
        rhs = [MatrixP([[1, 2], [3, 4]]) for _ in range(n)]
        assert list(qd_solve(a, rhs)) == rhs

    def test_multiply_back(self):
        rng = random.Random(11)
        a = random_block_matrix(3, 2, seed=11, require="solve")
        rhs = [
            MatrixP([[rng.randint(-9, 9) for _ in range(2)] for _ in range(2)])
            for _ in range(3)
        ]
        x = qd_solve(a, rhs)
        for i in range(3):
            acc = MatrixP.zeros(2, 2)
            for j in range(3):
                acc = acc + a.block(i, j) * x[j]
            assert acc == rhs[i]

    @pytest.mark.parametrize("n,p", [(2, 1), (2, 3), (3, 2), (4, 3)])
    def test_quasidet_sum_formula(self, n, p):
        # x_i = sum_j inverse(|A|_{j,i}) rhs_j whenever every quasi-determinant
        # in column i exists.
        rng = random.Random(60 + n + p)
        a = random_block_matrix(n, p, seed=60 + n + p, require="solve")
        rhs = [
            MatrixP([[rng.randint(-9, 9) for _ in range(p)] for _ in range(p)])
            for _ in range(n)
        ]
        x = qd_solve(a, rhs)
        for i in range(n):
            try:
                acc = MatrixP.zeros(p, p)
                for j in range(n):
                    acc = acc + mat_inverse(quasidet(a, j, i)) * rhs[j]
            except SingularSubmatrix:
                continue
            assert acc == x[i]


class TestIdentities:
    @pytest.mark.parametrize("n,p", [(2, 1), (3, 1), (3, 2), (4, 2), (5, 3)])
    def test_nc_jacobi_random(self, n, p):
        a = random_block_matrix(n, p, seed=7 * n + p)
        assert check_nc_jacobi(a).is_zero()

    def test_nc_jacobi_block_diagonal(self):
        # Diagonal data: both sides reduce to the same corner block.
        d = [MatrixP([[2, 1], [1, 3]]), MatrixP([[1, 0], [0, 4]]), MatrixP([[5, 2], [2, 6]])]
        z = MatrixP.zeros(2, 2)
        a = BlockMatrix(
            [[d[i] if i == j else z for j in range(3)] for i in range(3)]
        )
        assert check_nc_jacobi(a).is_zero()
        assert quasidet(a, 2, 2) == d[2]

    @pytest.mark.parametrize("n,p", [(2, 1), (3, 2), (4, 1), (4, 3)])
    def test_homological_random(self, n, p):
        a = random_block_matrix(n, p, seed=90 + 5 * n + p)
        row_res, col_res = check_homological(a)
        assert row_res.is_zero()
        assert col_res.is_zero()

    def test_homological_normalized_border(self):
        # The row relation factors qd(a; n-1, n-2) through the matrix whose
        # last row is replaced by (0, ..., 0, I); on that matrix the corner
        # quasi-determinant collapses to the identity.
        n, p = 3, 2
        a = random_block_matrix(n, p, seed=314)
        unit_row = [MatrixP.zeros(p, p)] * (n - 1) + [MatrixP.identity(p)]
        b = a.replace_row(n - 1, unit_row)
        assert quasidet(b, n - 1, n - 1) == MatrixP.identity(p)
        lhs = quasidet(a, n - 1, n - 2)
        rhs = quasidet(a, n - 1, n - 1) * quasidet(b, n - 1, n - 2)
        assert lhs == rhs


class TestDerivative:
    def test_constant_jets_give_zero(self):
        base = random_block_matrix(3, 2, seed=21)
        jets = base.map(lambda m: Jet.constant(m, 1))
        r1, r2 = check_qd_derivative(jets)
        assert r1.is_zero() and r2.is_zero()

    @pytest.mark.parametrize("n,p", [(2, 1), (3, 1), (3, 2)])
    def test_random_first_order(self, n, p):
        a = random_block_matrix(n, p, seed=55 + n * p, order=1)
        r1, r2 = check_qd_derivative(a)
        assert r1.is_zero() and r2.is_zero()

    def test_hankel_moment_jets(self):
        # Moment jets of a discrete measure form a Hankel block matrix whose
        # quasi-determinant derivative must satisfy both expansion rows.
        spec = random_measure(2, 5, seed=8)
        jets = build_jet_table(spec, flow_index=1, order=1, depth=6)
        n = 3
        blocks = [[jets.m(i + j) for j in range(n)] for i in range(n)]
        a = BlockMatrix(blocks)
        r1, r2 = check_qd_derivative(a)
        assert r1.is_zero() and r2.is_zero()


class TestGenerator:
    def test_deterministic(self):
        a = random_block_matrix(3, 2, seed=99)
        b = random_block_matrix(3, 2, seed=99)
        assert a.flatten() == b.flatten()

    def test_seed_changes_output(self):
        a = random_block_matrix(3, 2, seed=1)
        b = random_block_matrix(3, 2, seed=2)
        assert a.flatten() != b.flatten()

    def test_jet_order(self):
        a = random_block_matrix(2, 2, seed=3, order=2)
        assert isinstance(a.block(0, 0), Jet)
        assert a.block(0, 0).order == 2

    def test_block_access_and_shape(self):
        a = random_block_matrix(3, 2, seed=4)
        assert a.nrows == a.ncols == 3
        assert a.p == 2
        assert a.block(2, 1).rows == 2

    def test_without_and_replace(self):
        a = random_block_matrix(3, 1, seed=5)
        sub = a.without(1, 1)
        assert sub.nrows == 2
        assert sub.block(1, 1) == a.block(2, 2)
        unit = a.unit_column(0)
        assert unit[0] == MatrixP.identity(1)
        assert unit[1].is_zero() and unit[2].is_zero()
