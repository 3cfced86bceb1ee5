"""Exact rational matrix and jet kernel."""

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncint.errors import OrderExceeded, SingularMatrix
from ncint.exactalg import (
    Jet,
    MatrixP,
    identity_like,
    jet_derivative,
    jet_diff,
    jet_inverse,
    jet_truncate,
    mat_inverse,
    value_part,
    zero_like,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def matrices(p):
    return st.lists(
        st.lists(rationals, min_size=p, max_size=p), min_size=p, max_size=p
    ).map(MatrixP)


def random_matrix(p, rng, bound=9):
    return MatrixP([[rng.randint(-bound, bound) for _ in range(p)] for _ in range(p)])


class TestMatrixBasics:
    def test_identity_inverse(self):
        ident = MatrixP.identity(2)
        assert mat_inverse(ident) == ident

    def test_unipotent_inverse(self):
        m = MatrixP([[1, 1], [0, 1]])
        assert mat_inverse(m) == MatrixP([[1, -1], [0, 1]])

    def test_multiply_back_oracle(self):
        rng = random.Random(2024)
        for _ in range(20):
            m = random_matrix(3, rng)
            try:
                inv = mat_inverse(m)
            except SingularMatrix:
                continue
            assert inv * m == MatrixP.identity(3)
            assert m * inv == MatrixP.identity(3)

    def test_solve_matches_inverse(self):
        rng = random.Random(7)
        a = random_matrix(3, rng)
        b = MatrixP([[rng.randint(-9, 9)] for _ in range(3)])
        x = a.solve(b)
        assert a * x == b

    def test_singular_raises(self):
        with pytest.raises(SingularMatrix):
            mat_inverse(MatrixP([[1, 2], [2, 4]]))

    def test_entries_are_fractions(self):
        m = MatrixP([[1, F(1, 2)], [3, 4]])
        assert m[0, 1] == F(1, 2)
        assert isinstance(m[0, 0], F)

    def test_immutable(self):
        m = MatrixP.identity(2)
        with pytest.raises(AttributeError):
            m.entries = ()

    def test_scale_and_arithmetic(self):
        m = MatrixP([[1, 2], [3, 4]])
        assert m.scale(F(1, 2)) == MatrixP([[F(1, 2), 1], [F(3, 2), 2]])
        assert m - m == MatrixP.zeros(2, 2)
        assert (-m) + m == MatrixP.zeros(2, 2)
        assert 2 * m == m + m

    def test_max_abs_and_symmetry(self):
        m = MatrixP([[0, -7], [-7, 3]])
        assert m.max_abs() == 7
        assert m.is_symmetric()
        assert not MatrixP([[0, 1], [2, 0]]).is_symmetric()


@given(matrices(2), matrices(2), matrices(2))
@settings(max_examples=60, deadline=None)
def test_matrix_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert (a * b).transpose() == b.transpose() * a.transpose()


@given(matrices(2))
@settings(max_examples=60, deadline=None)
def test_inverse_involution_and_product_rule(a):
    try:
        inv = mat_inverse(a)
    except SingularMatrix:
        return
    assert mat_inverse(inv) == a
    assert mat_inverse(a.transpose()) == inv.transpose()


class TestJets:
    def test_geometric_series(self):
        n = MatrixP([[0, 1], [2, 0]])
        j = Jet([MatrixP.identity(2), n, MatrixP.zeros(2, 2)])
        inv = jet_inverse(j)
        assert inv.coeffs[0] == MatrixP.identity(2)
        assert inv.coeffs[1] == -n
        assert inv.coeffs[2] == n * n

    def test_constant_jet_inverse(self):
        m = MatrixP([[2, 1], [1, 1]])
        j = Jet.constant(m, 2)
        inv = jet_inverse(j)
        assert inv.coeffs[0] == mat_inverse(m)
        assert inv.coeffs[1].is_zero() and inv.coeffs[2].is_zero()

    def test_multiply_back_oracle(self):
        rng = random.Random(5)
        for _ in range(10):
            coeffs = [random_matrix(2, rng) for _ in range(4)]
            if coeffs[0].max_abs() == 0:
                continue
            try:
                j = Jet(coeffs)
                inv = jet_inverse(j)
            except SingularMatrix:
                continue
            assert (j * inv) == Jet.identity(2, 3)
            assert (inv * j) == Jet.identity(2, 3)

    def test_derivative_coefficients(self):
        a, b, c = (MatrixP([[i]]) for i in (3, 5, 7))
        j = Jet([a, b, c])
        assert jet_derivative(j, 0) == a
        assert jet_derivative(j, 1) == b
        assert jet_derivative(j, 2) == c.scale(2)
        with pytest.raises(OrderExceeded):
            jet_derivative(j, 3)

    def test_diff_and_truncate(self):
        a, b, c = (MatrixP([[i]]) for i in (3, 5, 7))
        j = Jet([a, b, c])
        dj = jet_diff(j)
        assert dj.order == 1
        assert dj.coeffs[0] == b and dj.coeffs[1] == c.scale(2)
        assert jet_truncate(j, 1) == Jet([a, b])
        with pytest.raises(OrderExceeded):
            jet_diff(Jet([a]))
        with pytest.raises(OrderExceeded):
            jet_truncate(j, 5)

    def test_order_mismatch_rejected(self):
        j1 = Jet.identity(2, 1)
        j2 = Jet.identity(2, 2)
        with pytest.raises(ValueError):
            _ = j1 + j2

    def test_scalar_multiplication(self):
        j = Jet([MatrixP([[1]]), MatrixP([[2]])])
        assert j.scale(F(1, 2)).coeffs[1] == MatrixP([[1]])
        assert (2 * j).coeffs[0] == MatrixP([[2]])


@given(matrices(2), matrices(2), matrices(2), matrices(2))
@settings(max_examples=40, deadline=None)
def test_jet_ring_and_leibniz(a0, a1, b0, b1):
    j1 = Jet([a0, a1])
    j2 = Jet([b0, b1])
    prod = j1 * j2
    assert prod.coeffs[0] == a0 * b0
    # Leibniz: (j1 j2)'(0) = j1'(0) j2(0) + j1(0) j2'(0)
    assert jet_derivative(prod, 1) == a1 * b0 + a0 * b1
    assert (j1 * j2).transpose() == j2.transpose() * j1.transpose()


def test_like_helpers():
    m = MatrixP([[1, 2], [3, 4]])
    j = Jet.constant(m, 2)
    assert zero_like(m) == MatrixP.zeros(2, 2)
    assert identity_like(j) == Jet.identity(2, 2)
    assert value_part(j) == m
    assert value_part(m) == m
