"""Acceptance gate: eight verification criteria, one test per criterion.

Every residual asserted here is an exact rational zero unless the
criterion states a floating-point threshold (the continuum limit) or a
runtime budget.  The conftest plugin prints one PASS/FAIL line per
criterion at the end of the run.
"""

import json
import re
import time
from fractions import Fraction as F

from ncint.cli import main as cli_main
from ncint.exactalg import MatrixP, mat_inverse
from ncint.lattice import (
    backlund_residual,
    discrete_compatibility_residual,
    discrete_toda_residual,
    hankel_derivative_residual,
    kdv_limit_slope,
    spectral_transform_residual,
    t2_nonlinear_residual,
    toda_bilinear_residual,
    toda_nonlinear_residual,
    volterra_residual,
    wave_evolution_residual,
)
from ncint.moments import (
    build_jet_table,
    build_moment_table,
    random_measure,
)
from ncint.mops import (
    MatPoly,
    build_poly,
    hankel_H,
    inner_product,
    recurrence_coeffs,
)
from ncint.quaside import (
    BlockMatrix,
    check_homological,
    check_nc_jacobi,
    qd_solve,
    quasidet,
    random_block_matrix,
)


def det(m):
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


def gram_schmidt(table, l, n_max, p):
    polys = []
    for n in range(n_max + 1):
        coeffs = [MatrixP.zeros(p, p)] * n + [MatrixP.identity(p)]
        q = MatPoly(coeffs)
        for k in range(n):
            h_k = inner_product(polys[k], polys[k], table, l)
            c = inner_product(q, polys[k], table, l) * mat_inverse(h_k)
            q = q - polys[k].left_mul(c)
        polys.append(q)
    return polys


def assert_all_zero(report):
    for s in report.sites:
        assert s.exact_zero, f"{report.suite} {s.part} at n={s.site}: {s.norm}"


def test_criterion_1_quasidet_identities():
    # 100 seeded instances per block count n in 2..5 and dimension p in
    # 1..3; the Jacobi identity and both homological relations vanish
    # exactly, and for p = 1 the corner quasi-determinant equals the
    # classical determinant ratio.  Budget: under 60 seconds.
    start = time.monotonic()
    per_combo = 100
    for n in range(2, 6):
        for p in (1, 2, 3):
            for i in range(per_combo):
                seed = 10_000 * n + 1_000 * p + i
                a = random_block_matrix(n, p, seed=seed)
                assert check_nc_jacobi(a).is_zero()
                row_res, col_res = check_homological(a)
                assert row_res.is_zero()
                assert col_res.is_zero()
                if p == 1:
                    flat = a.flatten()
                    minor = a.without(n - 1, n - 1).flatten()
                    expected = det(flat) / det(minor)
                    assert quasidet(a, n - 1, n - 1) == MatrixP([[expected]])
    elapsed = time.monotonic() - start
    print(f"criterion 1: {12 * per_combo} instances in {elapsed:.1f}s")
    assert elapsed < 60.0


def test_criterion_2_solver_equivalence():
    # qd_solve agrees with x_i = sum_j inverse(|A|_{j,i}) rhs_j on at
    # least 50 instances with n <= 4, p <= 3.
    import random as _random

    instances = 0
    for n in (2, 3, 4):
        for p in (1, 2, 3):
            for i in range(6):
                seed = 20_000 + 100 * n + 10 * p + i
                a = random_block_matrix(n, p, seed=seed, require="solve")
                rng = _random.Random(seed)
                rhs = [
                    MatrixP(
                        [[rng.randint(-9, 9) for _ in range(p)] for _ in range(p)]
                    )
                    for _ in range(n)
                ]
                x = qd_solve(a, rhs)
                for col in range(n):
                    acc = MatrixP.zeros(p, p)
                    for row in range(n):
                        acc = acc + mat_inverse(quasidet(a, row, col)) * rhs[row]
                    assert acc == x[col]
                instances += 1
    print(f"criterion 2: {instances} solver instances")
    assert instances >= 50


def test_criterion_3_orthogonality_recurrence():
    # For p in 1..3 and rows up to N = 4: exact orthogonality with Hankel
    # norms, zero three-term recurrence residual as a polynomial, the
    # bordered quasi-determinant coefficient formula, and agreement with
    # Gram-Schmidt.
    N = 4
    for p in (1, 2, 3):
        spec = random_measure(p, 6, seed=300 + p)
        table = build_moment_table(spec, 12)
        polys = [build_poly(table, 0, n) for n in range(N + 2)]
        norms = [hankel_H(table, 0, n) for n in range(N + 1)]
        for n in range(N + 1):
            for m in range(N + 1):
                ip = inner_product(polys[n], polys[m], table, 0)
                if n == m:
                    assert ip == norms[n]
                else:
                    assert ip.is_zero()
        for n in range(N + 1):
            a, b = recurrence_coeffs(table, 0, n)
            rhs = polys[n + 1] + polys[n].left_mul(a)
            if n >= 1:
                rhs = rhs + polys[n - 1].left_mul(b)
            assert (polys[n].mul_x() - rhs).is_zero()
        ident = MatrixP.identity(p)
        zero = MatrixP.zeros(p, p)
        for l in (0, 1):
            for n in (1, 2, 3, 4):
                poly = build_poly(table, l, n)
                for i in range(n):
                    blocks = []
                    for r in range(n):
                        row = [table.m(l + r + j) for j in range(n)]
                        row.append(ident if r == i else zero)
                        blocks.append(row)
                    bottom = [table.m(l + n + j) for j in range(n)]
                    bottom.append(zero)
                    blocks.append(bottom)
                    bordered = quasidet(BlockMatrix(blocks), n, n)
                    assert bordered == poly.coefficient(i)
        oracle = gram_schmidt(table, 0, N, p)
        for n in range(N + 1):
            assert polys[n] == oracle[n]
    print("criterion 3: orthogonality, recurrence, coefficients, oracle")


def test_criterion_4_semidiscrete_flows():
    # Nonlinear and bilinear lattice flows, wave evolution for the first
    # three flows, the second-flow lattice, and both Hankel derivative
    # expansions: exact zeros at N = 3 for p in 1..3.  Budget: 120 s.
    start = time.monotonic()
    N = 3
    for p in (1, 2, 3):
        spec = random_measure(p, 5, seed=400 + p)
        first = build_jet_table(spec, 1, 1, 2 * N + 2)
        assert_all_zero(toda_nonlinear_residual(first, N))
        second_order = build_jet_table(spec, 1, 2, 2 * N + 2)
        assert_all_zero(toda_bilinear_residual(second_order, N))
        for k in (1, 2, 3):
            flow_jets = build_jet_table(spec, k, 1, 2 * N + 1)
            assert_all_zero(wave_evolution_residual(flow_jets, N))
        t2_jets = build_jet_table(spec, 2, 1, 2 * N + 1)
        assert_all_zero(t2_nonlinear_residual(t2_jets, N))
        deriv_jets = build_jet_table(spec, 1, 1, 2 * N + 1)
        assert_all_zero(hankel_derivative_residual(deriv_jets, N))
    elapsed = time.monotonic() - start
    print(f"criterion 4: flows verified in {elapsed:.1f}s")
    assert elapsed < 120.0


def test_criterion_5_discrete_transformations():
    # Degree-raising and degree-lowering connections, the mixed
    # connection, operator compatibility on interior rows, the nonlinear
    # connector system, and the Hankel recursion: exact zeros at N = 3
    # for p in {1, 2}.
    N = 3
    for p in (1, 2):
        spec = random_measure(p, 6, seed=500 + p)
        table = build_moment_table(spec, 2 * N + 3)
        assert_all_zero(spectral_transform_residual(table, N))
        compat = discrete_compatibility_residual(table, N)
        assert_all_zero(compat)
        parts = {s.part for s in compat.sites}
        assert parts == {
            "mixed_connection",
            "operator_intertwining",
            "connector_linear",
            "connector_quadratic",
        }
        assert_all_zero(discrete_toda_residual(table, N))
    print("criterion 5: discrete transformations verified")


def test_criterion_6_volterra_backlund():
    # On even measures at N = 2 (gamma sites through 4) for p in 1..3:
    # the factor-chain flow, both nonlinear factor equations, both
    # bilinear equations, and the polynomial flow all vanish; the two
    # Hankel ladders each satisfy the bilinear flow over the reduced
    # moments, which is the linkage between the two solutions.
    N = 2
    for p in (1, 2, 3):
        spec = random_measure(p, 12, seed=600 + p, even=True)
        jets = build_jet_table(spec, 2, 1, 4 * N + 4)
        report = volterra_residual(jets, N)
        assert_all_zero(report)
        parts = {s.part for s in report.sites}
        assert parts == {
            "gamma_flow",
            "xi_flow",
            "zeta_flow",
            "bilinear_even",
            "bilinear_odd",
            "q_flow",
        }
        gamma_sites = {s.site for s in report.sites if s.part == "gamma_flow"}
        assert gamma_sites == {1, 2, 3, 4}
        deep = build_jet_table(spec, 2, 2, 4 * N + 6)
        linkage = backlund_residual(deep, N)
        assert_all_zero(linkage)
        assert {s.part for s in linkage.sites} == {
            "bilinear_shift0",
            "bilinear_shift1",
        }
    print("criterion 6: volterra and linkage verified")


def test_criterion_7_continuum_limit():
    # Defect decay of the lattice product against the continuum flow:
    # slope at least 3.7 for a non-commuting quadratic r, at least 4.7
    # for a commuting scalar r.
    eps = (0.1, 0.05, 0.025, 0.0125)
    matrix_r = [
        MatrixP([[0, 1], [0, 0]]),
        MatrixP.zeros(2, 2),
        MatrixP([[0, 0], [1, 0]]),
    ]
    matrix_slope, _ = kdv_limit_slope(matrix_r, eps)
    one = MatrixP.identity(1)
    scalar_r = [one.scale(0), one, one.scale(0), one]
    scalar_slope, _ = kdv_limit_slope(scalar_r, eps)
    print(
        f"criterion 7: slopes matrix={matrix_slope:.3f} scalar={scalar_slope:.3f}"
    )
    assert matrix_slope >= 3.7
    assert scalar_slope >= 4.7


def test_criterion_8_determinism(tmp_path, capsys):
    # Two runs with one config produce byte-identical reports once the
    # timestamp field is masked.
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        argv = [
            "verify",
            "--p",
            "1",
            "--n",
            "3",
            "--seed",
            "77",
            "--out",
            str(out),
        ]
        assert cli_main(argv) == 0
    capsys.readouterr()
    file_a = next(out_a.glob("*.jsonl"))
    file_b = next(out_b.glob("*.jsonl"))
    mask = re.compile(rb'"timestamp":\s*"[^"]*"')
    bytes_a = mask.sub(b'"timestamp":""', file_a.read_bytes())
    bytes_b = mask.sub(b'"timestamp":""', file_b.read_bytes())
    assert bytes_a == bytes_b
    body = json.loads(file_a.read_text())
    assert body["pass"] is True
    print("criterion 8: reports byte-identical after timestamp mask")
