"""Residual suites for the lattice equations satisfied by the moment data.

Every suite builds its quasi-determinant data exactly (over rationals,
with jets carrying time derivatives where a flow enters) and returns a
ResidualReport listing, per lattice site, the norm of the difference of
the two sides of the identity under test.  A suite passes when every
residual is the exact zero matrix; norms are recorded so a failure is
quantified rather than just flagged.

The continuous-limit check is the one deliberately inexact suite: it
evaluates a finite-difference defect in floating point over a shrinking
step and fits the decay slope.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .errors import OrderExceeded
from .exactalg import (
    MatrixP,
    RingElement,
    identity_like,
    jet_derivative,
    jet_diff,
    jet_inverse,
    jet_truncate,
    value_part,
    zero_like,
)
from .moments import MomentJetTable, MomentTable, even_reduction
from .mops import (
    build_family,
    build_poly,
    build_symmetric_family,
    christoffel_A,
    geronimus_B,
    hankel_H,
    poly_derivative,
    poly_value,
)
from .quaside import BlockMatrix, quasidet


@dataclass(frozen=True)
class SiteResidual:
    """Norm of one residual: lattice site, sub-identity label, max entry."""

    site: int
    part: str
    norm: Fraction
    exact_zero: bool

    def to_dict(self) -> dict:
        return {
            "n": self.site,
            "part": self.part,
            "residual": str(self.norm),
            "residual_decimal": _decimal(self.norm),
            "exact_zero": self.exact_zero,
        }


def _decimal(x: Fraction) -> str:
    try:
        return format(float(x), ".6e")
    except OverflowError:
        return "inf"


@dataclass(frozen=True)
class ResidualReport:
    """All site residuals of one suite plus the parameters that produced them."""

    suite: str
    params: dict
    sites: tuple

    def passed(self, tolerance: Fraction = Fraction(0)) -> bool:
        return all(s.norm <= tolerance for s in self.sites)

    def to_dict(self, tolerance: Fraction = Fraction(0)) -> dict:
        return {
            "suite": self.suite,
            "params": dict(self.params),
            "sites": [s.to_dict() for s in self.sites],
            "pass": self.passed(tolerance),
        }

    def max_norm(self) -> Fraction:
        return max((s.norm for s in self.sites), default=Fraction(0))


def _collect(suite: str, params: dict, items: Sequence) -> ResidualReport:
    sites = tuple(
        SiteResidual(site=n, part=part, norm=res.max_abs(), exact_zero=res.is_zero())
        for n, part, res in items
    )
    return ResidualReport(suite=suite, params=params, sites=sites)


class BandOperator:
    """Banded block operator truncated to block rows and columns 0..n_sites-1.

    bands maps a diagonal offset to {row: block}; absent entries are
    zero.  Products of truncated operators are only trusted on rows
    whose full band support stays inside the truncation window; callers
    restrict the rows they read accordingly.
    """

    __slots__ = ("n_sites", "template", "bands")

    def __init__(self, n_sites: int, bands: Mapping[int, Mapping[int, RingElement]], template: RingElement):
        store: dict = {}
        for offset, row_map in bands.items():
            clean = {}
            for row, blk in row_map.items():
                col = row + offset
                if not (0 <= row < n_sites and 0 <= col < n_sites):
                    raise ValueError(f"band entry ({row},{col}) outside truncation")
                clean[row] = blk
            if clean:
                store[offset] = clean
        object.__setattr__(self, "n_sites", n_sites)
        object.__setattr__(self, "bands", store)
        object.__setattr__(self, "template", template)

    def __setattr__(self, name, value):
        raise AttributeError("BandOperator is immutable")

    def block(self, n: int, m: int) -> RingElement:
        blk = self.bands.get(m - n, {}).get(n)
        return blk if blk is not None else zero_like(self.template)

    def multiply(self, other: "BandOperator") -> "BandOperator":
        if self.n_sites != other.n_sites:
            raise ValueError("operator truncations differ")
        acc: dict = {}
        for o1, d1 in self.bands.items():
            for n, e1 in d1.items():
                k = n + o1
                for o2, d2 in other.bands.items():
                    e2 = d2.get(k)
                    if e2 is None:
                        continue
                    m = k + o2
                    off = m - n
                    row_map = acc.setdefault(off, {})
                    row_map[n] = row_map[n] + e1 * e2 if n in row_map else e1 * e2
        return BandOperator(self.n_sites, acc, self.template)

    def power(self, k: int) -> "BandOperator":
        if k < 1:
            raise ValueError("power must be >= 1")
        out = self
        for _ in range(k - 1):
            out = out.multiply(self)
        return out

    def strictly_lower(self) -> "BandOperator":
        return BandOperator(
            self.n_sites,
            {o: d for o, d in self.bands.items() if o < 0},
            self.template,
        )

    def offsets(self) -> tuple:
        return tuple(sorted(self.bands))


def jacobi_operator(a: Sequence[RingElement], b: Sequence[RingElement], n_sites: Optional[int] = None) -> BandOperator:
    """Truncated three-band Lax operator: identity above, a_n on, b_n below."""
    size = n_sites if n_sites is not None else len(a)
    template = a[0]
    ident = identity_like(template)
    bands = {
        1: {n: ident for n in range(size - 1)},
        0: {n: a[n] for n in range(min(size, len(a)))},
        -1: {n: b[n] for n in range(1, min(size, len(b)))},
    }
    return BandOperator(size, bands, template)


def _value_family(jets: MomentJetTable, l: int, rec_max: int):
    fam = build_family(jets, l, h_max=rec_max, rec_max=rec_max)
    a_vals = [value_part(x) for x in fam.a]
    b_vals = [value_part(x) for x in fam.b]
    return fam, a_vals, b_vals


def toda_nonlinear_residual(jets: MomentJetTable, N: int) -> ResidualReport:
    """Residuals of d/dt a_n = b_{n+1} - b_n and d/dt b_n = a_n b_n - b_n a_{n-1}.

    Needs flow-1 jets of order >= 1; sites 0..N for the a-equation
    (b_0 = 0) and 1..N for the b-equation.
    """
    fam, a_vals, b_vals = _value_family(jets, 0, N)
    b_top = value_part(hankel_H(jets, 0, N + 1) * fam.H[N].inv())
    b_vals = b_vals + [b_top]
    items = []
    for n in range(N + 1):
        res = jet_derivative(fam.a[n], 1) - b_vals[n + 1] + b_vals[n]
        items.append((n, "a_flow", res))
    for n in range(1, N + 1):
        res = jet_derivative(fam.b[n], 1) - (
            a_vals[n] * b_vals[n] - b_vals[n] * a_vals[n - 1]
        )
        items.append((n, "b_flow", res))
    return _collect("toda_nonlinear", {"N": N, "p": jets.p}, items)


def _bilinear_items(jets: MomentTable, N: int, l: int, part: str) -> list:
    h_jets = [hankel_H(jets, l, n) for n in range(N + 2)]
    h_vals = [value_part(h) for h in h_jets]
    items = []
    for n in range(N + 1):
        u = h_jets[n]
        v = jet_diff(u) * jet_inverse(jet_truncate(u, u.order - 1))
        lhs = jet_derivative(v, 1)
        rhs = h_vals[n + 1] * h_vals[n].inv()
        if n >= 1:
            rhs = rhs - h_vals[n] * h_vals[n - 1].inv()
        items.append((n, part, lhs - rhs))
    return items


def toda_bilinear_residual(jets: MomentJetTable, N: int, l: int = 0) -> ResidualReport:
    """Residuals of d/dt((d/dt H_n) H_n^{-1}) = H_{n+1} H_n^{-1} - H_n H_{n-1}^{-1}.

    Needs flow-1 jets of order >= 2; the n = 0 site drops the trailing
    term.  The shift l selects which family's Hankel chain is tested.
    """
    if jets.order < 2:
        raise OrderExceeded("bilinear residuals need jets of order >= 2")
    items = _bilinear_items(jets, N, l, "bilinear")
    return _collect("toda_bilinear", {"N": N, "p": jets.p, "l": l}, items)


def wave_evolution_residual(jets: MomentJetTable, N: int, k: Optional[int] = None) -> ResidualReport:
    """Residuals of d/dt_k P_n + ((L^k)_- P)_n = 0 on rows 0..N-k.

    jets must carry the flow whose index is k (taken from the table when
    omitted).  L is the truncated recurrence operator of the values; its
    k-th power is exact on the retained rows.
    """
    flow = jets.flow_index if k is None else k
    if flow != jets.flow_index:
        raise ValueError("jet table was built for a different flow")
    if N - flow < 0:
        raise ValueError("no interior rows: need N >= flow index")
    fam = build_family(jets, 0, h_max=N, rec_max=N, poly_max=N)
    a_vals = [value_part(x) for x in fam.a]
    b_vals = [value_part(x) for x in fam.b]
    value_polys = [poly_value(q) for q in fam.polys]
    lax = jacobi_operator(a_vals, b_vals)
    lower = lax.power(flow).strictly_lower()
    items = []
    for n in range(N - flow + 1):
        res = poly_derivative(fam.polys[n], 1)
        for m in range(n):
            blk = lower.block(n, m)
            if not blk.is_zero():
                res = res + value_polys[m].left_mul(blk)
        items.append((n, f"wave_k{flow}", res))
    return _collect("wave_evolution", {"N": N, "p": jets.p, "k": flow}, items)


def t2_nonlinear_residual(jets: MomentJetTable, N: int) -> ResidualReport:
    """Residuals of the second flow on the recurrence fields.

    d/dt2 a_n = a_{n+1} b_{n+1} + b_{n+1} a_n - a_n b_n - b_n a_{n-1}
    (sites 0..N-1, b_0 = 0) and
    d/dt2 b_n = a_n^2 b_n - b_n a_{n-1}^2 + b_{n+1} b_n - b_n b_{n-1}
    (sites 1..N-1).  Needs flow-2 jets of order >= 1.
    """
    if jets.flow_index != 2:
        raise ValueError("second-flow residuals need a flow-2 jet table")
    fam, a_vals, b_vals = _value_family(jets, 0, N)
    zero = zero_like(a_vals[0])
    items = []
    for n in range(N):
        prev_a = a_vals[n - 1] if n >= 1 else zero
        rhs = (
            a_vals[n + 1] * b_vals[n + 1]
            + b_vals[n + 1] * a_vals[n]
            - a_vals[n] * b_vals[n]
            - b_vals[n] * prev_a
        )
        items.append((n, "a_flow", jet_derivative(fam.a[n], 1) - rhs))
    for n in range(1, N):
        rhs = (
            a_vals[n] * a_vals[n] * b_vals[n]
            - b_vals[n] * a_vals[n - 1] * a_vals[n - 1]
            + b_vals[n + 1] * b_vals[n]
            - b_vals[n] * b_vals[n - 1]
        )
        items.append((n, "b_flow", jet_derivative(fam.b[n], 1) - rhs))
    return _collect("t2_nonlinear", {"N": N, "p": jets.p}, items)


def _bordered(table: MomentTable, l: int, rows: Sequence[int], cols) -> BlockMatrix:
    return BlockMatrix([[table.m(l + i + j) for j in cols] for i in rows])


def hankel_derivative_residual(jets: MomentJetTable, N: int, l: int = 0) -> ResidualReport:
    """Residuals of both bordered expansions of d/dt H_n under the first flow.

    Row form: d/dt H_n = |shifted-row border| + |unit-column border| H_n;
    column form: d/dt H_n = |shifted-column border| + H_n |unit-row border|.
    """
    if jets.flow_index != 1:
        raise ValueError("Hankel derivative residuals need a flow-1 jet table")
    values = jets.value_table()
    items = []
    for n in range(N + 1):
        lhs = jet_derivative(hankel_H(jets, l, n), 1)
        h_val = hankel_H(values, l, n)
        if n == 0:
            row_form = values.m(l + 1)
            col_form = values.m(l + 1)
        else:
            ident = identity_like(h_val)
            zero = zero_like(h_val)
            rows_shifted = list(range(n)) + [n + 1]
            term1 = quasidet(_bordered(values, l, rows_shifted, range(n + 1)), n, n)
            m2 = [
                [values.m(l + i + j) for j in range(n)]
                + [ident if i == n - 1 else zero]
                for i in range(n)
            ]
            m2.append([values.m(l + n + j) for j in range(n)] + [zero])
            term2 = quasidet(BlockMatrix(m2), n, n)
            row_form = term1 + term2 * h_val
            cols_shifted = list(range(n)) + [n + 1]
            term3 = quasidet(_bordered(values, l, range(n + 1), cols_shifted), n, n)
            m4 = [
                [values.m(l + i + j) for j in range(n)] + [values.m(l + n + i)]
                for i in range(n)
            ]
            m4.append([ident if j == n - 1 else zero for j in range(n)] + [zero])
            term4 = quasidet(BlockMatrix(m4), n, n)
            col_form = term3 + h_val * term4
        items.append((n, "row_expansion", lhs - row_form))
        items.append((n, "column_expansion", lhs - col_form))
    return _collect("hankel_derivative", {"N": N, "p": jets.p, "l": l}, items)


def spectral_transform_residual(table: MomentTable, N: int, shifts: Sequence[int] = (0, 1)) -> ResidualReport:
    """Residuals of the degree-raising and degree-lowering connections.

    For each shift l: P_n^{(l)} = x P_{n-1}^{(l+2)} - A_n^{(l)} P_{n-1}^{(l+1)}
    on sites 1..N, and x P_n^{(l+1)} = P_{n+1}^{(l)} + B_n^{(l)} P_n^{(l)}
    on sites 0..N-1.
    """
    items = []
    for l in shifts:
        polys = {
            s: [build_poly(table, s, n) for n in range(N + 1)]
            for s in (l, l + 1, l + 2)
        }
        for n in range(1, N + 1):
            a_conn = christoffel_A(table, l, n)
            res = (
                polys[l][n]
                - polys[l + 2][n - 1].mul_x()
                + polys[l + 1][n - 1].left_mul(a_conn)
            )
            items.append((n, f"christoffel_l{l}", res))
        for n in range(N):
            b_conn = geronimus_B(table, l, n)
            res = (
                polys[l + 1][n].mul_x()
                - polys[l][n + 1]
                - polys[l][n].left_mul(b_conn)
            )
            items.append((n, f"geronimus_l{l}", res))
    return _collect(
        "spectral_transform",
        {"N": N, "p": table.p, "shifts": tuple(shifts)},
        items,
    )


def discrete_toda_residual(table: MomentTable, N: int, l: int = 0) -> ResidualReport:
    """Residuals of the fully discrete Hankel recursion across shifts.

    H_{n+1}^{(l)} = H_n^{(l+2)} - H_n^{(l+1)} ((H_n^{(l)})^{-1} -
    (H_{n-1}^{(l+2)})^{-1}) H_n^{(l+1)}, the n = 0 site dropping the
    trailing inverse.
    """
    items = []
    for n in range(N + 1):
        mid = hankel_H(table, l + 1, n)
        inner = hankel_H(table, l, n).inv()
        if n >= 1:
            inner = inner - hankel_H(table, l + 2, n - 1).inv()
        res = hankel_H(table, l, n + 1) - hankel_H(table, l + 2, n) + mid * inner * mid
        items.append((n, "hankel_recursion", res))
    return _collect("discrete_toda", {"N": N, "p": table.p, "l": l}, items)


def discrete_compatibility_residual(table: MomentTable, N: int) -> ResidualReport:
    """Residuals tying the two discrete transformations together.

    Parts: the mixed connection P_n^{(0)} = P_n^{(1)} +
    (B_{n-1}^{(1)} - A_n^{(0)}) P_{n-1}^{(1)} (sites 0..N); the operator
    intertwining M L^{(1)} = L^{(0)} M on rows 0..N-1 where M is unit
    lower bidiagonal with that same connector; and the linear and
    quadratic connector constraints at shift 1 (sites 1..N-1).
    """
    items = []
    polys0 = [build_poly(table, 0, n) for n in range(N + 1)]
    polys1 = [build_poly(table, 1, n) for n in range(N + 1)]
    connectors = [None]
    for n in range(1, N + 1):
        connectors.append(geronimus_B(table, 1, n - 1) - christoffel_A(table, 0, n))
    for n in range(N + 1):
        res = polys0[n] - polys1[n]
        if n >= 1:
            res = res - polys1[n - 1].left_mul(connectors[n])
        items.append((n, "mixed_connection", res))

    fam0 = build_family(table, 0, h_max=N, rec_max=N)
    fam1 = build_family(table, 1, h_max=N, rec_max=N)
    lax0 = jacobi_operator(list(fam0.a), list(fam0.b))
    lax1 = jacobi_operator(list(fam1.a), list(fam1.b))
    template = fam0.a[0]
    ident = identity_like(template)
    m_op = BandOperator(
        N + 1,
        {0: {n: ident for n in range(N + 1)}, -1: {n: connectors[n] for n in range(1, N + 1)}},
        template,
    )
    diff_ops = (m_op.multiply(lax1), lax0.multiply(m_op))
    for n in range(N):
        worst = zero_like(template)
        for m in range(max(0, n - 2), min(N, n + 1) + 1):
            blk = diff_ops[0].block(n, m) - diff_ops[1].block(n, m)
            if blk.max_abs() > worst.max_abs():
                worst = blk
        items.append((n, "operator_intertwining", worst))

    for n in range(1, N):
        lin = (
            geronimus_B(table, 2, n - 1)
            - christoffel_A(table, 1, n)
            - geronimus_B(table, 0, n)
            + christoffel_A(table, 0, n + 1)
        )
        items.append((n, "connector_linear", lin))
        quad = (
            (geronimus_B(table, 2, n) - christoffel_A(table, 1, n + 1))
            * geronimus_B(table, 1, n)
        ) - geronimus_B(table, 0, n + 1) * (
            geronimus_B(table, 1, n) - christoffel_A(table, 0, n + 1)
        )
        items.append((n, "connector_quadratic", quad))
    return _collect("discrete_compatibility", {"N": N, "p": table.p}, items)


def volterra_residual(jets: MomentJetTable, N: int) -> ResidualReport:
    """Residuals of the symmetrized-family lattice under the first even flow.

    jets holds even-measure moments under flow 2 with order >= 1; the
    construction descends to the d-moments where the flow is the first
    one.  Parts: the gamma chain d/dt gamma_n = gamma_{n+1} gamma_n -
    gamma_n gamma_{n-1} (sites 1..2N), the factor flows of xi and zeta,
    the two bilinear Hankel identities, and the even/odd polynomial
    flows d/dt Q_m = alpha Q_{m-2}, beta Q_{m-2}.
    """
    if jets.flow_index != 2:
        raise ValueError("symmetrized-family residuals need a flow-2 jet table")
    qs, data = build_symmetric_family(jets, N)
    gamma_vals = [value_part(g) for g in data.gamma]
    xi_vals = [value_part(x) for x in data.xi]
    zeta_vals = [value_part(z) for z in data.zeta]
    h0_vals = [value_part(h) for h in data.h0]
    h1_vals = [value_part(h) for h in data.h1]
    items = []
    for n in range(1, 2 * N + 1):
        res = jet_derivative(data.gamma[n], 1) - (
            gamma_vals[n + 1] * gamma_vals[n] - gamma_vals[n] * gamma_vals[n - 1]
        )
        items.append((n, "gamma_flow", res))
    for n in range(1, N + 1):
        res = jet_derivative(data.xi[n], 1) - (
            zeta_vals[n + 1] * xi_vals[n] - xi_vals[n] * zeta_vals[n]
        )
        items.append((n, "xi_flow", res))
    for n in range(N):
        res = jet_derivative(data.zeta[n + 1], 1) - (
            xi_vals[n + 1] * zeta_vals[n + 1] - zeta_vals[n + 1] * xi_vals[n]
        )
        items.append((n + 1, "zeta_flow", res))
    d0 = [h0_vals[n].inv() * jet_derivative(data.h0[n], 1) for n in range(N + 2)]
    d1 = [h1_vals[n].inv() * jet_derivative(data.h1[n], 1) for n in range(N + 1)]
    for n in range(N + 1):
        lhs = d0[n]
        rhs = h0_vals[n].inv() * h1_vals[n]
        if n >= 1:
            lhs = lhs - d1[n - 1]
            rhs = rhs - h0_vals[n - 1].inv() * h1_vals[n - 1]
        items.append((n, "bilinear_even", lhs - rhs))
        lhs2 = d1[n] - d0[n]
        rhs2 = h1_vals[n].inv() * h0_vals[n + 1]
        if n >= 1:
            rhs2 = rhs2 - h1_vals[n - 1].inv() * h0_vals[n]
        items.append((n, "bilinear_odd", lhs2 - rhs2))
    for n in range(N + 1):
        even_res = poly_derivative(qs[2 * n], 1)
        if n >= 1:
            even_res = even_res - poly_value(qs[2 * n - 2]).left_mul(
                value_part(data.alpha[n])
            )
        items.append((2 * n, "q_flow", even_res))
        odd_res = poly_derivative(qs[2 * n + 1], 1)
        if n >= 1:
            odd_res = odd_res - poly_value(qs[2 * n - 1]).left_mul(
                value_part(data.beta[n])
            )
        items.append((2 * n + 1, "q_flow", odd_res))
    return _collect("volterra", {"N": N, "p": jets.p}, items)


def backlund_residual(jets: MomentJetTable, N: int) -> ResidualReport:
    """Both d-moment Hankel chains satisfy the bilinear lattice independently.

    jets holds even-measure moments under flow 2 with order >= 2.  After
    descending to the d-moments (where the flow index is 1), the shift-0
    and shift-1 families each run the bilinear residual; together with
    the factorization checks of the symmetrized family this certifies
    that squaring the chain maps solutions to solutions.
    """
    if jets.order < 2:
        raise OrderExceeded("bilinear residuals need jets of order >= 2")
    if jets.flow_index != 2:
        raise ValueError("symmetrized-family residuals need a flow-2 jet table")
    d = even_reduction(jets)
    items = _bilinear_items(d, N, 0, "bilinear_shift0")
    items += _bilinear_items(d, N, 1, "bilinear_shift1")
    return _collect("backlund", {"N": N, "p": jets.p}, items)


def _float_mat(m: MatrixP) -> list:
    return [[float(v) for v in row] for row in m.entries]


def _fm_mul(a: list, b: list) -> list:
    size = len(a)
    return [
        [sum(a[i][k] * b[k][j] for k in range(size)) for j in range(size)]
        for i in range(size)
    ]


def _fm_axpy(acc: list, mat: list, factor: float) -> list:
    return [
        [acc[i][j] + factor * mat[i][j] for j in range(len(acc))]
        for i in range(len(acc))
    ]


def _poly_float_eval(coeffs: Sequence[list], x: float) -> list:
    size = len(coeffs[0])
    acc = [[0.0] * size for _ in range(size)]
    for c in reversed(coeffs):
        acc = [[acc[i][j] * x + c[i][j] for j in range(size)] for i in range(size)]
    return acc


def kdv_limit_slope(
    r_coeffs: Sequence[MatrixP],
    eps_values: Sequence[float],
    samples: Sequence[float] = (0.3, 0.7, 1.1),
) -> tuple:
    """Decay slope of the lattice-to-continuum defect for gamma = I + eps^2 r.

    r is the matrix polynomial with the given coefficients (lowest
    degree first).  For each step eps the defect
        eps^{-2} (gamma(x+eps) gamma(x) - gamma(x) gamma(x-eps))
        - 2 eps r'(x) - eps^3 (r' r + r r')(x) - (eps^3 / 3) r'''(x)
    is evaluated in floating point on the sample points; the function
    returns (slope, rows) where slope fits log(defect) against log(eps)
    and rows lists (eps, norm, log_eps, log_norm).  A commuting family
    leaves only the fifth-order remainder; matrix-valued r with
    [r'', r] != 0 is obstructed at fourth order.
    """
    if not r_coeffs:
        raise ValueError("need at least one polynomial coefficient")
    p = r_coeffs[0].rows
    coeffs = [_float_mat(c) for c in r_coeffs]

    def derive(cs: Sequence[list]) -> list:
        if len(cs) == 1:
            return [[[0.0] * p for _ in range(p)]]
        return [
            [[cs[k][i][j] * k for j in range(p)] for i in range(p)]
            for k in range(1, len(cs))
        ]

    d1 = derive(coeffs)
    d2 = derive(d1)
    d3 = derive(d2)
    ident = [[1.0 if i == j else 0.0 for j in range(p)] for i in range(p)]

    def gamma_at(x: float, eps: float) -> list:
        return _fm_axpy(ident, _poly_float_eval(coeffs, x), eps * eps)

    rows = []
    for eps in eps_values:
        worst = 0.0
        for x in samples:
            g_plus = gamma_at(x + eps, eps)
            g_mid = gamma_at(x, eps)
            g_minus = gamma_at(x - eps, eps)
            lattice = [
                [
                    (a - b) / (eps * eps)
                    for a, b in zip(row_a, row_b)
                ]
                for row_a, row_b in zip(_fm_mul(g_plus, g_mid), _fm_mul(g_mid, g_minus))
            ]
            r_val = _poly_float_eval(coeffs, x)
            r_x = _poly_float_eval(d1, x)
            r_xxx = _poly_float_eval(d3, x)
            target = _fm_axpy(
                [[0.0] * p for _ in range(p)], r_x, 2.0 * eps
            )
            target = _fm_axpy(target, _fm_mul(r_x, r_val), eps**3)
            target = _fm_axpy(target, _fm_mul(r_val, r_x), eps**3)
            target = _fm_axpy(target, r_xxx, eps**3 / 3.0)
            defect = max(
                abs(lattice[i][j] - target[i][j]) for i in range(p) for j in range(p)
            )
            worst = max(worst, defect)
        log_eps = math.log(eps)
        log_norm = math.log(worst) if worst > 0.0 else float("-inf")
        rows.append((eps, worst, log_eps, log_norm))
    if any(norm == 0.0 for _, norm, _, _ in rows):
        return float("inf"), rows
    slope = statistics.linear_regression(
        [r[2] for r in rows], [r[3] for r in rows]
    ).slope
    return slope, rows


def kdv_rows_to_csv(rows: Sequence[tuple]) -> str:
    """CSV text for the slope fit: eps, defect norm, and their logs."""
    lines = ["eps,norm,log_eps,log_norm"]
    for eps, norm, log_eps, log_norm in rows:
        log_txt = format(log_norm, ".12g") if log_norm != float("-inf") else "-inf"
        lines.append(
            f"{format(eps, '.12g')},{format(norm, '.12g')},{format(log_eps, '.12g')},{log_txt}"
        )
    return "\n".join(lines) + "\n"
