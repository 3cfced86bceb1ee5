"""Finite discrete symmetric matrix measures and their exact moment tables.

A measure is a finite list of rational nodes x_j with symmetric rational
weight matrices W_j.  Moments m_i = sum_j x_j^i W_j are exact MatrixP
values.  Time flows enter through jet tables: under the k-th flow each
weight evolves as W_j exp(x_j^k t), so the order-K jet of m_i has
coefficients m_{i+k*r} / r! for r = 0..K.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Mapping, Sequence

from .errors import (
    AsymmetricWeight,
    DepthExceeded,
    InsufficientNodes,
    MeasureError,
    NotEvenMeasure,
    SingularMatrix,
)
from .exactalg import Jet, MatrixP, Scalar


class MeasureSpec:
    """Immutable finite discrete matrix measure sum_j W_j delta(x - x_j)."""

    __slots__ = ("p", "nodes", "weights", "even")

    def __init__(
        self,
        nodes: Sequence[Scalar],
        weights: Sequence[MatrixP],
        even: bool = False,
    ):
        node_tuple = tuple(Fraction(x) for x in nodes)
        weight_tuple = tuple(weights)
        if not node_tuple:
            raise MeasureError("measure needs at least one node")
        if len(node_tuple) != len(weight_tuple):
            raise MeasureError("node and weight counts differ")
        if len(set(node_tuple)) != len(node_tuple):
            raise MeasureError("nodes must be distinct")
        p = weight_tuple[0].rows
        for w in weight_tuple:
            if w.rows != p or w.cols != p:
                raise MeasureError("weights must share one square shape")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "nodes", node_tuple)
        object.__setattr__(self, "weights", weight_tuple)
        object.__setattr__(self, "even", bool(even))

    def __setattr__(self, name, value):
        raise AttributeError("MeasureSpec is immutable")

    def __eq__(self, other):
        if not isinstance(other, MeasureSpec):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.weights == other.weights
            and self.even == other.even
        )

    def __repr__(self):
        return (
            f"MeasureSpec(p={self.p}, nodes={len(self.nodes)}, even={self.even})"
        )

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "even": self.even,
            "nodes": [str(x) for x in self.nodes],
            "weights": [
                [[str(v) for v in row] for row in w.entries] for w in self.weights
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MeasureSpec":
        try:
            nodes = [Fraction(s) for s in data["nodes"]]
            weights = [
                MatrixP([[Fraction(v) for v in row] for row in w])
                for w in data["weights"]
            ]
            even = bool(data.get("even", False))
        except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
            raise MeasureError(f"malformed measure data: {exc}") from exc
        spec = cls(nodes, weights, even=even)
        if "p" in data and spec.p != data["p"]:
            raise MeasureError("declared block dimension does not match weights")
        return spec


def compute_moment(spec: MeasureSpec, i: int) -> MatrixP:
    """Exact i-th moment sum_j x_j^i W_j."""
    if i < 0:
        raise ValueError("moment index must be nonnegative")
    acc = MatrixP.zeros(spec.p, spec.p)
    for x, w in zip(spec.nodes, spec.weights):
        acc = acc + w.scale(x**i)
    return acc


class MomentTable:
    """Moments m_0..m_depth of one measure, exact and immutable."""

    __slots__ = ("p", "entries")

    def __init__(self, entries: Sequence):
        tup = tuple(entries)
        if not tup:
            raise ValueError("moment table needs at least one entry")
        object.__setattr__(self, "entries", tup)
        object.__setattr__(self, "p", tup[0].rows)

    def __setattr__(self, name, value):
        raise AttributeError("moment tables are immutable")

    @property
    def depth(self) -> int:
        return len(self.entries) - 1

    def m(self, i: int):
        if i < 0:
            raise ValueError("moment index must be nonnegative")
        if i > self.depth:
            raise DepthExceeded(
                f"moment index {i} exceeds table depth {self.depth}"
            )
        return self.entries[i]

    def shift(self, l: int) -> "MomentTable":
        """Table of the shifted family m_{l+i}; depth drops by l."""
        if l < 0:
            raise ValueError("shift must be nonnegative")
        if l > self.depth:
            raise DepthExceeded(f"shift {l} exceeds table depth {self.depth}")
        return type(self)(self.entries[l:], **self._extra())

    def _extra(self) -> dict:
        return {}


class MomentJetTable(MomentTable):
    """Moment table whose entries are jets in the time of one flow."""

    __slots__ = ("flow_index", "order")

    def __init__(self, entries: Sequence, flow_index: int, order: int):
        super().__init__(entries)
        object.__setattr__(self, "flow_index", flow_index)
        object.__setattr__(self, "order", order)

    def _extra(self) -> dict:
        return {"flow_index": self.flow_index, "order": self.order}

    def value_table(self) -> MomentTable:
        return MomentTable([j.value() for j in self.entries])


def build_moment_table(spec: MeasureSpec, depth: int) -> MomentTable:
    return MomentTable([compute_moment(spec, i) for i in range(depth + 1)])


def build_jet_table(
    spec: MeasureSpec, flow_index: int, order: int, depth: int
) -> MomentJetTable:
    """Jets of m_0..m_depth under the flow d/dt m_i = m_{i+flow_index}."""
    if flow_index < 1:
        raise ValueError("flow index must be >= 1")
    if order < 0:
        raise ValueError("jet order must be nonnegative")
    raw = build_moment_table(spec, depth + flow_index * order)
    jets = []
    for i in range(depth + 1):
        coeffs = [
            raw.m(i + flow_index * r).scale(Fraction(1, factorial(r)))
            for r in range(order + 1)
        ]
        jets.append(Jet(coeffs))
    return MomentJetTable(jets, flow_index=flow_index, order=order)


def even_reduction(table: MomentTable) -> MomentTable:
    """Table of d_i = m_{2i} for an even measure's moments.

    Raises NotEvenMeasure if any stored odd moment is nonzero.  For jet
    tables under an even flow 2k the result is the d-table under flow k;
    an odd flow acts trivially on d (its jet coefficients beyond order 0
    are odd moments, hence zero), and the stored flow index is kept as
    is for reference.
    """
    for i in range(1, table.depth + 1, 2):
        if not table.entries[i].is_zero():
            raise NotEvenMeasure(f"odd moment m_{i} is nonzero")
    entries = table.entries[::2]
    if isinstance(table, MomentJetTable):
        flow = table.flow_index
        reduced_flow = flow // 2 if flow % 2 == 0 else flow
        return MomentJetTable(entries, flow_index=reduced_flow, order=table.order)
    return MomentTable(entries)


def squared_measure(spec: MeasureSpec) -> MeasureSpec:
    """Measure with nodes x_j^2 realizing d_i = m_{2i} of an even measure.

    Symmetric pairs +-x collapse to the node x^2 with doubled weight; a
    node at zero keeps its weight.
    """
    if not spec.even:
        raise NotEvenMeasure("squared measure needs an even measure")
    grouped: dict = {}
    for x, w in zip(spec.nodes, spec.weights):
        y = x * x
        grouped[y] = grouped[y] + w if y in grouped else w
    nodes = sorted(grouped)
    return MeasureSpec(nodes, [grouped[y] for y in nodes], even=False)


def validate(spec: MeasureSpec, N: int, shifts: Sequence[int] = (0,)) -> dict:
    """Check the measure supports families up to index N for the given shifts.

    Raises AsymmetricWeight, NotEvenMeasure, or InsufficientNodes; on
    success returns a diagnostics mapping.
    """
    for j, w in enumerate(spec.weights):
        if not w.is_symmetric():
            raise AsymmetricWeight(f"weight at node {spec.nodes[j]} is not symmetric")
    if spec.even:
        pairing = {x: w for x, w in zip(spec.nodes, spec.weights)}
        for x, w in pairing.items():
            if x == 0:
                continue
            if -x not in pairing or pairing[-x] != w:
                raise NotEvenMeasure(f"node {x} has no mirrored partner of equal weight")
    if len(spec.nodes) < N + 1:
        raise InsufficientNodes(
            f"{len(spec.nodes)} nodes cannot give rank for block Hankel size {N + 1}"
        )
    depth = max(shifts) + 2 * N
    table = build_moment_table(spec, depth)
    from .quaside import BlockMatrix

    for l in shifts:
        shifted = table.shift(l)
        for n in range(N + 1):
            lam = BlockMatrix(
                [[shifted.m(i + j) for j in range(n + 1)] for i in range(n + 1)]
            )
            try:
                lam.flatten().inv()
            except SingularMatrix as exc:
                raise InsufficientNodes(
                    f"block Hankel of size {n + 1} at shift {l} is singular"
                ) from exc
    return {
        "p": spec.p,
        "node_count": len(spec.nodes),
        "N": N,
        "shifts": tuple(shifts),
        "even": spec.even,
        "hankel_nonsingular": True,
    }


def random_measure(
    p: int, node_count: int, seed: int, even: bool = False
) -> MeasureSpec:
    """Deterministic random measure: distinct rational nodes, weights G G^T + I.

    even=True draws node_count symmetric pairs +-x with shared weights.
    """
    if p < 1 or node_count < 1:
        raise MeasureError("need p >= 1 and at least one node")
    rng = random.Random(seed)
    nodes: list = []
    seen = set()
    tries = 0
    while len(nodes) < node_count:
        tries += 1
        if tries > 1000:
            raise MeasureError("node drawing exhausted")
        x = Fraction(rng.randint(1, 24), rng.randint(1, 4))
        if x in seen:
            continue
        seen.add(x)
        nodes.append(x)
    weights = []
    for _ in range(node_count):
        g = MatrixP([[rng.randint(-3, 3) for _ in range(p)] for _ in range(p)])
        weights.append(g * g.transpose() + MatrixP.identity(p))
    if even:
        mirrored_nodes = []
        mirrored_weights = []
        for x, w in zip(nodes, weights):
            mirrored_nodes.extend([x, -x])
            mirrored_weights.extend([w, w])
        return MeasureSpec(mirrored_nodes, mirrored_weights, even=True)
    return MeasureSpec(nodes, weights, even=False)
