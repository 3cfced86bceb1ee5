"""Exact verification of non-abelian lattice identities built from
matrix orthogonal polynomials and quasi-determinants."""

__version__ = "0.1.0"
