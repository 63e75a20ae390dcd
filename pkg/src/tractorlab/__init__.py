"""Exact computational calculus for compatible almost CR structures.

The package builds the graded symmetry algebra of the model sphere and
its Kostant homology, computes the pseudohermitian calculus of a contact
structure from polynomial jet data, assembles the normal Weyl form, and
derives tractor connections together with their first BGG operators.
All core arithmetic runs over Gaussian rationals, so every reported
identity is checked exactly.
"""

__all__ = ["exactnum", "linalg", "liealg", "homology", "pseudoherm",
           "crops", "weyltractor", "specfile", "cli"]

__version__ = "0.1.0"
