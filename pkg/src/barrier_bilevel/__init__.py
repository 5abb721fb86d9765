"""Log-barrier solvers for bilevel problems with coupled lower-level constraints."""

__version__ = "0.1.0"
