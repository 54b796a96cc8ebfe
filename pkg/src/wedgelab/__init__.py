"""Numerical toolkit for matrix-valued factorizing S-matrices and wedge locality."""

__version__ = "0.1.0"
