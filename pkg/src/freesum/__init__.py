"""Exact computations in free sums of graded Lie algebras and their enveloping algebras."""

__version__ = "0.1.0"
