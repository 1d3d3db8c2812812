"""Near algebras, double near algebras and their flows, with exact rationals."""

__version__ = "0.1.0"
