"""Effectively enumerable topological spaces: executable constructions and
budgeted checks for the generalized Rice-Shapiro theorem."""

__version__ = "0.1.0"
