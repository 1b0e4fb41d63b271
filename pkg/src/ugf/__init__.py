"""Uniform guarded fragment toolkit: syntax, finite structures,
bisimulations, amalgams, normal forms and bounded satisfiability."""

__version__ = "0.1.0"
