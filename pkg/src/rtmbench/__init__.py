"""Reactive Turing machines with atoms, orbit-finite sets and branching bisimilarity."""

__version__ = "0.1.0"
