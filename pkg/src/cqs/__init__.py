"""Desk-scale quantum simulation toolkit: exact state vectors, search and
Fourier algorithms, one-qubit-control models, fermionic occupation numbers,
a three-qubit correction code, grid solvers, diffusion swarms, and genetic
state selection."""

__version__ = "0.1.0"
