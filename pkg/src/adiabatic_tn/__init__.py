"""Quasi-adiabatic preparation of matrix-product states.

Builds the path of states obtained by applying ``s Q + (1 - s) 1`` to a chain
of entangled pairs, their frustration-free parent Hamiltonians, and simulates
the quasi-adiabatic sweep with TEBD or exact diagonalization.
"""

__version__ = "0.1.0"
