"""Mixing-time laboratory for the Pauli-weight chains of random two-qubit circuits."""

__version__ = "0.1.0"
