"""
Exception types shared by the circuit and optics layers.
"""


class QuditGatesError(Exception):
    """Base class for every error raised by qudit_gates."""


class DomainError(QuditGatesError, ValueError):
    """Argument outside the domain of an operation (levels, dims, modes)."""


class ConsistencyError(QuditGatesError, ArithmeticError):
    """A composed circuit or compiled network is not unitary."""


class SchemeIntegrityError(QuditGatesError):
    """Accepted branches of an optical scheme disagree or leave the decode tables."""
