# Qudit Gates Module
from .errors import ConsistencyError, DomainError, QuditGatesError, SchemeIntegrityError
from .schemes import get_scheme, run_gate
from .service import VerificationService

__all__ = [
    "QuditGatesError",
    "DomainError",
    "ConsistencyError",
    "SchemeIntegrityError",
    "get_scheme",
    "run_gate",
    "VerificationService",
]
