"""
SQLAlchemy models for the verification run ledger.
"""

from sqlalchemy import JSON, Column, DateTime, Integer, String
from sqlalchemy.sql import func

from .database import Base


class VerificationRun(Base):
    """
    One recorded CLI invocation and the report it produced.
    """
    __tablename__ = "verification_runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String(50), nullable=False, index=True)
    status = Column(String(10), nullable=False)  # 'pass' or 'fail'

    arguments = Column(JSON)
    report = Column(JSON)

    created_at = Column(DateTime, server_default=func.now())
