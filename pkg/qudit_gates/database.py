"""
Database configuration for the verification run ledger.
Uses DATABASE_URL when set, SQLite under data/ otherwise.
"""

import logging
import os
from pathlib import Path

from sqlalchemy import create_engine, inspect
from sqlalchemy.orm import declarative_base, sessionmaker

logger = logging.getLogger(__name__)

# Use DATABASE_URL env var when given, fallback to a local SQLite file
DATABASE_URL = os.environ.get("DATABASE_URL")

if DATABASE_URL:
    # SQLAlchemy needs postgresql:// rather than postgres://
    if DATABASE_URL.startswith("postgres://"):
        DATABASE_URL = DATABASE_URL.replace("postgres://", "postgresql://", 1)
    engine = create_engine(DATABASE_URL)
    logger.debug("Using database from DATABASE_URL")
else:
    DB_DIR = Path(__file__).parent.parent / "data"
    DB_DIR.mkdir(exist_ok=True)
    DB_PATH = DB_DIR / "qudit_gates.db"
    DATABASE_URL = f"sqlite:///{DB_PATH}"
    engine = create_engine(
        DATABASE_URL,
        connect_args={"check_same_thread": False}
    )
    logger.debug("Using SQLite at %s", DB_PATH)

SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

Base = declarative_base()


def get_db():
    """Session generator; closes the session when the caller is done."""
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()


def init_db(bind=None):
    """Create all tables if they don't exist."""
    from . import models  # noqa - import to register models

    bind = bind or engine
    existing_tables = inspect(bind).get_table_names()
    logger.debug("Existing tables: %s", existing_tables)
    Base.metadata.create_all(bind=bind, checkfirst=True)
    logger.debug("Database initialization complete")
