"""
Database configuration for the run archive.
Holds the SQLAlchemy engine, session factory and declarative base. The
archive URL comes from config (SQLite by default).
"""
from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

import config

DATABASE_URL = config.ARCHIVE_URL

Base = declarative_base()


def make_engine(url=None):
    """Create an engine; SQLite connections may be shared across threads"""
    url = url or DATABASE_URL
    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    return create_engine(url, connect_args=connect_args)


def make_session_factory(bind):
    return sessionmaker(autocommit=False, autoflush=False, bind=bind)


engine = make_engine()
SessionLocal = make_session_factory(engine)
