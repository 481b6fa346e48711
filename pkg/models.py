"""
Database models for the run archive.
One Run row per recorded CLI invocation, plus the points of any curve it produced.
"""
from datetime import datetime

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship

from db_config import Base


class Run(Base):
    """Model for a recorded command invocation"""
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String, index=True)  # "pid", "deficiency", "db-curve", ...
    arguments = Column(Text)  # JSON-encoded argument list
    exit_status = Column(Integer)
    summary = Column(Text, nullable=True)  # JSON report as printed with --json
    created_at = Column(DateTime, default=datetime.utcnow)

    curve_points = relationship("CurvePointRecord", back_populates="run", cascade="all, delete-orphan")


class CurvePointRecord(Base):
    """Model for one point of an IB or DB curve"""
    __tablename__ = "curve_points"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id"), index=True)
    kind = Column(String)  # "ib" or "db"
    schedule = Column(String, nullable=True)
    beta = Column(Float)
    rate_bits = Column(Float)
    sufficiency_bits = Column(Float)
    objective_bits = Column(Float)
    converged = Column(Integer, default=1)

    run = relationship("Run", back_populates="curve_points")
