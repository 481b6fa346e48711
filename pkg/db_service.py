"""
Database service for the run archive.
Functions taking an open Session; callers own the session lifetime.
"""
import json

from sqlalchemy.orm import Session

import models


def _encode(value):
    return json.dumps(value, sort_keys=True, allow_nan=True)


def create_run(db: Session, run_data: dict):
    """Create a new run record"""
    db_run = models.Run(
        command=run_data["command"],
        arguments=_encode(run_data.get("arguments", [])),
        exit_status=run_data.get("exit_status", 0),
        summary=_encode(run_data["summary"]) if run_data.get("summary") is not None else None,
    )
    db.add(db_run)
    db.commit()
    db.refresh(db_run)
    return db_run


def add_curve_points(db: Session, run_id: int, points):
    """Attach curve points (dicts with kind, schedule, beta, rate, sufficiency, objective) to a run"""
    records = [
        models.CurvePointRecord(
            run_id=run_id,
            kind=point["kind"],
            schedule=point.get("schedule"),
            beta=point["beta"],
            rate_bits=point["rate"],
            sufficiency_bits=point["sufficiency"],
            objective_bits=point["objective"],
            converged=int(point.get("converged", True)),
        )
        for point in points
    ]
    db.add_all(records)
    db.commit()
    return records


def get_run(db: Session, run_id: int):
    return db.query(models.Run).filter(models.Run.id == run_id).first()


def get_runs(db: Session, command: str = None, limit: int = 20):
    """Most recent runs first, optionally filtered by command"""
    query = db.query(models.Run)
    if command:
        query = query.filter(models.Run.command == command)
    return query.order_by(models.Run.id.desc()).limit(limit).all()


def get_curve_points(db: Session, run_id: int):
    return (
        db.query(models.CurvePointRecord)
        .filter(models.CurvePointRecord.run_id == run_id)
        .order_by(models.CurvePointRecord.id)
        .all()
    )
