"""
Run archive interface used by the CLI.
Wraps db_service behind a small class that opens and closes a session per call.
"""
import json
import logging

import db_service
from db_config import Base, SessionLocal, engine, make_engine, make_session_factory

logger = logging.getLogger(__name__)


class RunArchive:
    def __init__(self, url=None):
        """Use the configured archive, or a separate database when `url` is given"""
        if url is None:
            self.engine = engine
            self.session_factory = SessionLocal
        else:
            self.engine = make_engine(url)
            self.session_factory = make_session_factory(self.engine)
        import models  # noqa: F401  registers the tables on Base

        Base.metadata.create_all(bind=self.engine)

    def record_run(self, command, arguments, exit_status, summary=None, curve_points=None):
        """Store one invocation and its curve points; returns the run id"""
        db = self.session_factory()
        try:
            run = db_service.create_run(db, {
                "command": command,
                "arguments": list(arguments),
                "exit_status": exit_status,
                "summary": summary,
            })
            if curve_points:
                db_service.add_curve_points(db, run.id, curve_points)
            logger.debug("Recorded run %d (%s)", run.id, command)
            return run.id
        finally:
            db.close()

    def list_runs(self, command=None, limit=20):
        db = self.session_factory()
        try:
            return [
                {
                    "id": run.id,
                    "command": run.command,
                    "arguments": json.loads(run.arguments or "[]"),
                    "exit_status": run.exit_status,
                    "created_at": run.created_at,
                    "n_curve_points": len(run.curve_points),
                }
                for run in db_service.get_runs(db, command, limit)
            ]
        finally:
            db.close()

    def run_summary(self, run_id):
        db = self.session_factory()
        try:
            run = db_service.get_run(db, run_id)
            if run is None or run.summary is None:
                return None
            return json.loads(run.summary)
        finally:
            db.close()

    def curve_points(self, run_id):
        db = self.session_factory()
        try:
            return [
                {
                    "kind": p.kind,
                    "schedule": p.schedule,
                    "beta": p.beta,
                    "rate": p.rate_bits,
                    "sufficiency": p.sufficiency_bits,
                    "objective": p.objective_bits,
                    "converged": bool(p.converged),
                }
                for p in db_service.get_curve_points(db, run_id)
            ]
        finally:
            db.close()
