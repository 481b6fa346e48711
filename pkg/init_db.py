"""
Database initialization script for the run archive.
Creates the archive database and its tables; --reset drops existing tables first.
"""
import argparse
import logging
import sys

from sqlalchemy_utils import create_database, database_exists

import config
from db_config import Base, DATABASE_URL, engine

logger = logging.getLogger(__name__)


def create_tables(bind=engine):
    """Create all tables in the database"""
    try:
        import models  # noqa: F401

        Base.metadata.create_all(bind=bind)
        return True
    except Exception as e:
        logger.error("Error creating archive tables: %s", e)
        return False


def init_database(reset=False, url=DATABASE_URL, bind=engine):
    """Initialize the archive database"""
    try:
        if not database_exists(url):
            create_database(url)
        else:
            logger.info("Archive already exists at %s", url)

        if reset:
            import models  # noqa: F401

            Base.metadata.drop_all(bind=bind)
            logger.info("Dropped all existing tables")

        return create_tables(bind)
    except Exception as e:
        logger.error("Error initializing archive: %s", e)
        return False


def main(argv=None):
    parser = argparse.ArgumentParser(description="Initialize the deficiency run archive")
    parser.add_argument("--reset", action="store_true", help="Drop all archive tables before creating them")
    args = parser.parse_args(argv)
    config.setup_logging()

    if not init_database(reset=args.reset):
        logger.error("Archive initialization failed!")
        sys.exit(1)


if __name__ == "__main__":
    main()
