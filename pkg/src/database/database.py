import logging
from contextlib import asynccontextmanager
from pathlib import Path

from sqlalchemy import event
from sqlalchemy.ext.asyncio import (
    AsyncSession,
    async_sessionmaker,
    create_async_engine,
)
from sqlalchemy.pool import StaticPool

from .models import Base

logger = logging.getLogger(__name__)

# Global engine and session factory
_engine = None
_session_factory = None


def init_db(database_url: str, echo: bool = False):
    """
    Initialize the catalog engine and session factory.
    """
    global _engine, _session_factory

    logger.info(f"Initializing experiment catalog: {database_url.split('://')[0]}://...")

    kwargs = {}
    if "sqlite" in database_url:
        kwargs["connect_args"] = {"check_same_thread": False}
        if ":memory:" in database_url or database_url.endswith("://"):
            # one shared connection, otherwise every session sees an empty database
            kwargs["poolclass"] = StaticPool
        else:
            db_file = database_url.split(":///", 1)[-1]
            Path(db_file).parent.mkdir(parents=True, exist_ok=True)

    _engine = create_async_engine(database_url, echo=echo, **kwargs)

    if "sqlite" in database_url:
        @event.listens_for(_engine.sync_engine, "connect")
        def set_sqlite_pragma(dbapi_conn, connection_record):
            cursor = dbapi_conn.cursor()
            cursor.execute("PRAGMA foreign_keys=ON")
            cursor.close()

    _session_factory = async_sessionmaker(
        _engine,
        class_=AsyncSession,
        expire_on_commit=False,
        autoflush=True,
    )


async def create_tables():
    if _engine is None:
        raise RuntimeError("Catalog not initialized. Call init_db() first.")
    async with _engine.begin() as conn:
        await conn.run_sync(Base.metadata.create_all)
    logger.debug("Catalog tables ready")


@asynccontextmanager
async def get_session():
    if _session_factory is None:
        raise RuntimeError("Catalog not initialized. Call init_db() first.")
    session = _session_factory()
    try:
        yield session
        await session.commit()
    except Exception as e:
        logger.error(f"Catalog session error, rolling back: {e}")
        await session.rollback()
        raise
    finally:
        await session.close()


async def close_db():
    global _engine, _session_factory

    if _engine is not None:
        await _engine.dispose()
        _engine = None
        _session_factory = None
        logger.debug("Catalog connection closed")
