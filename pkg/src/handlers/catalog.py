import logging
from contextlib import asynccontextmanager
from pathlib import Path

from src.config import settings
from src.database import close_db, create_tables, init_db

logger = logging.getLogger(__name__)


@asynccontextmanager
async def open_catalog(out_dir: Path):
    """Catalog of the given output directory, open for the duration of a command"""
    init_db(settings.catalog_url(out_dir), echo=settings.debug)
    await create_tables()
    try:
        yield
    finally:
        await close_db()


def relative_to(path: Path, out_dir: Path) -> str:
    try:
        return Path(path).relative_to(out_dir).as_posix()
    except ValueError:
        return Path(path).as_posix()
