"""Atomic file writes: temporary file in the destination directory, then rename."""

import os
import tempfile
import uuid
from pathlib import Path

import aiofiles
import aiofiles.os


def write_text_atomic_sync(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


async def write_text_atomic(path: Path, text: str) -> Path:
    path = Path(path)
    await aiofiles.os.makedirs(path.parent, exist_ok=True)
    tmp = path.parent / f".{path.name}.{uuid.uuid4().hex}.tmp"
    try:
        async with aiofiles.open(tmp, "w", encoding="utf-8", newline="") as handle:
            await handle.write(text)
        await aiofiles.os.replace(tmp, path)
    except BaseException:
        if await aiofiles.os.path.exists(tmp):
            await aiofiles.os.remove(tmp)
        raise
    return path
