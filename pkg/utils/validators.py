# -*- coding: utf-8 -*-
"""Validators for command-line values and structured input files"""

import re
from typing import Optional

from services.core import UsageError


class ConfigFileError(UsageError):
    """Exception raised for malformed config, plan or space files"""

    def __init__(self, message: str, source: str = "<string>", line: Optional[int] = None):
        self.source = source
        self.line = line
        location = f"{source}:{line}" if line is not None else source
        super().__init__(f"{location}: {message}")


class ConfigNameValidator:
    """Validator for configuration names used in paths and run ids"""

    MAX_LENGTH = 64
    PATTERN = re.compile(r"^[A-Za-z0-9_.\-]+$")

    @staticmethod
    def validate_or_raise(name: str) -> None:
        """
        Raises:
            UsageError: empty, too long, or with characters outside [A-Za-z0-9_.-]
        """
        if not name or not name.strip():
            raise UsageError("Configuration name cannot be empty")
        if len(name) > ConfigNameValidator.MAX_LENGTH:
            raise UsageError(
                f"Configuration name too long (max {ConfigNameValidator.MAX_LENGTH} characters)"
            )
        if not ConfigNameValidator.PATTERN.match(name) or name in (".", ".."):
            raise UsageError(f"Configuration name '{name}' may only contain letters, digits, '_', '-' and '.'")


def validate_precision(p: int) -> int:
    if not 0 <= p <= 6:
        raise UsageError(f"Precision must be within [0, 6], got {p}")
    return p


def parse_id_list(text: Optional[str]) -> Optional[list[int]]:
    """'0,2,3' -> [0, 2, 3]; None or empty -> None"""
    if text is None or not text.strip():
        return None
    try:
        ids = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"Expected a comma-separated list of integers, got '{text}'") from None
    if any(i < 0 for i in ids):
        raise UsageError(f"Ids must be nonnegative, got '{text}'")
    return ids


def sanitize_list(text: str) -> list[str]:
    """Split a comma-separated value, dropping blanks and surrounding whitespace"""
    return [part.strip() for part in text.split(",") if part.strip()]
