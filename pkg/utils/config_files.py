"""Sectioned key-value files for configurations, experiment plans and parameter spaces.

Every file opens with a versioned header section:

    [format]
    kind = config        # config | plan | space
    version = 1

followed by [config], [plan] or one [param:NAME] section per parameter.
Errors point at the offending line.
"""

import configparser
import logging
import re
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from services.core import FLAT_FIELDS, AlgoConfig, UsageError
from services.runner import ExperimentPlan, NamedConfig
from services.tuning_service import AUTO_MOEAD, Condition, ParamDef, ParamSpace, make_variants

from .validators import ConfigFileError, ConfigNameValidator, sanitize_list

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
FILE_KINDS = ("config", "plan", "space")
PARAM_PREFIX = "param:"
VARIANTS_KEYWORD = "variants"
DEFAULT_BASE_NAME = "auto-moead"

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^([^\s=:#;\[][^=:]*?)\s*[=:]")
_CONDITION_RE = re.compile(r"^(\w+)\s+in\s+(.+)$")


def _line_index(text: str) -> dict[tuple[str, Optional[str]], int]:
    """(section, key) -> 1-based line; (section, None) -> line of the section header"""
    index: dict[tuple[str, Optional[str]], int] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        match = _SECTION_RE.match(line)
        if match:
            section = match.group(1).strip()
            index.setdefault((section, None), lineno)
            continue
        match = _KEY_RE.match(line)
        if match and section is not None:
            index.setdefault((section, match.group(1).strip()), lineno)
    return index


class _Document:
    def __init__(self, text: str, kind: str, source: str):
        self.source = source
        self.index = _line_index(text)
        self.parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        self.parser.optionxform = str
        try:
            self.parser.read_string(text, source=source)
        except configparser.ParsingError as e:
            lineno = e.errors[0][0] if e.errors else None
            raise ConfigFileError("malformed line", source, lineno) from None
        except configparser.DuplicateOptionError as e:
            raise ConfigFileError(f"duplicate key '{e.option}'", source, e.lineno) from None
        except configparser.DuplicateSectionError as e:
            raise ConfigFileError(f"duplicate section [{e.section}]", source, e.lineno) from None
        except configparser.MissingSectionHeaderError as e:
            raise ConfigFileError("content before the first section header", source, e.lineno) from None
        self._check_header(kind)

    def line(self, section: str, key: Optional[str] = None) -> Optional[int]:
        return self.index.get((section, key)) or self.index.get((section, None))

    def error(self, message: str, section: str, key: Optional[str] = None) -> ConfigFileError:
        return ConfigFileError(message, self.source, self.line(section, key))

    def _check_header(self, kind: str) -> None:
        if not self.parser.has_section("format"):
            raise ConfigFileError("missing [format] header section", self.source, 1)
        found = self.parser.get("format", "kind", fallback=None)
        if found != kind:
            raise self.error(f"expected a {kind} file, found kind '{found}'", "format", "kind")
        version = self.parser.get("format", "version", fallback=None)
        if version != str(FORMAT_VERSION):
            raise self.error(f"unsupported format version '{version}'", "format", "version")

    def section(self, name: str) -> dict[str, str]:
        if not self.parser.has_section(name):
            raise ConfigFileError(f"missing [{name}] section", self.source, None)
        return dict(self.parser.items(name))

    def blame(self, message: str, section: str, keys) -> ConfigFileError:
        """Attach the line of the first key named in message, else the section header"""
        for key in keys:
            if re.search(rf"(?<![A-Za-z_]){re.escape(key)}(?![A-Za-z_])", message):
                return self.error(message, section, key)
        return self.error(message, section)


def _read_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"Cannot read {path}: {e.strerror}") from None


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


def parse_config(text: str, source: str = "<string>") -> NamedConfig:
    doc = _Document(text, "config", source)
    values = doc.section("config")
    name = values.pop("name", None)
    if not name:
        raise doc.error("missing configuration name", "config")
    try:
        ConfigNameValidator.validate_or_raise(name)
    except UsageError as e:
        raise doc.error(str(e), "config", "name") from None
    for key in values:
        if key not in FLAT_FIELDS:
            raise doc.error(f"unknown configuration key '{key}'", "config", key)
    try:
        config = AlgoConfig.from_flat(values)
    except UsageError as e:
        raise doc.blame(str(e), "config", list(values)) from None
    return NamedConfig(name=name, config=config)


def _format_value(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def write_config(name: str, config: AlgoConfig) -> str:
    """Render a configuration file that parse_config reads back to an equal AlgoConfig"""
    lines = ["[format]", "kind = config", f"version = {FORMAT_VERSION}", "", "[config]", f"name = {name}"]
    lines += [f"{key} = {_format_value(value)}" for key, value in config.to_flat().items()]
    return "\n".join(lines) + "\n"


def load_config(path: Path) -> NamedConfig:
    return parse_config(_read_text(path), str(path))


# ---------------------------------------------------------------------------
# Experiment plans
# ---------------------------------------------------------------------------


def parse_plan(text: str, source: str = "<string>", base_dir: Optional[Path] = None) -> ExperimentPlan:
    """
    [plan] keys: problems, configs (`variants`, or config files relative to the
    plan, first one is the base), base (config file for `variants`, default the
    built-in auto-moead), repetitions, budget, checkpoint, master_seed,
    snapshot_evals.
    """
    doc = _Document(text, "plan", source)
    values = doc.section("plan")
    base_dir = Path(base_dir) if base_dir else Path(".")
    known = {"problems", "configs", "base", "repetitions", "budget", "checkpoint", "master_seed", "snapshot_evals"}
    for key in values:
        if key not in known:
            raise doc.error(f"unknown plan key '{key}'", "plan", key)

    entries = sanitize_list(values.get("configs", VARIANTS_KEYWORD))
    try:
        if entries == [VARIANTS_KEYWORD]:
            base = load_config(base_dir / values["base"]) if "base" in values else NamedConfig(
                name=DEFAULT_BASE_NAME, config=AUTO_MOEAD
            )
            configs = [base] + [NamedConfig(name=v.name, config=v.config) for v in make_variants(base.config)]
        else:
            configs = [load_config(base_dir / entry) for entry in entries]
    except ConfigFileError:
        raise
    except UsageError as e:
        raise doc.error(str(e), "plan", "configs") from None

    data = {"problems": tuple(sanitize_list(values.get("problems", ""))), "configs": tuple(configs)}
    for key in ("repetitions", "budget", "checkpoint", "master_seed", "snapshot_evals"):
        if key in values:
            data[key] = values[key]
    try:
        plan = ExperimentPlan.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else None
        raise doc.error(first["msg"], "plan", key) from None
    try:
        plan.validate_problems()
    except UsageError as e:
        raise doc.error(str(e), "plan", "problems") from None
    return plan


def load_plan(path: Path) -> ExperimentPlan:
    path = Path(path)
    return parse_plan(_read_text(path), str(path), path.parent)


# ---------------------------------------------------------------------------
# Parameter spaces
# ---------------------------------------------------------------------------


def _param_from_section(doc: _Document, section: str) -> ParamDef:
    name = section[len(PARAM_PREFIX):].strip()
    values = dict(doc.parser.items(section))
    data: dict = {"name": name, "type": values.get("type", "")}
    if "values" in values:
        data["values"] = tuple(sanitize_list(values["values"]))
    if "range" in values:
        bounds = sanitize_list(values["range"])
        if len(bounds) != 2:
            raise doc.error("range takes two values: low, high", section, "range")
        data["low"], data["high"] = bounds
    if "digits" in values:
        data["digits"] = values["digits"]
    if "condition" in values:
        match = _CONDITION_RE.match(values["condition"].strip())
        if not match:
            raise doc.error("condition must read '<param> in <v1>, <v2>, ...'", section, "condition")
        data["condition"] = Condition(param=match.group(1), values=tuple(sanitize_list(match.group(2))))
    unknown = set(values) - {"type", "values", "range", "digits", "condition"}
    if unknown:
        key = sorted(unknown)[0]
        raise doc.error(f"unknown key '{key}'", section, key)
    try:
        return ParamDef.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else None
        if key in ("low", "high"):
            key = "range"
        raise doc.error(first["msg"], section, key) from None


def parse_space(text: str, source: str = "<string>") -> ParamSpace:
    doc = _Document(text, "space", source)
    sections = [s for s in doc.parser.sections() if s.startswith(PARAM_PREFIX)]
    params = tuple(_param_from_section(doc, s) for s in sections)
    try:
        return ParamSpace(params=params)
    except ValidationError as e:
        message = e.errors()[0]["msg"]
        for section in sections:
            name = section[len(PARAM_PREFIX):].strip()
            if re.search(rf"'{re.escape(name)}'", message):
                raise doc.error(message, section) from None
        raise ConfigFileError(message, source, 1) from None


def load_space(path: Path) -> ParamSpace:
    return parse_space(_read_text(path), str(path))
