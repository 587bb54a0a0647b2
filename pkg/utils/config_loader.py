"""
Run configuration files

A configuration is a plain-text file of FIELD_NAME=value lines (upper-case
RunConfig field names, '#' comments allowed). The file is parsed with
python-dotenv but never loaded into the process environment.
"""

import io
import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from dotenv import dotenv_values
from pydantic import ValidationError

from models import RunConfig
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

LIST_FIELDS = {"phase_offsets"}


def _key_lines(text: str) -> Dict[str, int]:
    """1-based line number of the first assignment of every key"""
    lines = {}
    for number, line in enumerate(text.splitlines(), start=1):
        match = re.match(r"\s*(?:export\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*(?:=|$)", line)
        if match and match.group(1) not in lines:
            lines[match.group(1)] = number
    return lines


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """
    Build a RunConfig from configuration text

    Raises:
        ConfigError: With one (line, field, message) entry per problem
    """
    values = dotenv_values(stream=io.StringIO(text))
    key_lines = _key_lines(text)
    known = set(RunConfig.model_fields)
    problems: List[Tuple[Optional[int], str, str]] = []
    data = {}
    for key, raw in values.items():
        field = key.lower()
        if field not in known:
            problems.append((key_lines.get(key), key, "unknown key"))
            continue
        if raw is None:
            problems.append((key_lines.get(key), key, "missing '=' and value"))
            continue
        if field in LIST_FIELDS:
            data[field] = [item.strip() for item in raw.split(",") if item.strip()]
        else:
            data[field] = raw.strip()
    if problems:
        raise ConfigError(f"{source}: invalid configuration", problems)

    try:
        return RunConfig(**data)
    except ValidationError as e:
        for error in e.errors():
            field = str(error["loc"][0]) if error["loc"] else "config"
            key = field.upper()
            problems.append((key_lines.get(key), key if error["loc"] else field, error["msg"]))
        raise ConfigError(f"{source}: invalid configuration", problems)


def load_config(path: str) -> RunConfig:
    """Read and validate a configuration file"""
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}", [(None, "path", str(e))])
    config = parse_config_text(text, source=str(file_path))
    logger.debug("loaded config from %s", file_path)
    return config


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """Render a RunConfig in the file format, one line per field"""
    lines = [f"{name.upper()}={_format_value(getattr(config, name))}" for name in RunConfig.model_fields]
    return "\n".join(lines) + "\n"


def save_config(config: RunConfig, path: str) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialize_config(config), encoding="utf-8")
    return out
