"""
Flat key-value text format
Shared by scenario files, experiment configs and the artifact config block:

    # comment
    key = value
    schedule.base = 0.1     # dotted keys nest
    label = run #3

'#' opens a comment at the start of a line, or inline when whitespace
stands on both sides of it; any other '#' belongs to the value.
UTF-8, one entry per line, duplicate keys rejected. --set KEY=VALUE
overrides are applied on the flat key space, last writer wins.
"""

import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Type, TypeVar

from pydantic import BaseModel, ValidationError

from tdlab.core.exceptions import ConfigError

KEY_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z0-9_]+)*$")
INLINE_COMMENT = re.compile(r"\s#(?=\s|$)")

ModelT = TypeVar("ModelT", bound=BaseModel)


@dataclass(frozen=True)
class FlatEntry:
    key: str
    value: str
    line: Optional[int] = None
    column: Optional[int] = None


FlatConfig = Dict[str, FlatEntry]


def _strip_comment(raw: str) -> str:
    if raw.lstrip().startswith("#"):
        return ""
    match = INLINE_COMMENT.search(raw)
    return raw[: match.start()] if match else raw


def parse_flat_text(text: str) -> FlatConfig:
    """Parse key = value lines; errors carry line and column"""
    entries: FlatConfig = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        content = _strip_comment(raw)
        if not content.strip():
            continue
        if "=" not in content:
            column = len(content) - len(content.lstrip()) + 1
            raise ConfigError("expected 'key = value'", line=number, column=column)
        key_part, value_part = content.split("=", 1)
        key = key_part.strip()
        key_column = len(key_part) - len(key_part.lstrip()) + 1
        if not KEY_PATTERN.match(key):
            raise ConfigError(f"invalid key {key!r}", line=number, column=key_column)
        if key in entries:
            raise ConfigError(
                f"duplicate key (first set on line {entries[key].line})",
                key_path=key,
                line=number,
                column=key_column,
            )
        value = value_part.strip()
        value_column = len(key_part) + 2 + len(value_part) - len(value_part.lstrip())
        entries[key] = FlatEntry(key, value, number, value_column)
    return entries


def read_flat_file(path: Path) -> FlatConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path} is not UTF-8: {e.reason}")
    return parse_flat_text(text)


def apply_overrides(entries: FlatConfig, overrides: Iterable[str]) -> FlatConfig:
    """Apply KEY=VALUE strings in order on a copy of entries"""
    merged = dict(entries)
    for override in overrides:
        if "=" not in override:
            raise ConfigError(f"override {override!r} must look like KEY=VALUE")
        key, value = (part.strip() for part in override.split("=", 1))
        if not KEY_PATTERN.match(key):
            raise ConfigError(f"invalid override key {key!r}")
        merged[key] = FlatEntry(key, value)
    return merged


def nest(entries: FlatConfig) -> Dict[str, Any]:
    """Dotted keys to nested dicts; a key cannot be both a value and a section"""
    tree: Dict[str, Any] = {}
    for key in sorted(entries):
        entry = entries[key]
        node = tree
        parts = key.split(".")
        for depth, part in enumerate(parts[:-1]):
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(
                    "is both a value and a section",
                    key_path=".".join(parts[: depth + 1]),
                    line=entry.line,
                    column=entry.column,
                )
            node = child
        if parts[-1] in node:
            raise ConfigError(
                "is both a value and a section", key_path=key, line=entry.line, column=entry.column
            )
        node[parts[-1]] = entry.value
    return tree


def format_value(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(item) for item in value)
    return str(value)


def flatten(mapping: Mapping[str, Any], prefix: str = "") -> Dict[str, str]:
    """Inverse of nest for model dumps; None values are dropped"""
    flat: Dict[str, str] = {}
    for key, value in mapping.items():
        path = f"{prefix}{key}"
        if value is None:
            continue
        if isinstance(value, Mapping):
            flat.update(flatten(value, prefix=f"{path}."))
        else:
            flat[path] = format_value(value)
    return flat


def render_flat(flat: Mapping[str, str]) -> str:
    for key, value in flat.items():
        if INLINE_COMMENT.search(f" {value}") or "\n" in value:
            raise ConfigError(f"value {value!r} would be cut short when read back", key_path=key)
    return "".join(f"{key} = {value}\n" for key, value in flat.items())


def validate_flat(model: Type[ModelT], entries: FlatConfig) -> ModelT:
    """Build model from flat entries, mapping the first validation error to its key"""
    try:
        return model.model_validate(nest(entries))
    except ValidationError as e:
        raise _config_error(e, entries)


def _config_error(error: ValidationError, entries: FlatConfig) -> ConfigError:
    first = error.errors()[0]
    names: List[str] = [str(part) for part in first["loc"] if not isinstance(part, int)]
    key_path = ".".join(names) if names else None
    entry = entries.get(key_path) if key_path else None
    message = first["msg"]
    if first["type"] == "extra_forbidden":
        message = "unknown key"
    elif first["type"] == "missing":
        message = "required key is missing"
    return ConfigError(
        message,
        key_path=key_path,
        line=entry.line if entry else None,
        column=entry.column if entry else None,
    )
