# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Flat `key=value` configuration files.

Blank lines and lines starting with `#` are ignored. Keys are case insensitive and
`-` and `_` are interchangeable, so `max-iter = 500` and `MAX_ITER=500` are the same
setting.
"""

import logging
import os
from collections.abc import Collection, Mapping
from typing import Any

from ._exceptions import ConfigError

_logger = logging.getLogger(__name__)

_TRUE = frozenset({"1", "true", "yes", "on"})
_FALSE = frozenset({"0", "false", "no", "off"})


def normalize_key(key: str) -> str:
    """Return the canonical spelling of a setting name.

    Args:
        key: The name as written.

    Returns:
        The name, stripped, lower case and with `_` instead of `-`.
    """
    return key.strip().lower().replace("-", "_")


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, str]:
    """Parse the content of a configuration file.

    Args:
        text: The content.
        origin: Where the content comes from, for error messages.

    Returns:
        The raw values, by canonical key.

    Raises:
        ConfigError: If a line is not a `key=value` pair or a key is repeated.
    """
    values: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, separator, value = stripped.partition("=")
        key = normalize_key(key)
        if not separator or not key:
            raise ConfigError(
                f"{origin}:{number}: expected key=value, got {stripped!r}"
            )
        if key in values:
            raise ConfigError(f"{origin}:{number}: {key!r} is set twice")
        values[key] = value.strip()
    return values


def load_config_file(path: str | os.PathLike[str]) -> dict[str, str]:
    """Read a configuration file.

    Args:
        path: The file to read.

    Returns:
        The raw values, by canonical key.

    Raises:
        ConfigError: If the file can't be read or is malformed.
    """
    try:
        with open(path, encoding="utf-8") as stream:
            text = stream.read()
    except OSError as exc:
        raise ConfigError(f"can't read the configuration file {path}: {exc}") from exc
    values = parse_config_text(text, os.fspath(path))
    _logger.debug("Read %d settings from %s", len(values), path)
    return values


def coerce(key: str, raw: str, kind: type[Any]) -> Any:
    """Convert a raw configuration value.

    Args:
        key: The setting name, for error messages.
        raw: The raw value.
        kind: The type to convert to: `bool`, `int`, `float` or `str`.

    Returns:
        The converted value.

    Raises:
        ConfigError: If the value can't be converted.
    """
    if kind is bool:
        lowered = raw.strip().lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"{key}: {raw!r} is not a boolean")
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {raw!r} is not a valid {kind.__name__}") from exc


def merge_settings(
    flags: Mapping[str, Any],
    file_values: Mapping[str, str],
    defaults: Mapping[str, Any],
    kinds: Mapping[str, type[Any]],
    known: Collection[str] = (),
) -> dict[str, Any]:
    """Resolve settings by precedence: flags, then file values, then defaults.

    Args:
        flags: The command-line values, `None` when not given.
        file_values: The raw values of the configuration file.
        defaults: The built-in defaults.
        kinds: The type of every setting.
        known: Other keys the file may set, they are ignored.

    Returns:
        The resolved value of every setting in `defaults`.

    Raises:
        ConfigError: If the file sets an unknown key or a value can't be converted.
    """
    unknown = sorted(set(file_values) - set(defaults) - set(known))
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    resolved: dict[str, Any] = {}
    for key, default in defaults.items():
        if flags.get(key) is not None:
            resolved[key] = flags[key]
        elif key in file_values:
            resolved[key] = coerce(key, file_values[key], kinds[key])
        else:
            resolved[key] = default
    return resolved
