"""
Option resolution for the CLI.

Precedence: command-line flag > TOML [<subcommand>] > TOML [common]
> environment / .env (RBSC_*) > built-in default.
"""
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from argparse import Namespace
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from utils.errors import InvalidParameterError

ENV_PREFIX = "RBSC_"
ENV_OPTIONS = {
    "LOG_LEVEL": ("log_level", str),
    "WORKERS": ("workers", int),
    "DETERMINISTIC": ("deterministic", lambda v: v.strip().lower() in ("1", "true", "yes", "on")),
}


def load_env(dotenv_path: Optional[str] = None) -> Dict[str, Any]:
    """Recognized RBSC_* variables, after loading a .env file without overriding the environment."""
    load_dotenv(dotenv_path, override=False)
    values = {}
    for suffix, (key, convert) in ENV_OPTIONS.items():
        raw = os.getenv(ENV_PREFIX + suffix)
        if raw is None or raw == "":
            continue
        try:
            values[key] = convert(raw)
        except ValueError as e:
            raise InvalidParameterError(f"{ENV_PREFIX}{suffix}={raw!r} is invalid: {e}") from e
    return values


def _normalize_keys(table: Dict[str, Any]) -> Dict[str, Any]:
    return {key.replace("-", "_"): value for key, value in table.items() if not isinstance(value, dict)}


def load_toml(path: Optional[str]) -> Dict[str, Dict[str, Any]]:
    if not path:
        return {}
    if not os.path.isfile(path):
        raise InvalidParameterError(f"Config file not found: {path}")
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise InvalidParameterError(f"Config file {path} is not valid TOML: {e}") from e
    tables = {"common": _normalize_keys(data.get("common", {}))}
    for name, table in data.items():
        if isinstance(table, dict) and name != "common":
            tables[name] = _normalize_keys(table)
    return tables


def resolve_options(
    args: Namespace,
    defaults: Dict[str, Any],
    toml_tables: Optional[Dict[str, Dict[str, Any]]] = None,
    env: Optional[Dict[str, Any]] = None,
) -> Namespace:
    """
    Fill every option left unset on the command line (None) from the TOML
    tables, the environment and finally the defaults.
    """
    toml_tables = toml_tables or {}
    env = env or {}
    section = toml_tables.get(args.command, {})
    common = toml_tables.get("common", {})

    resolved = dict(vars(args))
    for key in set(defaults) | set(resolved):
        if resolved.get(key) is not None:
            continue
        for source in (section, common, env, defaults):
            if key in source and source[key] is not None:
                resolved[key] = source[key]
                break

    unknown = sorted(set(section) - set(defaults))
    if unknown:
        raise InvalidParameterError(f"Unknown option(s) in [{args.command}]: {', '.join(unknown)}")
    return Namespace(**resolved)
