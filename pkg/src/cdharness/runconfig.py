"""Resolved run configuration: file + flag merging and artifact digests.

Config files are TOML with one table per subcommand (flat keys are shared
defaults). Explicit command-line flags always win. Every artifact a command
writes embeds the digest of its fully resolved configuration so reruns can
be matched to their inputs.
"""

from __future__ import annotations

import hashlib
import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ValidationError


def load_config_file(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"malformed config file {path}: {exc}") from None


def merge_config(file_config: dict, command: str, params: dict, explicit: set[str]) -> dict:
    """Overlay file values onto defaults; ``explicit`` flag names win."""
    merged = dict(params)
    layers = [
        {k: v for k, v in file_config.items() if not isinstance(v, dict)},
        file_config.get(command, {}),
    ]
    for layer in layers:
        for key, value in layer.items():
            name = key.replace("-", "_")
            if name in merged and name not in explicit:
                merged[name] = value
    return merged


# Where an artifact lands does not change its content, so output locations
# stay out of the digest.
_NON_SEMANTIC_PARAMS = {"out", "config"}


def resolved_config(command: str, params: dict) -> dict:
    clean = {
        k: v
        for k, v in sorted(params.items())
        if not k.startswith("_") and k not in _NON_SEMANTIC_PARAMS
    }
    return {"command": command, "params": clean}


def config_digest(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
