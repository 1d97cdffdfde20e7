"""Python front end to the rvol toolkit."""

import json

from ._rvol import (
    Error,
    canonical_config,
    commands,
    config_hash,
    einstein_vk,
    sign_Fk,
    sign_V,
    version,
)
from . import _rvol


def _text(v):
    if isinstance(v, (list, tuple)):
        return ",".join(_text(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def run(command, **options):
    """Run one command and return its result record as a dict."""
    return json.loads(_rvol.run_json(command, {k: _text(v) for k, v in options.items()}))


def report(records):
    """Text report for result records (dicts)."""
    return _rvol.report([json.dumps(r) for r in records])


__all__ = [
    "Error",
    "canonical_config",
    "commands",
    "config_hash",
    "einstein_vk",
    "report",
    "run",
    "sign_Fk",
    "sign_V",
    "version",
]
