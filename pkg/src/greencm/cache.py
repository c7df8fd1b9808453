"""On-disk JSON cache, keyed by name, rooted at $GREENCM_CACHE.

The cache is a pure memo: deleting it never changes any output, only
runtime.  Writes go through an advisory file lock so concurrent CLI
invocations stay safe; entries are plain JSON for auditability.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from filelock import FileLock

ENV_VAR = "GREENCM_CACHE"


def cache_dir():
    root = os.environ.get(ENV_VAR)
    if not root:
        return None
    p = Path(root)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _paths(key: str):
    root = cache_dir()
    if root is None:
        return None, None
    safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in key)
    return root / f"{safe}.json", root / f"{safe}.lock"


def get_json(key: str):
    path, lock = _paths(key)
    if path is None or not path.exists():
        return None
    with FileLock(str(lock)):
        try:
            with open(path, "r") as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError):
            return None


def put_json(key: str, obj) -> None:
    path, lock = _paths(key)
    if path is None:
        return
    with FileLock(str(lock)):
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w") as fh:
            json.dump(obj, fh, sort_keys=True, indent=1)
        os.replace(tmp, path)
