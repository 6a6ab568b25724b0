"""Content digests and atomic file writes for cached artifacts.

Every persisted artifact carries a 16-hex-char digest of the configuration
that produced it, so downstream stages can detect stale inputs.
"""

import hashlib
import json
import os
import tempfile
from pathlib import Path

DIGEST_LEN = 16


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:DIGEST_LEN]


def digest_text(text: str) -> str:
    return digest_bytes(text.encode("utf-8"))


def digest_json(obj) -> str:
    """Digest of a JSON-serializable object, independent of dict ordering."""
    return digest_text(json.dumps(obj, sort_keys=True, separators=(",", ":")))


def combine_digests(*digests: str) -> str:
    return digest_text("|".join(digests))


def atomic_write_text(path, text: str) -> None:
    """Write-then-rename so concurrent readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
