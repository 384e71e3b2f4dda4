import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence, Union

import numpy as np

PathLike = Union[str, Path]


def format_float(value: Any) -> str:
    """Render a number with 17 significant digits (round-trip exact)."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays and nested containers to JSON-ready values"""
    if isinstance(obj, np.ndarray):
        return [to_jsonable(item) for item in obj.tolist()]
    elif isinstance(obj, (np.bool_,)):
        return bool(obj)
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, (np.floating, float)):
        value = float(obj)
        if not np.isfinite(value):
            return None
        return value
    elif isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [to_jsonable(item) for item in obj]
    elif isinstance(obj, Path):
        return str(obj)
    else:
        return obj


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a UTF-8 CSV with a header row; numbers use 17 significant digits."""
    path = Path(path)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([item if isinstance(item, str) else format_float(item) for item in row])
    _atomic_write_text(path, buffer.getvalue())
    return path


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    """Atomically write deterministic JSON (sorted keys, repr floats)."""
    path = Path(path)
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"
    _atomic_write_text(path, text)
    return path


def file_digest(path: PathLike) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()

