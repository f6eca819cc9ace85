import os
import json
import hashlib
import shutil
import tempfile
from pathlib import Path
from typing import Union


def get_current_path(file_name: str):
    """
    Returns the absolute path of a file relative to the repository root.

    Args:
        file_name (str): The name of the file.

    Returns:
        str: The absolute path of the file.
    """
    current_path = os.path.dirname(os.path.abspath(__file__))
    return os.path.join(current_path, file_name)


def load_json(file_name: str):
    """
    Loads a JSON file.

    Args:
        file_name (str): Path to the JSON file, absolute or relative to the repository root.

    Returns:
        dict: The loaded JSON data.
    """
    path = file_name if os.path.isabs(file_name) else get_current_path(file_name)
    with open(path, "r", encoding="utf-8") as file:
        return json.load(file)


def derive_seed(root: int, *labels) -> int:
    """
    Derives an independent seed for one consumer of a run seed.

    The same (root, labels) always yield the same seed, different labels give
    unrelated streams.
    """
    key = ":".join([str(root)] + [str(label) for label in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF


def content_hash(payload: Union[dict, list, str, bytes]) -> str:
    """Stable SHA-256 of a JSON-serialisable payload (keys sorted)."""
    if isinstance(payload, bytes):
        data = payload
    elif isinstance(payload, str):
        data = payload.encode("utf-8")
    else:
        data = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """
    Writes text to a temporary file next to the target and renames it into place.

    Returns:
        Path: the written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as file:
            file.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return path


def replace_dir(tmp_dir: Union[str, Path], target: Union[str, Path]) -> Path:
    """Moves a fully written temporary directory onto the target path."""
    target = Path(target)
    if target.exists():
        shutil.rmtree(target)
    os.replace(tmp_dir, target)
    return target
