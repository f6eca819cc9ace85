"""
Directory-based tensor archive.

Layout: ``manifest.json`` maps tensor name -> {dtype, shape, file, byte_offset};
payloads are little-endian row-major blobs. All tensors of one archive share
``tensors.bin``.
"""
import json
import hashlib
import tempfile
from pathlib import Path
from typing import Union

import numpy as np
import torch

from functions import replace_dir
from src.errors import IoError, ParseError
from src.logger import get_logger
from src.schemas import GetArchiveSchemas
from src.validator import Validator

logger = get_logger(__name__)

MANIFEST = "manifest.json"
BLOB = "tensors.bin"

_DTYPES = {
    "f32": (np.dtype("<f4"), torch.float32),
    "i64": (np.dtype("<i8"), torch.int64),
}


def _dtype_code(tensor: torch.Tensor) -> str:
    if tensor.dtype in (torch.int64, torch.int32, torch.int16, torch.uint8, torch.bool):
        return "i64"
    return "f32"


def write_archive(path: Union[str, Path], tensors: dict[str, torch.Tensor], sidecars: dict[str, object] | None = None) -> Path:
    """
    Writes tensors (and optional JSON sidecars) to ``path`` atomically.

    Floating tensors are stored as f32, integer tensors as i64.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_dir = Path(tempfile.mkdtemp(dir=path.parent, prefix=f".{path.name}."))

    manifest = {}
    offset = 0
    with open(tmp_dir / BLOB, "wb") as blob:
        for name in sorted(tensors):
            tensor = tensors[name].detach().cpu()
            code = _dtype_code(tensor)
            np_dtype, _ = _DTYPES[code]
            payload = np.ascontiguousarray(tensor.numpy().astype(np_dtype)).tobytes(order="C")
            blob.write(payload)
            manifest[name] = {"dtype": code, "shape": list(tensor.shape), "file": BLOB, "byte_offset": offset}
            offset += len(payload)

    (tmp_dir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    for name, payload in (sidecars or {}).items():
        (tmp_dir / name).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")

    replace_dir(tmp_dir, path)
    logger.debug(f"Wrote archive {path} with {len(manifest)} tensors ({offset} bytes)")
    return path


def read_archive(path: Union[str, Path]) -> dict[str, torch.Tensor]:
    path = Path(path)
    if not path.is_dir():
        raise IoError(f"tensor archive not found: {path}")
    manifest = Validator.validate_manifest(path / MANIFEST, GetArchiveSchemas.manifest).root

    tensors = {}
    for name, entry in manifest.items():
        np_dtype, torch_dtype = _DTYPES[entry.dtype]
        count = int(np.prod(entry.shape)) if entry.shape else 1
        blob_path = path / entry.file
        if not blob_path.exists():
            raise IoError(f"{path}: blob {entry.file} referenced by '{name}' is missing")
        array = np.fromfile(blob_path, dtype=np_dtype, count=count, offset=entry.byte_offset)
        if array.size != count:
            raise ParseError(f"{path}: tensor '{name}' truncated ({array.size} of {count} values)")
        tensors[name] = torch.from_numpy(array.reshape(entry.shape).copy()).to(torch_dtype)
    return tensors


def read_sidecar(path: Union[str, Path], name: str):
    sidecar = Path(path) / name
    if not sidecar.exists():
        raise IoError(f"sidecar not found: {sidecar}")
    return json.loads(sidecar.read_text(encoding="utf-8"))


def archive_digest(path: Union[str, Path]) -> str:
    """SHA-256 over manifest and blobs, used as a cache key."""
    path = Path(path)
    digest = hashlib.sha256()
    for item in sorted(path.iterdir()):
        if item.is_file():
            digest.update(item.name.encode("utf-8"))
            digest.update(item.read_bytes())
    return digest.hexdigest()
