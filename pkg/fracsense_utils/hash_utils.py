# Copyright Fracsense Authors 2026
import hashlib
from pathlib import Path
from typing import IO, Dict, Iterable, Union

import numpy as np

HASH_CHUNK_SIZE = 65536


def _update(hasher, data: Union[bytes, IO[bytes]]):
    if isinstance(data, bytes):
        hasher.update(data)
        return
    pos = data.tell()
    while 1:
        chunk = data.read(HASH_CHUNK_SIZE)
        if not isinstance(chunk, bytes):
            raise ValueError(f"Only accepts bytes or byte buffer objects, not {type(chunk)} buffers")
        if not chunk:
            break
        hasher.update(chunk)
    data.seek(pos)


def get_sha256_hex(data: Union[bytes, IO[bytes]]) -> str:
    """Buffers are hashed from their current position to the end; the position is restored."""
    hasher = hashlib.sha256()
    _update(hasher, data)
    return hasher.hexdigest()


def get_file_sha256_hex(path: Union[str, Path]) -> str:
    with open(path, "rb") as f:
        return get_sha256_hex(f)


def get_array_sha256_hex(arr: np.ndarray) -> str:
    """Digest of an array's dtype, shape and C-ordered bytes."""
    arr = np.ascontiguousarray(arr)
    hasher = hashlib.sha256()
    hasher.update(f"{arr.dtype.str}{arr.shape}".encode())
    hasher.update(arr.tobytes())
    return hasher.hexdigest()


def digest_files(paths: Iterable[Union[str, Path]]) -> Dict[str, str]:
    return {Path(p).name: get_file_sha256_hex(p) for p in sorted(paths, key=lambda p: Path(p).name)}
