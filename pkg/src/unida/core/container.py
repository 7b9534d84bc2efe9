"""FDT1 tensor container and JSON sidecars.

Layout (little-endian)::

    magic      4 bytes   b"FDT1"
    dtype      1 byte    0x00 = float64
    rank       1 byte
    reserved   2 bytes   zero
    extents    rank x uint64
    payload    prod(extents) x float64, row-major

No compression, no alignment padding.
"""

__all__ = [
    "MAGIC",
    "write_tensor",
    "read_tensor",
    "encode_tensor",
    "decode_tensor",
    "write_sidecar",
    "read_sidecar",
    "sidecar_path",
]

import json
import logging
import struct
from pathlib import Path
from typing import Any

import numpy as np
from aibs_informatics_core.utils.json import JSON

from unida.common.errors import TensorFormatError

logger = logging.getLogger(__name__)

MAGIC = b"FDT1"
DTYPE_FLOAT64 = 0x00
_HEADER = struct.Struct("<4sBBH")
_PAYLOAD_DTYPE = np.dtype("<f8")


def encode_tensor(values) -> bytes:
    """Serialize an array to FDT1 bytes."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim > 255:
        raise TensorFormatError("rank", f"rank {arr.ndim} exceeds 255")
    header = _HEADER.pack(MAGIC, DTYPE_FLOAT64, arr.ndim, 0)
    extents = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return header + extents + np.ascontiguousarray(arr, dtype=_PAYLOAD_DTYPE).tobytes()


def decode_tensor(data: bytes) -> np.ndarray:
    """Parse FDT1 bytes.

    Raises:
        TensorFormatError: on bad magic, dtype code, reserved bytes, or truncated content.
    """
    if len(data) < _HEADER.size:
        raise TensorFormatError("header", f"expected {_HEADER.size} bytes, found {len(data)}")
    magic, dtype, rank, reserved = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise TensorFormatError("magic", f"expected {MAGIC!r}, found {magic!r}")
    if dtype != DTYPE_FLOAT64:
        raise TensorFormatError("dtype", f"unsupported dtype code 0x{dtype:02x}")
    if reserved != 0:
        raise TensorFormatError("reserved", f"expected zero, found {reserved}")
    offset = _HEADER.size
    extents_size = 8 * rank
    if len(data) < offset + extents_size:
        raise TensorFormatError("extents", f"truncated: rank {rank} needs {extents_size} bytes")
    dims = struct.unpack_from(f"<{rank}Q", data, offset)
    offset += extents_size
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    expected = count * _PAYLOAD_DTYPE.itemsize
    payload = data[offset:]
    if len(payload) != expected:
        raise TensorFormatError(
            "payload", f"expected {expected} bytes for dims {list(dims)}, found {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE).astype(np.float64).reshape(dims)
    return arr


def write_tensor(path: str | Path, values) -> Path:
    """Write an array as an FDT1 file, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_tensor(values))
    logger.debug(f"Wrote tensor {np.shape(values)} to {path}")
    return path


def read_tensor(path: str | Path) -> np.ndarray:
    """Read an FDT1 file."""
    return decode_tensor(Path(path).read_bytes())


def sidecar_path(path: str | Path) -> Path:
    """JSON sidecar location for a tensor file (`<stem>.json`)."""
    return Path(path).with_suffix(".json")


def write_sidecar(path: str | Path, content: JSON) -> Path:
    """Write canonical JSON (sorted keys) next to `path`."""
    target = sidecar_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(content, sort_keys=True, indent=2) + "\n")
    return target


def read_sidecar(path: str | Path) -> dict[str, Any]:
    return json.loads(sidecar_path(path).read_text())
