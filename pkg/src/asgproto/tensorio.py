"""ASGT tensor container, PGM export and CSV export.

ASGT layout (all little-endian)::

    b"ASGT" | version u8 (=1) | dtype u8 (1=f32, 2=u8 bool) | ndim u8 (2 or 3)
    | ndim x u32 dims | row-major payload
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .core import AsgError

MAGIC = b"ASGT"
VERSION = 1
DTYPE_F32 = 1
DTYPE_BOOL = 2
MAX_ELEMENTS = 1 << 32

_HEADER = struct.Struct("<4sBBB")
_DTYPES = {DTYPE_F32: np.dtype("<f4"), DTYPE_BOOL: np.dtype("u1")}


class TensorFormatError(AsgError):
    pass


class BadMagic(TensorFormatError):
    pass


class UnsupportedVersion(TensorFormatError):
    pass


class TruncatedPayload(TensorFormatError):
    pass


class ShapeOverflow(TensorFormatError):
    pass


def encode_tensor(value) -> bytes:
    arr = np.asarray(value)
    if arr.ndim not in (2, 3):
        raise ShapeOverflow(f"only 2-D and 3-D tensors are supported, got ndim={arr.ndim}")
    if arr.size > MAX_ELEMENTS or any(d >= 1 << 32 for d in arr.shape):
        raise ShapeOverflow(f"tensor shape {arr.shape} is too large")
    if arr.dtype == np.bool_:
        code, payload = DTYPE_BOOL, arr.astype(np.uint8)
    else:
        code, payload = DTYPE_F32, arr.astype("<f4")
    header = _HEADER.pack(MAGIC, VERSION, code, arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + np.ascontiguousarray(payload).tobytes()


def decode_tensor(buf: bytes) -> np.ndarray:
    """Parse an ASGT byte string into a float32 or bool array."""
    if len(buf) < _HEADER.size:
        raise TruncatedPayload("file shorter than the ASGT header")
    magic, version, code, ndim = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, found {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported ASGT version {version}")
    if code not in _DTYPES:
        raise TensorFormatError(f"unknown dtype code {code}")
    if ndim not in (2, 3):
        raise ShapeOverflow(f"unsupported ndim {ndim}")
    off = _HEADER.size
    if len(buf) < off + 4 * ndim:
        raise TruncatedPayload("file ends inside the dims block")
    dims = struct.unpack_from(f"<{ndim}I", buf, off)
    off += 4 * ndim
    count = 1
    for d in dims:
        count *= d
    if count > MAX_ELEMENTS:
        raise ShapeOverflow(f"dims {dims} exceed the element limit")
    dtype = _DTYPES[code]
    nbytes = count * dtype.itemsize
    if len(buf) - off < nbytes:
        raise TruncatedPayload(f"payload has {len(buf) - off} bytes, expected {nbytes}")
    if len(buf) - off > nbytes:
        raise TensorFormatError(f"{len(buf) - off - nbytes} trailing bytes after payload")
    arr = np.frombuffer(buf, dtype=dtype, count=count, offset=off).reshape(dims)
    if code == DTYPE_BOOL:
        return arr != 0
    return arr.astype(np.float32)


def read_tensor(path) -> np.ndarray:
    """Read an ASGT file.

    A 2-D u8 file comes back as a boolean mask, f32 files as float32 arrays.
    """
    with open(path, "rb") as fh:
        return decode_tensor(fh.read())


def write_tensor(path, value) -> None:
    data = encode_tensor(value)
    with open(path, "wb") as fh:
        fh.write(data)


def write_pgm(path, image: np.ndarray, maxval: int = 255) -> None:
    """Binary (P5) PGM; values above 255 are written as 16-bit big-endian."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in [1, 65535]")
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(np.clip(image, 0, maxval).astype(dtype).tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    pos += 1
    magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic != b"P5":
        raise TensorFormatError("only binary P5 PGM is supported")
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w).astype(np.int64)


def to_gray(values: np.ndarray, bound: float) -> np.ndarray:
    """Linear map of ``[-bound, bound]`` onto ``[0, 255]``."""
    scaled = (np.asarray(values, dtype=np.float64) / bound + 1.0) * 127.5
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def write_csv(path, plane: np.ndarray) -> None:
    np.savetxt(path, np.asarray(plane, dtype=np.float64), delimiter=",", fmt="%.9g")


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return os.fspath(path)
