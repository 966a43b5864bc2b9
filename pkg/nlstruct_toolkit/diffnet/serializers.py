"""
Binary block format for parameter vectors.

Layout: block count (u32), then per block the UTF-8 name prefixed by its byte
length (u32), the number of dimensions (u32), each dimension (u32), and the
values as little-endian float64 in row-major order.
"""
import struct
from typing import Tuple

import numpy as np

from ..exceptions import ArtifactIOException
from .params import ParamVector

_U32 = struct.Struct("<I")


def dump_blocks(params: ParamVector) -> bytes:
    """
    Serialize a parameter vector.

    Args:
        params: Vector to serialize

    Returns:
        Encoded bytes
    """
    chunks = [_U32.pack(len(params.layout))]
    for name, shape in params.layout:
        encoded = name.encode("utf-8")
        chunks.append(_U32.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(_U32.pack(len(shape)))
        chunks.extend(_U32.pack(d) for d in shape)
        chunks.append(np.ascontiguousarray(params.block(name), dtype="<f8").tobytes())
    return b"".join(chunks)


def _read_u32(buffer: bytes, offset: int) -> Tuple[int, int]:
    if offset + 4 > len(buffer):
        raise ArtifactIOException("Truncated parameter block data")
    return _U32.unpack_from(buffer, offset)[0], offset + 4


def load_blocks(buffer: bytes, offset: int = 0) -> Tuple[ParamVector, int]:
    """
    Deserialize a parameter vector.

    Args:
        buffer: Encoded bytes
        offset: Position of the block count

    Returns:
        The parameter vector and the offset just past its data

    Raises:
        ArtifactIOException: If the data is truncated or malformed
    """
    count, offset = _read_u32(buffer, offset)
    layout = []
    values = []
    for _ in range(count):
        name_len, offset = _read_u32(buffer, offset)
        if offset + name_len > len(buffer):
            raise ArtifactIOException("Truncated block name")
        try:
            name = buffer[offset:offset + name_len].decode("utf-8")
        except UnicodeDecodeError as e:
            raise ArtifactIOException("Block name is not valid UTF-8") from e
        offset += name_len
        ndim, offset = _read_u32(buffer, offset)
        shape = []
        for _ in range(ndim):
            dim, offset = _read_u32(buffer, offset)
            shape.append(dim)
        size = int(np.prod(shape, dtype=np.int64))
        end = offset + 8 * size
        if end > len(buffer):
            raise ArtifactIOException(f"Truncated values for block {name}")
        values.append(np.frombuffer(buffer[offset:end], dtype="<f8").astype(np.float64))
        offset = end
        layout.append((name, tuple(shape)))
    flat = np.concatenate(values) if values else np.zeros(0)
    return ParamVector(flat, layout), offset
