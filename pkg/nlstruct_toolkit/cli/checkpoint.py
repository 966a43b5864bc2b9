"""
Checkpoint files: graph, model hash, run config, parameter blocks and RNG state.

Layout, all little-endian: magic ``NLCK``, format version (u32), three
length-prefixed (u32) UTF-8 strings holding the graph text, the model-spec hash
and the run config JSON, the parameter blocks in the diffnet block format, and
a final length-prefixed JSON string with the RNG state (empty when absent).
"""
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

from ..diffnet import ParamVector, dump_blocks, load_blocks
from ..exceptions import ArtifactIOException
from ..structure import RegionGraph

MAGIC = b"NLCK"
VERSION = 1
_U32 = struct.Struct("<I")


def _pack_text(text: str) -> bytes:
    encoded = text.encode("utf-8")
    return _U32.pack(len(encoded)) + encoded


def _unpack_text(buffer: bytes, offset: int) -> Tuple[str, int]:
    if offset + 4 > len(buffer):
        raise ArtifactIOException("Truncated checkpoint")
    length = _U32.unpack_from(buffer, offset)[0]
    offset += 4
    if offset + length > len(buffer):
        raise ArtifactIOException("Truncated checkpoint")
    try:
        return buffer[offset:offset + length].decode("utf-8"), offset + length
    except UnicodeDecodeError as e:
        raise ArtifactIOException("Checkpoint text field is not valid UTF-8") from e


@dataclass
class Checkpoint:
    graph: RegionGraph
    model_hash: str
    config_json: str
    params: ParamVector
    rng_state: Optional[dict] = None
    version: int = VERSION

    def to_bytes(self) -> bytes:
        rng_json = json.dumps(self.rng_state, sort_keys=True) if self.rng_state is not None else ""
        return b"".join([
            MAGIC,
            _U32.pack(self.version),
            _pack_text(self.graph.to_text()),
            _pack_text(self.model_hash),
            _pack_text(self.config_json),
            dump_blocks(self.params),
            _pack_text(rng_json),
        ])

    @classmethod
    def from_bytes(cls, buffer: bytes) -> "Checkpoint":
        """
        Decode a checkpoint.

        Raises:
            ArtifactIOException: If the data is not a checkpoint of a supported version
        """
        if buffer[:4] != MAGIC or len(buffer) < 8:
            raise ArtifactIOException("Not a checkpoint file (bad magic)")
        version = _U32.unpack_from(buffer, 4)[0]
        if version != VERSION:
            raise ArtifactIOException(f"Unsupported checkpoint version {version}")
        graph_text, offset = _unpack_text(buffer, 8)
        model_hash, offset = _unpack_text(buffer, offset)
        config_json, offset = _unpack_text(buffer, offset)
        params, offset = load_blocks(buffer, offset)
        rng_json, offset = _unpack_text(buffer, offset)
        if offset != len(buffer):
            raise ArtifactIOException(f"{len(buffer) - offset} trailing bytes in checkpoint")
        try:
            graph = RegionGraph.from_text(graph_text)
            rng_state = json.loads(rng_json) if rng_json else None
        except Exception as e:
            raise ArtifactIOException(f"Corrupt checkpoint: {e}") from e
        return cls(graph, model_hash, config_json, params, rng_state, version)


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint):
    try:
        Path(path).write_bytes(checkpoint.to_bytes())
    except OSError as e:
        raise ArtifactIOException(f"Cannot write checkpoint {path}: {e}") from e


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOException(f"Cannot read checkpoint {path}: {e}") from e
    return Checkpoint.from_bytes(data)
