"""Binary symbol exchange with the link simulator.

The codec and the simulator are separate programs; the only thing they share
is this file format. Layout: magic "SMSY", version u16, count u64, reserved
u16 (little endian), then count interleaved (I, Q) float32 pairs. Both sides
implement the format independently, so the byte layout here is frozen and
covered by byte-level tests.
"""

from __future__ import annotations

import struct

import numpy as np

_HEADER = struct.Struct("<4sHQH")
_MAGIC = b"SMSY"
_VERSION = 1


class BridgeFormatError(ValueError):
    """A bridge file that cannot be (or was not) written by this format."""


def write_symbols(symbols: np.ndarray, path: str) -> None:
    """Write complex symbols as float32 I/Q pairs.

    Values pass through float32; feed float32-representable symbols when a
    bit-exact round trip matters.
    """
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    body = np.empty(2 * symbols.size, dtype="<f4")
    body[0::2] = symbols.real.astype("<f4")
    body[1::2] = symbols.imag.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, symbols.size, 0))
        fh.write(body.tobytes())


def read_symbols(path: str) -> np.ndarray:
    """Read a bridge file back to complex128 (exact float32 values)."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise BridgeFormatError("file too short for a bridge header")
        magic, version, count, _reserved = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise BridgeFormatError(f"bad magic {magic!r}")
        if version != _VERSION:
            raise BridgeFormatError(f"unsupported bridge version {version}")
        body = fh.read()
    if len(body) != 8 * count:
        raise BridgeFormatError(f"body holds {len(body)} bytes, header promised {8 * count}")
    flat = np.frombuffer(body, dtype="<f4").astype(np.float64)
    return flat[0::2] + 1j * flat[1::2]
