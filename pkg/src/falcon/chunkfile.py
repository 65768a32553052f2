"""Little-endian chunked binary container with a JSON header and per-chunk
CRC32 integrity, used for episode files and policy checkpoints.

Layout:

    magic b"FCF1"
    u32   container version (currently 1)
    u32   header length, then UTF-8 JSON: {"kind", "version", "meta"}
    per chunk:
        u8  0x43 ('C') | u32 name_len | name | u64 payload_len | payload
        u32 crc32(payload)
    end record:
        u8  0x45 ('E') | u32 chunk_count | u64 total payload bytes

The chunk stream is append-friendly while recording; the end record makes
truncation detectable. Every read validates magic, version, CRCs, the end
record and the absence of trailing bytes, and raises ``ChunkFileError``
with the failing offset otherwise.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from pathlib import Path

import numpy as np

__all__ = ["ChunkFileError", "ChunkWriter", "ChunkReader", "MAGIC", "CONTAINER_VERSION"]

MAGIC = b"FCF1"
CONTAINER_VERSION = 1
_CHUNK_MARK = 0x43
_END_MARK = 0x45


class ChunkFileError(IOError):
    """Malformed, corrupt or truncated chunk file."""


class ChunkWriter:
    def __init__(self, path, kind: str, version: int, meta: dict | None = None):
        self._path = Path(path)
        self._fh = open(self._path, "wb")
        self._count = 0
        self._payload_bytes = 0
        self._names = set()
        header = json.dumps(
            {"kind": kind, "version": version, "meta": meta or {}},
            sort_keys=True).encode()
        self._fh.write(MAGIC)
        self._fh.write(struct.pack("<I", CONTAINER_VERSION))
        self._fh.write(struct.pack("<I", len(header)))
        self._fh.write(header)

    def add(self, name: str, payload: bytes) -> None:
        if name in self._names:
            raise ChunkFileError(f"duplicate chunk name {name!r}")
        self._names.add(name)
        raw = bytes(payload)
        nb = name.encode()
        self._fh.write(struct.pack("<BI", _CHUNK_MARK, len(nb)))
        self._fh.write(nb)
        self._fh.write(struct.pack("<Q", len(raw)))
        self._fh.write(raw)
        self._fh.write(struct.pack("<I", zlib.crc32(raw) & 0xFFFFFFFF))
        self._count += 1
        self._payload_bytes += len(raw)

    def add_array(self, name: str, arr: np.ndarray) -> None:
        buf = io.BytesIO()
        np.save(buf, np.ascontiguousarray(arr), allow_pickle=False)
        self.add(name, buf.getvalue())

    def add_json(self, name: str, obj) -> None:
        self.add(name, json.dumps(obj, sort_keys=True).encode())

    def close(self) -> None:
        if self._fh is None:
            return
        self._fh.write(struct.pack("<BIQ", _END_MARK, self._count, self._payload_bytes))
        self._fh.close()
        self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ChunkReader:
    """Reads and fully validates a chunk file into memory."""

    def __init__(self, path, expect_kind: str | None = None):
        self._path = Path(path)
        blob = self._path.read_bytes()
        self.kind, self.version, self.meta, self.chunks = self._parse(blob)
        if expect_kind is not None and self.kind != expect_kind:
            raise ChunkFileError(
                f"{self._path}: expected kind {expect_kind!r}, found {self.kind!r}")

    def _parse(self, blob: bytes):
        off = 0

        def take(n: int, what: str) -> bytes:
            nonlocal off
            if off + n > len(blob):
                raise ChunkFileError(
                    f"{self._path}: truncated while reading {what} at byte {off}")
            out = blob[off:off + n]
            off += n
            return out

        if take(4, "magic") != MAGIC:
            raise ChunkFileError(f"{self._path}: bad magic, not a chunk file")
        (cver,) = struct.unpack("<I", take(4, "container version"))
        if cver != CONTAINER_VERSION:
            raise ChunkFileError(f"{self._path}: unsupported container version {cver}")
        (hlen,) = struct.unpack("<I", take(4, "header length"))
        try:
            header = json.loads(take(hlen, "header"))
        except ValueError as exc:
            raise ChunkFileError(f"{self._path}: malformed header JSON: {exc}") from None
        chunks = {}
        count = 0
        payload_bytes = 0
        while True:
            (mark,) = struct.unpack("<B", take(1, "chunk marker"))
            if mark == _END_MARK:
                n, total = struct.unpack("<IQ", take(12, "end record"))
                if n != count or total != payload_bytes:
                    raise ChunkFileError(
                        f"{self._path}: end record mismatch "
                        f"(saw {count} chunks/{payload_bytes} bytes, "
                        f"recorded {n}/{total})")
                if off != len(blob):
                    raise ChunkFileError(
                        f"{self._path}: {len(blob) - off} trailing byte(s) after end record")
                break
            if mark != _CHUNK_MARK:
                raise ChunkFileError(f"{self._path}: bad chunk marker at byte {off - 1}")
            (nlen,) = struct.unpack("<I", take(4, "chunk name length"))
            name = take(nlen, "chunk name").decode()
            (plen,) = struct.unpack("<Q", take(8, f"chunk {name!r} length"))
            payload = take(plen, f"chunk {name!r} payload")
            (crc,) = struct.unpack("<I", take(4, f"chunk {name!r} crc"))
            if zlib.crc32(payload) & 0xFFFFFFFF != crc:
                raise ChunkFileError(
                    f"{self._path}: chunk {name!r} failed CRC check at byte {off}")
            if name in chunks:
                raise ChunkFileError(f"{self._path}: duplicate chunk name {name!r}")
            chunks[name] = payload
            count += 1
            payload_bytes += plen
        return header["kind"], header["version"], header.get("meta", {}), chunks

    def __contains__(self, name: str) -> bool:
        return name in self.chunks

    def raw(self, name: str) -> bytes:
        try:
            return self.chunks[name]
        except KeyError:
            raise ChunkFileError(f"{self._path}: missing chunk {name!r}") from None

    def array(self, name: str) -> np.ndarray:
        return np.load(io.BytesIO(self.raw(name)), allow_pickle=False)

    def json(self, name: str):
        return json.loads(self.raw(name))
