"""Container round-trips and every failure mode the reader must catch."""

import struct

import numpy as np
import pytest

from falcon.chunkfile import MAGIC, ChunkFileError, ChunkReader, ChunkWriter


def _write_sample(path):
    rng = np.random.default_rng(0)
    arrays = {
        "f64": rng.normal(size=(7, 3)),
        "u8": rng.integers(0, 255, size=(4, 4, 3)).astype(np.uint8),
        "i32": rng.integers(-5, 5, size=11).astype(np.int32),
    }
    with ChunkWriter(path, kind="episode", version=3, meta={"seed": 9}) as w:
        for name, arr in arrays.items():
            w.add_array(name, arr)
        w.add("blob", b"\x00\x01\x02tail")
        w.add_json("idx", {"n": 3})
    return arrays


def test_round_trip_bit_exact(tmp_path):
    path = tmp_path / "a.ep"
    arrays = _write_sample(path)
    r = ChunkReader(path, expect_kind="episode")
    assert r.version == 3 and r.meta == {"seed": 9}
    for name, arr in arrays.items():
        got = r.array(name)
        assert got.dtype == arr.dtype
        assert np.array_equal(got, arr)
    assert r.raw("blob") == b"\x00\x01\x02tail"
    assert r.json("idx") == {"n": 3}


def test_rewrite_is_byte_identical(tmp_path):
    p1, p2 = tmp_path / "a.ep", tmp_path / "b.ep"
    _write_sample(p1)
    _write_sample(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_truncation_by_one_byte_rejected(tmp_path):
    path = tmp_path / "a.ep"
    _write_sample(path)
    blob = path.read_bytes()
    for cut in (1, 5, len(blob) // 2):
        bad = tmp_path / f"cut{cut}.ep"
        bad.write_bytes(blob[:-cut])
        with pytest.raises(ChunkFileError):
            ChunkReader(bad)


def test_flipped_byte_fails_crc(tmp_path):
    path = tmp_path / "a.ep"
    _write_sample(path)
    blob = bytearray(path.read_bytes())
    # flip one payload byte well inside the first array chunk
    blob[60] ^= 0xFF
    bad = tmp_path / "bad.ep"
    bad.write_bytes(bytes(blob))
    with pytest.raises(ChunkFileError, match="CRC|marker|truncated|header"):
        ChunkReader(bad)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "a.ep"
    _write_sample(path)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"ZZZZ"
    path.write_bytes(bytes(blob))
    with pytest.raises(ChunkFileError, match="magic"):
        ChunkReader(path)


def test_unsupported_container_version(tmp_path):
    path = tmp_path / "a.ep"
    _write_sample(path)
    blob = bytearray(path.read_bytes())
    blob[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(blob))
    with pytest.raises(ChunkFileError, match="version"):
        ChunkReader(path)


def test_trailing_garbage_rejected(tmp_path):
    path = tmp_path / "a.ep"
    _write_sample(path)
    path.write_bytes(path.read_bytes() + b"x")
    with pytest.raises(ChunkFileError, match="trailing"):
        ChunkReader(path)


def test_wrong_kind_rejected(tmp_path):
    path = tmp_path / "a.ep"
    _write_sample(path)
    with pytest.raises(ChunkFileError, match="kind"):
        ChunkReader(path, expect_kind="checkpoint")


def test_duplicate_chunk_name_rejected(tmp_path):
    path = tmp_path / "a.ep"
    w = ChunkWriter(path, kind="episode", version=1)
    w.add("x", b"1")
    with pytest.raises(ChunkFileError, match="duplicate"):
        w.add("x", b"2")
    w.close()


def test_missing_chunk_named_in_error(tmp_path):
    path = tmp_path / "a.ep"
    _write_sample(path)
    r = ChunkReader(path)
    with pytest.raises(ChunkFileError, match="nope"):
        r.raw("nope")
