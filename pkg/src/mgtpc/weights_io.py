"""Seeded parameter initialization and the checksummed weight container.

File layout (little-endian): magic "MGTW", version u8, config_id u8,
seed u64, entry count u32, then per entry a u16-length UTF-8 name, rank u8,
dims u32[rank], raw float32 payload; finally CRC32 over all prior bytes.
"""

import struct
import zlib

import numpy as np

from .config import CodecConfig, by_id
from .errors import WeightFileError
from .transforms import param_registry

MAGIC = b"MGTW"
VERSION = 1


def init_weights(cfg: CodecConfig, seed: int) -> dict:
    """Deterministic parameter set: conv kernels ~ U(-b, b], b = sqrt(6/fan_in);
    biases and position tables 0; LN gains 1; tau = sqrt(qk head dim);
    factorized sigmas 1.  Draw order is the registry definition order."""
    rng = np.random.Generator(np.random.PCG64(seed))
    params = {}
    for name, shape, kind in param_registry(cfg):
        if kind == "conv":
            fan_in = int(np.prod(shape[1:]))
            b = np.sqrt(6.0 / fan_in)
            u = rng.random(int(np.prod(shape)))
            arr = (b * (1.0 - 2.0 * u)).astype(np.float32).reshape(shape)
        elif kind == "zero":
            arr = np.zeros(shape, dtype=np.float32)
        elif kind == "one":
            arr = np.ones(shape, dtype=np.float32)
        elif kind == "tau":
            dqk = (cfg.embed_dim // 4) // cfg.heads
            arr = np.full(shape, np.sqrt(dqk), dtype=np.float32)
        elif kind == "sigma":
            arr = np.ones(shape, dtype=np.float32)
        else:
            raise WeightFileError(f"unknown init kind {kind!r} for {name}")
        params[name] = arr
    return params


def save(params: dict, cfg: CodecConfig, seed: int = 0) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<BBQ", VERSION, cfg.config_id, seed)
    out += struct.pack("<I", len(params))
    for name, arr in params.items():
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb)) + nb
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.astype("<f4").tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


def load(data: bytes) -> tuple:
    """Returns (params dict, config, seed); validates magic, CRC, and shapes."""
    if len(data) < 22:
        raise WeightFileError("weight file too short")
    if data[:4] != MAGIC:
        raise WeightFileError(f"bad magic {data[:4]!r}")
    stored_crc = struct.unpack_from("<I", data, len(data) - 4)[0]
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise WeightFileError("CRC mismatch: weight file is corrupt")
    version, config_id, seed = struct.unpack_from("<BBQ", data, 4)
    if version != VERSION:
        raise WeightFileError(f"unsupported weight file version {version}")
    cfg = by_id(config_id)
    (count,) = struct.unpack_from("<I", data, 14)
    pos = 18
    params = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + nlen].decode("utf-8")
        pos += nlen
        (rank,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{rank}I", data, pos)
        pos += 4 * rank
        n = int(np.prod(shape)) if rank else 1
        end = pos + 4 * n
        if end > len(data) - 4:
            raise WeightFileError(f"entry {name!r}: payload exceeds file size")
        if name in params:
            raise WeightFileError(f"duplicate entry name {name!r}")
        params[name] = np.frombuffer(
            data[pos:end], dtype="<f4").reshape(shape).astype(np.float32)
        pos += 4 * n
    if pos != len(data) - 4:
        raise WeightFileError("trailing bytes after last entry")
    expected = {name: shape for name, shape, _ in param_registry(cfg)}
    if set(params) != set(expected):
        missing = sorted(set(expected) - set(params))[:3]
        extra = sorted(set(params) - set(expected))[:3]
        raise WeightFileError(
            f"entry names do not match config {cfg.name!r} "
            f"(missing {missing}, unexpected {extra})")
    for name, arr in params.items():
        if tuple(arr.shape) != tuple(expected[name]):
            raise WeightFileError(
                f"entry {name!r}: shape {arr.shape} != expected {expected[name]}")
    return params, cfg, seed


def save_file(path, params, cfg, seed=0):
    with open(path, "wb") as f:
        f.write(save(params, cfg, seed))


def load_file(path):
    with open(path, "rb") as f:
        return load(f.read())
