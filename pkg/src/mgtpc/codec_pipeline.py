"""End-to-end encode / decode orchestration and the bitstream container.

Bitstream layout (little-endian): magic "MGPC", version u8, width u16,
height u16 (original, pre-padding), config_id u8, z_bytes u32, y_bytes u32,
then the two range-coded payloads (hyper-latent first).
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import entropy_model as em
from . import range_coder as rc
from .config import CodecConfig
from .errors import ContractViolation, DecodeError
from .transforms import analysis, hyper_analysis, hyper_synthesis, synthesis

MAGIC = b"MGPC"
VERSION = 1
HEADER_LEN = 4 + 1 + 2 + 2 + 1 + 4 + 4


@dataclass(frozen=True)
class Header:
    width: int
    height: int
    config_id: int
    z_bytes: int
    y_bytes: int

    def pack(self) -> bytes:
        if not (1 <= self.width <= 65535 and 1 <= self.height <= 65535):
            raise ContractViolation(
                f"image dims {self.width}x{self.height} out of header range")
        return MAGIC + struct.pack("<BHHBII", VERSION, self.width, self.height,
                                   self.config_id, self.z_bytes, self.y_bytes)

    @classmethod
    def parse(cls, data: bytes) -> "Header":
        if len(data) < HEADER_LEN:
            raise DecodeError("truncated stream: header incomplete")
        if data[:4] != MAGIC:
            raise DecodeError(f"bad magic {data[:4]!r}")
        version, w, h, cid, zb, yb = struct.unpack_from("<BHHBII", data, 4)
        if version != VERSION:
            raise DecodeError(f"unsupported bitstream version {version}")
        if w < 1 or h < 1:
            raise DecodeError("header declares empty image")
        return cls(width=w, height=h, config_id=cid, z_bytes=zb, y_bytes=yb)


@dataclass(frozen=True)
class RdPoint:
    bpp: float
    psnr: float


def _check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ContractViolation(
            f"expected (H, W, 3) uint8 RGB image, got {img.shape} {img.dtype}")
    return img


def pad_image(img: np.ndarray, multiple: int) -> np.ndarray:
    """Replicate-pad (bottom/right) to the next multiple."""
    h, w = img.shape[:2]
    ph = (multiple - h % multiple) % multiple
    pw = (multiple - w % multiple) % multiple
    if ph == 0 and pw == 0:
        return img
    return np.pad(img, ((0, ph), (0, pw), (0, 0)), mode="edge")


def _to_tensor(img: np.ndarray) -> np.ndarray:
    x = img.astype(np.float32) / np.float32(255.0)
    return np.ascontiguousarray(x.transpose(2, 0, 1)[None])


def _latent_quantize(y, z, params, cfg):
    """Shared encoder/decoder-side conditional model evaluation."""
    q_z, z_hat = em.quantize_st(z, 0.0)
    mu, sigma_raw = hyper_synthesis(z_hat, params, cfg)
    sigma = em.sigma_from_raw(sigma_raw)
    idx_y = em.scale_index(sigma)
    q_y, y_hat = em.quantize_st(y, mu)
    return q_z, z_hat, mu, idx_y, q_y, y_hat


def _z_indices(shape, params, cfg) -> np.ndarray:
    sigma_c = np.clip(params["factorized.sigma"].astype(np.float64),
                      em.SIGMA_MIN, em.SIGMA_MAX)
    idx = em.scale_index(sigma_c)
    return np.broadcast_to(idx[None, :, None, None], shape)


def encode_image(img: np.ndarray, params: dict, cfg: CodecConfig) -> bytes:
    img = _check_image(img)
    h, w = img.shape[:2]
    x = _to_tensor(pad_image(img, cfg.pad_multiple))
    y = analysis(x, params, cfg)
    z = hyper_analysis(y, params, cfg)
    q_z, _, _, idx_y, q_y, _ = _latent_quantize(y, z, params, cfg)
    cdfs = rc.default_cdf_matrix()
    z_payload = rc.encode(q_z, _z_indices(q_z.shape, params, cfg), cdfs)
    y_payload = rc.encode(q_y, idx_y, cdfs)
    header = Header(width=w, height=h, config_id=cfg.config_id,
                    z_bytes=len(z_payload), y_bytes=len(y_payload))
    return header.pack() + z_payload + y_payload


def decode_image(stream: bytes, params: dict, cfg: CodecConfig):
    """Returns (RGB image, stats dict with bpp / bpp_y / bpp_z)."""
    header = Header.parse(stream)
    if header.config_id != cfg.config_id:
        raise DecodeError(
            f"stream was encoded with config id {header.config_id}, "
            f"weights carry id {cfg.config_id}")
    expected = HEADER_LEN + header.z_bytes + header.y_bytes
    if len(stream) != expected:
        raise DecodeError(
            f"truncated stream: expected {expected} bytes, got {len(stream)}")
    pm = cfg.pad_multiple
    ph = ((header.height + pm - 1) // pm) * pm
    pw = ((header.width + pm - 1) // pm) * pm
    z_shape = (1, cfg.hyper_ch, ph // 64, pw // 64)
    y_shape = (1, cfg.latent_ch, ph // 16, pw // 16)

    cdfs = rc.default_cdf_matrix()
    z_payload = stream[HEADER_LEN:HEADER_LEN + header.z_bytes]
    y_payload = stream[HEADER_LEN + header.z_bytes:]
    q_z = rc.decode(z_payload, _z_indices(z_shape, params, cfg), cdfs,
                    int(np.prod(z_shape))).reshape(z_shape)
    z_hat = q_z.astype(np.float32)
    mu, sigma_raw = hyper_synthesis(z_hat, params, cfg)
    idx_y = em.scale_index(em.sigma_from_raw(sigma_raw))
    q_y = rc.decode(y_payload, idx_y, cdfs,
                    int(np.prod(y_shape))).reshape(y_shape)
    y_hat = (q_y + mu.astype(np.float64)).astype(np.float32)
    x_hat = synthesis(y_hat, params, cfg)
    img = np.clip(x_hat[0].transpose(1, 2, 0).astype(np.float64), 0.0, 1.0)
    img = np.round(img * 255.0).astype(np.uint8)
    img = img[:header.height, :header.width]
    n_px = header.width * header.height
    stats = {
        "bpp": 8.0 * len(stream) / n_px,
        "bpp_y": 8.0 * header.y_bytes / n_px,
        "bpp_z": 8.0 * header.z_bytes / n_px,
    }
    return img, stats


def estimate_rate(img: np.ndarray, params: dict, cfg: CodecConfig):
    """Model-based (bpp_y, bpp_z) over the original pixel count.

    Probabilities come from the quantized coding tables (not the continuous
    Gaussian), so the estimate tracks the range coder to within its small
    per-stream overhead.
    """
    img = _check_image(img)
    h, w = img.shape[:2]
    x = _to_tensor(pad_image(img, cfg.pad_multiple))
    y = analysis(x, params, cfg)
    z = hyper_analysis(y, params, cfg)
    q_z, _, _, idx_y, q_y, _ = _latent_quantize(y, z, params, cfg)
    freq = np.diff(rc.default_cdf_matrix(), axis=1)
    p_y = freq[idx_y, q_y - em.SYMBOL_MIN] / rc.TOTAL
    idx_z = _z_indices(q_z.shape, params, cfg)
    p_z = freq[idx_z, q_z - em.SYMBOL_MIN] / rc.TOTAL
    return em.rate_estimate(p_y, h * w), em.rate_estimate(p_z, h * w)


def simulate_rd_point(img: np.ndarray, params: dict, cfg: CodecConfig,
                      lam: float):
    """In-memory encode + decode; returns (RdPoint, loss)."""
    from .metrics import psnr

    img = _check_image(img)
    stream = encode_image(img, params, cfg)
    rec, stats = decode_image(stream, params, cfg)
    loss = em.rd_loss(img.astype(np.float64), rec.astype(np.float64),
                      stats["bpp_y"], stats["bpp_z"], lam)
    return RdPoint(bpp=stats["bpp"], psnr=psnr(img, rec)), loss


# ------------------------------------------------------------------ PPM I/O

def read_ppm(path) -> np.ndarray:
    """Binary PPM (P6, maxval 255) -> (H, W, 3) uint8."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P6"):
        raise ContractViolation(f"{path}: not a binary PPM (P6) file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ContractViolation(f"{path}: only maxval 255 supported, got {maxval}")
    need = w * h * 3
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise ContractViolation(f"{path}: truncated pixel data")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3)


def write_ppm(path, img: np.ndarray) -> None:
    img = _check_image(img)
    h, w = img.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(np.ascontiguousarray(img).tobytes())
