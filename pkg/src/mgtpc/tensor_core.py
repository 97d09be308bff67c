"""Dense NCHW tensor kernels: convolution, pixel shuffle, norm, activations.

Activations and feature maps are float32 arrays in (n, c, h, w) layout.
Per-element reductions accumulate in float64 and the result is stored back
as float32, which keeps repeated runs bit-identical.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .parallel import run_chunks


def check_nchw(x: np.ndarray, name: str = "input") -> np.ndarray:
    if x.ndim != 4:
        raise ContractViolation(f"{name} must be 4-D NCHW, got ndim={x.ndim}")
    return x


@dataclass(frozen=True)
class ConvWeights:
    """Weights of one 2-D convolution (cross-correlation convention)."""

    kernel: np.ndarray  # (out_ch, in_ch // groups, kh, kw), float32
    bias: np.ndarray    # (out_ch,), float32
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    groups: int = 1

    def __post_init__(self):
        k = self.kernel
        if k.ndim != 4:
            raise ContractViolation(f"kernel must be 4-D, got ndim={k.ndim}")
        out_ch = k.shape[0]
        if self.bias.shape != (out_ch,):
            raise ContractViolation(
                f"bias shape {self.bias.shape} does not match out_ch={out_ch}")
        if out_ch % self.groups != 0:
            raise ContractViolation(
                f"out_ch={out_ch} not divisible by groups={self.groups}")
        if min(k.shape[2], k.shape[3]) < 1:
            raise ContractViolation(f"kernel spatial dims must be >= 1, got {k.shape[2:]}")
        if self.stride < 1 or self.dilation < 1:
            raise ContractViolation("stride and dilation must be >= 1")
        # float64 kernels are allowed so merged re-parameterized kernels can
        # keep construction precision; everything else is float32
        kdt = np.float64 if k.dtype == np.float64 else np.float32
        bdt = np.float64 if self.bias.dtype == np.float64 else np.float32
        object.__setattr__(self, "kernel", np.ascontiguousarray(k, dtype=kdt))
        object.__setattr__(self, "bias", np.ascontiguousarray(self.bias, dtype=bdt))

    @property
    def out_ch(self) -> int:
        return self.kernel.shape[0]

    @property
    def in_ch(self) -> int:
        return self.kernel.shape[1] * self.groups


def conv_out_size(size: int, k: int, stride: int, padding: int, dilation: int) -> int:
    eff = (k - 1) * dilation + 1
    return (size + 2 * padding - eff) // stride + 1


def conv2d(x: np.ndarray, w: ConvWeights, out_dtype=np.float32) -> np.ndarray:
    """2-D cross-correlation with zero padding.

    Output element (n, o, i, j) is the float64 dot product of the kernel
    with the corresponding input patch, cast back to ``out_dtype``.
    """
    check_nchw(x)
    n, c, h, wd = x.shape
    if c != w.in_ch:
        raise ContractViolation(
            f"input has {c} channels but weights expect in_ch={w.in_ch}")
    kh, kw = w.kernel.shape[2], w.kernel.shape[3]
    ho = conv_out_size(h, kh, w.stride, w.padding, w.dilation)
    wo = conv_out_size(wd, kw, w.stride, w.padding, w.dilation)
    if ho < 1 or wo < 1:
        raise ContractViolation(
            f"spatial dims {h}x{wd} admit no output position for kernel "
            f"{kh}x{kw} stride={w.stride} padding={w.padding} dilation={w.dilation}")

    p = w.padding
    if p:
        xp = np.zeros((n, c, h + 2 * p, wd + 2 * p), dtype=np.float64)
        xp[:, :, p:p + h, p:p + wd] = x
    else:
        xp = np.asarray(x, dtype=np.float64)

    eff_h = (kh - 1) * w.dilation + 1
    eff_w = (kw - 1) * w.dilation + 1
    win = np.lib.stride_tricks.sliding_window_view(xp, (eff_h, eff_w), axis=(2, 3))
    # (n, c, ho, wo, kh, kw) after stride / dilation subsampling
    win = win[:, :, ::w.stride, ::w.stride, ::w.dilation, ::w.dilation]
    win = win[:, :, :ho, :wo]

    cg = c // w.groups
    og = w.out_ch // w.groups
    out = np.empty((n, w.out_ch, ho, wo), dtype=out_dtype)
    kern = np.asarray(w.kernel, dtype=np.float64)
    bias = np.asarray(w.bias, dtype=np.float64)
    for g in range(w.groups):
        patches = win[:, g * cg:(g + 1) * cg]                      # n, cg, ho, wo, kh, kw
        patches = patches.transpose(0, 2, 3, 1, 4, 5)
        patches = np.ascontiguousarray(patches).reshape(n * ho * wo, cg * kh * kw)
        wmat = kern[g * og:(g + 1) * og].reshape(og, cg * kh * kw).T
        res = np.empty((n * ho * wo, og), dtype=np.float64)

        def gemm(s, e, patches=patches, wmat=wmat, res=res):
            np.matmul(patches[s:e], wmat, out=res[s:e])

        run_chunks(gemm, n * ho * wo)
        res += bias[g * og:(g + 1) * og]
        out[:, g * og:(g + 1) * og] = (
            res.reshape(n, ho, wo, og).transpose(0, 3, 1, 2).astype(out_dtype))
    return out


def pixel_shuffle(x: np.ndarray, r: int) -> np.ndarray:
    """Rearrange (n, c*r^2, h, w) -> (n, c, h*r, w*r)."""
    check_nchw(x)
    n, c, h, w = x.shape
    if c % (r * r) != 0:
        raise ContractViolation(f"channels={c} not divisible by r^2={r * r}")
    co = c // (r * r)
    y = x.reshape(n, co, r, r, h, w)
    y = y.transpose(0, 1, 4, 2, 5, 3)
    return np.ascontiguousarray(y.reshape(n, co, h * r, w * r))


def pixel_unshuffle(x: np.ndarray, r: int) -> np.ndarray:
    """Exact inverse of :func:`pixel_shuffle`."""
    check_nchw(x)
    n, c, h, w = x.shape
    if h % r or w % r:
        raise ContractViolation(f"spatial dims {h}x{w} not divisible by r={r}")
    y = x.reshape(n, c, h // r, r, w // r, r)
    y = y.transpose(0, 1, 3, 5, 2, 4)
    return np.ascontiguousarray(y.reshape(n, c * r * r, h // r, w // r))


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
               eps: float = 1e-6) -> np.ndarray:
    """Normalize each spatial position's channel vector, then affine."""
    check_nchw(x)
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ContractViolation(
            f"gamma/beta must have length {c}, got {gamma.shape}/{beta.shape}")
    x64 = np.asarray(x, dtype=np.float64)
    mean = x64.mean(axis=1, keepdims=True)
    var = np.square(x64 - mean).mean(axis=1, keepdims=True)
    y = (x64 - mean) / np.sqrt(var + eps)
    y = y * gamma.astype(np.float64)[None, :, None, None]
    y = y + beta.astype(np.float64)[None, :, None, None]
    return y.astype(np.float32)


def mish(x: np.ndarray) -> np.ndarray:
    """x * tanh(softplus(x)), overflow-safe for large |x|."""
    x64 = np.asarray(x, dtype=np.float64)
    sp = np.logaddexp(0.0, x64)
    return (x64 * np.tanh(sp)).astype(np.float32)


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a 2-D slice with max-subtraction stability."""
    if x.ndim != 2:
        raise ContractViolation(f"softmax_rows expects a 2-D slice, got ndim={x.ndim}")
    x64 = np.asarray(x, dtype=np.float64)
    e = np.exp(x64 - x64.max(axis=1, keepdims=True))
    return (e / e.sum(axis=1, keepdims=True)).astype(x.dtype if x.dtype.kind == "f" else np.float64)
