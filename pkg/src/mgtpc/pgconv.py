"""Eight-branch prior-guided convolution and its merged re-parameterization.

Branches: vanilla 3x3, pointwise 1x1, asymmetric 1x3 / 3x1, and four
difference branches (central / angular / horizontal / vertical) whose
equivalent 3x3 kernels are high-pass (elements sum to zero).  All branches
collapse into a single 3x3 kernel by positional summation, and running the
merged kernel equals summing the branch outputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .tensor_core import ConvWeights, conv2d

BRANCHES = ("vanilla3x3", "conv1x1", "aconv_h", "aconv_v", "cdc", "adc", "hdc", "vdc")

# 3x3 ring positions clockwise starting top-left.
RING = ((0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0))

# Positions with a right neighbor (for HDC) and a down neighbor (for VDC).
HDC_POSITIONS = tuple((r, c) for r in range(3) for c in range(2))
VDC_POSITIONS = tuple((r, c) for r in range(2) for c in range(3))


@dataclass(frozen=True)
class PGConvWeights:
    """Per-branch weights; disabled branches contribute nothing to the merge.

    Shapes (out = out_ch, inp = in_ch):
      vanilla3x3 (out, inp, 3, 3); conv1x1 (out, inp, 1, 1);
      aconv_h (out, inp, 1, 3); aconv_v (out, inp, 3, 1);
      cdc (out, inp, 3, 3); adc (out, inp, 8); hdc (out, inp, 6);
      vdc (out, inp, 6).  One bias vector (out,) per branch.
    """

    branches: dict  # name -> (weights, bias) float32 arrays
    enabled: frozenset = frozenset(BRANCHES)

    def __post_init__(self):
        unknown = set(self.branches) - set(BRANCHES)
        if unknown:
            raise ContractViolation(f"unknown branch names: {sorted(unknown)}")
        if not {"vanilla3x3", "conv1x1"} <= set(self.enabled):
            raise ContractViolation("vanilla3x3 and conv1x1 branches must stay enabled")
        missing = set(self.enabled) - set(self.branches)
        if missing:
            raise ContractViolation(f"enabled branches missing weights: {sorted(missing)}")
        shapes = {
            "vanilla3x3": (3, 3), "conv1x1": (1, 1), "aconv_h": (1, 3),
            "aconv_v": (3, 1), "cdc": (3, 3), "adc": (8,), "hdc": (6,), "vdc": (6,),
        }
        out_ch, in_ch = self.shape
        conv = {}
        for name, (w, b) in self.branches.items():
            w = np.ascontiguousarray(w, dtype=np.float32)
            b = np.ascontiguousarray(b, dtype=np.float32)
            want = (out_ch, in_ch) + shapes[name]
            if w.shape != want:
                raise ContractViolation(
                    f"branch {name}: expected shape {want}, got {w.shape}")
            if b.shape != (out_ch,):
                raise ContractViolation(f"branch {name}: bad bias shape {b.shape}")
            conv[name] = (w, b)
        object.__setattr__(self, "branches", conv)
        object.__setattr__(self, "enabled", frozenset(self.enabled))

    @property
    def shape(self):
        w = self.branches["vanilla3x3"][0]
        return w.shape[0], w.shape[1]

    @property
    def out_ch(self) -> int:
        return self.shape[0]

    @property
    def in_ch(self) -> int:
        return self.shape[1]


@dataclass(frozen=True)
class MergedKernel:
    """Single 3x3 equivalent of the enabled branches.

    Kept at float64 construction precision: rounding the merged kernel to
    float32 puts merged-vs-parallel drift far above the 1e-5 contract near
    output cancellation points.
    """

    kernel: np.ndarray  # (out_ch, in_ch, 3, 3) float64
    bias: np.ndarray    # (out_ch,) float64

    def as_conv(self) -> ConvWeights:
        return ConvWeights(self.kernel, self.bias, stride=1, padding=1)


def equiv_kernel_cdc(w: np.ndarray) -> np.ndarray:
    """Central difference: off-center taps kept, center replaced so the
    kernel sums to zero.  Computed in float64."""
    w = np.asarray(w, dtype=np.float64)
    k = w.copy()
    # center = w_c - sum(w) == -(sum of off-center taps); the latter form
    # cancels w_c exactly and keeps the element sum at exactly 0.
    off = w.copy()
    off[..., 1, 1] = 0.0
    k[..., 1, 1] = -off.sum(axis=(-2, -1))
    return k


def equiv_kernel_adc(w: np.ndarray) -> np.ndarray:
    """Angular difference: clockwise first differences on the 3x3 ring."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != 8:
        raise ContractViolation(f"adc expects 8 ring weights, got {w.shape[-1]}")
    k = np.zeros(w.shape[:-1] + (3, 3), dtype=np.float64)
    for i, (r, c) in enumerate(RING):
        k[..., r, c] = w[..., i] - w[..., i - 1]
    return k


def equiv_kernel_hdc(w: np.ndarray) -> np.ndarray:
    """Horizontal difference: each weighted (p, p+right) pair contributes
    +w at p and -w at the right neighbor."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != 6:
        raise ContractViolation(f"hdc expects 6 pair weights, got {w.shape[-1]}")
    k = np.zeros(w.shape[:-1] + (3, 3), dtype=np.float64)
    for i, (r, c) in enumerate(HDC_POSITIONS):
        k[..., r, c] += w[..., i]
        k[..., r, c + 1] -= w[..., i]
    return k


def equiv_kernel_vdc(w: np.ndarray) -> np.ndarray:
    """Vertical difference: down-neighbor analogue of :func:`equiv_kernel_hdc`."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != 6:
        raise ContractViolation(f"vdc expects 6 pair weights, got {w.shape[-1]}")
    k = np.zeros(w.shape[:-1] + (3, 3), dtype=np.float64)
    for i, (r, c) in enumerate(VDC_POSITIONS):
        k[..., r, c] += w[..., i]
        k[..., r + 1, c] -= w[..., i]
    return k


def _embedded_3x3(name: str, w: np.ndarray) -> np.ndarray:
    """3x3-equivalent of one branch's raw weights, float64."""
    w64 = np.asarray(w, dtype=np.float64)
    out_ch, in_ch = w64.shape[0], w64.shape[1]
    if name == "vanilla3x3":
        return w64
    if name == "conv1x1":
        k = np.zeros((out_ch, in_ch, 3, 3), dtype=np.float64)
        k[..., 1, 1] = w64[..., 0, 0]
        return k
    if name == "aconv_h":
        k = np.zeros((out_ch, in_ch, 3, 3), dtype=np.float64)
        k[..., 1, :] = w64[..., 0, :]
        return k
    if name == "aconv_v":
        k = np.zeros((out_ch, in_ch, 3, 3), dtype=np.float64)
        k[..., :, 1] = w64[..., :, 0]
        return k
    if name == "cdc":
        return equiv_kernel_cdc(w64)
    if name == "adc":
        return equiv_kernel_adc(w64)
    if name == "hdc":
        return equiv_kernel_hdc(w64)
    if name == "vdc":
        return equiv_kernel_vdc(w64)
    raise ContractViolation(f"unknown branch {name}")


def branch_conv_weights(name: str, w: np.ndarray, b: np.ndarray) -> ConvWeights:
    """Standalone ConvWeights for one branch (always a padded 3x3 conv)."""
    k = _embedded_3x3(name, w)
    return ConvWeights(k, np.asarray(b, dtype=np.float64), stride=1, padding=1)


def merge(weights: PGConvWeights) -> MergedKernel:
    """Positional sum of all enabled branches' 3x3-equivalent kernels."""
    out_ch, in_ch = weights.shape
    acc = np.zeros((out_ch, in_ch, 3, 3), dtype=np.float64)
    bias = np.zeros(out_ch, dtype=np.float64)
    for name in BRANCHES:
        if name not in weights.enabled:
            continue
        w, b = weights.branches[name]
        acc += _embedded_3x3(name, w)
        bias += np.asarray(b, dtype=np.float64)
    return MergedKernel(acc, bias)


def pgconv_forward(x: np.ndarray, weights: PGConvWeights,
                   mode: str = "merged") -> np.ndarray:
    """Run the block either as one merged conv or as summed parallel branches."""
    if mode == "merged":
        return conv2d(x, merge(weights).as_conv())
    if mode != "parallel":
        raise ContractViolation(f"mode must be 'parallel' or 'merged', got {mode!r}")
    out = None
    for name in BRANCHES:
        if name not in weights.enabled:
            continue
        w, b = weights.branches[name]
        # keep the branch outputs in float64 until the final sum so the
        # parallel path agrees with the merged kernel to rounding error
        y = conv2d(x, branch_conv_weights(name, w, b), out_dtype=np.float64)
        out = y if out is None else out + y
    return out.astype(np.float32)
