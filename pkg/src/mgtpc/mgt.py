"""Multi-scale gated transformer block.

Two dilated-window attention branches with different dilation rates are
cross-gated by elementwise product (MGMSA); the feed-forward half (MGFN)
cross-gates a 3x3 and a 5x5 depth-wise path through Mish.  With dilation 1
a branch reduces to plain shifted-window attention; with gating disabled
the block degenerates to a Swin-style transformer block.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .tensor_core import ConvWeights, conv2d, layer_norm, mish, softmax_rows


@dataclass(frozen=True)
class MgtConfig:
    embed_dim: int               # C, divisible by 4
    window: int = 8              # P
    dilations: tuple = (1, 2)
    heads: int = 8               # per attention branch
    gated: bool = True           # False: drop branch 2 / path 2 entirely
    multi_scale: bool = True     # False: d1 = d2 = 1 and both DWConvs 3x3

    def __post_init__(self):
        c = self.embed_dim
        if c % 4 != 0:
            raise ContractViolation(f"embed_dim={c} must be divisible by 4")
        if (c // 4) % self.heads != 0 or c % self.heads != 0:
            raise ContractViolation(
                f"heads={self.heads} must divide qk width {c // 4} and v width {c}")
        if self.multi_scale and self.dilations[0] == self.dilations[1]:
            raise ContractViolation("multi-scale branches need different dilation rates")

    @property
    def branch_dilations(self) -> tuple:
        return self.dilations if self.multi_scale else (1, 1)

    @property
    def qk_branch(self) -> int:
        return self.embed_dim // 4

    @property
    def v_branch(self) -> int:
        return self.embed_dim

    @property
    def shift_size(self) -> int:
        return self.window // 2


@dataclass(frozen=True)
class MgtWeights:
    """Flat parameter bundle for one block (see mgt_params for shapes)."""

    ln1_gamma: np.ndarray
    ln1_beta: np.ndarray
    qkv: ConvWeights          # 1x1, C -> 3C laid out [q1 q2 k1 k2 v1 v2]
    tau: np.ndarray           # (2, heads)
    relpos: np.ndarray        # (2, heads, (2P-1)^2)
    attn_proj: ConvWeights    # 1x1, C -> C
    ln2_gamma: np.ndarray
    ln2_beta: np.ndarray
    ff_expand1: ConvWeights   # 1x1, C -> 2C
    ff_expand2: ConvWeights   # 1x1, C -> 2C
    ff_dw1: ConvWeights       # depthwise 3x3 on 2C
    ff_dw2: ConvWeights       # depthwise 5x5 on 2C (3x3 when multi_scale off)
    ff_contract: ConvWeights  # 1x1, 2C -> C


def relative_index(p: int) -> np.ndarray:
    """(P^2, P^2) lookup into a (2P-1)^2 relative-position table."""
    coords = np.stack(np.meshgrid(np.arange(p), np.arange(p), indexing="ij"), axis=-1)
    coords = coords.reshape(-1, 2)
    rel = coords[:, None, :] - coords[None, :, :] + (p - 1)
    return rel[..., 0] * (2 * p - 1) + rel[..., 1]


def dilated_window_gather(x: np.ndarray, p: int, d: int, shift: int = 0):
    """Partition NCHW features into dilated windows of P^2 tokens.

    Tokens whose coordinates agree modulo d form d^2 sub-lattices; each
    sub-lattice is split into PxP windows.  A nonzero shift cyclically
    rolls the features by shift*d pixels first.  Returns the window batch
    (num_windows, P^2, C) and the metadata needed by the inverse scatter.
    """
    n, c, h, w = x.shape
    if h % (p * d) or w % (p * d):
        raise ContractViolation(
            f"spatial dims {h}x{w} must be divisible by P*d={p * d}")
    if shift:
        x = np.roll(x, (-shift * d, -shift * d), axis=(2, 3))
    hd, wd = h // d, w // d
    nh, nw = hd // p, wd // p
    y = x.reshape(n, c, hd, d, wd, d)
    y = y.transpose(0, 3, 5, 1, 2, 4)                 # n, d, d, c, hd, wd
    y = y.reshape(n, d, d, c, nh, p, nw, p)
    y = y.transpose(0, 1, 2, 4, 6, 5, 7, 3)           # n, d, d, nh, nw, p, p, c
    win = np.ascontiguousarray(y).reshape(n * d * d * nh * nw, p * p, c)
    meta = (n, c, h, w, p, d, shift)
    return win, meta


def window_scatter(win: np.ndarray, meta) -> np.ndarray:
    """Exact inverse of :func:`dilated_window_gather` (channel count may differ)."""
    n, _, h, w, p, d, shift = meta
    c = win.shape[2]
    hd, wd = h // d, w // d
    nh, nw = hd // p, wd // p
    y = win.reshape(n, d, d, nh, nw, p, p, c)
    y = y.transpose(0, 1, 2, 7, 3, 5, 4, 6)           # n, d, d, c, nh, p, nw, p
    y = y.reshape(n, d, d, c, hd, wd)
    y = y.transpose(0, 3, 4, 1, 5, 2)                 # n, c, hd, d, wd, d
    x = np.ascontiguousarray(y).reshape(n, c, h, w)
    if shift:
        x = np.roll(x, (shift * d, shift * d), axis=(2, 3))
    return x


def window_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray,
                     tau: np.ndarray, bias_table: np.ndarray,
                     rel_idx: np.ndarray, heads: int) -> np.ndarray:
    """Multi-head attention inside gathered windows.

    q, k: (nw, P^2, c_qk); v: (nw, P^2, c_v); tau: (heads,);
    bias_table: (heads, (2P-1)^2).  Returns (nw, P^2, c_v).
    """
    nw, p2, cqk = q.shape
    dq = cqk // heads
    dv = v.shape[2] // heads
    qh = q.reshape(nw, p2, heads, dq).transpose(0, 2, 1, 3).astype(np.float64)
    kh = k.reshape(nw, p2, heads, dq).transpose(0, 2, 1, 3).astype(np.float64)
    vh = v.reshape(nw, p2, heads, dv).transpose(0, 2, 1, 3).astype(np.float64)
    scores = np.matmul(qh, kh.transpose(0, 1, 3, 2))
    scores = scores / tau.astype(np.float64)[None, :, None, None]
    scores = scores + bias_table.astype(np.float64)[:, rel_idx][None]
    attn = softmax_rows(scores.reshape(-1, p2)).reshape(scores.shape)
    out = np.matmul(attn, vh)
    return out.transpose(0, 2, 1, 3).reshape(nw, p2, heads * dv).astype(np.float32)


def _split_qkv(qkv: np.ndarray, cfg: MgtConfig):
    cq = cfg.qk_branch
    cv = cfg.v_branch
    edges = np.cumsum([cq, cq, cq, cq, cv, cv])[:-1]
    return np.split(qkv, edges, axis=1)


def mgmsa_forward(x: np.ndarray, w: MgtWeights, cfg: MgtConfig,
                  shift: bool = False) -> np.ndarray:
    """Gated multi-branch dilated window attention."""
    p = cfg.window
    rel_idx = relative_index(p)
    qkv = conv2d(x, w.qkv)
    q1, q2, k1, k2, v1, v2 = _split_qkv(qkv, cfg)
    shift_size = cfg.shift_size if shift else 0

    def branch(i, qb, kb, vb):
        d = cfg.branch_dilations[i]
        qw, meta = dilated_window_gather(qb, p, d, shift_size)
        kw, _ = dilated_window_gather(kb, p, d, shift_size)
        vw, _ = dilated_window_gather(vb, p, d, shift_size)
        out = window_attention(qw, kw, vw, w.tau[i], w.relpos[i], rel_idx, cfg.heads)
        return window_scatter(out, meta)

    f1 = branch(0, q1, k1, v1)
    if cfg.gated:
        f2 = branch(1, q2, k2, v2)
        gated = f1 * f2
    else:
        gated = f1
    return conv2d(gated, w.attn_proj)


def mgfn_forward(x: np.ndarray, w: MgtWeights, cfg: MgtConfig) -> np.ndarray:
    """Dual-path gated feed-forward: mish(F1)*F2 + mish(F2)*F1."""
    f1 = conv2d(conv2d(x, w.ff_expand1), w.ff_dw1)
    if cfg.gated:
        f2 = conv2d(conv2d(x, w.ff_expand2), w.ff_dw2)
        g = mish(f1) * f2 + mish(f2) * f1
    else:
        g = mish(f1)
    return conv2d(g, w.ff_contract)


def mgt_block(x: np.ndarray, w: MgtWeights, cfg: MgtConfig,
              shift: bool = False) -> np.ndarray:
    """Pre-LN residual block: x + MGMSA(LN(x)), then + MGFN(LN(.))."""
    mid = x + mgmsa_forward(layer_norm(x, w.ln1_gamma, w.ln1_beta), w, cfg, shift)
    return mid + mgfn_forward(layer_norm(mid, w.ln2_gamma, w.ln2_beta), w, cfg)
