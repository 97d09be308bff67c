import numpy as np
import pytest

from mgtpc.config import preset
from mgtpc.mgt import MgtWeights
from mgtpc.pgconv import PGConvWeights
from mgtpc.tensor_core import ConvWeights
from mgtpc.weights_io import init_weights

PG_SHAPES = {
    "vanilla3x3": (3, 3), "conv1x1": (1, 1), "aconv_h": (1, 3),
    "aconv_v": (3, 1), "cdc": (3, 3), "adc": (8,), "hdc": (6,), "vdc": (6,),
}


def random_pg_weights(rng, out_ch=4, in_ch=3, enabled=None, zero_bias=False):
    enabled = tuple(enabled) if enabled else tuple(PG_SHAPES)
    branches = {}
    for name in enabled:
        w = (rng.random((out_ch, in_ch) + PG_SHAPES[name]) * 2 - 1).astype(np.float32)
        b = np.zeros(out_ch, np.float32) if zero_bias else \
            (rng.random(out_ch) * 2 - 1).astype(np.float32)
        branches[name] = (w, b)
    return PGConvWeights(branches, enabled=frozenset(enabled))


def _rand_conv(rng, out_ch, in_ch, k, scale=0.2, groups=1, zero=False):
    if zero:
        kern = np.zeros((out_ch, in_ch, k, k), np.float32)
        bias = np.zeros(out_ch, np.float32)
    else:
        kern = ((rng.random((out_ch, in_ch, k, k)) * 2 - 1) * scale).astype(np.float32)
        bias = ((rng.random(out_ch) * 2 - 1) * scale).astype(np.float32)
    return ConvWeights(kern, bias, padding=k // 2, groups=groups)


def random_mgt_weights(rng, cfg, zero_proj=False):
    c = cfg.embed_dim
    p = cfg.window
    dw2 = 5 if cfg.multi_scale else 3
    return MgtWeights(
        ln1_gamma=np.ones(c, np.float32),
        ln1_beta=np.zeros(c, np.float32),
        qkv=_rand_conv(rng, 3 * c, c, 1),
        tau=np.full((2, cfg.heads), np.sqrt(cfg.qk_branch // cfg.heads),
                    np.float32),
        relpos=((rng.random((2, cfg.heads, (2 * p - 1) ** 2)) * 2 - 1) * 0.1
                ).astype(np.float32),
        attn_proj=_rand_conv(rng, c, c, 1, zero=zero_proj),
        ln2_gamma=np.ones(c, np.float32),
        ln2_beta=np.zeros(c, np.float32),
        ff_expand1=_rand_conv(rng, 2 * c, c, 1),
        ff_expand2=_rand_conv(rng, 2 * c, c, 1),
        ff_dw1=_rand_conv(rng, 2 * c, 1, 3, groups=2 * c),
        ff_dw2=_rand_conv(rng, 2 * c, 1, dw2, groups=2 * c),
        ff_contract=_rand_conv(rng, c, 2 * c, 1, zero=zero_proj),
    )


@pytest.fixture(scope="session")
def tiny_weights():
    cfg = preset("tiny")
    return init_weights(cfg, 7), cfg


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
