"""Analysis / synthesis transforms and the hyper-prior pair.

The stage sequence is data (see ga_stages / gs_stages); every stage is
executed from a flat name->array parameter dict so that weight files and
initialization share one registry.
"""

import numpy as np

from .config import CodecConfig
from .errors import ContractViolation
from .mgt import MgtWeights, mgt_block
from .pgconv import BRANCHES, PGConvWeights, pgconv_forward
from .tensor_core import ConvWeights, conv2d, mish, pixel_shuffle

_PG_SHAPES = {
    "vanilla3x3": (3, 3), "conv1x1": (1, 1), "aconv_h": (1, 3),
    "aconv_v": (3, 1), "cdc": (3, 3), "adc": (8,), "hdc": (6,), "vdc": (6,),
}


# ---------------------------------------------------------------- stage plans

def ga_stages(cfg: CodecConfig):
    c, m = cfg.embed_dim, cfg.latent_ch
    return [
        ("drb", 3, c), ("drb", c, c), ("blocks", c, 2),
        ("drb", c, c), ("blocks", c, 2), ("conv_down", c, m),
    ]


def gs_stages(cfg: CodecConfig):
    c, m = cfg.embed_dim, cfg.latent_ch
    return [
        ("subpixel_up", m, c), ("blocks", c, 2), ("urb", c, c),
        ("blocks", c, 2), ("urb", c, c), ("urb", c, 3),
    ]


def ha_stages(cfg: CodecConfig):
    m, n = cfg.latent_ch, cfg.hyper_ch
    return [("conv_down", m, n), ("act",), ("conv_down", n, n)]


def hs_stages(cfg: CodecConfig):
    m, n = cfg.latent_ch, cfg.hyper_ch
    return [("subpixel_up", n, n), ("act",), ("subpixel_up", n, 2 * m)]


# ----------------------------------------------------------- param registry

def _conv_params(prefix, out_ch, in_ch, kh, kw):
    yield f"{prefix}.kernel", (out_ch, in_ch, kh, kw), "conv"
    yield f"{prefix}.bias", (out_ch,), "zero"


def _pg_params(prefix, cfg, out_ch, in_ch):
    for name in BRANCHES:
        if name not in cfg.pg_branches:
            continue
        yield f"{prefix}.{name}.w", (out_ch, in_ch) + _PG_SHAPES[name], "conv"
        yield f"{prefix}.{name}.b", (out_ch,), "zero"


def _mgt_params(prefix, cfg):
    mc = cfg.mgt_config()
    c = mc.embed_dim
    p = mc.window
    dw2 = 3 if not mc.multi_scale else 5
    yield f"{prefix}.ln1.gamma", (c,), "one"
    yield f"{prefix}.ln1.beta", (c,), "zero"
    yield from _conv_params(f"{prefix}.qkv", 3 * c, c, 1, 1)
    yield f"{prefix}.tau", (2, mc.heads), "tau"
    yield f"{prefix}.relpos", (2, mc.heads, (2 * p - 1) ** 2), "zero"
    yield from _conv_params(f"{prefix}.proj", c, c, 1, 1)
    yield f"{prefix}.ln2.gamma", (c,), "one"
    yield f"{prefix}.ln2.beta", (c,), "zero"
    yield from _conv_params(f"{prefix}.ff1", 2 * c, c, 1, 1)
    yield from _conv_params(f"{prefix}.ff2", 2 * c, c, 1, 1)
    yield f"{prefix}.dw1.kernel", (2 * c, 1, 3, 3), "conv"
    yield f"{prefix}.dw1.bias", (2 * c,), "zero"
    yield f"{prefix}.dw2.kernel", (2 * c, 1, dw2, dw2), "conv"
    yield f"{prefix}.dw2.bias", (2 * c,), "zero"
    yield from _conv_params(f"{prefix}.out", c, 2 * c, 1, 1)


def _stage_params(prefix, stage, cfg):
    kind = stage[0]
    if kind == "drb":
        _, cin, cout = stage
        yield from _conv_params(f"{prefix}.down", cout, cin, 3, 3)
        yield from _pg_params(f"{prefix}.pg", cfg, cout, cout)
    elif kind == "urb":
        _, cin, cout = stage
        yield from _conv_params(f"{prefix}.up", 4 * cout, cin, 3, 3)
        yield from _pg_params(f"{prefix}.pg", cfg, cout, cout)
    elif kind == "conv_down":
        _, cin, cout = stage
        yield from _conv_params(f"{prefix}.conv", cout, cin, 3, 3)
    elif kind == "subpixel_up":
        _, cin, cout = stage
        yield from _conv_params(f"{prefix}.conv", 4 * cout, cin, 3, 3)
    elif kind == "blocks":
        _, c, count = stage
        for j in range(count):
            if cfg.uses_transformer:
                yield from _mgt_params(f"{prefix}.mgt{j}", cfg)
            else:
                yield from _pg_params(f"{prefix}.res{j}.pg1", cfg, c, c)
                yield from _pg_params(f"{prefix}.res{j}.pg2", cfg, c, c)
    elif kind == "act":
        return
    else:
        raise ContractViolation(f"unknown stage kind {kind!r}")


def param_registry(cfg: CodecConfig):
    """Ordered (name, shape, init_kind) triples for the whole model."""
    out = []
    for group, stages in (("ga", ga_stages(cfg)), ("gs", gs_stages(cfg)),
                          ("ha", ha_stages(cfg)), ("hs", hs_stages(cfg))):
        for i, stage in enumerate(stages):
            out.extend(_stage_params(f"{group}.{i}", stage, cfg))
    out.append(("factorized.sigma", (cfg.hyper_ch,), "sigma"))
    return out


# ----------------------------------------------------------------- forwards

def _conv_w(params, prefix, stride=1, padding=1, groups=1) -> ConvWeights:
    return ConvWeights(params[f"{prefix}.kernel"], params[f"{prefix}.bias"],
                       stride=stride, padding=padding, groups=groups)


def _pg_w(params, prefix, cfg) -> PGConvWeights:
    enabled = cfg.pg_branches
    return PGConvWeights(
        {n: (params[f"{prefix}.{n}.w"], params[f"{prefix}.{n}.b"]) for n in enabled},
        enabled=frozenset(enabled))


def _mgt_w(params, prefix, cfg) -> MgtWeights:
    c = cfg.embed_dim
    return MgtWeights(
        ln1_gamma=params[f"{prefix}.ln1.gamma"],
        ln1_beta=params[f"{prefix}.ln1.beta"],
        qkv=_conv_w(params, f"{prefix}.qkv", padding=0),
        tau=params[f"{prefix}.tau"],
        relpos=params[f"{prefix}.relpos"],
        attn_proj=_conv_w(params, f"{prefix}.proj", padding=0),
        ln2_gamma=params[f"{prefix}.ln2.gamma"],
        ln2_beta=params[f"{prefix}.ln2.beta"],
        ff_expand1=_conv_w(params, f"{prefix}.ff1", padding=0),
        ff_expand2=_conv_w(params, f"{prefix}.ff2", padding=0),
        ff_dw1=_conv_w(params, f"{prefix}.dw1", padding=1, groups=2 * c),
        ff_dw2=_conv_w(params, f"{prefix}.dw2",
                       padding=params[f"{prefix}.dw2.kernel"].shape[2] // 2,
                       groups=2 * c),
        ff_contract=_conv_w(params, f"{prefix}.out", padding=0),
    )


def _run_stage(x, prefix, stage, params, cfg, mode):
    kind = stage[0]
    if kind == "drb":
        x = conv2d(x, _conv_w(params, f"{prefix}.down", stride=2, padding=1))
        return pgconv_forward(x, _pg_w(params, f"{prefix}.pg", cfg), mode)
    if kind == "urb":
        x = conv2d(x, _conv_w(params, f"{prefix}.up", padding=1))
        x = pixel_shuffle(x, 2)
        return pgconv_forward(x, _pg_w(params, f"{prefix}.pg", cfg), mode)
    if kind == "conv_down":
        return conv2d(x, _conv_w(params, f"{prefix}.conv", stride=2, padding=1))
    if kind == "subpixel_up":
        x = conv2d(x, _conv_w(params, f"{prefix}.conv", padding=1))
        return pixel_shuffle(x, 2)
    if kind == "blocks":
        _, _, count = stage
        for j in range(count):
            if cfg.uses_transformer:
                x = mgt_block(x, _mgt_w(params, f"{prefix}.mgt{j}", cfg),
                              cfg.mgt_config(), shift=bool(j % 2))
            else:
                pg1 = _pg_w(params, f"{prefix}.res{j}.pg1", cfg)
                pg2 = _pg_w(params, f"{prefix}.res{j}.pg2", cfg)
                x = x + pgconv_forward(mish(pgconv_forward(x, pg1, mode)), pg2, mode)
        return x
    if kind == "act":
        return mish(x)
    raise ContractViolation(f"unknown stage kind {kind!r}")


def _run(x, group, stages, params, cfg, mode):
    for i, stage in enumerate(stages):
        x = _run_stage(x, f"{group}.{i}", stage, params, cfg, mode)
    return x


def analysis(x: np.ndarray, params: dict, cfg: CodecConfig,
             mode: str = "merged") -> np.ndarray:
    """Image (n, 3, H, W) -> latent (n, M, H/16, W/16)."""
    h, w = x.shape[2], x.shape[3]
    if h % 16 or w % 16:
        raise ContractViolation(f"spatial dims {h}x{w} must be divisible by 16")
    return _run(x, "ga", ga_stages(cfg), params, cfg, mode)


def synthesis(y_hat: np.ndarray, params: dict, cfg: CodecConfig,
              mode: str = "merged") -> np.ndarray:
    """Latent (n, M, h, w) -> image-domain tensor (n, 3, 16h, 16w), unclamped."""
    return _run(y_hat, "gs", gs_stages(cfg), params, cfg, mode)


def hyper_analysis(y: np.ndarray, params: dict, cfg: CodecConfig) -> np.ndarray:
    """Latent -> hyper-latent, downsampled by 4."""
    return _run(y, "ha", ha_stages(cfg), params, cfg, "merged")


def hyper_synthesis(z_hat: np.ndarray, params: dict, cfg: CodecConfig):
    """Hyper-latent -> (mu, sigma_raw), each with M channels, upsampled by 4."""
    out = _run(z_hat, "hs", hs_stages(cfg), params, cfg, "merged")
    m = cfg.latent_ch
    return out[:, :m], out[:, m:]
