"""Codec configuration presets, ablation variants, and config ids.

Variants: V1 = plain+pointwise convolutions only, V2 adds difference
branches, V3 adds asymmetric branches, V4 adds Swin-style transformer
blocks (no gate, single scale), V5 enables the gate, "full" enables
multi-scale dilated attention.
"""

from dataclasses import dataclass

from .errors import ContractViolation
from .mgt import MgtConfig

VARIANTS = ("full", "V1", "V2", "V3", "V4", "V5")

_CONV_BRANCHES = ("vanilla3x3", "conv1x1")
_DIFF_BRANCHES = ("cdc", "adc", "hdc", "vdc")
_ASYM_BRANCHES = ("aconv_h", "aconv_v")


@dataclass(frozen=True)
class CodecConfig:
    name: str
    config_id: int
    variant: str = "full"
    embed_dim: int = 192   # C
    latent_ch: int = 192   # M
    hyper_ch: int = 192    # N
    window: int = 8        # P
    dilations: tuple = (1, 2)
    heads: int = 8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ContractViolation(f"unknown variant {self.variant!r}")
        if not 0 <= self.config_id <= 255:
            raise ContractViolation("config_id must fit in one byte")
        if self.uses_transformer:
            self.mgt_config()  # validate divisibility early

    @property
    def pg_branches(self) -> tuple:
        if self.variant == "V1":
            return _CONV_BRANCHES
        if self.variant == "V2":
            return _CONV_BRANCHES + _DIFF_BRANCHES
        return _CONV_BRANCHES + _DIFF_BRANCHES + _ASYM_BRANCHES

    @property
    def uses_transformer(self) -> bool:
        return self.variant in ("full", "V4", "V5")

    def mgt_config(self) -> MgtConfig:
        return MgtConfig(
            embed_dim=self.embed_dim,
            window=self.window,
            dilations=self.dilations,
            heads=self.heads,
            gated=self.variant != "V4",
            multi_scale=self.variant == "full",
        )

    @property
    def pad_multiple(self) -> int:
        """Input padding granularity: window * max dilation * total downsampling."""
        d = max(self.dilations) if (self.uses_transformer and self.variant == "full") else 1
        return self.window * d * 16


def _production(name, config_id, variant):
    return CodecConfig(name=name, config_id=config_id, variant=variant)


def _tiny(name, config_id, variant):
    return CodecConfig(name=name, config_id=config_id, variant=variant,
                       embed_dim=16, latent_ch=16, hyper_ch=16,
                       window=4, dilations=(1, 2), heads=2)


PRESETS = {
    "full": _production("full", 0, "full"),
    "V1": _production("V1", 1, "V1"),
    "V2": _production("V2", 2, "V2"),
    "V3": _production("V3", 3, "V3"),
    "V4": _production("V4", 4, "V4"),
    "V5": _production("V5", 5, "V5"),
    "tiny": _tiny("tiny", 16, "full"),
    "tiny-V1": _tiny("tiny-V1", 17, "V1"),
    "tiny-V2": _tiny("tiny-V2", 18, "V2"),
    "tiny-V3": _tiny("tiny-V3", 19, "V3"),
    "tiny-V4": _tiny("tiny-V4", 20, "V4"),
    "tiny-V5": _tiny("tiny-V5", 21, "V5"),
    # P=8 with dilation 2 at minimal width: pads to 256 like the full model
    "tiny256": CodecConfig(name="tiny256", config_id=32, variant="full",
                           embed_dim=8, latent_ch=8, hyper_ch=8,
                           window=8, dilations=(1, 2), heads=1),
}

_BY_ID = {c.config_id: c for c in PRESETS.values()}


def preset(name: str) -> CodecConfig:
    if name not in PRESETS:
        raise ContractViolation(
            f"unknown config preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name]


def by_id(config_id: int) -> CodecConfig:
    if config_id not in _BY_ID:
        raise ContractViolation(f"unknown config id {config_id}")
    return _BY_ID[config_id]
