"""Quantization, discretized-Gaussian likelihoods, and RD loss.

The latent is coded as the integer residual q = round(y - mu); the decoder
reconstructs q + mu.  Probabilities come from a shared 64-entry geometric
scale table so encoder and decoder rebuild identical CDFs from constants.
"""

import numpy as np
from scipy.special import ndtr

from .errors import ContractViolation

SIGMA_MIN = 0.11
SIGMA_MAX = 256.0
NUM_SCALES = 64
PROB_FLOOR = 2.0 ** -16
SYMBOL_MIN = -64
SYMBOL_MAX = 63
NUM_SYMBOLS = SYMBOL_MAX - SYMBOL_MIN + 1

# Reference multipliers from the training objective (rate in bpp, MSE on the
# 0-255 scale): {18,25,35,67,130,250,483} x 1e-4.
LAMBDA_SET = (0.0018, 0.0025, 0.0035, 0.0067, 0.0130, 0.0250, 0.0483)


def scale_table() -> np.ndarray:
    """64 sigma values geometrically spaced over [SIGMA_MIN, SIGMA_MAX]."""
    return np.exp(np.linspace(np.log(SIGMA_MIN), np.log(SIGMA_MAX), NUM_SCALES))


_TABLE = scale_table()
_LOG_TABLE = np.log(_TABLE)


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def sigma_from_raw(sigma_raw: np.ndarray) -> np.ndarray:
    """softplus then clamp into [SIGMA_MIN, SIGMA_MAX]."""
    return np.clip(softplus(sigma_raw), SIGMA_MIN, SIGMA_MAX)


def scale_index(sigma: np.ndarray) -> np.ndarray:
    """Nearest table index in log-space; ties resolve to the lower index."""
    logs = np.log(np.clip(sigma, SIGMA_MIN, SIGMA_MAX))
    mids = (_LOG_TABLE[:-1] + _LOG_TABLE[1:]) / 2.0
    # side="left": a sigma exactly on a midpoint stays with the lower index
    return np.searchsorted(mids, logs, side="left").astype(np.int64)


def quantize_st(y: np.ndarray, mu) -> tuple:
    """q = round(y - mu) (ties away from zero) clipped to symbol support;
    the dequantized value is q + mu."""
    y64 = np.asarray(y, dtype=np.float64)
    mu64 = np.asarray(mu, dtype=np.float64)
    r = y64 - mu64
    q = np.where(r >= 0, np.floor(r + 0.5), np.ceil(r - 0.5))
    q = np.clip(q, SYMBOL_MIN, SYMBOL_MAX).astype(np.int64)
    y_hat = (q + mu64).astype(np.float32)
    return q, y_hat


def gaussian_likelihood(q: np.ndarray, sigma_index: np.ndarray) -> np.ndarray:
    """P(Q = q) = Phi((q+1/2)/sigma) - Phi((q-1/2)/sigma), floored at 2^-16.

    Evaluated on |q| via the upper tail so that p(q) == p(-q) bit-exactly.
    """
    sigma = _TABLE[np.asarray(sigma_index, dtype=np.int64)]
    a = np.abs(np.asarray(q, dtype=np.float64))
    p = ndtr(-(a - 0.5) / sigma) - ndtr(-(a + 0.5) / sigma)
    return np.maximum(p, PROB_FLOOR)


def factorized_likelihood(q_z: np.ndarray, channel_sigma: np.ndarray) -> np.ndarray:
    """Per-channel factorized model for the hyper-latent: same discretized
    Gaussian, sigma given per channel, zero mean.  q_z is NCHW."""
    idx = scale_index(np.asarray(channel_sigma, dtype=np.float64))
    idx_full = np.broadcast_to(idx[None, :, None, None], q_z.shape)
    return gaussian_likelihood(q_z, idx_full)


def rate_estimate(likelihoods: np.ndarray, pixel_count: int) -> float:
    """Model rate in bits per pixel."""
    if pixel_count <= 0:
        raise ContractViolation(f"pixel_count must be positive, got {pixel_count}")
    return float(-np.log2(likelihoods).sum() / pixel_count)


def rd_loss(x: np.ndarray, x_hat: np.ndarray, bpp_y: float, bpp_z: float,
            lam: float) -> float:
    """L = R(y) + R(z) + lambda * MSE, with MSE on the 0-255 scale."""
    if lam <= 0:
        raise ContractViolation(f"lambda must be positive, got {lam}")
    mse = float(np.mean(np.square(
        np.asarray(x, dtype=np.float64) - np.asarray(x_hat, dtype=np.float64))))
    return bpp_y + bpp_z + lam * mse
