"""Small-scale fading, ULA array responses, and MMSE channel estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NetworkRealization


def array_response(theta, n_antennas: int) -> np.ndarray:
    """ULA steering vector with half-wavelength spacing.

    Entry n is exp(j*pi*(n-1)*sin(theta)); broadcasting over array-valued
    theta returns shape theta.shape + (n_antennas,).
    """
    theta = np.asarray(theta, dtype=float)
    phase = np.pi * np.arange(n_antennas) * np.sin(theta)[..., None]
    return np.exp(1j * phase)


def mmse_gamma(beta, tau_t: int, rho_t: float):
    """Variance of the MMSE channel estimate: tau_t*rho_t*beta^2 / (tau_t*rho_t*beta + 1).

    Clamped to beta: the exact value is strictly below it, but the ratio
    can round one ulp above at saturation.
    """
    beta = np.asarray(beta, dtype=float)
    snr = tau_t * rho_t * beta
    return np.minimum(snr * beta / (snr + 1.0), beta)


def _complex_normal(rng: np.random.Generator, var, shape) -> np.ndarray:
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ChannelRealization:
    """True channels, MMSE estimates, and estimation errors, each (M, K, N)."""

    g: np.ndarray
    g_hat: np.ndarray
    g_tilde: np.ndarray


def draw_channels(real: NetworkRealization, rng: np.random.Generator,
                  n_antennas: int) -> ChannelRealization:
    """Draw one fading realization.

    The estimate and the error are sampled independently with variances
    gamma and beta - gamma (MMSE orthogonality), and the true channel is
    their sum, so g = g_hat + g_tilde holds exactly.
    """
    g_hat, g_tilde = draw_channel_batch(real, 1, rng, n_antennas)
    g_hat, g_tilde = g_hat[0], g_tilde[0]
    return ChannelRealization(g=g_hat + g_tilde, g_hat=g_hat, g_tilde=g_tilde)


def draw_channel_batch(real: NetworkRealization, num_draws: int,
                       rng: np.random.Generator, n_antennas: int):
    """Vectorized fading draws: returns (g_hat, g_tilde), each (draws, M, K, N)."""
    shape = (num_draws, real.M, real.K, n_antennas)
    var_hat = real.gamma[None, :, :, None]
    var_err = (real.beta - real.gamma)[None, :, :, None]
    g_hat = _complex_normal(rng, var_hat, shape)
    g_tilde = _complex_normal(rng, var_err, shape)
    return g_hat, g_tilde
