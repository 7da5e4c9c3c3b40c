"""Closed-form SE/SINR, beampattern gains, MASR, and their Monte-Carlo oracles.

The downlink SINR uses the use-and-then-forget bound: the mean effective
gain is the useful signal; gain uncertainty, inter-user interference, and
sensing leakage are noise. The interference weight of UE k' on UE k at a
communication AP depends on both PZF groups: ZF toward k' removes the
*estimated* channel component, and only UEs in the same strong set see
that cancellation. This yields, per (m, k, k'):

    weight = gamma_mk' * [ (beta_mk - 1{k in S_m} gamma_mk)/(N - |S_m|)  if k' in S_m
                           N * beta_mk                                   if k' in W_m ]

which reduces to the familiar MRT-only and ZF-only expressions when the
grouping is uniform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import array_response, draw_channel_batch
from .model import AllocationState, NetworkConfig, NetworkRealization
from .precoding import Grouping, batch_zf_precoders

_ORACLE_CHUNK = 2500


@dataclass(frozen=True)
class DerivedCoefficients:
    """Grouping-dependent coefficient tables shared by metrics and optimizers."""

    nu: np.ndarray          # (M, K) precoder norm factors: 1/(N-|S_m|) or N
    varrho_c: np.ndarray    # (M, K) own-signal interference weights
    f: np.ndarray           # (M, K) coherent-gain factors: 1 or N
    cross_gain: np.ndarray  # (M, L, L) |a^H(theta_ml) a(theta_ml')|^2
    iui_weight: np.ndarray  # (M, K, K) weight of eta_c[m, k'] in UE k's interference


def derive_coefficients(real: NetworkRealization, grouping: Grouping,
                        n_antennas: int) -> DerivedCoefficients:
    grouping.validate(n_antennas)
    strong = grouping.strong_mask
    n = n_antennas
    free_dof = (n - grouping.strong_sizes)[:, None].astype(float)  # (M, 1)
    nu = np.where(strong, 1.0 / free_dof, float(n))
    f = np.where(strong, 1.0, float(n))
    varrho_c = np.where(strong, (real.beta - real.gamma) / free_dof, n * real.beta)

    # iui_weight[m, k, k'] = gamma[m,k'] * D(m, k, k')
    beta_eff = real.beta[:, :, None] - np.where(strong, real.gamma, 0.0)[:, :, None]
    d_strong = beta_eff / free_dof[:, :, None]               # (M, K, 1) broadcast over k'
    d_weak = n * real.beta[:, :, None]
    interferer_strong = strong[:, None, :]                   # (M, 1, K')
    d = np.where(interferer_strong, d_strong, d_weak)
    iui_weight = real.gamma[:, None, :] * d

    steer = array_response(real.theta, n)                    # (M, L, N)
    inner = np.einsum("mln,mjn->mlj", steer.conj(), steer)
    cross_gain = np.abs(inner) ** 2
    return DerivedCoefficients(nu=nu, varrho_c=varrho_c, f=f,
                               cross_gain=cross_gain, iui_weight=iui_weight)


def sinr_closed_form(real: NetworkRealization, grouping: Grouping,
                     alloc: AllocationState, n_antennas: int,
                     coeffs: DerivedCoefficients | None = None) -> np.ndarray:
    """Per-UE downlink SINR of the PZF scheme in closed form."""
    if coeffs is None:
        coeffs = derive_coefficients(real, grouping, n_antennas)
    rho = real.rho
    amp = np.sqrt(np.clip(alloc.a, 0.0, None)[:, None] * np.clip(alloc.eta_c, 0.0, None))
    num = rho * np.einsum("mk,mk->k", amp, real.gamma * coeffs.f) ** 2
    iui = rho * np.einsum("m,mj,mkj->k", alloc.a, alloc.eta_c, coeffs.iui_weight)
    sens = rho * n_antennas * np.einsum(
        "m,mk->k", (1.0 - alloc.a) * alloc.eta_s.sum(axis=1), real.beta)
    return num / (iui + sens + 1.0)


def se_from_sinr(sinr, tau: int, tau_t: int) -> np.ndarray:
    """Spectral efficiency (1 - tau_t/tau) log2(1 + SINR) in bit/s/Hz."""
    return (1.0 - tau_t / tau) * np.log2(1.0 + np.asarray(sinr, dtype=float))


def beampattern_com(real: NetworkRealization, grouping: Grouping,
                    alloc: AllocationState, n_antennas: int,
                    coeffs: DerivedCoefficients | None = None) -> float:
    """Average communication power seen in any probing direction (angle-free)."""
    if coeffs is None:
        coeffs = derive_coefficients(real, grouping, n_antennas)
    return float(real.rho * (alloc.a[:, None] * alloc.eta_c
                             * real.gamma * coeffs.nu).sum())


def beampattern_sen(real: NetworkRealization, alloc: AllocationState,
                    zone: int, n_antennas: int,
                    coeffs: DerivedCoefficients | None = None):
    """(desired, distortion) sensing beampattern powers at zone's own angles."""
    if coeffs is not None:
        cross = coeffs.cross_gain[:, zone, :].copy()         # (M, L)
    else:
        steer = array_response(real.theta, n_antennas)
        inner = np.einsum("mn,mjn->mj", steer[:, zone].conj(), steer)
        cross = np.abs(inner) ** 2
    cross[:, zone] = 0.0
    sens = (1.0 - alloc.a)[:, None] * alloc.eta_s            # (M, L)
    desired = real.rho * n_antennas ** 2 * sens[:, zone].sum()
    distortion = real.rho * (sens * cross).sum()
    return float(desired), float(distortion)


def masr(real: NetworkRealization, grouping: Grouping, alloc: AllocationState,
         kappa_linear: float, n_antennas: int,
         coeffs: DerivedCoefficients | None = None):
    """Mainlobe-to-average-sidelobe ratios and their satisfaction flags.

    A zero denominator (no communication power and no cross-zone leakage)
    makes the zone unconstrained: MASR = +inf, flag satisfied.
    """
    if coeffs is None:
        coeffs = derive_coefficients(real, grouping, n_antennas)
    com = beampattern_com(real, grouping, alloc, n_antennas, coeffs)
    values = np.empty(real.L)
    for l in range(real.L):
        desired, distortion = beampattern_sen(real, alloc, l, n_antennas, coeffs)
        den = com + distortion
        values[l] = desired / den if den > 0.0 else np.inf
    return values, values >= kappa_linear


@dataclass(frozen=True)
class SeReport:
    """Communication and sensing summary for one allocation."""

    sinr: np.ndarray            # (K,)
    se: np.ndarray              # (K,) bit/s/Hz
    masr: np.ndarray            # (L,) linear
    masr_satisfied: np.ndarray  # (L,) bool


def evaluate(real: NetworkRealization, grouping: Grouping, alloc: AllocationState,
             config: NetworkConfig) -> SeReport:
    coeffs = derive_coefficients(real, grouping, config.N)
    sinr = sinr_closed_form(real, grouping, alloc, config.N, coeffs)
    values, flags = masr(real, grouping, alloc, config.kappa_linear, config.N, coeffs)
    return SeReport(sinr=sinr, se=se_from_sinr(sinr, config.tau, config.tau_t),
                    masr=values, masr_satisfied=flags)


def _batched_precoders(g_hat: np.ndarray, grouping: Grouping,
                       gamma: np.ndarray) -> np.ndarray:
    """(draws, M, K, N) precoders: ZF rows for strong sets, MRT elsewhere."""
    t = g_hat.copy()
    for m in range(grouping.M):
        idx = grouping.strong_set(m)
        if idx.size:
            t[:, m, idx, :] = batch_zf_precoders(g_hat[:, m], idx, gamma[m])
    return t


def mc_sinr_oracle(real: NetworkRealization, grouping: Grouping,
                   alloc: AllocationState, num_draws: int,
                   rng: np.random.Generator, n_antennas: int) -> np.ndarray:
    """Monte-Carlo SINR from the raw signal model.

    Per draw, precoders are rebuilt from the channel estimates; the desired
    signal is the empirical mean effective gain, and interference powers
    are averaged over fading (symbol expectations are taken analytically).
    """
    k_ues = real.K
    amp = np.sqrt(alloc.a[:, None] * real.rho * alloc.eta_c)  # (M, K)
    steer = array_response(real.theta, n_antennas)            # (M, L, N)
    sens_w = (1.0 - alloc.a)[:, None] * real.rho * alloc.eta_s

    gain_sum = np.zeros(k_ues, dtype=complex)
    own2_sum = np.zeros(k_ues)
    cross2_sum = np.zeros((k_ues, k_ues))
    ir_sum = np.zeros(k_ues)
    done = 0
    while done < num_draws:
        b = min(_ORACLE_CHUNK, num_draws - done)
        g_hat, g_tilde = draw_channel_batch(real, b, rng, n_antennas)
        g = g_hat + g_tilde
        t = _batched_precoders(g_hat, grouping, real.gamma)
        # geff[b, k, k'] = sum_m amp[m, k'] g[b,m,k]^H t[b,m,k']
        geff = np.einsum("bmkn,bmjn,mj->bkj", g.conj(), t, amp, optimize=True)
        own = geff[:, np.arange(k_ues), np.arange(k_ues)]
        gain_sum += own.sum(axis=0)
        own2_sum += (np.abs(own) ** 2).sum(axis=0)
        cross2_sum += (np.abs(geff) ** 2).sum(axis=0)
        leak = np.abs(np.einsum("bmkn,mln->bmkl", g.conj(), steer,
                                optimize=True)) ** 2
        ir_sum += np.einsum("bmkl,ml->bk", leak, sens_w).sum(axis=0)
        done += b

    ds = gain_sum / num_draws
    bu_var = own2_sum / num_draws - np.abs(ds) ** 2
    iui = cross2_sum / num_draws
    ir = ir_sum / num_draws
    sinr = np.empty(k_ues)
    for k in range(k_ues):
        others = iui[k].sum() - iui[k, k]
        sinr[k] = np.abs(ds[k]) ** 2 / (bu_var[k] + others + ir[k] + 1.0)
    return sinr


def mc_beampattern_oracle(real: NetworkRealization, grouping: Grouping,
                          alloc: AllocationState, theta_per_ap: np.ndarray,
                          num_draws: int, rng: np.random.Generator,
                          n_antennas: int, symbol_power: float = 1.0) -> float:
    """Monte-Carlo beampattern gain E|sum_m a^H(theta_m) x_m|^2.

    Symbols are drawn explicitly (complex Gaussian, unit power scaled by
    symbol_power) so the cross-term cancellations are exercised rather
    than assumed.
    """
    probe = array_response(np.asarray(theta_per_ap), n_antennas)   # (M, N)
    steer = array_response(real.theta, n_antennas)                 # (M, L, N)
    amp_c = np.sqrt(alloc.a[:, None] * real.rho * alloc.eta_c)
    amp_s = np.sqrt((1.0 - alloc.a)[:, None] * real.rho * alloc.eta_s)
    # deterministic probe responses of the sensing beams: (M, L)
    sens_resp = amp_s * np.einsum("mn,mln->ml", probe.conj(), steer)

    total = 0.0
    done = 0
    while done < num_draws:
        b = min(_ORACLE_CHUNK, num_draws - done)
        g_hat, _ = draw_channel_batch(real, b, rng, n_antennas)
        t = _batched_precoders(g_hat, grouping, real.gamma)
        resp_c = np.einsum("mn,bmkn,mk->bk", probe.conj(), t, amp_c,
                           optimize=True)                          # (b, K)
        scale = np.sqrt(symbol_power / 2.0)
        x_c = scale * (rng.standard_normal((b, real.K))
                       + 1j * rng.standard_normal((b, real.K)))
        x_r = scale * (rng.standard_normal((b, real.M, real.L))
                       + 1j * rng.standard_normal((b, real.M, real.L)))
        field = (resp_c * x_c).sum(axis=1) + np.einsum("ml,bml->b", sens_resp, x_r)
        total += float((np.abs(field) ** 2).sum())
        done += b
    return total / num_draws
