"""PZF user grouping and local ZF/MRT precoder construction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grouping:
    """Strong/weak UE partition per AP.

    ``strong_mask[m, k]`` is True when AP m serves UE k with ZF. The
    delta_* tables are the AP-side indicators and the zeta_* tables the
    per-UE views; the two families are definitionally identical and both
    are exposed so downstream formulas can be written either way.
    """

    strong_mask: np.ndarray  # (M, K) bool
    strong_sizes: np.ndarray = field(init=False)  # (M,)

    def __post_init__(self):
        object.__setattr__(self, "strong_sizes", self.strong_mask.sum(axis=1))

    @property
    def M(self) -> int:
        return self.strong_mask.shape[0]

    @property
    def K(self) -> int:
        return self.strong_mask.shape[1]

    def strong_set(self, m: int) -> np.ndarray:
        return np.flatnonzero(self.strong_mask[m])

    def weak_set(self, m: int) -> np.ndarray:
        return np.flatnonzero(~self.strong_mask[m])

    def zf_aps(self, k: int) -> np.ndarray:
        """Z_k: APs that beamform to UE k with ZF."""
        return np.flatnonzero(self.strong_mask[:, k])

    def mr_aps(self, k: int) -> np.ndarray:
        """M_k: APs that beamform to UE k with MRT."""
        return np.flatnonzero(~self.strong_mask[:, k])

    @property
    def delta_strong(self) -> np.ndarray:
        return self.strong_mask.astype(float)

    @property
    def delta_weak(self) -> np.ndarray:
        return (~self.strong_mask).astype(float)

    @property
    def zeta_zf(self) -> np.ndarray:
        return self.delta_strong

    @property
    def zeta_mr(self) -> np.ndarray:
        return self.delta_weak

    def validate(self, n_antennas: int) -> None:
        if np.any(self.strong_sizes > n_antennas - 1):
            raise ValueError("strong set larger than N - 1")


def pzf_grouping(beta: np.ndarray, varrho_percent: float, n_antennas: int) -> Grouping:
    """Per-AP strong-set selection by cumulative gain fraction.

    Each AP sorts its UEs by descending beta and takes the smallest prefix
    whose share of the total gain reaches varrho_percent, capped at
    N - 1 UEs. Ties break toward the lower UE index.
    """
    if not 0.0 <= varrho_percent <= 100.0:
        raise ValueError("varrho_percent must lie in [0, 100]")
    beta = np.asarray(beta, dtype=float)
    m_aps, k_ues = beta.shape
    cap = min(k_ues, n_antennas - 1)
    target = varrho_percent / 100.0
    mask = np.zeros((m_aps, k_ues), dtype=bool)
    for m in range(m_aps):
        # stable sort on (-beta, index) => deterministic tie-break
        order = np.lexsort((np.arange(k_ues), -beta[m]))
        total = beta[m].sum()
        cum = 0.0
        for j, k in enumerate(order):
            if cum / total >= target or j >= cap:
                break
            mask[m, k] = True
            cum += beta[m, k]
    return Grouping(strong_mask=mask)


def zf_precoders(g_hat_m: np.ndarray, strong_idx: np.ndarray,
                 gamma_m: np.ndarray) -> np.ndarray:
    """ZF vectors at one AP: t_k = gamma_k * G_S (G_S^H G_S)^{-1} e_k.

    g_hat_m is (K, N); returns (|S_m|, N) rows aligned with strong_idx.
    Raises on a rank-deficient estimate matrix (probability zero under
    continuous fading).
    """
    gs = g_hat_m[strong_idx].T  # (N, s)
    gram = gs.conj().T @ gs
    try:
        inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("rank-deficient estimate matrix") from exc
    return (gs @ inv).T * gamma_m[strong_idx][:, None]


def mrt_precoder(g_hat_mk: np.ndarray) -> np.ndarray:
    """MRT vector: the channel estimate itself."""
    return g_hat_mk


@dataclass(frozen=True)
class PrecoderSet:
    """Per-(AP, UE) precoding vectors for one fading realization."""

    vectors: np.ndarray  # (M, K, N) complex
    grouping: Grouping

    def t_zf(self, m: int, k: int) -> np.ndarray:
        if not self.grouping.strong_mask[m, k]:
            raise KeyError(f"UE {k} is not in S_{m}")
        return self.vectors[m, k]

    def t_mr(self, m: int, k: int) -> np.ndarray:
        if self.grouping.strong_mask[m, k]:
            raise KeyError(f"UE {k} is not in W_{m}")
        return self.vectors[m, k]


def build_precoders(g_hat: np.ndarray, grouping: Grouping,
                    gamma: np.ndarray) -> PrecoderSet:
    """Assemble ZF rows for strong sets and MRT rows for weak sets."""
    vectors = g_hat.copy()
    for m in range(grouping.M):
        idx = grouping.strong_set(m)
        if idx.size:
            vectors[m, idx] = zf_precoders(g_hat[m], idx, gamma[m])
    return PrecoderSet(vectors=vectors, grouping=grouping)


def batch_zf_precoders(g_hat_b: np.ndarray, strong_idx: np.ndarray,
                       gamma_m: np.ndarray) -> np.ndarray:
    """ZF vectors for a batch of draws at one AP.

    g_hat_b is (draws, K, N); returns (draws, |S_m|, N).
    """
    gs = g_hat_b[:, strong_idx, :].transpose(0, 2, 1)       # (b, N, s)
    gram = np.einsum("bns,bnt->bst", gs.conj(), gs)
    s = strong_idx.size
    eye = np.broadcast_to(np.eye(s), gram.shape)
    inv = np.linalg.solve(gram, eye)
    q = np.einsum("bns,bst->bnt", gs, inv)                  # (b, N, s)
    return q.transpose(0, 2, 1) * gamma_m[strong_idx][None, :, None]


def zf_outer_product_oracle(n_antennas: int, s_size: int, gamma: float,
                  num_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Sampled outer-product expectation E{t t^H} of a ZF vector.

    Contract: approaches gamma / (N * (N - |S|)) * I as draws grow. With a
    common estimate variance the strong-set columns are exchangeable, so
    each draw contributes all |S| outer products to the sample mean.
    """
    if s_size > n_antennas - 1:
        raise ValueError("need s_size <= N - 1")
    acc = np.zeros((n_antennas, n_antennas), dtype=complex)
    chunk = 2000
    done = 0
    while done < num_draws:
        b = min(chunk, num_draws - done)
        g_hat = np.sqrt(gamma / 2.0) * (
            rng.standard_normal((b, s_size, n_antennas))
            + 1j * rng.standard_normal((b, s_size, n_antennas)))
        t = batch_zf_precoders(g_hat, np.arange(s_size), np.full(s_size, gamma))
        acc += np.einsum("bkn,bkm->nm", t, t.conj()) / s_size
        done += b
    return acc / num_draws
