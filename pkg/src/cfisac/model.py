"""Network configuration, geometry, and large-scale propagation.

Conventions used throughout the package:
  * positions are (x, y) metres on a wrap-around (torus) square of side
    ``area_side``; APs sit at 10 m, UEs at 1.5 m, sensing zones at
    ``zone_height`` metres,
  * large-scale gains (beta, zeta, gamma) are linear,
  * ``rho`` / ``rho_t`` are transmit powers normalized by the noise power.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass

import numpy as np

AP_HEIGHT_M = 10.0
UE_HEIGHT_M = 1.5
MIN_HORIZONTAL_DIST_M = 1.0
SHADOWING_STD_DB = 4.0

BOLTZMANN = 1.381e-23
NOISE_TEMPERATURE_K = 290.0


class ConfigError(ValueError):
    """Raised for invalid configuration values or malformed config files."""


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Static network parameters for one simulation setup."""

    M: int = 30                  # number of APs
    N: int = 16                  # antennas per AP
    K: int = 4                   # number of UEs
    L: int = 2                   # number of sensing zones
    area_side: float = 500.0     # side of the wrap-around square [m]
    zone_height: float = 30.0    # sensing-zone height above ground [m]
    tau: int = 200               # symbols per coherence block
    tau_t: int = 6               # training symbols (default K + L)
    bandwidth_hz: float = 50e6
    noise_figure_db: float = 9.0
    max_power_w: float = 1.0     # per-AP downlink power budget
    pilot_power_w: float = 0.25  # pilot symbol power
    varrho_percent: float = 85.0  # PZF strong-set gain threshold
    kappa_db: float = 8.0        # MASR requirement
    lambda_penalty: float = 10.0  # binarity penalty weight
    rng_seed: int = 0

    def validate(self) -> None:
        if min(self.M, self.N, self.K, self.L) < 1:
            raise ConfigError("M, N, K, L must all be >= 1")
        if self.area_side <= 0:
            raise ConfigError("area_side must be positive")
        if self.tau_t < self.K:
            raise ConfigError(
                f"orthogonal pilots need tau_t >= K (got tau_t={self.tau_t}, K={self.K})")
        if self.tau_t >= self.tau:
            raise ConfigError("tau_t must be smaller than tau")
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth_hz must be positive")
        if self.max_power_w <= 0 or self.pilot_power_w <= 0:
            raise ConfigError("transmit powers must be positive")
        if not 0.0 <= self.varrho_percent <= 100.0:
            raise ConfigError("varrho_percent must lie in [0, 100]")

    @property
    def noise_power_w(self) -> float:
        return noise_power(self.bandwidth_hz, self.noise_figure_db)

    @property
    def rho(self) -> float:
        """Noise-normalized maximum downlink power."""
        return self.max_power_w / self.noise_power_w

    @property
    def rho_t(self) -> float:
        """Noise-normalized pilot power."""
        return self.pilot_power_w / self.noise_power_w

    @property
    def kappa_linear(self) -> float:
        return db_to_linear(self.kappa_db)

    @property
    def prelog(self) -> float:
        return 1.0 - self.tau_t / self.tau


def noise_power(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power k_B * T0 * B * F in watts."""
    if bandwidth_hz <= 0:
        raise ConfigError("bandwidth must be positive")
    return BOLTZMANN * NOISE_TEMPERATURE_K * bandwidth_hz * db_to_linear(noise_figure_db)


def wrap_delta(p1: np.ndarray, p2: np.ndarray, area_side: float) -> np.ndarray:
    """Shortest signed per-axis displacement from p1 to p2 on the torus."""
    d = (np.asarray(p2, dtype=float) - np.asarray(p1, dtype=float) + area_side / 2.0)
    return d % area_side - area_side / 2.0


def wrap_distance(p1, p2, area_side: float) -> float:
    """Torus distance between two points; a third coordinate, when present,
    is treated as absolute height (no wrapping)."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    d = wrap_delta(p1[:2], p2[:2], area_side)
    dz = (p1[2] if p1.size > 2 else 0.0) - (p2[2] if p2.size > 2 else 0.0)
    return float(np.hypot(np.hypot(d[0], d[1]), dz))


def pathloss_beta(distance_m: float, shadow_db: float = 0.0) -> float:
    """Large-scale gain: PL(d) = -30.5 - 36.7 log10(d) dB plus shadowing."""
    if distance_m <= 0:
        raise ValueError("pathloss undefined at zero distance")
    return 10.0 ** ((-30.5 - 36.7 * np.log10(distance_m) + shadow_db) / 10.0)


def aod_angle(ap_pos, zone_pos, area_side: float) -> float:
    """Azimuth of the wrapped AP-to-zone displacement, in (-pi, pi]."""
    d = wrap_delta(np.asarray(ap_pos)[:2], np.asarray(zone_pos)[:2], area_side)
    if d[0] == 0.0 and d[1] == 0.0:
        raise ValueError("AoD undefined for horizontally coincident positions")
    return float(np.arctan2(d[1], d[0]))


@dataclass(frozen=True)
class NetworkRealization:
    """One drop: geometry plus large-scale coefficients.

    Shapes: beta, gamma are (M, K); zeta, theta are (M, L).
    """

    ap_positions: np.ndarray    # (M, 2)
    ue_positions: np.ndarray    # (K, 2)
    zone_positions: np.ndarray  # (L, 2)
    zone_height: float
    area_side: float
    beta: np.ndarray
    zeta: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    rho: float
    rho_t: float

    @property
    def M(self) -> int:
        return self.beta.shape[0]

    @property
    def K(self) -> int:
        return self.beta.shape[1]

    @property
    def L(self) -> int:
        return self.zeta.shape[1]

    def validate(self) -> None:
        if not (np.all(self.beta > 0) and np.all(self.zeta > 0) and np.all(self.gamma > 0)):
            raise ValueError("beta, zeta, gamma must be strictly positive")
        if np.any(self.gamma > self.beta):
            raise ValueError("MMSE variance gamma cannot exceed beta")
        if np.any(self.theta <= -np.pi) or np.any(self.theta > np.pi):
            raise ValueError("theta must lie in (-pi, pi]")
        if self.rho <= 0 or self.rho_t <= 0:
            raise ValueError("normalized powers must be positive")


def draw_realization(config: NetworkConfig, rng: np.random.Generator | None = None) -> NetworkRealization:
    """Draw geometry, shadowed path losses, and MMSE estimate variances."""
    from . import channel  # local import: channel depends on model for types

    config.validate()
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    side = config.area_side
    ap_pos = rng.uniform(0.0, side, size=(config.M, 2))
    ue_pos = rng.uniform(0.0, side, size=(config.K, 2))
    zone_pos = rng.uniform(0.0, side, size=(config.L, 2))
    shadow = rng.normal(0.0, SHADOWING_STD_DB, size=(config.M, config.K))

    dz_ue = AP_HEIGHT_M - UE_HEIGHT_M
    beta = np.empty((config.M, config.K))
    for m in range(config.M):
        for k in range(config.K):
            dh = wrap_delta(ap_pos[m], ue_pos[k], side)
            hdist = max(float(np.hypot(dh[0], dh[1])), MIN_HORIZONTAL_DIST_M)
            beta[m, k] = pathloss_beta(np.hypot(hdist, dz_ue), shadow[m, k])

    dz_zone = config.zone_height - AP_HEIGHT_M
    zeta = np.empty((config.M, config.L))
    theta = np.empty((config.M, config.L))
    for m in range(config.M):
        for l in range(config.L):
            dh = wrap_delta(ap_pos[m], zone_pos[l], side)
            hdist = max(float(np.hypot(dh[0], dh[1])), MIN_HORIZONTAL_DIST_M)
            zeta[m, l] = pathloss_beta(np.hypot(hdist, dz_zone))
            theta[m, l] = aod_angle(ap_pos[m], zone_pos[l], side)

    rho_t = config.rho_t
    gamma = channel.mmse_gamma(beta, config.tau_t, rho_t)
    real = NetworkRealization(
        ap_positions=ap_pos, ue_positions=ue_pos, zone_positions=zone_pos,
        zone_height=config.zone_height, area_side=side,
        beta=beta, zeta=zeta, theta=theta, gamma=gamma,
        rho=config.rho, rho_t=rho_t)
    real.validate()
    return real


@dataclass
class AllocationState:
    """AP modes and power-control coefficients for one realization."""

    a: np.ndarray       # (M,) in [0, 1]; 1 = communication AP
    eta_c: np.ndarray   # (M, K) downlink power coefficients
    eta_s: np.ndarray   # (M, L) sensing power coefficients
    t: float = 0.0      # achieved fairness SINR

    def validate(self, gamma: np.ndarray, nu: np.ndarray, n_antennas: int,
                 tol: float = 1e-8) -> None:
        """Check per-AP power feasibility against the mode vector."""
        if np.any(self.a < -tol) or np.any(self.a > 1 + tol):
            raise ValueError("mode vector outside [0, 1]")
        if np.any(self.eta_c < -tol) or np.any(self.eta_s < -tol):
            raise ValueError("negative power coefficient")
        load_c = (self.eta_c * gamma * nu).sum(axis=1)
        if np.any(load_c > self.a + tol):
            raise ValueError("C-AP power constraint violated")
        load_s = self.eta_s.sum(axis=1)
        if np.any(load_s > (1.0 - self.a) / n_antennas + tol):
            raise ValueError("S-AP power constraint violated")

    @staticmethod
    def zeros(m: int, k: int, l: int) -> "AllocationState":
        return AllocationState(a=np.zeros(m), eta_c=np.zeros((m, k)),
                               eta_s=np.zeros((m, l)), t=0.0)


_NETWORK_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(NetworkConfig)}


def _parse_network_section(section) -> NetworkConfig:
    kwargs = {}
    for key, raw in section.items():
        if key not in _NETWORK_FIELD_TYPES:
            raise ConfigError(f"unknown network option '{key}'")
        target = _NETWORK_FIELD_TYPES[key]
        try:
            kwargs[key] = int(raw) if target == "int" else float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for '{key}': {raw!r}") from exc
    cfg = NetworkConfig(**kwargs)
    if "tau_t" not in kwargs:
        cfg = dataclasses.replace(cfg, tau_t=cfg.K + cfg.L)
    cfg.validate()
    return cfg


def read_config_file(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep field-name case
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    return parser


def load_network_config(path: str) -> NetworkConfig:
    """Load a NetworkConfig from the [network] section of a key/value file.

    Power fields are in watts, angles (none at present) in degrees.
    """
    parser = read_config_file(path)
    if "network" not in parser:
        raise ConfigError(f"missing [network] section in {path}")
    return _parse_network_section(parser["network"])


def save_network_config(config: NetworkConfig, path: str) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["network"] = {f.name: repr(getattr(config, f.name))
                         for f in dataclasses.fields(NetworkConfig)}
    with open(path, "w") as fh:
        parser.write(fh)
