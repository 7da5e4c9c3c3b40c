"""Monte-Carlo campaigns, asymptotic power-scaling experiments, CSV
emission, and the oracle verification suite.

Determinism contract: every realization derives its RNG from
(campaign seed, sweep index, realization index), so records are
independent of execution order and worker count; rows are sorted before
writing. Wall-clock columns are the only non-reproducible output.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, metrics, optimize
from .channel import array_response, mmse_gamma, _complex_normal
from .model import (ConfigError, NetworkConfig, draw_realization,
                    _parse_network_section, read_config_file)
from .precoding import pzf_grouping, zf_outer_product_oracle

SCHEMES = ("JAP-OPA", "GAP-OPA", "RAP-OPA")
SWEEP_AXES = ("none", "ap_count", "kappa_db", "antennas")


@dataclass(frozen=True)
class CampaignSpec:
    """One experiment: a base network, schemes, realizations, and a sweep.

    The "ap_count" sweep keeps the total antenna count M*N of the base
    config fixed while varying M; "kappa_db" and "antennas" replace the
    corresponding config field directly.
    """

    network: NetworkConfig
    schemes: tuple = SCHEMES
    realizations: int = 50
    sweep_axis: str = "none"
    sweep_values: tuple = ()
    out_dir: str = "campaign_out"

    def validate(self) -> None:
        self.network.validate()
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme '{s}'")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis '{self.sweep_axis}'")
        if self.sweep_axis != "none":
            vals = list(self.sweep_values)
            if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError("sweep values must be strictly increasing")
            for v in vals:
                self.config_at(v).validate()

    def config_at(self, value) -> NetworkConfig:
        base = self.network
        if self.sweep_axis == "none":
            return base
        if self.sweep_axis == "ap_count":
            total = base.M * base.N
            m = int(value)
            n = total // m
            if m * n != total:
                raise ConfigError(f"M={m} does not divide M*N={total}")
            return dataclasses.replace(base, M=m, N=n)
        if self.sweep_axis == "kappa_db":
            return dataclasses.replace(base, kappa_db=float(value))
        return dataclasses.replace(base, N=int(value))

    @property
    def points(self) -> tuple:
        return (0.0,) if self.sweep_axis == "none" else tuple(self.sweep_values)


@dataclass
class RealizationRecord:
    scheme: str
    sweep_value: float
    realization: int
    seed: int
    sensing_success: bool
    min_se: float
    per_ue_se: np.ndarray
    iterations: int
    wall_ms: float
    s_aps: int = 0


@dataclass
class CampaignResult:
    spec: CampaignSpec
    records: list = field(default_factory=list)
    m_s_by_point: dict = field(default_factory=dict)

    def select(self, scheme: str, sweep_value=None) -> list:
        return [r for r in self.records if r.scheme == scheme
                and (sweep_value is None or r.sweep_value == sweep_value)]

    def success_rate(self, scheme: str, sweep_value=None) -> float:
        rows = self.select(scheme, sweep_value)
        return sum(r.sensing_success for r in rows) / len(rows)

    def mean_min_se(self, scheme: str, sweep_value=None) -> float:
        rows = self.select(scheme, sweep_value)
        return float(np.mean([r.min_se for r in rows]))

    def per_ue_cdf(self, scheme: str, sweep_value=None):
        """Empirical CDF over all per-UE SE samples (zeros included)."""
        rows = self.select(scheme, sweep_value)
        values = np.sort(np.concatenate([r.per_ue_se for r in rows]))
        return values, np.arange(1, values.size + 1) / values.size


def realization_seed(campaign_seed: int, trial: int) -> int:
    """Per-trial seed. Deliberately independent of the sweep point so a
    kappa sweep scores the same network drops at every requirement level
    (paired comparisons; success rates then inherit the constraint
    monotonicity)."""
    ss = np.random.SeedSequence(entropy=campaign_seed, spawn_key=(trial,))
    return int(ss.generate_state(1, np.uint64)[0])


def _scheme_rng(seed: int, scheme: str) -> np.random.Generator:
    tag = SCHEMES.index(scheme)
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(1000 + tag,)))


def draw_for_seed(config: NetworkConfig, seed: int):
    """Geometry and grouping for one realization seed."""
    geom_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    real = draw_realization(config, geom_rng)
    grouping = pzf_grouping(real.beta, config.varrho_percent, config.N)
    return real, grouping


def run_scheme(config: NetworkConfig, real, grouping, scheme: str, seed: int,
               m_s: int | None = None):
    """Dispatch one allocation scheme with its seed-derived RNG."""
    rng = _scheme_rng(seed, scheme)
    if scheme == "JAP-OPA":
        return optimize.jap_opa(real, grouping, config, rng=rng)
    if scheme == "GAP-OPA":
        return optimize.gap_opa(real, grouping, config)
    if scheme == "RAP-OPA":
        return optimize.rap_opa(real, grouping, config,
                                config.M // 2 if m_s is None else m_s, rng)
    raise ConfigError(f"unknown scheme '{scheme}'")


def run_realization(config: NetworkConfig, scheme: str, seed: int,
                    m_s: int | None = None) -> RealizationRecord:
    """Draw one network drop, run one scheme, and evaluate the outcome.

    Scheme-internal infeasibility is recorded in the result, not raised.
    """
    t0 = time.perf_counter()
    real, grouping = draw_for_seed(config, seed)
    res = run_scheme(config, real, grouping, scheme, seed, m_s)
    wall_ms = (time.perf_counter() - t0) * 1e3
    return RealizationRecord(
        scheme=scheme, sweep_value=0.0, realization=0, seed=seed,
        sensing_success=res.sensing_success, min_se=res.min_se,
        per_ue_se=res.per_ue_se, iterations=res.iterations, wall_ms=wall_ms,
        s_aps=int(round(config.M - res.alloc.a.sum())))


def _job(args):
    config, scheme, seed, m_s = args
    return run_realization(config, scheme, seed, m_s)


def _run_batch(jobs, workers: int):
    if workers <= 1:
        return [_job(j) for j in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs))


def fmt9(x) -> str:
    return f"{float(x):.9g}"


def run_campaign(spec: CampaignSpec, workers: int = 1, quiet: bool = True,
                 write_output: bool = True) -> CampaignResult:
    """Run all (sweep point, scheme, realization) cells; write CSV + metadata.

    JAP-OPA runs first at each sweep point so the RAP-OPA sensing-AP
    count can be set to the rounded mean optimized S-AP count (M // 2
    when JAP-OPA is not part of the campaign).
    """
    spec.validate()
    result = CampaignResult(spec=spec)
    campaign_seed = spec.network.rng_seed
    seeds = [realization_seed(campaign_seed, r)
             for r in range(spec.realizations)]

    def record_rows(rows, value):
        for r, row in enumerate(rows):
            row.sweep_value = float(value)
            row.realization = r
            result.records.append(row)
        if not quiet:
            print(f"sweep={value} scheme={rows[0].scheme}: "
                  f"success={np.mean([r.sensing_success for r in rows]):.2f} "
                  f"mean min-SE={np.mean([r.min_se for r in rows]):.3f} "
                  f"mean wall={np.mean([r.wall_ms for r in rows]) / 1e3:.2f}s")

    # JAP-OPA first across all sweep points: the RAP-OPA sensing-AP count
    # is the campaign-wide rounded mean of the optimized S-AP counts
    s_ap_counts = []
    if "JAP-OPA" in spec.schemes:
        for value in spec.points:
            config = spec.config_at(value)
            rows = _run_batch([(config, "JAP-OPA", s, None) for s in seeds],
                              workers)
            record_rows(rows, value)
            s_ap_counts.extend(r.s_aps for r in rows)

    for value in spec.points:
        config = spec.config_at(value)
        m_s = (int(np.clip(round(np.mean(s_ap_counts)), 0, config.M))
               if s_ap_counts else config.M // 2)
        for scheme in spec.schemes:
            if scheme == "JAP-OPA":
                continue
            jobs = [(config, scheme, s, m_s if scheme == "RAP-OPA" else None)
                    for s in seeds]
            record_rows(_run_batch(jobs, workers), value)
        result.m_s_by_point[float(value)] = m_s
    if write_output:
        os.makedirs(spec.out_dir, exist_ok=True)
        write_csv(result, os.path.join(spec.out_dir, "campaign.csv"))
        write_metadata(result, os.path.join(spec.out_dir, "metadata.cfg"))
    return result


def csv_header(k_ues: int) -> str:
    ue_cols = ",".join(f"se_ue_{k + 1}" for k in range(k_ues))
    return ("scheme,sweep_value,realization,seed,sensing_success,min_se,"
            + ue_cols + ",iterations,wall_ms")


def write_csv(result: CampaignResult, path: str) -> None:
    """Write records sorted by (scheme, sweep point, realization)."""
    k_ues = result.spec.network.K
    rows = sorted(result.records,
                  key=lambda r: (r.scheme, r.sweep_value, r.realization))
    try:
        with open(path, "w") as fh:
            fh.write(csv_header(k_ues) + "\n")
            for r in rows:
                se_cells = ",".join(fmt9(v) for v in r.per_ue_se)
                fh.write(f"{r.scheme},{fmt9(r.sweep_value)},{r.realization},"
                         f"{r.seed},{int(r.sensing_success)},{fmt9(r.min_se)},"
                         f"{se_cells},{r.iterations},{fmt9(r.wall_ms)}\n")
    except OSError as exc:
        raise RuntimeError(f"cannot write campaign CSV to {path}: {exc}") from exc


def write_metadata(result: CampaignResult, path: str) -> None:
    spec = result.spec
    lines = [f"# cfisac {__version__} campaign metadata", "[network]"]
    for f in dataclasses.fields(NetworkConfig):
        lines.append(f"{f.name} = {getattr(spec.network, f.name)!r}")
    lines += ["", "[campaign]",
              f"schemes = {', '.join(spec.schemes)}",
              f"realizations = {spec.realizations}",
              f"sweep_axis = {spec.sweep_axis}",
              f"sweep_values = {', '.join(str(v) for v in spec.sweep_values)}",
              f"out_dir = {spec.out_dir}", "", "[rap]"]
    for value, m_s in result.m_s_by_point.items():
        lines.append(f"m_s_at_{value} = {m_s}")
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise RuntimeError(f"cannot write metadata to {path}: {exc}") from exc


def load_campaign_spec(path: str) -> CampaignSpec:
    parser = read_config_file(path)
    if "network" not in parser:
        raise ConfigError(f"missing [network] section in {path}")
    network = _parse_network_section(parser["network"])
    kwargs = {}
    if "campaign" in parser:
        sec = parser["campaign"]
        if "schemes" in sec:
            kwargs["schemes"] = tuple(s.strip() for s in sec["schemes"].split(","))
        if "realizations" in sec:
            kwargs["realizations"] = int(sec["realizations"])
        if "sweep_axis" in sec:
            kwargs["sweep_axis"] = sec["sweep_axis"].strip()
        if "sweep_values" in sec:
            kwargs["sweep_values"] = tuple(
                float(v) for v in sec["sweep_values"].split(",") if v.strip())
        if "out_dir" in sec:
            kwargs["out_dir"] = sec["out_dir"].strip()
    spec = CampaignSpec(network=network, **kwargs)
    spec.validate()
    return spec


# ---------------------------------------------------------------------------
# asymptotic power-scaling experiments (MRT at all C-APs, equal power)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticRow:
    size: int
    rho: float
    desired_power: float
    interference_power: float
    ratio: float


def _asymptotic_point(beta, theta, config: NetworkConfig, m: int,
                      n: int, rho: float, draws: int,
                      fade_rng: np.random.Generator):
    """Fading-MC estimate of (desired, interference) powers at UE 0 for one
    geometry, MRT at the even-index APs and sensing at the odd ones."""
    beta = beta[:m]
    gamma = mmse_gamma(beta, config.tau_t, config.rho_t)
    theta = theta[:m]
    comm = np.flatnonzero(np.arange(m) % 2 == 0)
    sens = np.flatnonzero(np.arange(m) % 2 == 1)

    eta_c = 1.0 / (n * gamma.sum(axis=1))          # (M,)
    eta_s = 1.0 / (n * config.L)
    amp_c = np.sqrt(rho * eta_c[comm])             # (Mc,)
    steer = array_response(theta[sens], n)         # (Ms, L, N)

    gain_sum = 0.0 + 0.0j
    own2 = 0.0
    iui = np.zeros(config.K)
    ir = 0.0
    done = 0
    chunk = max(1, min(1000, int(4e6 // max(1, m * config.K * n))))
    while done < draws:
        b = min(chunk, draws - done)
        g_hat = _complex_normal(fade_rng, gamma[None, :, :, None],
                                (b, m, config.K, n))
        g_tilde = _complex_normal(fade_rng, (beta - gamma)[None, :, :, None],
                                  (b, m, config.K, n))
        g = g_hat + g_tilde
        # effective gain of symbol k' at UE 0 through the C-APs
        eff = np.einsum("bmn,bmjn,m->bj", g[:, comm, 0].conj(),
                        g_hat[:, comm], amp_c, optimize=True)
        gain_sum += eff[:, 0].sum()
        own2 += float((np.abs(eff[:, 0]) ** 2).sum())
        iui += (np.abs(eff) ** 2).sum(axis=0)
        leak = np.abs(np.einsum("bmn,mln->bml", g[:, sens, 0].conj(),
                                steer, optimize=True)) ** 2
        ir += float((rho * eta_s * leak).sum())
        done += b
    ds = gain_sum / draws
    desired = float(np.abs(ds) ** 2)
    bu = own2 / draws - desired
    interference = bu + float(iui[1:].sum()) / draws + ir / draws
    return desired, interference


def _ring_geometry(config: NetworkConfig, m: int, rotation: float,
                   ue_pos: np.ndarray, zone_pos: np.ndarray,
                   shadow: np.ndarray):
    """Controlled layout for the scaling experiments: m APs equally spaced
    on a ring of radius side/4, UEs inside the central disk of half that
    radius. Bounding the AP-UE distance away from zero removes the
    heavy pathloss tail that otherwise swamps the desk-scale trend."""
    from .model import AP_HEIGHT_M, UE_HEIGHT_M, aod_angle, pathloss_beta
    side = config.area_side
    center = side / 2.0
    ang = 2.0 * np.pi * np.arange(m) / m + rotation
    ap = center + side / 4.0 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    shadow = shadow[:m]
    dz = AP_HEIGHT_M - UE_HEIGHT_M
    beta = np.zeros((m, config.K))
    theta = np.zeros((m, config.L))
    for i in range(m):
        for k in range(config.K):
            dh = max(float(np.linalg.norm(ap[i] - ue_pos[k])), 1.0)
            beta[i, k] = pathloss_beta(np.hypot(dh, dz), shadow[i, k])
        for l in range(config.L):
            theta[i, l] = aod_angle(ap[i], zone_pos[l], side)
    return beta, theta


def asymptotic_sweep(case: str, config: NetworkConfig, energy: float,
                     sizes, draws: int = 1500, seed: int | None = None,
                     geo_reps: int = 12) -> list:
    """Interference-to-desired power ratio under the power-scaling laws.

    Case "I" grows the AP count at a fixed C/S split (per-AP power
    energy / M_c^2); case "II" grows the per-AP antenna count (power
    energy / N). MRT precoding at every C-AP with equal power control;
    the reference UE is UE 0. Powers are averaged over geo_reps
    independent drops of the controlled ring layout, each drop sharing
    its UE and zone placement across sizes.
    """
    if case not in ("I", "II"):
        raise ConfigError("case must be 'I' or 'II'")
    sizes = [int(s) for s in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError("sizes must be strictly increasing")
    if case == "I" and any(s % 2 for s in sizes):
        raise ConfigError("case I sizes must be even (fixed M_c/M_s = 1)")
    m_max = max(sizes) if case == "I" else config.M
    if m_max % 2:
        raise ConfigError("config.M must be even for case II")
    entropy = config.rng_seed if seed is None else seed

    des_acc = np.zeros(len(sizes))
    int_acc = np.zeros(len(sizes))
    rho_by_size = []
    for rep in range(geo_reps):
        place_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=entropy, spawn_key=(7, rep, 1000)))
        rotation = place_rng.uniform(0.0, 2.0 * np.pi)
        side = config.area_side
        radius = side / 8.0 * np.sqrt(place_rng.uniform(0.0, 1.0, config.K))
        phi = place_rng.uniform(0.0, 2.0 * np.pi, config.K)
        ue_pos = side / 2.0 + np.stack([radius * np.cos(phi),
                                        radius * np.sin(phi)], axis=1)
        zone_pos = place_rng.uniform(0.0, side, size=(config.L, 2))
        from .model import SHADOWING_STD_DB
        shadow_full = place_rng.normal(0.0, SHADOWING_STD_DB,
                                       size=(m_max, config.K))
        for j, size in enumerate(sizes):
            m, n = (size, config.N) if case == "I" else (m_max, size)
            rho = energy / (m // 2) ** 2 if case == "I" else energy / size
            if rep == 0:
                rho_by_size.append(rho)
            point_rng = np.random.default_rng(
                np.random.SeedSequence(entropy=entropy, spawn_key=(7, rep, j)))
            beta, theta = _ring_geometry(config, m, rotation, ue_pos,
                                         zone_pos, shadow_full)
            desired, interference = _asymptotic_point(
                beta, theta, config, m, n, rho, draws, point_rng)
            des_acc[j] += desired
            int_acc[j] += interference
    rows = []
    for j, size in enumerate(sizes):
        rows.append(AsymptoticRow(
            size=size, rho=rho_by_size[j],
            desired_power=des_acc[j] / geo_reps,
            interference_power=int_acc[j] / geo_reps,
            ratio=float(int_acc[j] / des_acc[j])))
    return rows


# ---------------------------------------------------------------------------
# oracle verification suite (ZF outer product, ZF exactness, closed form vs MC)
# ---------------------------------------------------------------------------

def verify_suite(quick: bool = False) -> list:
    """Run the analytical-oracle cross checks; returns (name, ok, detail)."""
    draws = 4000 if quick else 20000
    checks = []
    rng = np.random.default_rng(1234)

    n, s_size, gamma = 8, 3, 1.7
    est = zf_outer_product_oracle(n, s_size, gamma, draws, rng)
    target = gamma / (n * (n - s_size)) * np.eye(n)
    err = np.linalg.norm(est - target) / np.linalg.norm(target)
    checks.append(("zf_outer_product", err < 0.02 * (2.5 if quick else 1.0),
                   f"frobenius rel err {err:.4f}"))

    config = NetworkConfig(M=8, N=8, K=4, L=2, tau_t=6, rng_seed=77)
    real = draw_realization(config)
    grouping = pzf_grouping(real.beta, config.varrho_percent, config.N)
    from .channel import draw_channels
    from .precoding import build_precoders
    chan = draw_channels(real, rng, config.N)
    pre = build_precoders(chan.g_hat, grouping, real.gamma)
    worst = 0.0
    for m in range(real.M):
        idx = grouping.strong_set(m)
        if not idx.size:
            continue
        cross = chan.g_hat[m, idx].conj() @ pre.vectors[m, idx].T
        worst = max(worst, float(np.abs(cross - np.diag(real.gamma[m, idx])).max()))
    checks.append(("zf_orthogonality", worst <= 1e-9, f"max residual {worst:.2e}"))

    a = (np.arange(config.M) % 2 == 0).astype(float)
    alloc = optimize.equal_power(real, grouping, a, config)
    closed = metrics.sinr_closed_form(real, grouping, alloc, config.N)
    mc = metrics.mc_sinr_oracle(real, grouping, alloc, draws, rng, config.N)
    rel = float(np.max(np.abs(closed - mc) / mc))
    checks.append(("sinr_closed_form_vs_mc", rel < (0.06 if quick else 0.03),
                   f"max rel err {rel:.4f}"))

    com = metrics.beampattern_com(real, grouping, alloc, config.N)
    des, dis = metrics.beampattern_sen(real, alloc, 0, config.N)
    total = com + des + dis
    mcb = metrics.mc_beampattern_oracle(real, grouping, alloc, real.theta[:, 0],
                                        draws, rng, config.N)
    relb = abs(total - mcb) / total
    checks.append(("beampattern_vs_mc", relb < (0.06 if quick else 0.03),
                   f"rel err {relb:.4f}"))
    return checks
