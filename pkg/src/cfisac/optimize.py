"""AP mode selection and power allocation: JAP-OPA (penalized SCA),
GAP-OPA (greedy modes + bisection power control), and RAP-OPA.

All conic subproblems are posed in normalized variables to keep the solver
well conditioned:

  eh[m, k] = eta_c[m, k] * gamma[m, k] * nu[m, k]   (C-AP power share, <= a_m)
  p[m, l]  = N * eta_s[m, l]                        (S-AP power share, <= 1 - a_m)

In these units the per-UE SINR reads (sums over APs m, interferers k')

  SINR_k = (sum_m sqrt(a_m eh[m,k]) G[m,k])^2
           / (sum_m a_m sum_k' W[m,k,k'] eh[m,k'] + sum_m (1-a_m) B[m,k] sum_l p[m,l] + 1)

with G = sqrt(rho*gamma/nu)*f, W = rho*iui_weight/(gamma*nu), B = rho*beta,
and the MASR of zone l is

  N * sum_m (1-a_m) p[m,l]
  / (sum_{m,k} a_m eh[m,k] + sum_m (1-a_m) sum_{l'!=l} cn[m,l,l'] p[m,l'])

where cn = |a^H(theta_l) a(theta_l')|^2 / N.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .conic import ConicProgram, solve_conic
from .model import AllocationState, NetworkConfig, NetworkRealization
from .precoding import Grouping

# relative margin applied to kappa inside the optimizers so that a returned
# "success" survives independent re-evaluation of the MASR at kappa exactly
MASR_MARGIN = 1e-6
# minimum per-zone mainlobe power share enforced at the t = 0 feasibility
# probe; rules out the vacuous all-zero-power "sensing" corner
MIN_ZONE_SHARE = 1e-6


@dataclass(frozen=True)
class ScaledData:
    """Instance data in normalized power-share units (see module docstring)."""

    gsig: np.ndarray      # (M, K)
    w_iui: np.ndarray     # (M, K, K)
    b_sens: np.ndarray    # (M, K)
    cross_n: np.ndarray   # (M, L, L), zero diagonal
    gamma_nu: np.ndarray  # (M, K)
    t_max: float


def build_scaled_data(real: NetworkRealization, grouping: Grouping,
                      n_antennas: int,
                      coeffs: metrics.DerivedCoefficients | None = None) -> ScaledData:
    if coeffs is None:
        coeffs = metrics.derive_coefficients(real, grouping, n_antennas)
    gamma_nu = real.gamma * coeffs.nu
    gsig = np.sqrt(real.rho * real.gamma / coeffs.nu) * coeffs.f
    w_iui = real.rho * coeffs.iui_weight / gamma_nu[:, None, :]
    b_sens = real.rho * real.beta
    cross_n = coeffs.cross_gain / n_antennas
    for l in range(real.L):
        cross_n[:, l, l] = 0.0
    t_max = float((gsig.sum(axis=0) ** 2).max())
    return ScaledData(gsig=gsig, w_iui=w_iui, b_sens=b_sens, cross_n=cross_n,
                      gamma_nu=gamma_nu, t_max=t_max)


def equal_power(real: NetworkRealization, grouping: Grouping, a: np.ndarray,
                config: NetworkConfig) -> AllocationState:
    """Equal power control for a fixed binary mode vector."""
    a = np.asarray(a, dtype=float)
    eta_c = np.where(a[:, None] > 0.5,
                     1.0 / (config.N * real.gamma.sum(axis=1))[:, None],
                     0.0) * np.ones((real.M, real.K))
    eta_s = np.where(a[:, None] > 0.5, 0.0,
                     1.0 / (config.N * real.L)) * np.ones((real.M, real.L))
    alloc = AllocationState(a=a.copy(), eta_c=eta_c, eta_s=eta_s)
    sinr = metrics.sinr_closed_form(real, grouping, alloc, config.N)
    alloc.t = float(sinr.min())
    return alloc


@dataclass
class ScaState:
    """Final SCA iterate with its linearization constants."""

    n: int
    a: np.ndarray
    eta_c: np.ndarray
    eta_s: np.ndarray
    t: float
    mu: np.ndarray | None = None     # (M, K)
    omega: np.ndarray | None = None  # (M, L)
    q: np.ndarray | None = None      # (K,)
    z: np.ndarray | None = None      # (K,)
    objective_trace: list = field(default_factory=list)


@dataclass
class SchemeResult:
    """Outcome of one allocation scheme on one network realization."""

    alloc: AllocationState
    min_se: float
    per_ue_se: np.ndarray
    sensing_success: bool
    iterations: int
    wall_time: float
    feasible: bool = True
    objective_trace: list | None = None
    refinement_trace: list | None = None
    relaxed_modes: np.ndarray | None = None
    epigraph_gap: float | None = None
    sca_state: ScaState | None = None


def _alloc_from_shares(a, eh, p, data: ScaledData, n_antennas: int,
                       t: float) -> AllocationState:
    eta_c = np.clip(eh, 0.0, None) / data.gamma_nu
    eta_s = np.clip(p, 0.0, None) / n_antennas
    return AllocationState(a=a, eta_c=eta_c, eta_s=eta_s, t=t)


def _project_feasible(alloc: AllocationState, gamma, nu, n_antennas: int) -> None:
    """Rescale power rows so the per-AP constraints hold exactly."""
    np.clip(alloc.eta_c, 0.0, None, out=alloc.eta_c)
    np.clip(alloc.eta_s, 0.0, None, out=alloc.eta_s)
    load_c = (alloc.eta_c * gamma * nu).sum(axis=1)
    scale = np.where(load_c > alloc.a, alloc.a / np.maximum(load_c, 1e-300), 1.0)
    alloc.eta_c *= scale[:, None]
    cap_s = (1.0 - alloc.a) / n_antennas
    load_s = alloc.eta_s.sum(axis=1)
    scale = np.where(load_s > cap_s, cap_s / np.maximum(load_s, 1e-300), 1.0)
    alloc.eta_s *= scale[:, None]


def _infeasible_result(real: NetworkRealization, wall: float,
                       iterations: int = 0, trace=None) -> SchemeResult:
    return SchemeResult(
        alloc=AllocationState.zeros(real.M, real.K, real.L),
        min_se=0.0, per_ue_se=np.zeros(real.K), sensing_success=False,
        iterations=iterations, wall_time=wall, feasible=False,
        objective_trace=trace)


def _finalize(real: NetworkRealization, grouping: Grouping, config: NetworkConfig,
              alloc: AllocationState, feasible: bool, iterations: int,
              wall: float, kappa_linear: float | None = None) -> SchemeResult:
    """Evaluate a candidate allocation and apply the zero-SE accounting rule:
    a realization counts only when feasible and every zone's MASR holds."""
    kappa_req = kappa_linear if kappa_linear is not None else config.kappa_linear
    coeffs = metrics.derive_coefficients(real, grouping, config.N)
    _project_feasible(alloc, real.gamma, coeffs.nu, config.N)
    alloc.validate(real.gamma, coeffs.nu, config.N)
    sinr = metrics.sinr_closed_form(real, grouping, alloc, config.N, coeffs)
    _, flags = metrics.masr(real, grouping, alloc, kappa_req, config.N, coeffs)
    success = feasible and bool(flags.all())
    if success and kappa_req > 0:
        desired = ((1.0 - alloc.a)[:, None] * alloc.eta_s).sum(axis=0)
        if np.any(desired <= 0.0):
            success = False  # a zone with no mainlobe power is not sensed
    se = metrics.se_from_sinr(sinr, config.tau, config.tau_t)
    per_ue_se = se if success else np.zeros(real.K)
    alloc.t = float(sinr.min()) if success else 0.0
    return SchemeResult(alloc=alloc, min_se=float(per_ue_se.min()),
                        per_ue_se=per_ue_se, sensing_success=success,
                        iterations=iterations, wall_time=wall, feasible=feasible)


# ---------------------------------------------------------------------------
# power allocation for fixed AP modes (bisection over the fairness SINR)
# ---------------------------------------------------------------------------

def _p5_probe(data: ScaledData, comm, sens, kappa: float, t: float,
              z_lin: np.ndarray, k_ues: int, l_zones: int, n_antennas: int):
    """Max-slack SOCP: is fairness level t achievable for these modes?

    Returns (slack, xi, p); slack >= 0 certifies feasibility of the
    surrogate, hence of the true constraint set.
    """
    nc, ns = len(comm), len(sens)
    n_xi, n_p = nc * k_ues, ns * l_zones
    n = n_xi + n_p + 1
    idx_xi = np.arange(n_xi).reshape(nc, k_ues)
    idx_p = n_xi + np.arange(n_p).reshape(ns, l_zones)
    idx_s = n - 1

    obj = np.zeros(n)
    obj[idx_s] = 1.0
    lower = np.zeros(n)
    lower[idx_s] = -np.inf
    prog = ConicProgram(n=n, objective=obj, lower=lower)

    gsig_c = data.gsig[comm]
    b_s = data.b_sens[sens]
    cross_s = data.cross_n[sens]

    if t > 0.0:
        w_c = data.w_iui[comm]
        for k in range(k_ues):
            # z(2x - z) - t (sum_S B sum_l p + 1) - s >= t sum W xi^2
            z1 = np.zeros(n)
            z1[idx_xi[:, k]] = z_lin[k] * gsig_c[:, k] / t
            if ns:
                z1[idx_p.ravel()] -= np.repeat(b_s[:, k], l_zones) / 2.0
            z1[idx_s] = -0.5 / t
            c1 = -(z_lin[k] ** 2) / (2.0 * t) - 0.5
            z3 = np.zeros((n_xi, n))
            z3[np.arange(n_xi), idx_xi.ravel()] = np.sqrt(w_c[:, k, :]).ravel()
            prog.add("rsoc", np.vstack([z1, np.zeros(n), z3]),
                     np.concatenate([[c1, 1.0], np.zeros(n_xi)]))

    if kappa > 0.0:
        for l in range(l_zones):
            # sum_C xi^2 <= [N sum_S p_l - kappa sum cn p (- s at t=0)] / kappa
            lin = np.zeros(n)
            if ns:
                lin[idx_p[:, l]] += n_antennas / kappa
                lin[idx_p.ravel()] -= cross_s[:, l, :].ravel()
            if t == 0.0:
                lin[idx_s] = -1.0 / kappa
            if nc:
                z3 = np.zeros((n_xi, n))
                z3[np.arange(n_xi), idx_xi.ravel()] = 1.0
                prog.add("rsoc", np.vstack([lin / 2.0, np.zeros(n), z3]),
                         np.concatenate([[0.0, 1.0], np.zeros(n_xi)]))
            else:
                prog.add("nonneg", lin[None, :], np.zeros(1))
            if t == 0.0 and ns:
                row = np.zeros(n)
                row[idx_p[:, l]] = 1.0
                prog.add("nonneg", row[None, :], np.array([-MIN_ZONE_SHARE]))

    for i in range(nc):
        z3 = np.zeros((k_ues, n))
        z3[np.arange(k_ues), idx_xi[i]] = 1.0
        prog.add("rsoc", np.vstack([np.zeros(n), np.zeros(n), z3]),
                 np.concatenate([[0.5, 1.0], np.zeros(k_ues)]))
    if ns:
        rows = np.zeros((ns, n))
        rows[np.arange(ns)[:, None], idx_p] = -1.0
        prog.add("nonneg", rows, np.ones(ns))

    sol = solve_conic(prog, feas_tol=1e-8, gap_tol=1e-8)
    if sol.status != "optimal":
        return -np.inf, None, None
    xi = sol.x[idx_xi] if nc else np.zeros((0, k_ues))
    p = sol.x[idx_p] if ns else np.zeros((0, l_zones))
    return float(sol.x[idx_s]), xi, p


def check_power_feasibility(real: NetworkRealization, grouping: Grouping,
                            config: NetworkConfig, a_bin: np.ndarray, t: float,
                            kappa_linear: float | None = None,
                            data: ScaledData | None = None,
                            z_init: np.ndarray | None = None,
                            inner_iters: int = 6):
    """Inner-SCA feasibility probe at fairness level t (deterministic)."""
    if data is None:
        data = build_scaled_data(real, grouping, config.N)
    kappa_req = kappa_linear if kappa_linear is not None else config.kappa_linear
    kappa = kappa_req * (1.0 + MASR_MARGIN)
    comm = np.flatnonzero(np.asarray(a_bin) > 0.5)
    sens = np.flatnonzero(np.asarray(a_bin) <= 0.5)
    if sens.size == 0 and kappa_req > 0:
        return False, None, None
    if z_init is None:
        xi0 = np.sqrt(data.gamma_nu[comm]
                      / (config.N * real.gamma[comm].sum(axis=1))[:, None]) \
            if comm.size else np.zeros((0, real.K))
        z = (xi0 * data.gsig[comm]).sum(axis=0)
    else:
        z = z_init
    best = -np.inf
    for _ in range(max(1, inner_iters)):
        slack, xi, p = _p5_probe(data, comm, sens, kappa, t, z,
                                 real.K, real.L, config.N)
        if xi is None:
            return False, None, None
        if slack >= 0.0:
            return True, xi, p
        if t == 0.0 or slack <= best + 1e-9 * max(1.0, abs(best)):
            break
        best = slack
        z = (xi * data.gsig[comm]).sum(axis=0)
    return False, None, None


def pa_fixed_modes(real: NetworkRealization, grouping: Grouping,
                   config: NetworkConfig, a_bin: np.ndarray,
                   kappa_linear: float | None = None,
                   tol: float = 1e-3) -> SchemeResult:
    """Max-min power control for fixed binary AP modes.

    Outer bisection on the fairness SINR t over [0, t_max]; each probe is a
    small max-slack SOCP whose surrogate feasibility certifies the true
    constraints, so every accepted t is genuinely achievable.
    """
    start = time.perf_counter()
    a_bin = np.asarray(a_bin, dtype=float).round()
    data = build_scaled_data(real, grouping, config.N)
    solves = 1

    feasible, xi, p = check_power_feasibility(
        real, grouping, config, a_bin, 0.0, kappa_linear, data)
    if not feasible:
        return _infeasible_result(real, time.perf_counter() - start, solves)

    comm = np.flatnonzero(a_bin > 0.5)
    sens = np.flatnonzero(a_bin <= 0.5)
    best = (0.0, xi, p)
    if comm.size:
        lo, hi = 0.0, data.t_max
        z_warm = None
        while hi - lo > tol * max(1.0, lo):
            mid = 0.5 * (lo + hi)
            ok, xi, p = check_power_feasibility(
                real, grouping, config, a_bin, mid, kappa_linear, data,
                z_init=z_warm)
            solves += 1
            if ok:
                best = (mid, xi, p)
                z_warm = (xi * data.gsig[comm]).sum(axis=0)
                lo = mid
            else:
                hi = mid

    t_star, xi, p = best
    eh = np.zeros((real.M, real.K))
    pp = np.zeros((real.M, real.L))
    if comm.size:
        eh[comm] = np.clip(xi, 0.0, None) ** 2
    if sens.size:
        pp[sens] = np.clip(p, 0.0, None)
    alloc = _alloc_from_shares(a_bin, eh, pp, data, config.N, t_star)
    return _finalize(real, grouping, config, alloc, True, solves,
                     time.perf_counter() - start, kappa_linear)


def rap_opa(real: NetworkRealization, grouping: Grouping, config: NetworkConfig,
            m_s: int, rng: np.random.Generator,
            kappa_linear: float | None = None) -> SchemeResult:
    """Random AP mode selection (m_s sensing APs) + optimized power allocation."""
    if not 0 <= m_s <= real.M:
        raise ValueError("m_s must lie in [0, M]")
    a = np.ones(real.M)
    a[rng.choice(real.M, size=m_s, replace=False)] = 0.0
    return pa_fixed_modes(real, grouping, config, a, kappa_linear)


# ---------------------------------------------------------------------------
# greedy AP mode selection (all-sensing start, best single switch per round)
# ---------------------------------------------------------------------------

def greedy_ap_selection(real: NetworkRealization, grouping: Grouping,
                        config: NetworkConfig, kappa_linear: float | None = None,
                        e_min: float = 1e-3):
    """Greedy mode selection under equal power control.

    Starting from all APs sensing, each round tentatively switches one
    remaining S-AP to communication, keeps only candidates that satisfy
    every zone's MASR, and commits the switch with the best min-SINR when
    the relative improvement reaches e_min. Returns (mode vector,
    min-SINR trace). The threshold is relative because the absolute
    min-SINR starts many orders of magnitude below its final value.
    """
    kappa = kappa_linear if kappa_linear is not None else config.kappa_linear
    coeffs = metrics.derive_coefficients(real, grouping, config.N)

    def score(a_vec):
        alloc = equal_power(real, grouping, a_vec, config)
        sinr = metrics.sinr_closed_form(real, grouping, alloc, config.N, coeffs)
        _, flags = metrics.masr(real, grouping, alloc, kappa, config.N, coeffs)
        return float(sinr.min()), bool(flags.all())

    a = np.zeros(real.M)
    current, _ = score(a)
    trace = [current]
    while a.sum() < real.M:
        candidates = np.flatnonzero(a == 0.0)
        scores = np.zeros(candidates.size)
        for i, m in enumerate(candidates):
            a_try = a.copy()
            a_try[m] = 1.0
            value, masr_ok = score(a_try)
            scores[i] = value if masr_ok else 0.0
        pick = int(np.argmax(scores))
        if scores[pick] - current < e_min * max(current, 1e-9):
            break
        a[candidates[pick]] = 1.0
        current = scores[pick]
        trace.append(current)
    return a, trace


def gap_opa(real: NetworkRealization, grouping: Grouping, config: NetworkConfig,
            kappa_linear: float | None = None, e_min: float = 1e-3) -> SchemeResult:
    """Greedy AP mode selection followed by optimized power allocation."""
    start = time.perf_counter()
    a, _ = greedy_ap_selection(real, grouping, config, kappa_linear, e_min)
    result = pa_fixed_modes(real, grouping, config, a, kappa_linear)
    result.wall_time = time.perf_counter() - start
    return result


# ---------------------------------------------------------------------------
# joint AP mode selection and power allocation (penalized SCA)
# ---------------------------------------------------------------------------

def _p3_subproblem(data: ScaledData, a0, eh0, p0, t0: float, kappa: float,
                   lam: float, k_ues: int, l_zones: int, m_aps: int,
                   n_antennas: int):
    """Assemble and solve one convex inner approximation around the iterate."""
    n_eh, n_p = m_aps * k_ues, m_aps * l_zones
    idx_a = np.arange(m_aps)
    idx_eh = m_aps + np.arange(n_eh).reshape(m_aps, k_ues)
    idx_p = m_aps + n_eh + np.arange(n_p).reshape(m_aps, l_zones)
    idx_u = m_aps + n_eh + n_p + np.arange(n_eh).reshape(m_aps, k_ues)
    idx_t = m_aps + 2 * n_eh + n_p
    n = idx_t + 1

    u0 = np.sqrt(np.clip(a0[:, None] * eh0, 0.0, None))
    t0 = max(t0, 1e-9 * max(data.t_max, 1.0))
    mu0 = np.einsum("mkj,mj->mk", data.w_iui, eh0) - data.b_sens * p0.sum(axis=1)[:, None]
    q = 2.0 * (data.gsig * u0).sum(axis=0) / t0
    omega0 = (n_antennas * p0 + kappa * eh0.sum(axis=1)[:, None]
              - kappa * np.einsum("mlj,mj->ml", data.cross_n, p0))
    sig_mu = np.sqrt(np.maximum(np.abs(mu0), 1.0))
    sig_om = np.sqrt(np.maximum(np.abs(omega0), 1.0))

    obj = np.zeros(n)
    obj[idx_t] = 1.0
    obj[idx_a] = lam * (2.0 * a0 - 1.0)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    upper[idx_a] = 1.0
    upper[idx_t] = data.t_max
    prog = ConicProgram(n=n, objective=obj, lower=lower, upper=upper)

    # SINR constraints: one rotated cone per UE around the (a, mu) split
    for k in range(k_ues):
        mu_rows = np.zeros((m_aps, n))  # mu[m, k] as linear forms
        mu_rows[np.arange(m_aps)[:, None], idx_eh] = data.w_iui[:, k, :]
        mu_rows[np.arange(m_aps)[:, None], idx_p] = -data.b_sens[:, k][:, None]
        s = sig_mu[:, k]
        d0 = s * a0 - mu0[:, k] / s
        z1 = np.zeros(n)
        z1[idx_u[:, k]] += 2.0 * q[k] * data.gsig[:, k]
        z1[idx_t] -= q[k] ** 2 / 2.0
        z1[idx_a] += s * d0
        z1 -= (d0 / s) @ mu_rows
        z1[idx_p.ravel()] -= 2.0 * np.repeat(data.b_sens[:, k], l_zones)
        c1 = -0.5 * float(d0 @ d0) - 2.0
        z3 = mu_rows / s[:, None]
        z3[np.arange(m_aps), idx_a] += s
        prog.add("rsoc", np.vstack([z1, np.zeros(n), z3]),
                 np.concatenate([[c1, 1.0], np.zeros(m_aps)]))

    # MASR constraints: one rotated cone per zone
    for l in range(l_zones):
        om_rows = np.zeros((m_aps, n))
        om_rows[np.arange(m_aps)[:, None], idx_eh] = kappa
        om_rows[np.arange(m_aps), idx_p[:, l]] += n_antennas
        om_rows[np.arange(m_aps)[:, None], idx_p] -= kappa * data.cross_n[:, l, :]
        s = sig_om[:, l]
        e0 = s * a0 - omega0[:, l] / s
        z1 = np.zeros(n)
        z1[idx_p[:, l]] += 2.0 * n_antennas
        z1[idx_a] += s * e0
        z1 -= (e0 / s) @ om_rows
        z1[idx_p.ravel()] -= 2.0 * kappa * data.cross_n[:, l, :].ravel()
        c1 = -0.5 * float(e0 @ e0)
        z3 = om_rows / s[:, None]
        z3[np.arange(m_aps), idx_a] += s
        prog.add("rsoc", np.vstack([z1, np.zeros(n), z3]),
                 np.concatenate([[c1, 1.0], np.zeros(m_aps)]))

    # per-AP C power: sum_k eh_mk <= a0 (2 a_m - a0)
    rows = np.zeros((m_aps, n))
    rows[np.arange(m_aps), idx_a] = 2.0 * a0
    rows[np.arange(m_aps)[:, None], idx_eh] = -1.0
    prog.add("nonneg", rows, -(a0 ** 2))

    # per-AP S power: a_m^2 + sum_l p_ml <= 1
    for m in range(m_aps):
        z1 = np.zeros(n)
        z1[idx_p[m]] = -0.5
        z3 = np.zeros(n)
        z3[idx_a[m]] = 1.0
        prog.add("rsoc", np.vstack([z1, np.zeros(n), z3]), np.array([0.5, 1.0, 0.0]))

    # geometric-mean epigraph: u_mk^2 <= a_m eh_mk
    for m in range(m_aps):
        for k in range(k_ues):
            block = np.zeros((3, n))
            block[0, idx_a[m]] = 0.5
            block[1, idx_eh[m, k]] = 1.0
            block[2, idx_u[m, k]] = 1.0
            prog.add("rsoc", block, np.zeros(3))

    sol = solve_conic(prog, feas_tol=1e-8, gap_tol=1e-8)
    if sol.status != "optimal":
        return sol.status, None
    x = sol.x
    return "optimal", (np.clip(x[idx_a], 0.0, 1.0),
                       np.clip(x[idx_eh], 0.0, None),
                       np.clip(x[idx_p], 0.0, None),
                       float(x[idx_t]),
                       x[idx_u])


def _jap_initial_point(real: NetworkRealization, grouping: Grouping,
                       config: NetworkConfig, data: ScaledData,
                       rng: np.random.Generator | None, level: float = 0.5):
    a0 = np.full(real.M, level) if rng is None else rng.uniform(0.3, 0.7, real.M)
    eh0 = (a0[:, None] ** 2) * data.gamma_nu / (config.N * real.gamma.sum(axis=1))[:, None]
    p0 = np.tile(((1.0 - a0) / (2.0 * real.L))[:, None], (1, real.L))
    alloc = _alloc_from_shares(a0, eh0, p0, data, config.N, 0.0)
    sinr = metrics.sinr_closed_form(real, grouping, alloc, config.N)
    return a0, eh0, p0, float(sinr.min())


BINARY_TOL = 1e-3
PENALTY_GROWTH = 100.0
PHASE1_CAP = 50      # SCA solves at the configured penalty weight
REFINE_CAP = 20      # SCA solves per penalty escalation


def _jap_sca_run(real, grouping, config, data: ScaledData, kappa: float,
                 lam: float, max_iter: int, tol: float,
                 init_rng: np.random.Generator | None,
                 restart_rng: np.random.Generator, restarts: int,
                 level: float = 0.5):
    """One SCA trajectory: phase one at the configured penalty, then
    penalty escalations from the incumbent until the modes are binary.

    Returns None when no feasible starting subproblem is found.
    """
    dims = (real.K, real.L, real.M, config.N)
    out = None
    for attempt in range(restarts + 1):
        a, eh, p, t = _jap_initial_point(
            real, grouping, config, data,
            init_rng if attempt == 0 else restart_rng, level)
        status, out = _p3_subproblem(data, a, eh, p, t, kappa, lam, *dims)
        if status == "optimal":
            break
        out = None
    if out is None:
        return None

    a, eh, p, t, u = out
    lam_now = lam
    trace = [t - lam_now * float((a - a * a).sum())]
    refinement: list[float] = []
    phase_trace, phase_cap = trace, PHASE1_CAP
    iters = 1
    phase_iters = 1
    while iters < max_iter:
        status, nxt = _p3_subproblem(data, a, eh, p, t, kappa, lam_now, *dims)
        if status != "optimal":
            break
        a, eh, p, t, u = nxt
        iters += 1
        phase_iters += 1
        phase_trace.append(t - lam_now * float((a - a * a).sum()))
        stalled = (len(phase_trace) >= 2
                   and abs(phase_trace[-1] - phase_trace[-2])
                   < tol * max(1.0, abs(phase_trace[-1])))
        if not stalled and phase_iters < phase_cap:
            continue
        if np.abs(a - np.round(a)).max() <= BINARY_TOL:
            break
        # fractional modes at a stall: escalate the penalty and continue
        lam_now *= PENALTY_GROWTH
        phase_trace, phase_cap = refinement, REFINE_CAP
        phase_iters = 0
        phase_trace.append(t - lam_now * float((a - a * a).sum()))
    return a, eh, p, t, u, trace, refinement, iters


def jap_opa(real: NetworkRealization, grouping: Grouping, config: NetworkConfig,
            kappa_linear: float | None = None, lam: float | None = None,
            max_iter: int = 100, tol: float = 1e-4,
            rng: np.random.Generator | None = None,
            restarts: int = 5, n_starts: int = 3) -> SchemeResult:
    """Joint AP mode selection and power allocation via penalized SCA.

    The penalized SCA is a local method whose basin depends on the
    starting point, so n_starts trajectories are run (the deterministic
    half-way start plus seeded random starts) and the best rounded
    outcome is kept. Within each trajectory the exact-penalty weight
    needed for binary modes scales with the SINR magnitude, so the
    penalty is escalated from the configured value whenever the objective
    stalls while modes are still fractional (refinement_trace); the
    reported objective_trace covers the configured-penalty phase. The
    final modes are rounded at 0.5 and the power-only problem is
    re-solved on them for the final feasible allocation.
    """
    start = time.perf_counter()
    kappa_req = kappa_linear if kappa_linear is not None else config.kappa_linear
    kappa = kappa_req * (1.0 + MASR_MARGIN)
    lam = config.lambda_penalty if lam is None else lam
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    data = build_scaled_data(real, grouping, config.N)

    best = None
    best_run = None
    # deterministic half-way and communication-biased starts, then random;
    # when every planned start rounds to an infeasible power problem, keep
    # drawing randomized restarts up to the restart budget
    starts = [(None, 0.5), (None, 0.65)] + [(rng, 0.5)] * max(0, n_starts - 2)
    starts = starts[:max(1, n_starts)] + [(rng, 0.5)] * restarts
    planned = max(1, n_starts)
    for attempt, (init_rng, level) in enumerate(starts):
        if attempt >= planned and best is not None and best.sensing_success:
            break
        run = _jap_sca_run(real, grouping, config, data, kappa, lam,
                           max_iter, tol, init_rng, rng, restarts, level)
        if run is None:
            continue
        a_bin = (run[0] >= 0.5).astype(float)
        cand = pa_fixed_modes(real, grouping, config, a_bin, kappa_linear)
        if best is None or ((cand.sensing_success, cand.min_se)
                            > (best.sensing_success, best.min_se)):
            best, best_run = cand, run
    if best is None:
        return _infeasible_result(real, time.perf_counter() - start)

    a, eh, p, t, u, trace, refinement, iters = best_run
    gaps = np.abs(u ** 2 - a[:, None] * eh)[eh > 1e-6]
    result = best
    result.iterations = iters
    result.objective_trace = trace
    result.refinement_trace = refinement
    result.relaxed_modes = a
    result.epigraph_gap = float(gaps.max()) if gaps.size else 0.0
    result.wall_time = time.perf_counter() - start
    mu0 = np.einsum("mkj,mj->mk", data.w_iui, eh) - data.b_sens * p.sum(axis=1)[:, None]
    omega0 = (config.N * p + kappa * eh.sum(axis=1)[:, None]
              - kappa * np.einsum("mlj,mj->ml", data.cross_n, p))
    result.sca_state = ScaState(
        n=iters, a=a, eta_c=eh / data.gamma_nu, eta_s=p / config.N, t=t,
        mu=mu0, omega=omega0,
        q=2.0 * (data.gsig * np.sqrt(np.clip(a[:, None] * eh, 0.0, None))).sum(axis=0)
          / max(t, 1e-12),
        objective_trace=trace)
    return result
