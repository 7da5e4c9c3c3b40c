"""Solver-agnostic conic programs: linear objective over linear and
second-order-cone constraints, solved by an off-the-shelf interior-point
backend (Clarabel).

A constraint block states ``A x + b in cone`` with cone one of:
  zero    : A x + b = 0
  nonneg  : A x + b >= 0 elementwise
  soc     : z = A x + b, z[0] >= ||z[1:]||
  rsoc    : z = A x + b, 2 z[0] z[1] >= ||z[2:]||^2, z[0], z[1] >= 0
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

import clarabel

CONE_TAGS = ("zero", "nonneg", "soc", "rsoc")

DEFAULT_FEAS_TOL = 1e-7
DEFAULT_GAP_TOL = 1e-8


@dataclass(frozen=True)
class ConeBlock:
    kind: str
    a: np.ndarray  # (rows, n)
    b: np.ndarray  # (rows,)

    @property
    def rows(self) -> int:
        return self.a.shape[0]


@dataclass
class ConicProgram:
    """maximize objective @ x subject to the cone blocks and variable bounds."""

    n: int
    objective: np.ndarray
    blocks: list[ConeBlock] = field(default_factory=list)
    lower: np.ndarray | None = None  # elementwise bounds; None entries via -inf/inf
    upper: np.ndarray | None = None

    def add(self, kind: str, a: np.ndarray, b: np.ndarray) -> None:
        self.blocks.append(ConeBlock(kind, np.atleast_2d(np.asarray(a, dtype=float)),
                                     np.atleast_1d(np.asarray(b, dtype=float))))


@dataclass(frozen=True)
class ConicSolution:
    status: str  # optimal | infeasible | unbounded | numerical-failure
    x: np.ndarray | None
    objective_value: float | None
    iterations: int


def validate_program(prog: ConicProgram) -> list[str]:
    """Structural diagnostics; an empty list means well-formed."""
    issues = []
    if prog.objective.shape != (prog.n,):
        issues.append(f"objective length {prog.objective.shape} != n={prog.n}")
    for i, blk in enumerate(prog.blocks):
        if blk.kind not in CONE_TAGS:
            issues.append(f"block {i}: unknown cone tag '{blk.kind}'")
            continue
        if blk.a.ndim != 2 or blk.a.shape[1] != prog.n:
            issues.append(f"block {i}: affine map shape {blk.a.shape} incompatible with n={prog.n}")
        if blk.b.shape != (blk.a.shape[0],):
            issues.append(f"block {i}: offset length {blk.b.shape} != rows {blk.a.shape[0]}")
        if blk.kind == "soc" and blk.rows < 2:
            issues.append(f"block {i}: soc needs dimension >= 2, got {blk.rows}")
        if blk.kind == "rsoc" and blk.rows < 3:
            issues.append(f"block {i}: rsoc needs dimension >= 3, got {blk.rows}")
        if blk.rows == 0:
            issues.append(f"block {i}: empty cone")
    for name in ("lower", "upper"):
        bound = getattr(prog, name)
        if bound is not None and np.asarray(bound).shape != (prog.n,):
            issues.append(f"{name} bound length != n")
    return issues


def _rsoc_to_soc(blk: ConeBlock):
    """(z0, z1, w) with 2 z0 z1 >= ||w||^2 maps to (z0+z1, z0-z1, sqrt(2) w) in SOC."""
    t = np.zeros((blk.rows, blk.rows))
    t[0, 0] = t[0, 1] = 1.0
    t[1, 0] = 1.0
    t[1, 1] = -1.0
    t[2:, 2:] = np.sqrt(2.0) * np.eye(blk.rows - 2)
    return t @ blk.a, t @ blk.b


def _bound_rows(prog: ConicProgram):
    rows, offs = [], []
    eye = np.eye(prog.n)
    if prog.lower is not None:
        lo = np.asarray(prog.lower, dtype=float)
        idx = np.flatnonzero(np.isfinite(lo))
        if idx.size:
            rows.append(eye[idx])
            offs.append(-lo[idx])
    if prog.upper is not None:
        up = np.asarray(prog.upper, dtype=float)
        idx = np.flatnonzero(np.isfinite(up))
        if idx.size:
            rows.append(-eye[idx])
            offs.append(up[idx])
    if not rows:
        return None
    return np.vstack(rows), np.concatenate(offs)


def solve_conic(prog: ConicProgram, feas_tol: float = DEFAULT_FEAS_TOL,
                gap_tol: float = DEFAULT_GAP_TOL,
                max_iter: int = 200) -> ConicSolution:
    """Solve a conic program; infeasibility is reported via status, not raised."""
    issues = validate_program(prog)
    if issues:
        raise ValueError("malformed program: " + "; ".join(issues))

    # assemble in Clarabel order: zero rows, one merged nonneg block, then SOCs
    a_parts, b_parts, cones = [], [], []

    zero_blocks = [blk for blk in prog.blocks if blk.kind == "zero"]
    for blk in zero_blocks:
        a_parts.append(blk.a)
        b_parts.append(blk.b)
    if zero_blocks:
        cones.append(clarabel.ZeroConeT(sum(blk.rows for blk in zero_blocks)))

    nonneg_rows = 0
    for blk in prog.blocks:
        if blk.kind == "nonneg":
            a_parts.append(blk.a)
            b_parts.append(blk.b)
            nonneg_rows += blk.rows
    bounds = _bound_rows(prog)
    if bounds is not None:
        a_parts.append(bounds[0])
        b_parts.append(bounds[1])
        nonneg_rows += bounds[0].shape[0]
    if nonneg_rows:
        cones.append(clarabel.NonnegativeConeT(nonneg_rows))

    for blk in prog.blocks:
        if blk.kind == "soc":
            a_parts.append(blk.a)
            b_parts.append(blk.b)
            cones.append(clarabel.SecondOrderConeT(blk.rows))
        elif blk.kind == "rsoc":
            a, b = _rsoc_to_soc(blk)
            a_parts.append(a)
            b_parts.append(b)
            cones.append(clarabel.SecondOrderConeT(blk.rows))

    # Clarabel solves min q^T x with A x + s = b, s in K; our blocks state
    # z = A x + b in K, so pass A_cl = -A and b_cl = b.
    a_full = np.vstack(a_parts) if a_parts else np.zeros((0, prog.n))
    b_full = np.concatenate(b_parts) if b_parts else np.zeros(0)
    a_cl = sparse.csc_matrix(-a_full)
    p = sparse.csc_matrix((prog.n, prog.n))
    q = -np.asarray(prog.objective, dtype=float)

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_feas = feas_tol
    settings.tol_gap_abs = gap_tol
    settings.tol_gap_rel = gap_tol
    # keep Clarabel's reduced-accuracy fallback (AlmostSolved) and
    # regularize the KKT system a little harder than the default
    settings.static_regularization_constant = 1e-7
    solver = clarabel.DefaultSolver(p, q, a_cl, b_full, cones, settings)
    res = solver.solve()

    status = str(res.status)
    iters = int(res.iterations)
    if status in ("Solved", "AlmostSolved"):
        x = np.asarray(res.x)
        return ConicSolution("optimal", x, float(prog.objective @ x), iters)
    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return ConicSolution("infeasible", None, None, iters)
    if status in ("DualInfeasible", "AlmostDualInfeasible"):
        return ConicSolution("unbounded", None, None, iters)
    return ConicSolution("numerical-failure", None, None, iters)


def constraint_violation(prog: ConicProgram, x: np.ndarray) -> float:
    """Worst cone violation of x over all blocks and bounds (0 when feasible)."""
    worst = 0.0
    for blk in prog.blocks:
        z = blk.a @ x + blk.b
        if blk.kind == "zero":
            worst = max(worst, float(np.max(np.abs(z), initial=0.0)))
        elif blk.kind == "nonneg":
            worst = max(worst, float(np.max(-z, initial=0.0)))
        elif blk.kind == "soc":
            worst = max(worst, float(np.linalg.norm(z[1:]) - z[0]))
        else:
            worst = max(worst, float(-z[0]), float(-z[1]),
                        float(np.dot(z[2:], z[2:]) - 2.0 * z[0] * z[1]))
    if prog.lower is not None:
        worst = max(worst, float(np.max(prog.lower - x, initial=0.0)))
    if prog.upper is not None:
        worst = max(worst, float(np.max(x - prog.upper, initial=0.0)))
    return worst


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_program(prog: ConicProgram, path: str) -> None:
    """Plain-text dump, one constraint block per line, cone tag suffixed."""
    with open(path, "w") as fh:
        fh.write(f"n {prog.n}\n")
        fh.write("objective " + " ".join(_fmt(v) for v in prog.objective) + "\n")
        for name in ("lower", "upper"):
            bound = getattr(prog, name)
            if bound is not None:
                fh.write(name + " " + " ".join(_fmt(v) for v in bound) + "\n")
        for blk in prog.blocks:
            cells = [" ".join(_fmt(v) for v in row) for row in blk.a]
            fh.write("block " + " | ".join(cells)
                     + " ; " + " ".join(_fmt(v) for v in blk.b)
                     + f" # {blk.kind}\n")


def parse_program(path: str) -> ConicProgram:
    """Inverse of dump_program (floats round-trip exactly via repr)."""
    prog = None
    objective = None
    lower = upper = None
    blocks = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            head, _, rest = line.partition(" ")
            if head == "n":
                prog = int(rest)
            elif head == "objective":
                objective = np.array([float(v) for v in rest.split()])
            elif head == "lower":
                lower = np.array([float(v) for v in rest.split()])
            elif head == "upper":
                upper = np.array([float(v) for v in rest.split()])
            elif head == "block":
                body, _, kind = rest.rpartition("#")
                mat, _, off = body.partition(";")
                rows = [[float(v) for v in cell.split()]
                        for cell in mat.split("|")]
                blocks.append(ConeBlock(kind.strip(), np.array(rows),
                                        np.array([float(v) for v in off.split()])))
    out = ConicProgram(n=prog, objective=objective, lower=lower, upper=upper)
    out.blocks = blocks
    return out
