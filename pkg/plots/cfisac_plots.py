#!/usr/bin/env python3
"""Figure rendering for campaign CSVs: per-UE SE CDFs with success-rate
bars, sweep line charts with success-rate overlays, and SCA convergence
traces.

Consumes exactly the simulator's campaign CSV schema
(scheme,sweep_value,realization,seed,sensing_success,min_se,se_ue_*,
iterations,wall_ms) or, for convergence figures, a trace CSV with columns
label,iteration,objective. Output is deterministic SVG; the plotted step
and bar values are embedded in a trailing XML comment so downstream
tooling can extract them without rasterizing.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cfisac-plots"

import matplotlib.pyplot as plt

FIGURE_KINDS = ("cdf", "sweep", "convergence")
SCHEME_ORDER = ("JAP-OPA", "GAP-OPA", "RAP-OPA")
DATA_MARKER = "cfisac-plot-data"


class CsvFormatError(ValueError):
    """Raised with a row diagnostic when the input violates the schema."""


@dataclass
class FigureSpec:
    csv_paths: list
    kind: str
    out_path: str
    x_label: str = ""
    y_label: str = ""
    x_column: str = "sweep_value"

    def validate(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind '{self.kind}'")
        if not self.csv_paths:
            raise ValueError("at least one CSV path is required")


@dataclass
class CampaignRow:
    scheme: str
    sweep_value: float
    sensing_success: bool
    min_se: float
    per_ue_se: list
    row_number: int


def _fail(path: str, row_number: int, message: str):
    raise CsvFormatError(f"{path}:{row_number}: {message}")


def parse_campaign_csv(path: str) -> list:
    """Parse one campaign CSV; raises CsvFormatError with a row diagnostic."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            _fail(path, 0, "empty file")
        fixed = ["scheme", "sweep_value", "realization", "seed",
                 "sensing_success", "min_se"]
        if header[:6] != fixed or header[-2:] != ["iterations", "wall_ms"]:
            _fail(path, 1, f"unexpected header {header!r}")
        ue_cols = header[6:-2]
        if not ue_cols or any(c != f"se_ue_{i + 1}" for i, c in enumerate(ue_cols)):
            _fail(path, 1, f"unexpected per-UE columns {ue_cols!r}")
        for number, row in enumerate(reader, start=2):
            if len(row) != len(header):
                _fail(path, number, f"expected {len(header)} cells, got {len(row)}")
            try:
                rows.append(CampaignRow(
                    scheme=row[0], sweep_value=float(row[1]),
                    sensing_success=bool(int(row[4])), min_se=float(row[5]),
                    per_ue_se=[float(v) for v in row[6:-2]],
                    row_number=number))
            except ValueError as exc:
                _fail(path, number, f"bad numeric cell: {exc}")
    if not rows:
        _fail(path, 1, "no data rows")
    return rows


def _load_all(paths) -> list:
    rows = []
    for path in paths:
        rows.extend(parse_campaign_csv(path))
    return rows


def _ordered_schemes(rows) -> list:
    present = {r.scheme for r in rows}
    ordered = [s for s in SCHEME_ORDER if s in present]
    return ordered + sorted(present - set(SCHEME_ORDER))


def cdf_steps(values) -> tuple:
    """Empirical CDF: sorted sample values and step heights i/n."""
    xs = sorted(values)
    n = len(xs)
    return xs, [(i + 1) / n for i in range(n)]


def _embed_data(out_path: str, payload: dict) -> None:
    blob = json.dumps(payload, sort_keys=True)
    with open(out_path, "a") as fh:
        fh.write(f"\n<!-- {DATA_MARKER} {blob} -->\n")


def extract_embedded_data(path: str) -> dict:
    """Recover the plotted values from a rendered figure file."""
    text = open(path).read()
    marker = f"<!-- {DATA_MARKER} "
    start = text.rindex(marker) + len(marker)
    end = text.index(" -->", start)
    return json.loads(text[start:end])


def _save(fig, out_path: str, payload: dict) -> None:
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    _embed_data(out_path, payload)


def render_cdf(csv_paths, out_path: str) -> dict:
    """Per-UE SE CDF per scheme (zeros from failed realizations included)
    with a success-rate bar inset."""
    rows = _load_all(csv_paths)
    schemes = _ordered_schemes(rows)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    payload = {"cdf": {}, "success": {}}
    for scheme in schemes:
        mine = [r for r in rows if r.scheme == scheme]
        samples = [v for r in mine for v in r.per_ue_se]
        xs, ps = cdf_steps(samples)
        payload["cdf"][scheme] = [xs, ps]
        payload["success"][scheme] = (sum(r.sensing_success for r in mine)
                                      / len(mine))
        ax.step([xs[0]] + xs, [0.0] + ps, where="post", label=scheme)
    ax.set_xlabel("per-UE spectral efficiency [bit/s/Hz]")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.02)
    ax.legend(loc="lower right")
    inset = fig.add_axes([0.2, 0.55, 0.25, 0.3])
    rates = [payload["success"][s] for s in schemes]
    inset.bar(range(len(schemes)), rates)
    inset.set_xticks(range(len(schemes)))
    inset.set_xticklabels([s.split("-")[0] for s in schemes], fontsize=7)
    inset.set_ylim(0.0, 1.05)
    inset.set_title("success rate", fontsize=8)
    _save(fig, out_path, payload)
    return payload


def render_sweep(csv_paths, out_path: str, x_column: str = "sweep_value",
                 x_label: str = "") -> dict:
    """Mean min-SE lines per scheme with success-rate bars per sweep point."""
    if x_column != "sweep_value":
        raise CsvFormatError(f"unknown sweep column '{x_column}'")
    rows = _load_all(csv_paths)
    schemes = _ordered_schemes(rows)
    values = sorted({r.sweep_value for r in rows})
    payload = {"x": values, "mean_min_se": {}, "success": {}}
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    bar_ax = ax.twinx()
    width = ((values[1] - values[0]) if len(values) > 1 else 1.0) / (2 + len(schemes))
    for i, scheme in enumerate(schemes):
        means, rates = [], []
        for v in values:
            cell = [r for r in rows if r.scheme == scheme and r.sweep_value == v]
            if not cell:
                _fail(csv_paths[0], 1, f"no rows for {scheme} at {v}")
            means.append(sum(r.min_se for r in cell) / len(cell))
            rates.append(sum(r.sensing_success for r in cell) / len(cell))
        payload["mean_min_se"][scheme] = means
        payload["success"][scheme] = rates
        ax.plot(values, means, marker="o", label=scheme)
        bar_ax.bar([v + (i - (len(schemes) - 1) / 2) * width for v in values],
                   rates, width=width, alpha=0.25)
    ax.set_xlabel(x_label or "sweep value")
    ax.set_ylabel("mean min SE [bit/s/Hz]")
    bar_ax.set_ylabel("success rate")
    bar_ax.set_ylim(0.0, 1.05)
    ax.legend(loc="best")
    _save(fig, out_path, payload)
    return payload


def render_convergence(csv_paths, out_path: str) -> dict:
    """Objective trace per label from a label,iteration,objective CSV."""
    traces: dict = {}
    for path in csv_paths:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["label", "iteration", "objective"]:
                _fail(path, 1, f"unexpected header {header!r}")
            for number, row in enumerate(reader, start=2):
                if len(row) != 3:
                    _fail(path, number, f"expected 3 cells, got {len(row)}")
                try:
                    traces.setdefault(row[0], []).append(
                        (int(row[1]), float(row[2])))
                except ValueError as exc:
                    _fail(path, number, f"bad numeric cell: {exc}")
    if not traces:
        _fail(csv_paths[0], 1, "no data rows")
    payload = {"traces": {}}
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for label in sorted(traces):
        pts = sorted(traces[label])
        payload["traces"][label] = [[p[0] for p in pts], [p[1] for p in pts]]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.legend(loc="lower right")
    _save(fig, out_path, payload)
    return payload


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--csv", action="append", required=True,
                        help="input CSV (repeatable)")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--out", required=True, help="output SVG path")
    parser.add_argument("--x-column", default="sweep_value")
    parser.add_argument("--x-label", default="")
    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return 1
    spec = FigureSpec(csv_paths=args.csv, kind=args.kind, out_path=args.out,
                      x_label=args.x_label, x_column=args.x_column)
    try:
        spec.validate()
        if spec.kind == "cdf":
            render_cdf(spec.csv_paths, spec.out_path)
        elif spec.kind == "sweep":
            render_sweep(spec.csv_paths, spec.out_path, spec.x_column,
                         spec.x_label)
        else:
            render_convergence(spec.csv_paths, spec.out_path)
    except (CsvFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {spec.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
