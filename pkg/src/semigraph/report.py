"""Figure rendering for the report path of the CLI.

Figures are built strictly from the delimited files a run has already
written, never from in-memory state, so a saved CSV and its figure can
always be regenerated from one another.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = [
    "boxplot_from_raw",
    "renewal_plot",
    "ergodicity_plot",
    "ml_check_plot",
    "interbank_plot",
]


def _read_columns(path: Path) -> dict[str, list[str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols: dict[str, list[str]] = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for name, value in row.items():
                cols[name].append(value)
    return cols


def _save(fig, out_png: Path) -> Path:
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return out_png


def boxplot_from_raw(raw_csv: Path, out_png: Path, title: str) -> Path:
    cols = _read_columns(raw_csv)
    times = [
        float(t)
        for t, c in zip(cols["stopping_time"], cols["censored"])
        if c == "0" and t != ""
    ]
    fig, ax = plt.subplots(figsize=(4.0, 4.8))
    ax.boxplot([times], tick_labels=[title])
    ax.set_yscale("log")
    ax.set_ylabel("stopping time")
    fig.tight_layout()
    return _save(fig, out_png)


def renewal_plot(renewal_csv: Path, out_png: Path, title: str) -> Path:
    cols = _read_columns(renewal_csv)
    t = [float(x) for x in cols["t"]]
    h = [float(x) for x in cols["h_hat"]]
    se = [float(x) for x in cols["stderr"]]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.errorbar(t, h, yerr=[3 * s for s in se], fmt="o", ms=3, label="estimated H(t)")
    ax.set_xlabel("t")
    ax.set_ylabel("expected event count")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_png)


def ergodicity_plot(summary_csv: Path, out_png: Path) -> Path:
    cols = _read_columns(summary_csv)
    values = dict(zip(cols["quantity"], (float(v) for v in cols["value"])))
    labels = ["time fraction in A", "ensemble P(A)", "chain marginal P(A)"]
    keys = ["time_fraction_a", "ensemble_a", "marginal_a"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(labels, [values[k] for k in keys], color=["#777777", "#4477aa", "#66ccee"])
    ax.axhline(0.5, ls=":", color="k", lw=1)
    ax.set_ylim(0, 1)
    ax.set_ylabel("probability / fraction")
    ax.set_title("single-path time average vs ensemble measure")
    fig.tight_layout()
    return _save(fig, out_png)


def ml_check_plot(ecdf_csv: Path, out_png: Path, title: str) -> Path:
    cols = _read_columns(ecdf_csv)
    x = [float(v) for v in cols["t"]]
    emp = [float(v) for v in cols["empirical_cdf"]]
    model = [float(v) for v in cols["model_cdf"]]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(x, emp, lw=1, label="empirical")
    ax.plot(x, model, lw=1, ls="--", label="model")
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("CDF")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_png)


def interbank_plot(sheets_csv: Path, graph_csv: Path, out_png: Path) -> Path:
    cols = _read_columns(sheets_csv)
    totals: dict[float, float] = {}
    for t, e in zip(cols["time"], cols["e"]):
        totals[float(t)] = totals.get(float(t), 0.0) + float(e)
    gcols = _read_columns(graph_csv)
    edges: dict[float, int] = {}
    for t in gcols.get("time", []):
        edges[float(t)] = edges.get(float(t), 0) + 1
    times = sorted(totals)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(times, [totals[t] for t in times], color="#4477aa", label="total equity")
    ax.set_xlabel("time")
    ax.set_ylabel("total equity")
    ax2 = ax.twinx()
    ax2.step(
        times,
        [edges.get(t, 0) for t in times],
        where="post",
        color="#ee6677",
        lw=1,
        label="interbank edges",
    )
    ax2.set_ylabel("outstanding interbank edges")
    ax.set_title("interbank market")
    fig.tight_layout()
    return _save(fig, out_png)
