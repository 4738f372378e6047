"""Report rendering: SR/QER aggregates as CSV plus matplotlib figures.

Figures land next to the delimited output: a per-size QER/SR chart from
evaluation + baseline records, and episode-length convergence curves from
training traces.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .evaluation import EvalRecord

plt.rcParams.update({
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
})


def qer_table(rl_records: list[EvalRecord], baseline_df: pd.DataFrame, sizes: dict[int, int]) -> pd.DataFrame:
    """Per-graph aggregates joined with baseline bests.

    `baseline_df` needs columns graph_id and best_qubits; `sizes` maps
    graph_id to the problem size n.
    """
    rl = pd.DataFrame(
        [(r.graph_id, r.agent_seed, r.episode, r.success, r.qubits) for r in rl_records],
        columns=["graph_id", "agent_seed", "episode", "success", "qubits"],
    )
    rows = []
    for gid, group in rl.groupby("graph_id"):
        ok = group[group["success"]]
        best = int(ok["qubits"].min()) if len(ok) else None
        base_rows = baseline_df[baseline_df["graph_id"] == gid]
        base_best = int(base_rows["best_qubits"].iloc[0]) if len(base_rows) else None
        qer = None
        if best is not None and base_best is not None:
            qer = base_best / best
        rows.append(
            {
                "graph_id": gid,
                "n": sizes.get(gid),
                "episodes": len(group),
                "sr": 100.0 * group["success"].mean(),
                "mean_qubits": float(ok["qubits"].mean()) if len(ok) else np.nan,
                "best_qubits": best if best is not None else np.nan,
                "baseline_best": base_best if base_best is not None else np.nan,
                "qer": qer if qer is not None else np.nan,
            }
        )
    return pd.DataFrame(rows).sort_values("graph_id").reset_index(drop=True)


def render_qer_figure(table: pd.DataFrame, path: str | Path) -> None:
    """Average and best QER per problem size, with SR on a second panel."""
    by_n = table.dropna(subset=["n"]).groupby("n")
    sizes = sorted(by_n.groups)
    avg_qer = [by_n.get_group(n)["qer"].mean() for n in sizes]
    best_qer = [by_n.get_group(n)["qer"].max() for n in sizes]
    sr = [by_n.get_group(n)["sr"].mean() for n in sizes]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    width = 0.38
    x = np.arange(len(sizes))
    ax1.bar(x - width / 2, avg_qer, width, label="average")
    ax1.bar(x + width / 2, best_qer, width, label="best")
    ax1.set_xticks(x, [str(int(n)) for n in sizes])
    ax1.set_xlabel("problem size |G|")
    ax1.set_ylabel("qubit efficiency ratio")
    ax1.set_ylim(0, 1.05)
    ax1.legend()
    ax2.plot(sizes, sr, marker="o")
    ax2.set_xlabel("problem size |G|")
    ax2.set_ylabel("success rate (%)")
    ax2.set_ylim(0, 105)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_convergence_figure(traces: dict[str, pd.DataFrame], path: str | Path) -> None:
    """Mean episode length (+/- std band) per training batch, one line per trace."""
    fig, ax = plt.subplots(figsize=(6.5, 3.6))
    for label, df in traces.items():
        x = df["batch_index"]
        ax.plot(x, df["mean_len"], label=label)
        ax.fill_between(x, df["mean_len"] - df["std_len"], df["mean_len"] + df["std_len"], alpha=0.2)
    ax.set_xlabel("training batch")
    ax.set_ylabel("episode length")
    if traces:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_qer_report(
    rl_records: list[EvalRecord],
    baseline_df: pd.DataFrame,
    sizes: dict[int, int],
    out_dir: str | Path,
) -> Path:
    """Write qer_summary.csv and qer.png into out_dir; returns the CSV path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = qer_table(rl_records, baseline_df, sizes)
    csv_path = out_dir / "qer_summary.csv"
    table.to_csv(csv_path, index=False)
    render_qer_figure(table, out_dir / "qer.png")
    return csv_path
