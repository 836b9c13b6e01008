"""Static SVG renderings of result tables."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .runner import ResultTable

_EXPECTED_COLUMNS = {
    "sweep": ["x", "re_dJ", "im_dJ", "abs_Mf", "abs_MfT"],
    "quench_decay": ["ts_us", "m_sigma_zero", "m_stationary", "m_quenched"],
    "preparation_scan": ["tp_us", "integrated_contrast", "k_value"],
    "scrambling_scan": ["te_us", "integrated_contrast"],
}


def plot(table: ResultTable, kind: str, path) -> Path:
    """Render the table as a static SVG; returns the written path."""
    if kind not in _EXPECTED_COLUMNS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {sorted(_EXPECTED_COLUMNS)}")
    expected = _EXPECTED_COLUMNS[kind]
    if table.columns != expected:
        raise ValueError(f"table columns {table.columns} do not match {kind} plot {expected}")
    if not table.rows:
        raise ValueError("refusing to plot an empty table")

    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if kind == "sweep":
            ax.plot(table.column("x"), table.column("re_dJ"), "o-", label="Re dJ")
            ax.plot(table.column("x"), table.column("im_dJ"), "s--", label="Im dJ")
            ax.set_xlabel("asymmetry x")
            ax.set_ylabel("contrast")
            ax.legend()
        elif kind == "quench_decay":
            ts = table.column("ts_us")
            ax.plot(ts, table.column("m_sigma_zero"), label="quench below (sigma=0)")
            ax.plot(ts, table.column("m_stationary"), label="stationary")
            ax.plot(ts, table.column("m_quenched"), label="quenched")
            ax.set_xlabel("sensing time (us)")
            ax.set_ylabel("signal M")
            ax.legend()
        elif kind == "preparation_scan":
            tp = table.column("tp_us")
            ax.plot(tp, table.column("integrated_contrast"), "o-", color="tab:blue")
            ax.set_xlabel("preparation time (us)")
            ax.set_ylabel("integrated contrast", color="tab:blue")
            ax2 = ax.twinx()
            ax2.plot(tp, table.column("k_value"), "s--", color="tab:red")
            ax2.set_ylabel("correlated spins K", color="tab:red")
        else:
            ax.plot(table.column("te_us"), table.column("integrated_contrast"), "o-")
            ax.set_xlabel("scrambling time (us)")
            ax.set_ylabel("integrated contrast")
        ax.set_title(kind.replace("_", " "))
        fig.tight_layout()
        fig.savefig(path, format="svg")
    finally:
        plt.close(fig)
    return path
