"""Experiment dispatch and machine-readable outputs.

``run`` turns a validated config into a rectangular result table and
optionally writes it as CSV with a JSON metadata sidecar.  Output bytes are
a pure function of the config (including its seed), so re-running a config
reproduces files exactly; the metadata embeds the resolved config and its
hash so a table can be regenerated from the sidecar alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    RunConfig,
    bath_from_spec,
    config_hash,
    ou_from_spec,
    sequence_from_spec,
    validate_dict,
)
from .protocols import (
    ClassicalOuBackend,
    ClassicalOuMcBackend,
    QuantumBathBackend,
    experiment_preparation_scan,
    experiment_quench_decay,
    experiment_scrambling_scan,
    sdr_sweep,
)
from .spinbath import prepare_quenched_state, scramble


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows])


def _format_cell(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def table_to_csv(table: ResultTable) -> bytes:
    lines = [",".join(table.columns)]
    for row in table.rows:
        lines.append(",".join(_format_cell(v) for v in row))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _run_sweep(cfg: RunConfig, threads: int) -> ResultTable:
    data = cfg.data
    seq = data["sequence"]
    n_pulses = seq["n_pulses"]
    t_s = seq["sensing_time_us"] * 1e-6
    x_grid = np.linspace(0.0, (n_pulses - 1) / n_pulses, data["grids"]["x_points"])
    if "noise" in data:
        params = ou_from_spec(data["noise"])
        if "mc" in data:
            mc = data["mc"]
            backend = ClassicalOuMcBackend(
                params, mc["n_traj"], mc.get("seed", data["seed"]), mc["grid_factor"], threads
            )
        else:
            backend = ClassicalOuBackend(params)
        noise_class = "magnetic"
    else:
        sys = bath_from_spec(data["bath"])
        state = prepare_quenched_state(sys, data["state"]["tp_us"] * 1e-6)
        te = data["state"].get("te_us", 0.0) * 1e-6
        if te > 0.0:
            state = scramble(sys, state, te)
        backend = QuantumBathBackend(sys, state)
        noise_class = sys.noise_class
    curve = sdr_sweep(n_pulses, t_s, x_grid, backend, noise_class, threads=threads)
    rows = [
        (p.x, p.re_delta_j, p.im_delta_j, abs(p.m_f), abs(p.m_ft))
        for p in curve.points
    ]
    return ResultTable(columns=["x", "re_dJ", "im_dJ", "abs_Mf", "abs_MfT"], rows=rows)


def _run_quench_decay(cfg: RunConfig, threads: int) -> ResultTable:
    data = cfg.data
    params = ou_from_spec(data["noise"])
    seq = data["sequence"]
    ts_grid = [t * 1e-6 for t in data["grids"]["ts_us"]]
    curves = experiment_quench_decay(
        params, ts_grid, lambda t_s: sequence_from_spec(seq, sensing_time=t_s)
    )
    rows = [
        (t_us, mz, ms, mq)
        for t_us, mz, ms, mq in zip(
            data["grids"]["ts_us"], curves["m_sigma_zero"], curves["m_stationary"], curves["m_quenched"]
        )
    ]
    return ResultTable(
        columns=["ts_us", "m_sigma_zero", "m_stationary", "m_quenched"], rows=rows
    )


def _run_preparation_scan(cfg: RunConfig, threads: int) -> ResultTable:
    data = cfg.data
    sys = bath_from_spec(data["bath"])
    seq = data["sequence"]
    scan = experiment_preparation_scan(
        sys,
        [t * 1e-6 for t in data["grids"]["tp_us"]],
        seq["n_pulses"],
        seq["sensing_time_us"] * 1e-6,
        x_grid=np.linspace(0.0, (seq["n_pulses"] - 1) / seq["n_pulses"], data["grids"]["x_points"]),
        phi_points=data["grids"].get("phi_points"),
        threads=threads,
    )
    rows = [
        (t_us, c, k)
        for t_us, c, k in zip(
            data["grids"]["tp_us"], scan["integrated_contrast"], scan["k_value"]
        )
    ]
    return ResultTable(columns=["tp_us", "integrated_contrast", "k_value"], rows=rows)


def _run_scrambling_scan(cfg: RunConfig, threads: int) -> ResultTable:
    data = cfg.data
    sys = bath_from_spec(data["bath"])
    seq = data["sequence"]
    scan = experiment_scrambling_scan(
        sys,
        data["state"]["tp_us"] * 1e-6,
        [t * 1e-6 for t in data["grids"]["te_us"]],
        seq["n_pulses"],
        seq["sensing_time_us"] * 1e-6,
        x_grid=np.linspace(0.0, (seq["n_pulses"] - 1) / seq["n_pulses"], data["grids"]["x_points"]),
        threads=threads,
    )
    rows = [
        (t_us, c) for t_us, c in zip(data["grids"]["te_us"], scan["integrated_contrast"])
    ]
    return ResultTable(columns=["te_us", "integrated_contrast"], rows=rows)


_DISPATCH = {
    "sweep": _run_sweep,
    "quench_decay": _run_quench_decay,
    "preparation_scan": _run_preparation_scan,
    "scrambling_scan": _run_scrambling_scan,
}


def run(cfg: RunConfig, out_dir=None, threads: int = 1) -> ResultTable:
    """Execute the configured experiment; write CSV + metadata if out_dir given."""
    table = _DISPATCH[cfg.experiment](cfg, threads)
    table.metadata = {
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "version": __version__,
        "experiment": cfg.experiment,
        "columns": table.columns,
        "config": cfg.data,
    }
    if out_dir is not None:
        write_outputs(table, out_dir)
    return table


def write_outputs(table: ResultTable, out_dir) -> dict[str, Path]:
    """Write <basename>.csv and <basename>.json into out_dir; return paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    basename = table.metadata["config"]["output"]["basename"]
    csv_path = out / f"{basename}.csv"
    json_path = out / f"{basename}.json"
    csv_path.write_bytes(table_to_csv(table))
    json_path.write_text(
        json.dumps(table.metadata, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return {"csv": csv_path, "json": json_path}


def rerun_from_metadata(json_path) -> ResultTable:
    """Re-execute the run recorded in a metadata sidecar."""
    meta = json.loads(Path(json_path).read_text(encoding="utf-8"))
    cfg = validate_dict(meta["config"])
    return run(cfg)
