"""Command-line front end: ``rydgate <experiment> --config PATH``.

Every experiment writes one or more CSV tables. The top of each file carries
the resolved configuration as ``#`` comments, followed by a header line and
rows formatted to 12 significant digits. Nothing that varies between runs
(timestamps, thread counts) is written, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import KINDS, ExperimentConfig, load_config, serialize_config
from .errors import ConfigError, RydgateError
from .gate import QUBIT_LABELS, fidelity_sweep, simulate_gate, target_gate
from .model import DIM_PAIR, IDX, TWO_PI, PhysicalParams
from .motion import motion_report
from .propagate import evolve_lindblad, evolve_schrodinger
from .spectrum import track_branches

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


@dataclass
class CsvTable:
    """Rectangular table plus the ``#`` comment lines written above the header."""

    name: str
    header: list[str]
    rows: list[list] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError(f"row {row!r} does not match header {self.header!r}")

    def render(self) -> str:
        buf = io.StringIO()
        for line in self.comments:
            buf.write(f"# {line}\n" if line else "#\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])
        return buf.getvalue()


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    text = format(x, ".12g")
    return "0" if text == "-0" else text


def _ket(label: str) -> np.ndarray:
    psi = np.zeros(DIM_PAIR, dtype=complex)
    psi[IDX[label]] = 1.0
    return psi


def _map(fn, items, threads: int) -> list:
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _series_name(cfg: ExperimentConfig) -> str:
    return cfg.sweep.parameter if cfg.sweep is not None else "delta"


def _series_value(cfg: ExperimentConfig, value, params: PhysicalParams) -> float:
    return value if value is not None else params.delta


def run_fig2(cfg: ExperimentConfig, threads: int = 1) -> list[CsvTable]:
    """|rr> and |p> populations over ``[0, tau]`` starting from |11>, one series per sweep value."""
    series = cfg.series()

    def one(item):
        value, params = item
        traj = evolve_schrodinger(params, _ket("11"), 0.0, params.tau, cfg.solver)
        key = _series_value(cfg, value, params)
        return [[key, t, prr, pp, n] for t, prr, pp, n in zip(traj.times, traj.p_rr, traj.p_p_total, traj.norm)]

    rows = [row for block in _map(one, series, threads) for row in block]
    return [CsvTable(cfg.output_path, [_series_name(cfg), "t", "P_rr", "P_p_total", "norm"], rows)]


def run_fig3(cfg: ExperimentConfig, threads: int = 1) -> list[CsvTable]:
    """Tracked eigenvalues (MHz) of the pair Hamiltonian, and which basis state each branch reaches at tau."""
    series = cfg.series()
    results = _map(lambda item: (item, track_branches(item[1], cfg.grid_size)), series, threads)
    name = _series_name(cfg)
    header = [name, "t"] + [f"E_{k + 1}" for k in range(DIM_PAIR)] + ["w_11_rr"]
    rows, links, notes = [], [], []
    for (value, params), br in results:
        key = _series_value(cfg, value, params)
        notes.append(f"{name}={format_value(key)}: " + " ".join(
            f"E_{b + 1}={lab}" for b, lab in enumerate(br.labels)))
        rr = br.weight("11", "rr")
        for k, t in enumerate(br.times):
            rows.append([key, t, *(br.energies[k] / TWO_PI), rr[k]])
        for b, lab in enumerate(br.labels):
            links.append([key, f"E_{b + 1}", lab, br.connectivity[lab], br.weight(lab, "rr", br.tau_index)])
    main = CsvTable(cfg.output_path, header, rows, comments=["branch seeds at t=0:"] + notes)
    conn = CsvTable(_sibling(cfg.output_path, "connectivity"),
                    [name, "branch", "seed", "dominant_at_tau", "rr_weight_at_tau"], links)
    return [main, conn]


def run_fig4(cfg: ExperimentConfig, threads: int = 1) -> list[CsvTable]:
    """Dissipative fidelity after tau calibration, per V_R; optional |rr> transfer inset."""
    sweep = fidelity_sweep(cfg.physical, cfg.sweep.values, cfg.solver, phi_target=cfg.target_phase,
                           tol=cfg.calibration_tol, threads=threads)
    rows, notes = [], []
    for row in sweep:
        rows.append([row.v_r, math.nan if row.tau is None else row.tau,
                     math.nan if row.fidelity is None else row.fidelity, int(row.error is not None)])
        if row.error:
            notes.append(f"v_r={format_value(row.v_r)} failed: {row.error}")
    tables = [CsvTable(cfg.output_path, ["v_r", "tau", "F", "failed"], rows, comments=notes)]
    if cfg.inset_gamma_p:
        jobs = [(g, t) for g in sorted(cfg.inset_gamma_p) for t in sorted(cfg.inset_tau)]

        def one(job):
            gamma_p, tau = job
            params = cfg.physical.replace(gamma0=gamma_p / 2.0, gamma1=gamma_p / 2.0, tau=tau)
            rho0 = np.outer(_ket("11"), _ket("11"))
            return [gamma_p, tau, evolve_lindblad(params, rho0, 0.0, tau, cfg.solver).p_rr[-1]]

        tables.append(CsvTable(_sibling(cfg.output_path, "inset"), ["gamma_p", "tau", "P_rr"],
                               _map(one, jobs, threads)))
    return tables


def _gate_row(params: PhysicalParams, cfg: ExperimentConfig) -> list:
    target = target_gate(cfg.target_phase)
    unitary = simulate_gate(params, dissipative=False, cfg=cfg.solver, target=target, check_return=False)
    fid = unitary.fidelity
    if cfg.dissipative:
        fid = simulate_gate(params, dissipative=True, cfg=cfg.solver, target=target, check_return=False).fidelity
    return ([unitary.entangling_phase, fid]
            + [unitary.return_probabilities[lab] for lab in QUBIT_LABELS]
            + [unitary.diagonal_phases[lab] for lab in QUBIT_LABELS])


_GATE_HEADER = (["entangling_phase", "F"] + [f"return_{lab}" for lab in QUBIT_LABELS]
                + [f"phase_{lab}" for lab in QUBIT_LABELS])


def run_gate(cfg: ExperimentConfig, threads: int = 1) -> list[CsvTable]:
    """One full cycle; phases from the unitary run, fidelity dissipative when requested."""
    return [CsvTable(cfg.output_path, list(_GATE_HEADER), [_gate_row(cfg.physical, cfg)])]


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[CsvTable]:
    """Gate summary and ``P_rr(tau)`` from |11> for every value of one physical parameter."""
    def one(item):
        value, params = item
        p_rr = evolve_schrodinger(params, _ket("11"), 0.0, params.tau, cfg.solver).p_rr[-1]
        return [value, p_rr] + _gate_row(params, cfg)

    rows = _map(one, cfg.series(), threads)
    return [CsvTable(cfg.output_path, [cfg.sweep.parameter, "P_rr_tau"] + list(_GATE_HEADER), rows)]


def run_motion(cfg: ExperimentConfig, threads: int = 1) -> list[CsvTable]:
    """Motional excitation estimate with and without the factor 6."""
    rep = motion_report(cfg.physical.v_r, cfg.trap, cfg.physical.tau)
    return [CsvTable(cfg.output_path, ["quantity", "value"], [[k, v] for k, v in rep.rows()])]


RUNNERS = {
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "gate": run_gate,
    "sweep": run_sweep,
    "motion": run_motion,
}


def _sibling(path: str, suffix: str) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{suffix}{p.suffix or '.csv'}"))


def run(cfg: ExperimentConfig, out_dir: str | Path = ".", threads: int = 1,
        plot_script: bool = False) -> list[Path]:
    """Run the configured experiment and write its tables; returns the written paths."""
    tables = RUNNERS[cfg.kind](cfg, threads=threads)
    provenance = [f"rydgate {__version__}", "frequencies in MHz (ordinary), times in us"]
    provenance += serialize_config(cfg).rstrip("\n").split("\n")
    out_dir = Path(out_dir)
    written = []
    for table in tables:
        table.comments = provenance + table.comments
        path = out_dir / table.name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(table.render())
        written.append(path)
        if plot_script:
            written.append(emit_plot_script(table, cfg.kind, path))
    return written


_PLOT_BODY = {
    "fig2": """\
for key in sorted(set(data[cols[0]])):
    sel = data[cols[0]] == key
    plt.plot(data["t"][sel], data["P_rr"][sel], label=f"{cols[0]} = {key:g} MHz")
plt.xlabel("t (us)")
plt.ylabel("P_rr")
plt.legend()
""",
    "fig3": """\
series = sorted(set(data[cols[0]]))
for key in series:
    sel = data[cols[0]] == key
    for name in cols[2:2 + 16]:
        plt.plot(data["t"][sel], data[name][sel], lw=0.8)
plt.xlabel("t (us)")
plt.ylabel("E / 2 pi (MHz)")
""",
    "fig4": """\
plt.plot(data[cols[0]], data[cols[2]], "o-")
plt.xlabel(cols[0] + " (MHz)")
plt.ylabel(cols[2])
""",
    "generic": """\
plt.plot(data[cols[0]], data[cols[1]], "o-")
plt.xlabel(cols[0])
plt.ylabel(cols[1])
""",
}


def emit_plot_script(table: CsvTable, kind: str, csv_path: str | Path) -> Path:
    """Write ``<csv stem>_plot.py`` next to the CSV; it reads the CSV at run time and embeds no data."""
    csv_path = Path(csv_path)
    body_key = kind if kind in ("fig2", "fig3", "fig4") and table.header[-1] != "rr_weight_at_tau" else "generic"
    if table.header[0] == "gamma_p":
        body = """\
for key in sorted(set(data["gamma_p"])):
    sel = data["gamma_p"] == key
    plt.plot(data["tau"][sel], data["P_rr"][sel], "o-", label=f"gamma_p = {key:g} MHz")
plt.xlabel("tau (us)")
plt.ylabel("P_rr(tau)")
plt.legend()
"""
    elif table.header[0] == "quantity" or not _numeric_header(table):
        body = 'print(open(CSV).read())\nraise SystemExit(0)\n'
    else:
        body = _PLOT_BODY[body_key]
    script = f'''"""Plot {csv_path.name}. Generated by rydgate; reads the CSV next to this file."""
import os

import matplotlib.pyplot as plt
import numpy as np

CSV = os.path.join(os.path.dirname(os.path.abspath(__file__)), {csv_path.name!r})
with open(CSV) as fh:
    body = [line for line in fh if not line.startswith("#")]
data = np.genfromtxt(body, delimiter=",", names=True, dtype=None, encoding=None)
cols = data.dtype.names
{body}plt.tight_layout()
plt.savefig(os.path.splitext(CSV)[0] + ".png", dpi=150)
'''
    out = csv_path.with_name(f"{csv_path.stem}_plot.py")
    out.write_text(script)
    return out


def _numeric_header(table: CsvTable) -> bool:
    return all(not isinstance(v, str) for row in table.rows for v in row)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rydgate", description="Adiabatic Rydberg phase-gate simulations.")
    parser.add_argument("experiment", choices=KINDS)
    parser.add_argument("--config", required=True, help="INI experiment file")
    parser.add_argument("--out", default=".", help="output directory (default: current directory)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweep rows")
    parser.add_argument("--seed", type=int, default=None, help="accepted and ignored; runs are deterministic")
    parser.add_argument("--plot-script", action="store_true", help="also write a matplotlib script per CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.config)
        if cfg.kind != args.experiment:
            raise ConfigError(f"config {args.config} is a {cfg.kind!r} experiment, not {args.experiment!r}")
        written = run(cfg, args.out, threads=args.threads, plot_script=args.plot_script)
    except ConfigError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RydgateError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for path in written:
        print(path)
    if cfg.kind == "motion":
        rep = motion_report(cfg.physical.v_r, cfg.trap, cfg.physical.tau)
        for name, value in rep.rows():
            print(f"{name:<24}{format_value(value)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
