"""Plot scripts for the CSV outputs.

Scripts are plain gnuplot: data are embedded as ``$name << EOD`` datablocks so
a script is self-contained and renders with ``gnuplot script.gp``. Other
plotters can read the datablocks directly: each block is whitespace-separated
columns under a ``#`` header line.

Figure ids:

``slices``  three G(e_s1 fixed, e_s2) curves from a surface CSV
``ber``     2x2 panels, analytic BER per case, log x and log y
``ber-mc``  as ``ber`` with Monte Carlo points and confidence bars
``ser``     one panel of SER against e_s1
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigError

FIGURES = ("slices", "ber", "ber-mc", "ser")


def _read_csv(path, required):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: file not found")
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    for col in required:
        if col not in header:
            raise ConfigError(f"{path}: missing column {col!r}")
    rows = list(reader)
    return {col: np.array([float(r[col]) for r in rows]) for col in header}


def _block(name, header, cols):
    out = [f"${name} << EOD", "# " + " ".join(header)]
    for vals in zip(*cols):
        out.append(" ".join(f"{v:.17g}" for v in vals))
    out.append("EOD")
    return out


def _slices_script(path, slice_values):
    data = _read_csv(path, ("e_s1_Vpm", "e_s2_Vpm", "G"))
    e1, e2, g = data["e_s1_Vpm"], data["e_s2_Vpm"], data["G"]
    nodes = np.unique(e1)
    if slice_values is None:
        slice_values = (1.0, 2.0, 4.0)
    lines = []
    plots = []
    for k, target in enumerate(slice_values):
        node = nodes[np.argmin(np.abs(nodes - 0.1 * target))]
        sel = (e1 == node) & (e2 > 0)
        lines += _block(f"slice{k}", ("e_s2_mVpcm", "G"), (10.0 * e2[sel], g[sel]))
        plots.append(f"$slice{k} using 1:2 with lines title sprintf('|E_{{s1}}| = %.3g mV/cm', {10.0 * node:.17g})")
    lines += [
        "set terminal pngcairo size 800,600",
        "set output 'slices.png'",
        "set logscale x",
        "set xlabel '|E_{s2}| (mV/cm)'",
        "set ylabel 'G'",
        "set key top right",
        "plot " + ", \\\n     ".join(plots),
    ]
    return lines


def _sweep_panel(name, data, metric, with_mc):
    x = data["e_s1_mVpcm"]
    sig = data["sigma"]
    lines, plots = [], []
    for j, s in enumerate(np.unique(sig)):
        sel = sig == s
        cols = [x[sel], data[metric][sel]]
        header = ["e_s1_mVpcm", metric]
        if with_mc:
            cols += [data[f"{metric}_empirical"][sel], data["ci_low"][sel], data["ci_high"][sel]]
            header += [f"{metric}_empirical", "ci_low", "ci_high"]
        block = f"{name}_{j}"
        lines += _block(block, header, cols)
        plots.append(f"${block} using 1:2 with lines title 'analytic, sigma = {s:.3g}'")
        if with_mc:
            plots.append(f"${block} using 1:3:4:5 with yerrorbars title 'Monte Carlo, sigma = {s:.3g}'")
    return lines, plots


def _required(metric, with_mc):
    cols = ["e_s1_mVpcm", "sigma", metric]
    if with_mc:
        cols += [f"{metric}_empirical", "ci_low", "ci_high"]
    return cols


def _ber_script(paths, with_mc):
    if len(paths) != 4:
        raise ConfigError("BER figure needs four CSV files, one per case")
    blocks, panels = [], []
    for case, path in enumerate(paths, start=1):
        data = _read_csv(path, _required("ber", with_mc))
        lines, plots = _sweep_panel(f"case{case}", data, "ber", with_mc)
        blocks += lines
        panels.append((case, plots))
    out = blocks + [
        "set terminal pngcairo size 1200,900",
        f"set output '{'ber_mc' if with_mc else 'ber'}.png'",
        "set multiplot layout 2,2",
        "set logscale xy",
        "set xlabel '|E_{s1}| (mV/cm)'",
        "set ylabel 'BER'",
        "set format y '10^{%L}'",
    ]
    for case, plots in panels:
        out.append(f"set title 'Case {case}'")
        out.append("plot " + ", \\\n     ".join(plots))
    out.append("unset multiplot")
    return out


def _ser_script(paths, with_mc):
    if len(paths) != 1:
        raise ConfigError("SER figure takes one CSV file")
    data = _read_csv(paths[0], _required("ser", with_mc))
    lines, plots = _sweep_panel("ser", data, "ser", with_mc)
    return lines + [
        "set terminal pngcairo size 800,600",
        "set output 'ser.png'",
        "set logscale xy",
        "set xlabel '|E_{s1}| (mV/cm)'",
        "set ylabel 'SER'",
        "plot " + ", \\\n     ".join(plots),
    ]


def emit_plot_script(csv_paths, figure_id, slice_values=None) -> str:
    """Build a gnuplot script for ``figure_id`` from the given CSV files.

    Raises
    ------
    ConfigError
        Unknown figure id, wrong number of files, or a missing column
        (the message names it).
    """
    paths = [Path(p) for p in ([csv_paths] if isinstance(csv_paths, (str, Path)) else csv_paths)]
    if figure_id == "slices":
        if len(paths) != 1:
            raise ConfigError("slices figure takes one surface CSV")
        lines = _slices_script(paths[0], slice_values)
    elif figure_id in ("ber", "ber-mc"):
        lines = _ber_script(paths, figure_id == "ber-mc")
    elif figure_id == "ser":
        with_mc = "ser_empirical" in open(paths[0]).readline() if paths and paths[0].exists() else False
        lines = _ser_script(paths, with_mc)
    else:
        raise ConfigError(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURES)}")
    return "\n".join(lines) + "\n"
