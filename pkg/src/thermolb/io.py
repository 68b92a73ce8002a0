"""Snapshot and table output, plus structured-text config loading."""

import csv
import os

import numpy as np
import yaml

from .errors import ConfigurationError
from .geometry import MacroFields


def write_pgm(path, values):
    """8-bit binary PGM (P5) of a (Lx, Ly) scalar field, min-max normalized.

    Image rows run top to bottom, i.e. decreasing lattice y.
    """
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo if hi > lo else 1.0
    img = np.flipud(((values - lo) / span * 255.0).round().astype(np.uint8).T)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def write_macro_csv(path, macro: MacroFields):
    """Row-major CSV of the macroscopic fields with a labelled header."""
    Lx, Ly = macro.rho.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x [site]", "y [site]", "rho [lattice]", "ux [lattice]",
                    "uy [lattice]", "T [lattice]"])
        for x in range(Lx):
            for y in range(Ly):
                w.writerow([x, y,
                            repr(float(macro.rho[x, y])),
                            repr(float(macro.ux[x, y])),
                            repr(float(macro.uy[x, y])),
                            repr(float(macro.T[x, y]))])


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_bandwidth_table(path, tables):
    """Persist bench_halo_exchange output: kind, message bytes, bandwidth."""
    rows = []
    for kind, points in tables.items():
        for size, bw in points:
            rows.append([kind, size, repr(bw)])
    write_table(path, ["kind", "message_bytes", "bandwidth [bytes/s]"], rows)


def read_bandwidth_table(path):
    """Load a bandwidth table CSV back into {kind: [(bytes, bw), ...]}."""
    tables = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "kind":
            raise ConfigurationError(f"{path}: not a bandwidth table")
        for kind, size, bw in reader:
            tables.setdefault(kind, []).append((float(size), float(bw)))
    return tables


def load_config(path):
    """Structured-text run configuration: a YAML mapping of explicit keys."""
    if not os.path.exists(path):
        raise ConfigurationError(f"config file {path!r} not found")
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a key/value mapping")
    return data
