"""
CSV output of gate maps, sweep tables and population traces.

Every file starts with ``#`` comment lines naming units and, for presets, the
result being reproduced. Data files carry no timestamps.

"""

import os
import csv
import logging

import numpy as np

logger = logging.getLogger(__name__)


def _header_lines(header):
    return [f"# {line}" for line in (header or [])]


def _prepare(path):
    path = os.path.abspath(path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


def write_table(rows, path, header=None, wall_time=True):
    """Write sweep rows as CSV.

    Parameters
    ----------
    rows : list of SweepRow
        Rows sharing the same coordinate keys.
    path : str
        Output file.
    header : list of str, optional
        Comment lines written before the column names.
    wall_time : bool, default True
        Append the wall-time column.

    Returns
    -------
    str
        Absolute path of the written file.
    """
    if not rows:
        raise ValueError("no rows to write")
    path = _prepare(path)
    columns = list(rows[0].coordinates) + ["error"]
    if wall_time:
        columns.append("wall_time_s")
    with open(path, "w", newline="") as f:
        for line in _header_lines(header):
            f.write(line + "\n")
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            values = [row.coordinates[key] for key in rows[0].coordinates]
            values.append(f"{row.error:.10e}")
            if wall_time:
                values.append(f"{row.wall_time:.3f}")
            writer.writerow(values)
    logger.info("Table written to %s", path)
    return path


def read_table(path):
    """Read a table written by ``write_table`` as a list of dicts of floats."""
    with open(path, newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    reader = csv.DictReader(lines)
    return [{key: float(value) for key, value in row.items()} for row in reader]


def write_matrix(u, path, labels=("00", "01", "10", "11"), header=None):
    """Write a complex matrix as rows of interleaved real and imaginary parts."""
    path = _prepare(path)
    u = np.asarray(u, dtype=complex)
    interleaved = np.empty((u.shape[0], 2 * u.shape[1]))
    interleaved[:, 0::2] = u.real
    interleaved[:, 1::2] = u.imag
    columns = ",".join(f"re_{label},im_{label}" for label in labels)
    lines = _header_lines(header) + ["# rows: output state, columns: input state"]
    _savetxt(path, interleaved, lines, columns)
    return path


def _savetxt(path, data, comment_lines, columns):
    with open(path, "w") as f:
        for line in comment_lines:
            f.write(line + "\n")
        f.write(columns + "\n")
        np.savetxt(f, data, delimiter=",", fmt="%.15e")


def _data_lines(path):
    with open(path) as f:
        return [line for line in f if not line.startswith("#")][1:]


def read_matrix(path):
    """Inverse of ``write_matrix``."""
    values = np.loadtxt(_data_lines(path), delimiter=",", ndmin=2)
    return values[:, 0::2] + 1j * values[:, 1::2]


def write_record(record, path, header=None):
    """Write a PropagationRecord: time in s, then one population column per state."""
    path = _prepare(path)
    data = np.column_stack([record.times, record.populations])
    columns = ",".join(["time_s"] + [f"p_{label}" for label in record.basis])
    _savetxt(path, data, _header_lines(header), columns)
    return path


def write_quantities(quantities, path, header=None):
    """Write (quantity, value, unit) triples as CSV."""
    path = _prepare(path)
    with open(path, "w", newline="") as f:
        for line in _header_lines(header):
            f.write(line + "\n")
        writer = csv.writer(f)
        writer.writerow(["quantity", "value", "unit"])
        for name, value, unit in quantities:
            writer.writerow([name, f"{value:.10e}", unit])
    logger.info("Quantities written to %s", path)
    return path
