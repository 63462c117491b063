"""CSV/JSON writers with versioned schemas.

Floats are written with ``repr`` so that they round-trip exactly; NaN and
infinities become the strings "nan", "inf", "-inf" in JSON.
"""

import csv
import io
import json
import math

import numpy as np

TRAJECTORY_SCHEMA = "dissqueeze.trajectory/1"
TABLE_SCHEMA = "dissqueeze.table/1"

TRAJECTORY_COLUMNS = ["t", "Sz", "dSz", "Sx2", "Sy2", "S2", "dphi", "purity", "trace_err"]


def _scalar(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def jsonable(obj):
    """Recursively convert numpy types and non-finite floats for JSON."""
    obj = _scalar(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    return obj


def dumps(payload):
    return json.dumps(jsonable(payload), indent=2) + "\n"


def _cell(v):
    v = _scalar(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def table_csv(columns, rows, schema=TABLE_SCHEMA):
    """CSV text: a ``# schema=...`` line, the header, then one line per row.

    ``rows`` is a list of dicts keyed by column name.
    """
    buf = io.StringIO()
    buf.write(f"# schema={schema}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def trajectory_rows(traj):
    cols = traj.columns()
    return [{name: cols[name][i] for name in TRAJECTORY_COLUMNS} for i in range(len(traj.times))]


def trajectory_csv(traj):
    return table_csv(TRAJECTORY_COLUMNS, trajectory_rows(traj), TRAJECTORY_SCHEMA)


def trajectory_summary(traj):
    return {
        "converged": traj.converged,
        "t_final": float(traj.times[-1]),
        "samples": len(traj.times),
        "steady": traj.steady.as_dict(),
        "min_eigenvalue": traj.min_eig,
        "max_trace_err": float(np.max(traj.trace_err)),
        "max_herm_err": float(np.max(traj.herm_err)),
    }


def trajectory_payload(traj, config=None, seed=None):
    meta = dict(traj.channels.metadata())
    meta["seed"] = seed
    meta["integrator"] = traj.settings
    cols = traj.columns()
    return {
        "schema": TRAJECTORY_SCHEMA,
        "config": config,
        "metadata": meta,
        "summary": trajectory_summary(traj),
        "columns": {name: cols[name] for name in TRAJECTORY_COLUMNS},
    }


def read_table_csv(text):
    """Parse CSV written by :func:`table_csv`: (schema, header, rows as str lists)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise ValueError("missing schema line")
    schema = lines[0][len("# schema="):]
    reader = csv.reader(lines[1:])
    header = next(reader)
    return schema, header, list(reader)
