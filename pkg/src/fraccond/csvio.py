"""CSV persistence with exact binary64 round trip (17 significant digits).

Every file starts with one ``#`` comment line of ``key=value`` metadata,
followed by a header line of column names and the data rows.
"""
from __future__ import annotations

import os
from typing import Dict, List, Tuple

import numpy as np

from .counterexample import ConvergenceReport
from .dn import DNMatrix
from .errors import InvalidArgument
from .grid import GridFunction, UniformGrid


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _meta_line(items: Dict[str, object]) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in items.items()) + "\n"


def _grid_meta(grid: UniformGrid, s=None) -> Dict[str, object]:
    meta = {} if s is None else {"s": repr(float(s))}
    meta.update(h=repr(grid.h), box=f"{grid.lo!r},{grid.hi!r}", n_nodes=grid.n_nodes)
    return meta


def _table(meta, header: List[str], rows) -> str:
    body = "".join(",".join(r) + "\n" for r in rows)
    return _meta_line(meta) + ",".join(header) + "\n" + body


def export_csv(obj, path, *, s=None, name: str = "value") -> None:
    """Write a :class:`DNMatrix`, :class:`GridFunction` or
    :class:`ConvergenceReport`.  ``s`` adds the exponent to the metadata of
    grid functions."""
    if isinstance(obj, DNMatrix):
        x = obj.grid.x
        meta = _grid_meta(obj.grid, obj.s)
        meta["gamma"] = obj.gamma_hash
        header = ["test_x"] + [f"src_{_fmt(v)}" for v in x[obj.source_nodes]]
        rows = ([_fmt(xj)] + [_fmt(v) for v in row]
                for xj, row in zip(x[obj.test_nodes], obj.entries))
        text = _table(meta, header, rows)
    elif isinstance(obj, GridFunction):
        rows = ([_fmt(a), _fmt(b)] for a, b in zip(obj.grid.x, obj.values))
        text = _table(_grid_meta(obj.grid, s), ["node", name], rows)
    elif isinstance(obj, ConvergenceReport):
        meta = {"s": repr(obj.s), "box": f"{obj.box[0]!r},{obj.box[1]!r}",
                "slope": _fmt(obj.slope)}
        cols = ConvergenceReport.COLUMNS
        rows = ([str(r.n_nodes)] + [_fmt(getattr(r, c)) for c in cols[1:]] for r in obj.rows)
        text = _table(meta, list(cols), rows)
    else:
        raise InvalidArgument(f"cannot export {type(obj).__name__} as CSV", module="cli_io")
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as err:
        raise OSError(err.errno, f"cannot write {os.fspath(path)}: {err.strerror}") from None


def read_csv(path) -> Tuple[Dict[str, str], List[str], np.ndarray]:
    """Return ``(metadata, header, data)`` of a file written by :func:`export_csv`."""
    with open(path) as fh:
        first = fh.readline()
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if not first.startswith("#"):
        raise InvalidArgument(f"{path}: missing metadata line", module="cli_io")
    meta = dict(item.split("=", 1) for item in first[1:].split())
    return meta, header, data


def read_grid_function(path) -> GridFunction:
    meta, header, data = read_csv(path)
    lo, hi = (float(v) for v in meta["box"].split(","))
    grid = UniformGrid(lo, hi, int(meta["n_nodes"]))
    if data.shape != (grid.n_nodes, 2):
        raise InvalidArgument(f"{path}: expected {grid.n_nodes} rows of node,value", module="cli_io")
    return GridFunction(grid, data[:, 1].copy())
