"""Command line entry point: construct, verify, sweep, oracle-check, export.

Run directories written by ``construct`` hold::

    config.ini          resolved configuration
    report.txt          key: value report (configuration included)
    gamma_sqrt.csv      Gamma2 = gamma2^(1/2) on the grid
    gamma2.csv          gamma2
    reference/          the same layout for the background Gamma1 = 1

so ``verify --a DIR --b DIR/reference`` checks the constructed pair.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from .assembly import ConductivityField
from .config import RunConfig, load_config
from .counterexample import build_bounded, build_scaled, convergence_study
from .csvio import export_csv, read_grid_function
from .dn import compare_dn, dn_matrix, probe_difference
from .errors import FracCondError, InvalidArgument
from .grid import UniformGrid
from .oracles import DEFAULT_S, format_table, run_oracle_suite

log = logging.getLogger("fraccond")

COMMANDS = ("construct", "verify", "sweep", "oracle-check", "export")


def _config_lines(cfg: RunConfig) -> str:
    out = []
    section = ""
    for line in cfg.to_ini().splitlines():
        line = line.strip()
        if line.startswith("["):
            section = line[1:-1]
        elif "=" in line:
            k, v = (t.strip() for t in line.split("=", 1))
            out.append(f"config.{section}.{k}: {v}\n")
    return "".join(out)


def _grid(cfg: RunConfig, n=None) -> UniformGrid:
    return UniformGrid(cfg.box[0], cfg.box[1], cfg.n_nodes if n is None else n)


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _save_field(directory, cfg: RunConfig, cond: ConductivityField):
    os.makedirs(directory, exist_ok=True)
    _write(os.path.join(directory, "config.ini"), cfg.to_ini())
    export_csv(cond.gamma_sqrt, os.path.join(directory, "gamma_sqrt.csv"), s=cfg.s, name="gamma_sqrt")
    export_csv(cond.gamma, os.path.join(directory, "gamma2.csv"), s=cfg.s, name="gamma")


def _load_run(directory):
    cfg = load_config(os.path.join(directory, "config.ini"))
    G = read_grid_function(os.path.join(directory, "gamma_sqrt.csv"))
    return cfg, ConductivityField(G)


def _construct(cfg: RunConfig, out) -> int:
    grid = _grid(cfg)
    build = build_bounded if cfg.mode == "bounded" else build_scaled
    tol = cfg.tolerances["positivity"]
    report = build(cfg.windows, cfg.params, grid, omega=cfg.omega, tol=tol, workers=cfg.workers)
    _save_field(cfg.output_dir, cfg, report.gamma2)
    _save_field(os.path.join(cfg.output_dir, "reference"), cfg, ConductivityField.constant(grid))
    text = _config_lines(cfg) + report.to_text()
    _write(os.path.join(cfg.output_dir, "report.txt"), text)
    out.write(report.to_text())
    return 0 if report.status == "VALID" else 1


def _verify(dir_a, dir_b, out) -> int:
    cfg_a, ga = _load_run(dir_a)
    cfg_b, gb = _load_run(dir_b)
    if not ga.grid.same_as(gb.grid):
        raise InvalidArgument(f"runs {dir_a} and {dir_b} use different grids", module="cli_io")
    if cfg_a.s != cfg_b.s:
        raise InvalidArgument(f"runs use different exponents {cfg_a.s} and {cfg_b.s}",
                              module="cli_io")
    win = cfg_a.windows
    params = cfg_a.params
    da = dn_matrix(ga, win, params, workers=cfg_a.workers)
    db = dn_matrix(gb, win, params, workers=cfg_a.workers)
    ctrl = win.with_w2(win.w1)
    ca = dn_matrix(ga, ctrl, params, workers=cfg_a.workers)
    cb = dn_matrix(gb, ctrl, params, workers=cfg_a.workers)
    d = probe_difference(da, db, cfg_a.probes)
    D = probe_difference(ca, cb, cfg_a.probes)
    tol = cfg_a.tolerances["dn_equality"]
    lines = [("disjoint_" + k, v) for k, v in compare_dn(da, db).lines()]
    lines += [("disjoint_probe_relative_difference", f"{d:.17g}"),
              ("control_probe_relative_difference", f"{D:.17g}"),
              ("dn_equality_tolerance", f"{tol!r}"),
              ("verdict", "EQUAL" if d <= tol else "DIFFERENT")]
    out.write("".join(f"{k}: {v}\n" for k, v in lines))
    return 0 if d <= tol else 1


def _sweep(cfg: RunConfig, out) -> int:
    study = convergence_study(cfg.windows, cfg.params, cfg.resolutions, probes=cfg.probes,
                              workers=cfg.workers)
    os.makedirs(cfg.output_dir, exist_ok=True)
    export_csv(study, os.path.join(cfg.output_dir, "study.csv"))
    d = study.column("d")
    fac = cfg.tolerances["monotone_factor"]
    checks = [("monotone_d", bool(np.all(d[1:] <= fac * d[:-1]))),
              ("positive_slope", bool(study.slope > 0)),
              ("separation_ratio", bool(study.rows[-1].ratio > cfg.tolerances["separation_ratio"]))]
    text = study.to_text() + "".join(f"check_{k}: {'PASS' if v else 'FAIL'}\n" for k, v in checks)
    _write(os.path.join(cfg.output_dir, "study.txt"), _config_lines(cfg) + text)
    out.write(text)
    return 0 if all(v for _, v in checks) else 1


def _oracle(cfg: Optional[RunConfig], out) -> int:
    s_values = DEFAULT_S if cfg is None else (cfg.s,)
    rows = run_oracle_suite(s_values)
    out.write(format_table(rows) + "\n")
    return 0 if all(r.passed for r in rows) else 1


def _export(directory, what, out) -> int:
    cfg = load_config(os.path.join(directory, "config.ini"))
    if what == "study":
        study = convergence_study(cfg.windows, cfg.params, cfg.resolutions, probes=cfg.probes,
                                  workers=cfg.workers)
        path = os.path.join(directory, "study.csv")
        export_csv(study, path)
        out.write(f"wrote {path}\n")
        return 0
    _, cond = _load_run(directory)
    written = []
    if what == "field":
        for name, f in (("gamma_sqrt", cond.gamma_sqrt), ("gamma", cond.gamma), ("m", cond.deviation)):
            path = os.path.join(directory, f"field_{name}.csv")
            export_csv(f, path, s=cfg.s, name=name)
            written.append(path)
    elif what == "dn":
        one = ConductivityField.constant(cond.grid)
        win = cfg.windows
        for tag, w in (("disjoint", win), ("control", win.with_w2(win.w1))):
            for label, c in (("gamma1", one), ("gamma2", cond)):
                path = os.path.join(directory, f"dn_{tag}_{label}.csv")
                export_csv(dn_matrix(c, w, cfg.params, workers=cfg.workers), path)
                written.append(path)
    else:
        raise InvalidArgument(f"unknown export target {what!r}", module="cli_io")
    out.write("".join(f"wrote {p}\n" for p in written))
    return 0


def run_command(cmd: str, cfg: Optional[RunConfig] = None, *, a=None, b=None, input_dir=None,
                what=None, out=None) -> int:
    """Execute one command; returns the exit status (0 iff all checks pass)."""
    out = sys.stdout if out is None else out
    if cmd == "construct":
        return _construct(cfg, out)
    if cmd == "verify":
        return _verify(a, b, out)
    if cmd == "sweep":
        return _sweep(cfg, out)
    if cmd == "oracle-check":
        return _oracle(cfg, out)
    if cmd == "export":
        return _export(input_dir, what, out)
    raise InvalidArgument(f"unknown command {cmd!r}", module="cli_io")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraccond",
                                description="Counterexample conductivities and their DN data.")
    sub = p.add_subparsers(dest="cmd", required=True)
    for name in ("construct", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--output-dir", help="override [output] output_dir")
    sp = sub.add_parser("verify")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp = sub.add_parser("oracle-check")
    sp.add_argument("--config")
    sp = sub.add_parser("export")
    sp.add_argument("--input", required=True)
    sp.add_argument("--what", required=True, choices=("dn", "field", "study"))
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if getattr(args, "config", None) else None
        if cfg is not None and getattr(args, "output_dir", None):
            cfg.output_dir = args.output_dir
        return run_command(args.cmd, cfg, a=getattr(args, "a", None), b=getattr(args, "b", None),
                           input_dir=getattr(args, "input", None), what=getattr(args, "what", None))
    except FracCondError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: [cli_io] {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
