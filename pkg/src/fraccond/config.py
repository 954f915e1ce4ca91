"""INI run configuration.

Sections and keys (``#`` or ``;`` start comments)::

    [problem]        s, mode (bounded | scaled)
    [geometry]       box, omega_dom, w1, w2, omega (auto | none | intervals)
    [discretization] n_nodes, resolutions, workers, probes
    [tolerances]     positivity, scaled, dn_equality, separation_ratio, monotone_factor
    [output]         output_dir

Intervals are written as ``[[lo, hi], ...]`` (a single ``[lo, hi]`` is
accepted too); ``box`` and ``resolutions`` are comma separated numbers.
"""
from __future__ import annotations

import ast
import configparser
from dataclasses import dataclass, field
import logging
import os
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError, FracCondError
from .fracops import FracParams
from .geometry import IntervalSet, WindowConfig

log = logging.getLogger("fraccond")

DEFAULT_TOLERANCES = {
    "positivity": 1e-8,
    "scaled": 1e-12,
    "dn_equality": 1e-5,
    "separation_ratio": 100.0,
    "monotone_factor": 1.5,
}

_SCHEMA = {
    "problem": {"s", "mode"},
    "geometry": {"box", "omega_dom", "w1", "w2", "omega"},
    "discretization": {"n_nodes", "resolutions", "workers", "probes"},
    "tolerances": set(DEFAULT_TOLERANCES),
    "output": {"output_dir"},
}
_REQUIRED = [("problem", "s"), ("geometry", "box"), ("geometry", "omega_dom"),
             ("geometry", "w1"), ("geometry", "w2")]


@dataclass
class RunConfig:
    s: float
    box: Tuple[float, float]
    omega_dom: IntervalSet
    w1: IntervalSet
    w2: IntervalSet
    mode: str = "bounded"
    omega: Optional[IntervalSet] = None  # None: automatic choice
    n_nodes: int = 1024
    resolutions: List[int] = field(default_factory=lambda: [256, 512, 1024, 2048])
    workers: int = 1
    probes: int = 3
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: str = "fraccond_out"
    source: Optional[str] = None
    defaulted: List[str] = field(default_factory=list)

    @property
    def params(self) -> FracParams:
        return FracParams(self.s)

    @property
    def windows(self) -> WindowConfig:
        return WindowConfig(self.omega_dom, self.w1, self.w2, self.box)

    def to_ini(self) -> str:
        """Fully resolved configuration; loading it gives back the same object."""
        def iv(S):
            return "[" + ", ".join(f"[{lo!r}, {hi!r}]" for lo, hi in S) + "]"
        om = "auto" if self.omega is None else (iv(self.omega) if self.omega else "none")
        tol = "".join(f"{k} = {v!r}\n" for k, v in self.tolerances.items())
        return (f"[problem]\ns = {self.s!r}\nmode = {self.mode}\n\n"
                f"[geometry]\nbox = {self.box[0]!r}, {self.box[1]!r}\n"
                f"omega_dom = {iv(self.omega_dom)}\nw1 = {iv(self.w1)}\nw2 = {iv(self.w2)}\n"
                f"omega = {om}\n\n"
                f"[discretization]\nn_nodes = {self.n_nodes}\n"
                f"resolutions = {', '.join(str(n) for n in self.resolutions)}\n"
                f"workers = {self.workers}\nprobes = {self.probes}\n\n"
                f"[tolerances]\n{tol}\n[output]\noutput_dir = {self.output_dir}\n")


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    where, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
        elif section and line and line[0] not in "#;" and ("=" in line or ":" in line):
            key = line.split("=", 1)[0] if "=" in line else line.split(":", 1)[0]
            where[(section, key.strip().lower())] = no
    return where


def _intervals(text: str) -> IntervalSet:
    val = ast.literal_eval(text.strip())
    if isinstance(val, (list, tuple)) and len(val) == 2 and all(isinstance(v, (int, float)) for v in val):
        val = [val]
    if not isinstance(val, (list, tuple)):
        raise ValueError("expected a list of [lo, hi] pairs")
    return IntervalSet([tuple(float(t) for t in pair) for pair in val])


def _numbers(text: str, kind=float) -> list:
    parts = [p for p in text.replace("[", " ").replace("]", " ").replace(",", " ").split() if p]
    return [kind(p) for p in parts]


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as err:
        raise ConfigError(f"{source}: parse error: {err}".replace("\n", " ")) from None
    lines = _key_lines(text)

    def at(sec, key):
        no = lines.get((sec, key))
        return f"{source}:{no}" if no else source

    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        for key in cp[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"{at(sec, key)}: unknown key '{key}' in [{sec}]")
    for sec, key in _REQUIRED:
        if not cp.has_option(sec, key):
            raise ConfigError(f"{source}: missing required key '{key}' in [{sec}]")

    defaulted = []

    def get(sec, key, conv, default):
        if not cp.has_option(sec, key):
            defaulted.append(f"{sec}.{key} = {default!r}")
            return default
        raw = cp.get(sec, key)
        try:
            return conv(raw)
        except (ValueError, SyntaxError, TypeError, FracCondError) as err:
            raise ConfigError(f"{at(sec, key)}: cannot read {sec}.{key} = {raw!r}: {err}") from None

    def box_conv(t):
        v = _numbers(t)
        if len(v) != 2:
            raise ValueError("box needs two numbers")
        return (v[0], v[1])

    def omega_conv(t):
        t = t.strip().lower()
        if t == "auto":
            return None
        if t == "none":
            return IntervalSet.empty()
        return _intervals(t)

    s = get("problem", "s", float, None)
    mode = get("problem", "mode", lambda t: t.strip().lower(), "bounded")
    box = get("geometry", "box", box_conv, None)
    omega_dom = get("geometry", "omega_dom", _intervals, None)
    w1 = get("geometry", "w1", _intervals, None)
    w2 = get("geometry", "w2", _intervals, None)
    omega = get("geometry", "omega", omega_conv, "auto")
    if isinstance(omega, str):
        omega = None
    n_nodes = get("discretization", "n_nodes", int, 1024)
    resolutions = get("discretization", "resolutions", lambda t: _numbers(t, int),
                      [256, 512, 1024, 2048])
    workers = get("discretization", "workers", int, 1)
    probes = get("discretization", "probes", int, 3)
    tolerances = {k: get("tolerances", k, float, v) for k, v in DEFAULT_TOLERANCES.items()}
    output_dir = get("output", "output_dir", str.strip, "fraccond_out")

    # validation, before any computation
    if not 0.0 < s < 0.5:
        raise ConfigError(f"{at('problem', 's')}: s = {s} violates 0 < s < min(1, n/2) "
                          f"with n = 1 (the one-dimensional realization needs 0 < s < 1/2)")
    if mode not in ("bounded", "scaled"):
        raise ConfigError(f"{at('problem', 'mode')}: mode must be 'bounded' or 'scaled', got {mode!r}")
    if n_nodes < 16:
        raise ConfigError(f"{at('discretization', 'n_nodes')}: n_nodes must be >= 16")
    if any(n < 16 or n & (n - 1) for n in resolutions) or len(resolutions) < 3:
        raise ConfigError(f"{at('discretization', 'resolutions')}: need at least three "
                          f"power-of-two resolutions >= 16, got {resolutions}")
    if workers < 1 or probes < 1:
        raise ConfigError(f"{source}: workers and probes must be positive")
    try:
        WindowConfig(omega_dom, w1, w2, box)
    except FracCondError as err:
        raise ConfigError(f"{source}: geometry rule violated: {err.args[0]}") from None
    cfg = RunConfig(s, box, omega_dom, w1, w2, mode, omega, n_nodes, sorted(resolutions), workers,
                    probes, tolerances, output_dir, source, defaulted)
    for item in defaulted:
        log.info("config default: %s", item)
    return cfg


def load_config(path) -> RunConfig:
    path = os.fspath(path)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    return parse_config(text, source=path)
