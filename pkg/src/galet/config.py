"""Experiment configuration files.

An INI file with four sections. Solver values may be comma-separated lists,
which ``sweep`` expands into a cross product::

    [problem]
    name = example1
    seed = 0              # also seeds the box sampler
    # any other key is passed to the problem generator, e.g. d_y = 6

    [solver]
    alpha = 0.1, 0.3, 0.5
    beta = 1.0
    rho = 0.1
    n_inner = 1
    t_inner = 1
    k_outer = 1000
    w_variant = pl        # pl | sc
    w_warm_start = false
    stop_tol = off

    [init]
    mode = default        # default | explicit | box
    points = -3 2 1; 2 -2 -1
    n_points = 4
    lo = -3
    hi = 3

    [diagnostics]
    record_b_k = false
    approx_g_star = false
    lyapunov = false
    lyapunov_c = 1.0
    interface_checks = false

    [output]
    dir = out
    format = csv          # csv | json
    workers = 1
"""
from __future__ import annotations

import configparser
import itertools
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .problems import PROBLEMS, make_problem
from .rng import make_rng
from .solver import GaletConfig

SECTIONS = ("problem", "solver", "init", "diagnostics", "output")
SOLVER_FIELDS = ("alpha", "beta", "rho", "n_inner", "t_inner", "k_outer",
                 "w_variant", "w_warm_start", "stop_tol")
_FLOAT_FIELDS = {"alpha", "beta", "rho", "stop_tol"}
_INT_FIELDS = {"n_inner", "t_inner", "k_outer"}
_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


class ConfigError(InvalidInputError):
    def __init__(self, message, source="<config>", line=None):
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {message}")
        self.line = line


@dataclass
class ExperimentConfig:
    problem: str = "example1"
    problem_params: dict = field(default_factory=dict)
    seed: int = 0
    sweep: dict = field(default_factory=dict)  # solver field -> list of values
    init_mode: str = "default"
    init_points: list = field(default_factory=list)  # explicit rows (x then y)
    init_n_points: int = 2
    init_lo: float = -3.0
    init_hi: float = 3.0
    record_b_k: bool = False
    approx_g_star: bool = False
    lyapunov: bool = False
    lyapunov_c: float = 1.0
    interface_checks: bool = False
    out_dir: str = "out"
    fmt: str = "csv"
    workers: int = 1

    def build_problem(self):
        params = dict(self.problem_params)
        if self.problem != "example1":
            params.setdefault("seed", self.seed)
        return make_problem(self.problem, **params)

    def solver_configs(self):
        """Cross product of the sweep lists, in SOLVER_FIELDS order."""
        keys = [k for k in SOLVER_FIELDS if k in self.sweep]
        out = []
        for combo in itertools.product(*(self.sweep[k] for k in keys)):
            params = dict(zip(keys, combo))
            out.append((params, GaletConfig(
                **params,
                record_b_k=self.record_b_k,
                approx_g_star=self.approx_g_star,
            )))
        return out

    def initial_points(self, problem):
        if self.init_mode == "default":
            return problem.default_inits()
        if self.init_mode == "explicit":
            pts = []
            for row in self.init_points:
                row = np.asarray(row, dtype=float)
                if row.size != problem.dim_x + problem.dim_y:
                    raise InvalidInputError(
                        f"initial point has {row.size} entries, expected {problem.dim_x + problem.dim_y}"
                    )
                pts.append((row[:problem.dim_x], row[problem.dim_x:]))
            return pts
        rng = make_rng(self.seed)
        return [
            (rng.uniform(self.init_lo, self.init_hi, problem.dim_x),
             rng.uniform(self.init_lo, self.init_hi, problem.dim_y))
            for _ in range(self.init_n_points)
        ]

    def is_sweep(self):
        return any(len(v) > 1 for v in self.sweep.values())


def _line_index(text):
    """Map (section, key) to its 1-based line number."""
    index, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            section = m.group(1).strip().lower()
            index[(section, None)] = lineno
            continue
        m = re.match(r"([^=:;#\s][^=:]*?)\s*[=:]", stripped)
        if m and section is not None:
            index[(section, m.group(1).strip().lower())] = lineno
    return index


def _parse_bool(raw):
    try:
        return _BOOL_WORDS[raw.strip().lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {raw!r}") from None


def _parse_scalar(name, raw):
    raw = raw.strip()
    if name in _FLOAT_FIELDS:
        if name == "stop_tol" and raw.lower() in ("off", "none", ""):
            return None
        return float(raw)
    if name in _INT_FIELDS:
        return int(raw)
    if name == "w_warm_start":
        return _parse_bool(raw)
    return raw


def _parse_param(raw):
    raw = raw.strip()
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    return raw


def parse_config(text, source="<config>"):
    lines = _line_index(text)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], source, getattr(exc, "lineno", None)) from None

    def fail(msg, section, key=None):
        raise ConfigError(msg, source, lines.get((section, key), lines.get((section, None))))

    for section in cp.sections():
        if section.lower() not in SECTIONS:
            fail(f"unknown section [{section}]", section.lower())
    cfg = ExperimentConfig()
    sec = lambda name: cp[name] if cp.has_section(name) else {}

    prob = sec("problem")
    for key, raw in prob.items():
        if key == "name":
            cfg.problem = raw.strip()
            if cfg.problem not in PROBLEMS:
                fail(f"unknown problem {cfg.problem!r}; known: {', '.join(sorted(PROBLEMS))}", "problem", key)
        elif key == "seed":
            try:
                cfg.seed = int(raw)
            except ValueError:
                fail(f"seed must be an integer, got {raw!r}", "problem", key)
        else:
            cfg.problem_params[key] = _parse_param(raw)

    defaults = GaletConfig()
    cfg.sweep = {k: [getattr(defaults, k)] for k in SOLVER_FIELDS}
    for key, raw in sec("solver").items():
        if key not in SOLVER_FIELDS:
            fail(f"unknown solver key {key!r}", "solver", key)
        items = [s for s in raw.split(",")]
        if not raw.strip() or any(not s.strip() for s in items):
            fail(f"empty value in sweep list for {key!r}", "solver", key)
        try:
            values = [_parse_scalar(key, s) for s in items]
        except ValueError as exc:
            fail(f"{key}: {exc}", "solver", key)
        for v in values:
            try:
                GaletConfig(**{key: v})
            except InvalidInputError as exc:
                fail(str(exc), "solver", key)
        cfg.sweep[key] = values

    init = sec("init")
    for key, raw in init.items():
        try:
            if key == "mode":
                cfg.init_mode = raw.strip().lower()
                if cfg.init_mode not in ("default", "explicit", "box"):
                    fail("init mode must be default, explicit or box", "init", key)
            elif key == "points":
                cfg.init_points = [[float(t) for t in chunk.split()] for chunk in raw.split(";") if chunk.strip()]
                if not cfg.init_points:
                    fail("empty list of initial points", "init", key)
            elif key == "n_points":
                cfg.init_n_points = int(raw)
                if cfg.init_n_points < 1:
                    fail("n_points must be at least 1", "init", key)
            elif key == "lo":
                cfg.init_lo = float(raw)
            elif key == "hi":
                cfg.init_hi = float(raw)
            else:
                fail(f"unknown init key {key!r}", "init", key)
        except ValueError as exc:
            fail(f"{key}: {exc}", "init", key)
    if cfg.init_mode == "explicit" and not cfg.init_points:
        fail("explicit init mode needs a points list", "init", "mode")
    if cfg.init_mode == "box" and not cfg.init_lo < cfg.init_hi:
        fail("box needs lo < hi", "init", "lo")

    for key, raw in sec("diagnostics").items():
        try:
            if key in ("record_b_k", "approx_g_star", "lyapunov", "interface_checks"):
                setattr(cfg, key, _parse_bool(raw))
            elif key == "lyapunov_c":
                cfg.lyapunov_c = float(raw)
                if cfg.lyapunov_c < 0:
                    fail("lyapunov_c must be non-negative", "diagnostics", key)
            else:
                fail(f"unknown diagnostics key {key!r}", "diagnostics", key)
        except ValueError as exc:
            fail(f"{key}: {exc}", "diagnostics", key)

    for key, raw in sec("output").items():
        if key == "dir":
            cfg.out_dir = raw.strip()
        elif key == "format":
            cfg.fmt = raw.strip().lower()
            if cfg.fmt not in ("csv", "json"):
                fail("format must be csv or json", "output", key)
        elif key == "workers":
            try:
                cfg.workers = int(raw)
            except ValueError:
                fail(f"workers must be an integer, got {raw!r}", "output", key)
            if cfg.workers < 1:
                fail("workers must be at least 1", "output", key)
        else:
            fail(f"unknown output key {key!r}", "output", key)

    try:
        cfg.build_problem()
    except InvalidInputError as exc:
        fail(str(exc), "problem", None)
    return cfg


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read(), source=str(path))
