"""Experiment configuration: INI-style sections of key=value pairs.

Sections: [problem], [operator_b], [grid], [solver], [run].  Every run
writes the fully resolved configuration next to its results so no hidden
default can influence an output.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .exponents import ProblemSpec
from .grid import Grid, GridFunction
from .operator_b import OperatorBSpec, edge_preset, make_psi_map, node_preset
from .solver import SolverOptions

_SOLVER_DEFAULTS = SolverOptions()


@dataclass
class ExperimentConfig:
    spec: ProblemSpec
    grid: Grid
    bspec: OperatorBSpec
    opts: SolverOptions
    run: dict = field(default_factory=dict)
    raw: configparser.ConfigParser | None = None

    def resolved_text(self) -> str:
        """The full configuration with all defaults made explicit."""
        cp = configparser.ConfigParser()
        s = self.spec
        cp["problem"] = {
            "N": str(s.N),
            "p": _fmt_vec(s.p_vec), "q": _fmt_vec(s.q_vec),
            "theta": _fmt_vec(s.theta_vec), "a": _fmt_vec(s.a_vec),
            "m": repr(s.m), "a0": repr(s.a0), "b": repr(s.b_exp),
            "s": repr(s.s_exp), "psi_enabled": str(s.psi_enabled).lower(),
        }
        cp["grid"] = {"extents": _fmt_vec(self.grid.extents),
                      "nodes": ",".join(str(n) for n in self.grid.nodes)}
        cp["solver"] = {
            "eps0": repr(self.opts.eps0), "eps_min": repr(self.opts.eps_min),
            "picard_max": str(self.opts.picard_max),
            "newton_max": str(self.opts.newton_max),
            "tol_residual": repr(self.opts.tol_residual),
            "relax": repr(self.opts.relax),
            "project_nonneg": str(self.opts.project_nonneg).lower(),
        }
        if self.opts.h_exp is not None:
            cp["solver"]["h_exp"] = repr(self.opts.h_exp)
        if self.raw is not None and self.raw.has_section("operator_b"):
            cp["operator_b"] = dict(self.raw["operator_b"])
        cp["run"] = {k: str(v) for k, v in self.run.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _fmt_vec(vec):
    return ",".join(repr(float(x)) for x in vec)


def _parse_vec(text, n, path):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != n:
        raise ConfigError(f"{path}: expected {n} comma-separated values, got {len(parts)}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _get(section, key, path, cast=str, default=None):
    if key not in section:
        if default is not None:
            return default
        raise ConfigError(f"{path}: missing required key")
    try:
        raw = section[key]
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_config(path) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    for sec in ("problem", "grid"):
        if not cp.has_section(sec):
            raise ConfigError(f"{sec}: missing required section")

    prob = cp["problem"]
    N = _get(prob, "N", "problem.N", int)
    spec = ProblemSpec(
        N=N,
        p_vec=_parse_vec(_get(prob, "p", "problem.p"), N, "problem.p"),
        q_vec=_parse_vec(_get(prob, "q", "problem.q"), N, "problem.q"),
        theta_vec=_parse_vec(_get(prob, "theta", "problem.theta"), N, "problem.theta"),
        a_vec=_parse_vec(_get(prob, "a", "problem.a"), N, "problem.a"),
        m=_get(prob, "m", "problem.m", float),
        a0=_get(prob, "a0", "problem.a0", float, 0.0),
        b_exp=_get(prob, "b", "problem.b", float, 0.5),
        s_exp=_get(prob, "s", "problem.s", float, 2.0),
        psi_enabled=_get(prob, "psi_enabled", "problem.psi_enabled", bool, True),
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from None

    gsec = cp["grid"]
    extents = _parse_vec(_get(gsec, "extents", "grid.extents"), N, "grid.extents")
    nodes_txt = _get(gsec, "nodes", "grid.nodes")
    nodes = tuple(int(p.strip()) for p in nodes_txt.split(",") if p.strip())
    if len(nodes) != N:
        raise ConfigError(f"grid.nodes: expected {N} entries, got {len(nodes)}")
    grid = Grid(extents=extents, nodes=nodes)

    bspec = _load_operator(cp, grid, spec)

    ssec = cp["solver"] if cp.has_section("solver") else {}
    opts = SolverOptions(
        eps0=_get(ssec, "eps0", "solver.eps0", float, _SOLVER_DEFAULTS.eps0),
        eps_min=_get(ssec, "eps_min", "solver.eps_min", float, _SOLVER_DEFAULTS.eps_min),
        picard_max=_get(ssec, "picard_max", "solver.picard_max", int,
                        _SOLVER_DEFAULTS.picard_max),
        newton_max=_get(ssec, "newton_max", "solver.newton_max", int,
                        _SOLVER_DEFAULTS.newton_max),
        tol_residual=_get(ssec, "tol_residual", "solver.tol_residual", float,
                          _SOLVER_DEFAULTS.tol_residual),
        relax=_get(ssec, "relax", "solver.relax", float, _SOLVER_DEFAULTS.relax),
        project_nonneg=_get(ssec, "project_nonneg", "solver.project_nonneg", bool,
                            False),
        h_exp=(float(ssec["h_exp"]) if "h_exp" in ssec else None),
    )

    run = {}
    if cp.has_section("run"):
        rsec = cp["run"]
        if "n" in rsec:
            run["n"] = int(rsec["n"])
        if "n_list" in rsec:
            run["n_list"] = tuple(int(x) for x in rsec["n_list"].split(",") if x.strip())
        if "levels" in rsec:
            run["levels"] = tuple(float(x) for x in rsec["levels"].split(",") if x.strip())
        if "samples" in rsec:
            run["samples"] = int(rsec["samples"])
        if "seed" in rsec:
            run["seed"] = int(rsec["seed"])
        if "out" in rsec:
            run["out"] = rsec["out"]
        if "plot" in rsec:
            run["plot"] = rsec["plot"].strip().lower() in ("1", "true", "yes", "on")

    return ExperimentConfig(spec=spec, grid=grid, bspec=bspec, opts=opts, run=run,
                            raw=cp)


def _node_data(grid, text, path):
    parts = text.split()
    if parts[0] == "csv":
        if len(parts) != 2:
            raise ConfigError(f"{path}: csv form is 'csv <path>'")
        return GridFunction.from_csv(grid, parts[1])
    amp = float(parts[1]) if len(parts) > 1 else 1.0
    try:
        return node_preset(grid, parts[0], amp)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _load_operator(cp, grid, spec) -> OperatorBSpec:
    # NB configparser lowercases keys, so all names here must stay distinct
    # after lowercasing
    sec = cp["operator_b"] if cp.has_section("operator_b") else {}
    F = _node_data(grid, sec.get("source", "product_of_sines 1.0"),
                   "operator_b.source")

    gtxt = sec.get("edge_source", "none").strip()
    if gtxt == "none":
        G = None
    else:
        parts = gtxt.split()
        amps = _parse_vec(parts[1], grid.ndim, "operator_b.edge_source")
        try:
            G = edge_preset(grid, parts[0], amps)
        except ValueError as exc:
            raise ConfigError(f"operator_b.edge_source: {exc}") from None

    psi_name = sec.get("psi", "zero").strip()
    psi_c = float(sec.get("psi_c", "1.0"))
    psi_cap = float(sec.get("psi_cap", "1.0"))
    try:
        psi_map, psi_bound = make_psi_map(psi_name, psi_c, psi_cap)
    except ValueError as exc:
        raise ConfigError(f"operator_b.psi: {exc}") from None

    ftxt = sec.get("datum", "none").strip()
    f_datum = None if ftxt == "none" else _node_data(grid, ftxt, "operator_b.datum")
    tau = float(sec["tau"]) if "tau" in sec else None

    bspec = OperatorBSpec(F=F, G=G, psi_name=psi_name, psi_map=psi_map,
                          psi_bound=psi_bound, f_datum=f_datum, tau=tau)
    test_mode = sec.get("test_mode", "false").strip().lower() in ("1", "true", "yes", "on")
    if not test_mode:
        try:
            bspec.validate(spec)
        except ValueError as exc:
            raise ConfigError(f"operator_b: {exc}") from None
    return bspec
