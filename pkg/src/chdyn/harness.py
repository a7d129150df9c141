"""Experiment orchestration: convergence studies in mesh width and step
size, phase-separation simulations, error recording, and EOC tables."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import bdf, fem, io
from .mesh import Mesh, refine, unit_disk_mesh, unit_square_mesh
from .model import (
    InitialData,
    InitialKind,
    Problem,
    double_well,
    initial_field,
    manufactured_disk_problem,
)

__all__ = [
    "ConfigError",
    "ExperimentKind",
    "RunConfig",
    "ConvergenceRecord",
    "load_config",
    "measure_errors",
    "eoc",
    "converge_space",
    "converge_time",
    "simulate",
    "ErrorRecorder",
    "MassEnergyRecorder",
]


class ConfigError(ValueError):
    """Missing or inconsistent experiment configuration."""


class ExperimentKind(Enum):
    CONVERGE_SPACE = "converge-space"
    CONVERGE_TIME = "converge-time"
    SIMULATE = "simulate"


@dataclass
class RunConfig:
    """Settings for one experiment invocation."""

    experiment: ExperimentKind
    q: int = 2
    taus: tuple[float, ...] = ()
    levels: tuple[int, ...] = ()
    t_end: float = 1.0
    eps: float = 1.0
    delta: float = 1.0
    kappa: float = 1.0
    potential_scale: float = 0.25
    scenario: InitialKind = InitialKind.DROPLET
    amplitude: float = 0.1
    seed: int = 0
    square_n: int = 54
    out_dir: Path = Path("out")
    solver_tol: float = 1e-12
    snapshot_times: tuple[float, ...] = ()

    def validate(self) -> None:
        if not 1 <= self.q <= 5:
            raise ConfigError(f"q must be in 1..5, got {self.q}")
        if self.experiment in (ExperimentKind.CONVERGE_SPACE, ExperimentKind.CONVERGE_TIME):
            if not self.taus:
                raise ConfigError("convergence experiments need a non-empty tau list")
            if not self.levels:
                raise ConfigError("convergence experiments need a non-empty level list")
            if self.t_end < self.q * max(self.taus):
                raise ConfigError("t_end shorter than the starting values need")
        if self.experiment is ExperimentKind.SIMULATE and len(self.taus) != 1:
            raise ConfigError("simulate needs exactly one tau")


def load_config(path) -> RunConfig:
    """Read a sectioned key-value config file."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        exp = parser["experiment"]
        kind = ExperimentKind(exp["kind"].strip())
        cfg = RunConfig(
            experiment=kind,
            q=exp.getint("q", fallback=2),
            taus=tuple(float(s) for s in exp.get("taus", fallback="").split()),
            levels=tuple(int(s) for s in exp.get("levels", fallback="").split()),
            t_end=exp.getfloat("t_end", fallback=1.0),
            square_n=exp.getint("square_n", fallback=54),
            solver_tol=exp.getfloat("solver_tol", fallback=1e-12),
        )
        if parser.has_section("problem"):
            prob = parser["problem"]
            cfg.eps = prob.getfloat("eps", fallback=cfg.eps)
            cfg.delta = prob.getfloat("delta", fallback=cfg.delta)
            cfg.kappa = prob.getfloat("kappa", fallback=cfg.kappa)
            cfg.potential_scale = prob.getfloat(
                "potential_scale", fallback=cfg.potential_scale
            )
        if parser.has_section("scenario"):
            scen = parser["scenario"]
            cfg.scenario = InitialKind(scen.get("kind", fallback="droplet").strip())
            cfg.amplitude = scen.getfloat("amplitude", fallback=cfg.amplitude)
            cfg.seed = scen.getint("seed", fallback=cfg.seed)
        if parser.has_section("output"):
            out = parser["output"]
            cfg.out_dir = Path(out.get("dir", fallback="out"))
            cfg.snapshot_times = tuple(
                float(s) for s in out.get("snapshot_times", fallback="").split()
            )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
    cfg.validate()
    return cfg


@dataclass
class ConvergenceRecord:
    """Errors of one run; EOC columns are filled between consecutive runs."""

    level: int
    h: float
    tau: float
    dof: int
    err_u_l2: float
    err_u_h1: float
    err_w_l2: float
    err_w_h1: float
    eoc_u_l2: float | None = None
    eoc_u_h1: float | None = None
    eoc_w_l2: float | None = None
    eoc_w_h1: float | None = None


def measure_errors(mesh: Mesh, mats: fem.FemMatrices, problem: Problem,
                   u_num: np.ndarray, w_num: np.ndarray, t: float):
    """Errors against the nodal interpolation of the exact solution.

    Returns (err_u_l2, err_u_h1, err_w_l2, err_w_h1) in the combined
    bulk+surface norms.
    """
    if problem.exact_u is None or problem.exact_w is None:
        raise ConfigError("error measurement requires exact_u and exact_w")
    e_u = u_num - fem.interpolate(mesh, problem.exact_u, t)
    e_w = w_num - fem.interpolate(mesh, problem.exact_w, t)
    return (
        fem.norm_M(mats, e_u), fem.norm_K(mats, e_u),
        fem.norm_M(mats, e_w), fem.norm_K(mats, e_w),
    )


def eoc(errors, params) -> list[float | None]:
    """Experimental orders log(e_i/e_{i+1}) / log(p_i/p_{i+1}).

    A zero error makes the order undefined; that entry is None.
    """
    errors = [float(e) for e in errors]
    params = [float(p) for p in params]
    if len(errors) != len(params) or len(errors) < 2:
        raise ValueError("need equally long lists with at least two entries")
    if any(p2 >= p1 for p1, p2 in zip(params, params[1:])):
        raise ValueError("parameters must be strictly decreasing")
    out: list[float | None] = []
    for e1, e2, p1, p2 in zip(errors, errors[1:], params, params[1:]):
        if e1 <= 0.0 or e2 <= 0.0:
            out.append(None)
        else:
            out.append(float(np.log(e1 / e2) / np.log(p1 / p2)))
    return out


class ErrorRecorder:
    """Observer tracking the maximum-in-time errors from step q onward."""

    def __init__(self, mesh: Mesh, mats: fem.FemMatrices, problem: Problem,
                 first_step: int):
        self.mesh, self.mats, self.problem = mesh, mats, problem
        self.first_step = first_step
        self.max_errors = np.zeros(4)

    def __call__(self, step_index: int, t: float, u, w) -> None:
        if step_index < self.first_step or w is None:
            return
        errs = measure_errors(self.mesh, self.mats, self.problem, u, w, t)
        self.max_errors = np.maximum(self.max_errors, errs)


class MassEnergyRecorder:
    """Observer collecting the (step, t, mass, energy) series."""

    def __init__(self, mats: fem.FemMatrices, problem: Problem):
        self.mats, self.problem = mats, problem
        self.rows: list[tuple] = []

    def __call__(self, step_index: int, t: float, u, w) -> None:
        self.rows.append((
            step_index, t,
            fem.total_mass(self.mats, u),
            fem.energy(self.mats, self.problem, u),
        ))


class SnapshotWriter:
    """Observer dumping VTK snapshots at selected step indices."""

    def __init__(self, mesh: Mesh, out_dir: Path, steps: set[int]):
        self.mesh, self.out_dir, self.steps = mesh, Path(out_dir), steps
        self.written: list[Path] = []

    def __call__(self, step_index: int, t: float, u, w) -> None:
        if step_index not in self.steps or w is None:
            return
        path = self.out_dir / f"snapshot_{step_index}.vtk"
        io.write_vtk(path, self.mesh, {"u": u, "w": w}, title=f"t={t:.6g}")
        self.written.append(path)


def _fill_eoc(records: list[ConvergenceRecord], params) -> None:
    cols = ["err_u_l2", "err_u_h1", "err_w_l2", "err_w_h1"]
    for col in cols:
        orders = eoc([getattr(r, col) for r in records], params)
        for rec, o in zip(records[1:], orders):
            setattr(rec, "eoc_" + col.removeprefix("err_"), o)


def _convergence_run(config: RunConfig, mesh: Mesh, level: int,
                     tau: float) -> ConvergenceRecord:
    problem = manufactured_disk_problem(config.eps, config.delta, config.kappa)
    scheme = bdf.bdf_coefficients(config.q)
    mats = fem.assemble(mesh)
    recorder = ErrorRecorder(mesh, mats, problem, first_step=config.q)
    summary = bdf.run(
        scheme, problem, mesh, tau, config.t_end, observers=[recorder],
        mats=mats, starting=bdf.StartingMode.EXACT_INTERPOLATION,
        tol=config.solver_tol,
    )
    e = recorder.max_errors
    return ConvergenceRecord(
        level=level, h=mesh.h, tau=tau, dof=summary.dof,
        err_u_l2=e[0], err_u_h1=e[1], err_w_l2=e[2], err_w_h1=e[3],
    )


def converge_space(config: RunConfig) -> list[ConvergenceRecord]:
    """Refinement study at fixed step size on the disk test problem."""
    config.validate()
    tau = min(config.taus)
    levels = sorted(config.levels)
    records = []
    mesh = unit_disk_mesh(levels[0])
    for i, level in enumerate(levels):
        if i > 0:
            for _ in range(level - levels[i - 1]):
                mesh = refine(mesh)
        records.append(_convergence_run(config, mesh, level, tau))
    _fill_eoc(records, [r.h for r in records])
    return records


def converge_time(config: RunConfig) -> list[ConvergenceRecord]:
    """Step-size study on a fixed disk mesh."""
    config.validate()
    level = max(config.levels)
    mesh = unit_disk_mesh(level)
    taus = sorted(config.taus, reverse=True)
    records = [_convergence_run(config, mesh, level, tau) for tau in taus]
    _fill_eoc(records, [r.tau for r in records])
    return records


@dataclass
class SimulationResult:
    summary: bdf.RunSummary
    series_path: Path
    snapshot_paths: list[Path]
    series_rows: list[tuple] = field(repr=False, default_factory=list)


def simulate(config: RunConfig) -> SimulationResult:
    """Phase-separation run on the unit square with mass/energy series."""
    config.validate()
    tau = config.taus[0]
    mesh = unit_square_mesh(config.square_n)
    well = double_well(config.potential_scale)
    problem = Problem(eps=config.eps, delta=config.delta, kappa=config.kappa,
                      w_bulk=well, w_surf=well)
    data = InitialData(kind=config.scenario, amplitude=config.amplitude,
                       seed=config.seed)
    u0 = initial_field(data, mesh, problem)

    mats = fem.assemble(mesh)
    scheme = bdf.bdf_coefficients(config.q)
    series = MassEnergyRecorder(mats, problem)
    snap_steps = {int(round(t / tau)) for t in config.snapshot_times}
    snapshots = SnapshotWriter(mesh, config.out_dir, snap_steps)
    summary = bdf.run(
        scheme, problem, mesh, tau, config.t_end,
        observers=[series, snapshots], mats=mats,
        starting=bdf.StartingMode.EULER_BOOTSTRAP, u0=u0,
        tol=config.solver_tol,
    )
    series_path = Path(config.out_dir) / "series.csv"
    io.write_series_csv(series.rows, series_path)
    return SimulationResult(summary=summary, series_path=series_path,
                            snapshot_paths=snapshots.written,
                            series_rows=series.rows)
