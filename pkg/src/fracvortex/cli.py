"""Command-line front end: ``check``, ``solve``, ``sweep`` and ``verify``.

A run is described by a JSON config file::

    {
      "problem": "SCALAR_PERIODIC",
      "model": {"lam": 1.0, "xi": 1.0, "m": 1.0, "n": 1.0, "a2": 0.5, "b2": 0.5},
      "vortices": [[1.0, 2.0, 1]],
      "grid": {"n": 256, "lx": 6.283185307179586},
      "seed": 0,
      "output": "out"
    }

System problems use ``vortices1``/``vortices2`` and the model keys
``lam1, lam2, xi1, xi2, m, a2, b2, c2``.  Planar problems take
``"grid": {"n": 511, "half_width": 16.0}`` plus ``mu``.  Omitted ``xi``
values default to the vacuum values.

Exit codes: 0 success, 1 infeasible or failed checks, 2 usage or parse
error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .background import default_box_half_width
from .energy import ProblemClass
from .grid import PeriodicCell, PeriodicGrid, PlanarBox, read_field, write_field
from .model import (
    ConfigurationError,
    FeasibilityError,
    ScalarModel,
    SystemModel,
    VortexSet,
    classify_regime,
    feasibility_scalar_periodic,
    feasibility_system_periodic,
    guaranteed_sign_properties,
)
from .solver import (
    ConvergenceError,
    SolverOptions,
    solve_scalar_periodic,
    solve_scalar_planar,
    solve_system_periodic,
    solve_system_planar,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

SCALAR_KEYS = ("lam", "xi", "m", "n", "a2", "b2")
SYSTEM_KEYS = ("lam1", "lam2", "xi1", "xi2", "m", "a2", "b2", "c2")
TOP_KEYS = ("problem", "model", "vortices", "vortices1", "vortices2", "grid", "mu", "sigma",
            "far_field", "solver", "output", "seed", "initial", "probe")


class ConfigError(ValueError):
    """Config problem, reported as ``source:line: message``."""

    def __init__(self, message, source="<config>", line=None):
        self.source, self.line = source, line
        loc = f"{source}:{line}" if line else source
        super().__init__(f"{loc}: {message}")


# ---------------------------------------------------------------------------
# configuration


@dataclasses.dataclass
class RunConfig:
    problem: ProblemClass
    model: object
    vortices: tuple
    grid: dict
    mu: float = 1.0
    sigma: float | None = None
    far_field: str = "vacuum"
    solver: SolverOptions = dataclasses.field(default_factory=SolverOptions)
    output: str = "out"
    seed: int = 0
    initial: str = "zero"
    probe: int = 0

    @property
    def is_system(self) -> bool:
        return self.problem in (ProblemClass.SYSTEM_PERIODIC, ProblemClass.SYSTEM_PLANAR)

    @property
    def planar(self) -> bool:
        return self.problem in (ProblemClass.SCALAR_PLANAR, ProblemClass.SYSTEM_PLANAR)

    def make_grid(self):
        if self.planar:
            return PlanarBox(self.grid["half_width"], self.grid["n"], self.grid["ny"])
        return PeriodicGrid(PeriodicCell(self.grid["lx"], self.grid["ly"]),
                            self.grid["n"], self.grid["ny"])

    def to_dict(self) -> dict:
        d = {
            "problem": self.problem.value,
            "model": dataclasses.asdict(self.model),
            "grid": dict(self.grid),
            "far_field": self.far_field,
            "solver": dataclasses.asdict(self.solver),
            "output": self.output,
            "seed": self.seed,
            "initial": self.initial,
            "probe": self.probe,
        }
        if self.is_system:
            d["vortices1"] = self.vortices[0].to_list()
            d["vortices2"] = self.vortices[1].to_list()
        else:
            d["vortices"] = self.vortices[0].to_list()
        if self.planar:
            d["mu"] = self.mu
        else:
            d["sigma"] = self.sigma
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _line_of(text: str, key: str):
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _number(value, what, err, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise err(f"{what} must be a number, got {value!r}")
    if integer and float(value) != int(value):
        raise err(f"{what} must be an integer, got {value!r}")
    if not math.isfinite(value):
        raise err(f"{what} must be finite")
    return int(value) if integer else float(value)


def _vortices(entries, key, err):
    if not isinstance(entries, list):
        raise err(f"{key} must be a list of [x, y] or [x, y, multiplicity] entries", key)
    try:
        return VortexSet.from_list(entries)
    except (TypeError, ValueError) as exc:
        raise err(f"{key}: {exc}", key) from None


def config_from_dict(data: dict, text: str = "", source: str = "<config>") -> RunConfig:
    """Validate a decoded config, anchoring error messages to ``text`` lines."""

    def err(msg, key=None):
        return ConfigError(msg, source, _line_of(text, key) if key else None)

    if not isinstance(data, dict):
        raise err("top level must be a JSON object")
    for k in data:
        if k not in TOP_KEYS:
            raise err(f"unknown key {k!r}", k)
    try:
        problem = ProblemClass(str(data.get("problem", "")).upper())
    except ValueError:
        raise err(f"problem must be one of {[p.value for p in ProblemClass]}", "problem") from None
    system = problem in (ProblemClass.SYSTEM_PERIODIC, ProblemClass.SYSTEM_PLANAR)
    planar = problem in (ProblemClass.SCALAR_PLANAR, ProblemClass.SYSTEM_PLANAR)

    raw = data.get("model")
    if not isinstance(raw, dict):
        raise err("model section is required", "model")
    allowed = SYSTEM_KEYS if system else SCALAR_KEYS
    for k in raw:
        if k not in allowed:
            raise err(f"unknown model key {k!r} for {problem.value}", k)
    params = {k: _number(v, f"model.{k}", lambda m, k=k: err(m, k), integer=(system and k == "m"))
              for k, v in raw.items()}
    try:
        if system:
            for k in ("lam1", "lam2"):
                if k not in params:
                    raise err(f"model.{k} is required", "model")
            m = params.get("m", 1)
            a2, b2, c2 = (params.get(k, 0.0) for k in ("a2", "b2", "c2"))
            params.setdefault("xi1", m * a2 + b2 + c2)
            params.setdefault("xi2", b2 - c2)
            model = SystemModel(**params)
        else:
            if "lam" not in params:
                raise err("model.lam is required", "model")
            m, n = params.get("m", 1.0), params.get("n", 1.0)
            a2, b2 = params.get("a2", 0.5), params.get("b2", 0.5)
            params.setdefault("xi", m * a2 + n * b2)
            model = ScalarModel(**params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise err(f"model: {exc}", "model") from None

    if system:
        for k in ("vortices1", "vortices2"):
            if k not in data:
                raise err(f"{k} is required for {problem.value}")
        if "vortices" in data:
            raise err("use vortices1/vortices2 for system problems", "vortices")
        vortices = (_vortices(data["vortices1"], "vortices1", err),
                    _vortices(data["vortices2"], "vortices2", err))
    else:
        if "vortices1" in data or "vortices2" in data:
            raise err("use vortices for scalar problems", "vortices1")
        vortices = (_vortices(data.get("vortices", []), "vortices", err),)

    g = data.get("grid", {})
    if not isinstance(g, dict):
        raise err("grid must be an object", "grid")
    gkeys = ("n", "ny", "half_width") if planar else ("n", "ny", "lx", "ly")
    for k in g:
        if k not in gkeys:
            raise err(f"unknown grid key {k!r} for {problem.value}", k)
    n = _number(g.get("n", 511 if planar else 256), "grid.n", lambda m: err(m, "n"), True)
    ny = _number(g.get("ny", n), "grid.ny", lambda m: err(m, "ny"), True)
    mu = _number(data.get("mu", 1.0), "mu", lambda m: err(m, "mu"))
    if planar:
        hw = g.get("half_width")
        if hw is None:
            hw = default_box_half_width(mu, model.decay_rate)
        grid = {"n": n, "ny": ny, "half_width": _number(hw, "grid.half_width",
                                                        lambda m: err(m, "half_width"))}
    else:
        lx = _number(g.get("lx", 2 * math.pi), "grid.lx", lambda m: err(m, "lx"))
        ly = _number(g.get("ly", lx), "grid.ly", lambda m: err(m, "ly"))
        grid = {"n": n, "ny": ny, "lx": lx, "ly": ly}

    sigma = data.get("sigma")
    if sigma is not None:
        sigma = _number(sigma, "sigma", lambda m: err(m, "sigma"))
    far_field = data.get("far_field", "vacuum")
    if far_field not in ("vacuum", "zero"):
        raise err("far_field must be 'vacuum' or 'zero'", "far_field")
    sraw = data.get("solver", {})
    if not isinstance(sraw, dict):
        raise err("solver must be an object", "solver")
    fields = {f.name: f.type for f in dataclasses.fields(SolverOptions)}
    opts = {}
    for k, v in sraw.items():
        if k not in fields:
            raise err(f"unknown solver key {k!r}", k)
        opts[k] = _number(v, f"solver.{k}", lambda m, k=k: err(m, k), integer=fields[k] == "int")
    try:
        solver = SolverOptions(**opts)
    except ValueError as exc:
        raise err(f"solver: {exc}", "solver") from None
    seed = _number(data.get("seed", 0), "seed", lambda m: err(m, "seed"), True)
    if not 0 <= seed < 2**64:
        raise err("seed must be a 64-bit unsigned integer", "seed")
    initial = data.get("initial", "zero")
    if initial not in ("zero", "random"):
        raise err("initial must be 'zero' or 'random'", "initial")
    probe = _number(data.get("probe", 0), "probe", lambda m: err(m, "probe"), True)
    if probe == 1 or probe < 0:
        raise err("probe must be 0 (off) or at least 2", "probe")
    output = data.get("output", "out")
    if not isinstance(output, str):
        raise err("output must be a string", "output")
    cfg = RunConfig(problem, model, vortices, grid, mu, sigma, far_field, solver, output,
                    seed, initial, probe)
    try:
        cfg.make_grid()
    except ValueError as exc:
        raise err(f"grid: {exc}", "grid") from None
    return cfg


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, source, exc.lineno) from None
    return config_from_dict(data, text, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path))


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    grid = dict(cfg.grid)
    changes = {}
    if getattr(args, "grid", None) is not None:
        grid["n"] = grid["ny"] = args.grid
    if getattr(args, "box", None) is not None:
        if not cfg.planar:
            raise ConfigError("--box applies to planar problems only", "--box")
        grid["half_width"] = args.box
    if getattr(args, "mu", None) is not None:
        changes["mu"] = args.mu
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        changes["output"] = args.out
    # round-trip through the validator so overrides get the same checks
    return config_from_dict({**cfg.replace(**changes).to_dict(), "grid": grid}, source="<flags>")


# ---------------------------------------------------------------------------
# running


def _pipeline(cfg: RunConfig):
    """Return ``(function, args, kwargs)`` for the configured solve."""
    grid = cfg.make_grid()
    opts = {"options": cfg.solver}
    if cfg.problem is ProblemClass.SCALAR_PERIODIC:
        return solve_scalar_periodic, (cfg.model, cfg.vortices[0], grid), {**opts, "sigma": cfg.sigma}
    if cfg.problem is ProblemClass.SYSTEM_PERIODIC:
        return (solve_system_periodic, (cfg.model, *cfg.vortices, grid),
                {**opts, "sigma": cfg.sigma})
    extra = {**opts, "mu": cfg.mu, "far_field": cfg.far_field}
    if cfg.problem is ProblemClass.SCALAR_PLANAR:
        return solve_scalar_planar, (cfg.model, cfg.vortices[0], grid), extra
    return solve_system_planar, (cfg.model, *cfg.vortices, grid), extra


def run(cfg: RunConfig, v0=None, diagnose=True):
    func, args, kwargs = _pipeline(cfg)
    if v0 is None and cfg.initial == "random":
        v0 = np.random.default_rng(cfg.seed)
    sol = func(*args, v0=v0, diagnose=diagnose, **kwargs)
    if diagnose and cfg.probe:
        sol.diagnostics.uniqueness = diag.uniqueness_probe(func, *args, k=cfg.probe,
                                                           seed=cfg.seed, **kwargs)
    return sol


def check_text(cfg: RunConfig):
    """Feasibility text and verdict for ``check``; returns ``(ok, lines)``."""
    grid = cfg.make_grid()
    lines = [f"problem: {cfg.problem.value}"]
    md = cfg.model
    ok = True
    if cfg.is_system:
        eff = md.effective()
        regime = classify_regime(eff)
        lines.append(f"regime: {regime.value}")
        if cfg.planar:
            r1, r2 = eff.vacuum_residuals
            ok = eff.on_vacuum()
            lines.append(f"vacuum m*a2+b2+c2 = xi1, b2-c2 = xi2: residuals {r1:.3e}, {r2:.3e}"
                         f" -> {'ok' if ok else 'violated'}")
        else:
            try:
                verdict = feasibility_system_periodic(eff, cfg.vortices[0].total,
                                                      cfg.vortices[1].total, grid.area, regime)
            except ConfigurationError as exc:
                return False, lines + [f"infeasible: {exc}"]
            ok = verdict.feasible
            lines.append(verdict.summary())
        sg = guaranteed_sign_properties(eff)
        lines.append("sign guarantees: " + (", ".join(f"{c} < 0" for c in sg.combinations)
                                            if sg.combinations and eff.on_vacuum() else "none"))
    else:
        if cfg.planar:
            ok = md.on_vacuum()
            lines.append(f"vacuum m*a2+n*b2 = xi: residual {md.vacuum_residual:.3e}"
                         f" -> {'ok' if ok else 'violated'}")
        else:
            verdict = feasibility_scalar_periodic(md, cfg.vortices[0].total, grid.area)
            ok = verdict.feasible
            lines.append(verdict.summary())
        lines.append(f"linearised decay rate: {md.decay_rate:.6g}")
    return ok, lines


def _field_names(sol):
    return ["u"] if not sol.is_system else ["u1", "u2"]


def solution_report(cfg: RunConfig, sol) -> dict:
    d = sol.diagnostics.as_dict() if sol.diagnostics is not None else {}
    return {
        "problem": cfg.problem.value,
        "regime": None if sol.regime is None else sol.regime.value,
        "reduction": sol.reduction,
        "n_vortices": list(sol.n_vortices),
        "solver": sol.report.as_dict(),
        "energy": sol.report.energy,
        "iterations": sol.report.iterations,
        "residuals": d.get("residuals", {}),
        "diagnostics": {k: v for k, v in d.items() if k != "residuals"},
    }


def _linecut(sol):
    grid = sol.grid
    x, y = grid.axes
    if sol.planar:
        j = int(np.argmin(np.abs(y)))
    else:
        pts = [p for vs in sol.vortices for p, _ in vs]
        j = int(np.argmin(np.abs(y - pts[0][1]))) if pts else grid.ny // 2
    names = _field_names(sol)
    head = "# line cut at y = %r\n# x " % float(y[j]) + " ".join(
        names + [n.replace("u", "v") for n in names]) + "\n"
    cols = [x] + [sol.u[k][:, j] for k in range(len(names))] + [sol.v[k][:, j] for k in range(len(names))]
    body = "".join(" ".join(repr(float(c[i])) for c in cols) + "\n" for i in range(len(x)))
    return head + body


def write_outputs(cfg: RunConfig, sol, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    names = _field_names(sol)
    for k, name in enumerate(names):
        write_field(out / f"{name}.vxf", sol.grid, sol.u[k])
        write_field(out / f"{name.replace('u', 'v')}.vxf", sol.grid, sol.v[k])
    if sol.reduction is not None:
        write_field(out / "w.vxf", sol.grid, sol.inner[0])
    report = solution_report(cfg, sol)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out / "linecut.dat").write_text(_linecut(sol))
    (out / "config.json").write_text(cfg.dumps())
    return report


def _print_residuals(report, stream):
    for name, r in report["residuals"].items():
        mark = "ok" if r["pass"] else "FAIL"
        print(f"  {name:18s} value={r['value']:.10g} rhs={r['rhs']:.10g} "
              f"rel={r['rel_error']:.3e} tol={r['tolerance']:g} {mark}", file=stream)


def _solve_guarded(cfg, stream, v0=None, diagnose=True):
    """Run a solve, mapping errors to exit codes; returns ``(code, solution)``."""
    try:
        return EXIT_OK, run(cfg, v0=v0, diagnose=diagnose)
    except FeasibilityError as exc:
        print(exc.verdict.summary(), file=stream)
        return EXIT_FAIL, None
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=stream)
        return EXIT_FAIL, None
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=stream)
        return EXIT_DIVERGED, None


def cmd_check(cfg: RunConfig, stream=sys.stdout) -> int:
    ok, lines = check_text(cfg)
    print("\n".join(lines), file=stream)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_solve(cfg: RunConfig, stream=sys.stdout) -> int:
    code, sol = _solve_guarded(cfg, stream)
    if sol is None:
        return code
    out = Path(cfg.output)
    report = write_outputs(cfg, sol, out)
    rep = sol.report
    print(f"{cfg.problem.value}: {rep.status} after {rep.iterations} Newton steps, "
          f"energy {rep.energy:.12g}, |grad| {rep.grad_norm:.3e}", file=stream)
    _print_residuals(report, stream)
    for note in sol.diagnostics.notes:
        print(f"  note: {note}", file=stream)
    failures = sol.diagnostics.failures()
    if failures:
        print("failed checks: " + ", ".join(failures), file=stream)
        return EXIT_FAIL
    print(f"wrote {out}/", file=stream)
    return EXIT_OK


SWEEP_PARAMS = ("N", "area", "lambda", "mu", "grid")


def _sweep_config(cfg: RunConfig, param: str, value):
    d = cfg.to_dict()
    if param == "N":
        if cfg.is_system:
            raise ConfigError("N sweeps apply to scalar problems", "--param")
        n = int(value)
        rng = np.random.default_rng([cfg.seed, n])
        if cfg.planar:
            hw = cfg.grid["half_width"] / 4
            pts = rng.uniform(-hw, hw, size=(n, 2))
        else:
            pts = rng.uniform(0, 1, size=(n, 2)) * [cfg.grid["lx"], cfg.grid["ly"]]
        d["vortices"] = [[float(x), float(y), 1] for x, y in pts]
    elif param == "area":
        if cfg.planar:
            raise ConfigError("area sweeps apply to periodic problems", "--param")
        side = math.sqrt(float(value))
        sx, sy = side / cfg.grid["lx"], side / cfg.grid["ly"]
        d["grid"] = {**d["grid"], "lx": side, "ly": side}
        for key in ("vortices", "vortices1", "vortices2"):
            if key in d:
                d[key] = [[x * sx, y * sy, k] for x, y, k in d[key]]
    elif param == "lambda":
        d["model"] = {**d["model"], ("lam1" if cfg.is_system else "lam"): float(value)}
    elif param == "mu":
        if not cfg.planar:
            raise ConfigError("mu sweeps apply to planar problems", "--param")
        d["mu"] = float(value)
    elif param == "grid":
        d["grid"] = {**d["grid"], "n": int(value), "ny": int(value)}
    return config_from_dict(d, source="<sweep>")


def _slack(cfg: RunConfig):
    if cfg.planar:
        return float("nan")
    if cfg.is_system:
        eff = cfg.model.effective()
        v = feasibility_system_periodic(eff, cfg.vortices[0].total, cfg.vortices[1].total,
                                        cfg.make_grid().area)
        return min(v.slacks.values())
    v = feasibility_scalar_periodic(cfg.model, cfg.vortices[0].total, cfg.make_grid().area)
    return v.slacks["eta"]


def sweep_rows(cfg: RunConfig, param: str, values):
    """One dict per value: verdict, slack, status, iterations, worst residual."""
    rows, first_u = [], None
    if values:
        _sweep_config(cfg, param, values[0])  # parameter/problem mismatches are usage errors
    for value in values:
        row = {"value": value, "verdict": "", "slack": float("nan"), "status": "",
               "iterations": 0, "residual": float("nan"), "du": float("nan")}
        try:
            c = _sweep_config(cfg, param, value)
            row["slack"] = _slack(c)
            sol = run(c)
        except FeasibilityError as exc:
            row.update(verdict="infeasible", status="rejected",
                       slack=min(exc.verdict.slacks.values()) if exc.verdict.slacks else row["slack"])
        except (ConfigurationError, ConfigError, ValueError) as exc:
            row.update(verdict="invalid", status=str(exc).splitlines()[0])
        except ConvergenceError as exc:
            row.update(verdict="feasible", status=exc.report.status,
                       iterations=exc.report.iterations)
        else:
            res = sol.diagnostics.residuals
            row.update(verdict="feasible", status=sol.report.status,
                       iterations=sol.report.iterations,
                       residual=max((r.rel_error for r in res.values()), default=0.0))
            if param == "mu":
                if first_u is None:
                    first_u = sol.u
                row["du"] = float(np.abs(sol.u - first_u).max())
        rows.append(row)
    return rows


def format_rows(param: str, rows) -> str:
    head = f"# {param:>10s} {'verdict':>10s} {'slack':>14s} {'status':>12s} {'iters':>5s} " \
           f"{'residual':>10s} {'max|du|':>10s}\n"
    out = [head]
    for r in rows:
        out.append(f"  {r['value']!s:>10s} {r['verdict']:>10s} {r['slack']:14.6g} "
                   f"{r['status']:>12s} {r['iterations']:5d} {r['residual']:10.3e} {r['du']:10.3e}\n")
    return "".join(out)


def cmd_sweep(cfg: RunConfig, param: str, values, stream=sys.stdout) -> int:
    rows = sweep_rows(cfg, param, values)
    text = format_rows(param, rows)
    print(text, end="", file=stream)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"sweep_{param}.dat").write_text(text)
    return EXIT_OK


def _load_state(out: Path, sol_report: dict):
    reduction = sol_report.get("reduction")
    if reduction in ("sum", "difference"):
        names = ["w"]
    elif reduction == "decoupled":
        names = ["v1"]
    elif sol_report["problem"].startswith("SYSTEM"):
        names = ["v1", "v2"]
    else:
        names = ["v"]
    grid, fields = None, []
    for name in names:
        g, f = read_field(out / f"{name}.vxf")
        if grid is not None and g != grid:
            raise ValueError(f"{name}.vxf grid does not match")
        grid = g
        fields.append(f)
    return grid, np.stack(fields)


def cmd_verify(target, stream=sys.stdout) -> int:
    """Re-check a ``solve`` output directory (or a dump inside it).

    The stored state is fed back through the pipeline with zero Newton steps:
    it must still meet the gradient tolerance, and every recomputed check
    must pass and agree with the stored report.
    """
    target = Path(target)
    out = target if target.is_dir() else target.parent
    cfg = load_config(out / "config.json")
    stored = json.loads((out / "report.json").read_text())
    grid, state = _load_state(out, stored)
    if grid != cfg.make_grid():
        print("dump grid does not match config.json", file=stream)
        return EXIT_FAIL
    cfg = cfg.replace(solver=dataclasses.replace(cfg.solver, max_newton=0), probe=0)
    code, sol = _solve_guarded(cfg, stream, v0=state)
    if sol is None:
        return code if code != EXIT_DIVERGED else EXIT_FAIL
    for k, name in enumerate(_field_names(sol)):
        _, u = read_field(out / f"{name}.vxf")
        if not np.array_equal(u, sol.u[k]):
            print(f"{name}.vxf differs from background + regular part", file=stream)
            return EXIT_FAIL
    report = solution_report(cfg, sol)
    print(f"gradient max-norm {sol.report.grad_norm:.3e} <= {cfg.solver.grad_tol:g}", file=stream)
    _print_residuals(report, stream)
    ok = not sol.diagnostics.failures()
    for name, r in report["residuals"].items():
        old = stored["residuals"].get(name)
        if old is None or abs(old["value"] - r["value"]) > 1e-9 * max(1.0, abs(r["value"])):
            print(f"stored residual {name} does not match recomputation", file=stream)
            ok = False
    print("verify: " + ("all checks pass" if ok else "FAILED"), file=stream)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing


def _values(text: str):
    """Parse ``a,b,c`` or ``start:stop[:step]`` (inclusive) into numbers."""
    def num(s):
        x = float(s)
        return int(x) if x.is_integer() and "." not in s and "e" not in s.lower() else x

    text = text.strip()
    if ":" in text:
        parts = [num(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise argparse.ArgumentTypeError("range must be start:stop[:step]")
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else 1
        if step <= 0:
            raise argparse.ArgumentTypeError("range step must be positive")
        vals, k = [], 0
        while start + k * step <= stop + 1e-12 * abs(stop):
            vals.append(start + k * step)
            k += 1
        return vals
    try:
        return [num(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse values {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracvortex", description="Fractional-vortex equation solver.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="JSON run configuration")
        sp.add_argument("--grid", type=int, help="grid points per axis")
        sp.add_argument("--box", type=float, help="planar box half-width L")
        sp.add_argument("--mu", type=float, help="planar background scale")
        sp.add_argument("--seed", type=int, help="random seed")
        sp.add_argument("--out", help="output directory")

    common(sub.add_parser("check", help="feasibility verdict, regime and sign guarantees"))
    common(sub.add_parser("solve", help="solve and write fields, report and line cut"))
    sp = sub.add_parser("sweep", help="solve over a range of one parameter")
    common(sp)
    sp.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sp.add_argument("--values", required=True, type=_values,
                    help="comma list or inclusive start:stop[:step]")
    vp = sub.add_parser("verify", help="re-check a solve output directory")
    vp.add_argument("dump", help="output directory of solve, or a dump inside it")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "verify":
            return cmd_verify(args.dump, sys.stdout)
        cfg = apply_overrides(load_config(args.config), args)
        if args.command == "check":
            return cmd_check(cfg, sys.stdout)
        if args.command == "solve":
            return cmd_solve(cfg, sys.stdout)
        return cmd_sweep(cfg, args.param, args.values, sys.stdout)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if args.command != "verify" else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
