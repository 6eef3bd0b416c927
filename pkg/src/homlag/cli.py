"""Command-line front end.

Exit codes: 0 success, 1 verification or numeric failure, 2 usage or load failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from homlag import __version__
from homlag import dynamics as dyn
from homlag import reduction as red
from homlag import scenarios
from homlag import variational as var
from homlag.errors import HomlagError, NumericError, ScenarioError
from homlag.systems import check_homogeneity, check_scaling_structure

OUT_ENV = "HOMLAG_OUT"
MODES = ("el", "slp", "std-lp", "herglotz")


class UsageError(HomlagError):
    pass


@dataclass
class RunManifest:
    scenario: str
    command: str
    overrides: dict
    output_dir: str
    seed: int
    version: str = __version__
    wall_clock: float = field(default=0.0, compare=False)

    def replay(self) -> dict:
        """Everything except timing; embedded in reports so they stay byte-identical."""
        d = asdict(self)
        d.pop("wall_clock")
        return d


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _overrides(args) -> dict:
    keys = ("mode", "steps", "horizon", "tolerance", "h", "seeds", "q0", "qdot0")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _config(s: scenarios.Scenario, args) -> dyn.IntegratorConfig:
    steps = args.steps if args.steps is not None else s.integrator.steps
    horizon = args.horizon if args.horizon is not None else s.integrator.horizon
    return dyn.IntegratorConfig(steps, horizon)


def _full_initial(s: scenarios.Scenario, args):
    q0 = _floats(args.q0) if getattr(args, "q0", None) else s.initial.get("q")
    v0 = _floats(args.qdot0) if getattr(args, "qdot0", None) else s.initial.get("qdot")
    if q0 is None or v0 is None:
        raise UsageError(f"scenario {s.name} has no full initial state (q, qdot)")
    return np.array(q0, float), np.array(v0, float)


def _reduced_initial(s: scenarios.Scenario, args):
    """Initial (x, xdot, y, sigma): projected from (q, qdot) when a scaling structure exists."""
    if s.scaling is not None and (getattr(args, "q0", None) or "q" in s.initial):
        q0, v0 = _full_initial(s, args)
        x, xdot, y = red.atiyah_forward(s.scaling, q0, v0)
        return x, xdot, float(y), float(s.scaling.scaling(q0))
    if "x" not in s.initial:
        raise UsageError(f"scenario {s.name} has no reduced initial state")
    return (
        np.array(s.initial["x"], float),
        np.array(s.initial["xdot"], float),
        float(s.initial["y"]),
        1.0,
    )


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV, "homlag-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _finish(manifest: RunManifest, out: Path, started: float) -> None:
    manifest.wall_clock = round(time.time() - started, 3)
    _write_json(out / "manifest.json", asdict(manifest))


def _max(a) -> float:
    a = np.abs(np.asarray(a, dtype=float))
    return float(a.max()) if a.size else 0.0


def cmd_list(args) -> int:
    for name in scenarios.builtin_names():
        doc = scenarios.builtin(name).doc
        print(f"{name:24s} {doc.split(';')[0].split('.')[0]}")
    return 0


def cmd_validate(args) -> int:
    s = scenarios.resolve(args.scenario)
    tol = args.tolerance if args.tolerance is not None else 1e-9
    reports = []
    if s.scaling is not None:
        reports.extend(check_scaling_structure(s.scaling, s.box, tol))
        if s.lagrangian is not None:
            reports.append(check_homogeneity(s.lagrangian, s.scaling, s.box, tol))
    print(f"{'check':26s} {'max_abs':>11s} {'max_rel':>11s} {'tol':>8s}  verdict")
    for r in reports:
        verdict = "pass" if r.passed else "FAIL"
        print(f"{r.name:26s} {r.max_abs:11.3e} {r.max_rel:11.3e} {r.tolerance:8.0e}  {verdict}")
    if not reports:
        print("(no scaling structure: nothing to validate)")
    print(json.dumps({"scenario": s.name, "reports": [r.to_dict() for r in reports]}, indent=2))
    return 0 if all(r.passed for r in reports) else 1


def cmd_simulate(args) -> int:
    started = time.time()
    s = scenarios.resolve(args.scenario)
    cfg = _config(s, args)
    out = _out_dir(args)
    manifest = RunManifest(s.name, "simulate", _overrides(args), str(out), args.seed)
    meta = {"scenario": s.name, "mode": args.mode, "steps": cfg.steps, "horizon": cfg.horizon}
    names = s.document.get("variables", {})
    try:
        if args.mode == "el":
            if s.lagrangian is None:
                raise UsageError(f"scenario {s.name} has no Lagrangian")
            q0, v0 = _full_initial(s, args)
            traj = dyn.integrate_el(s.lagrangian, q0, v0, cfg)
            residuals = {"euler_lagrange": _max(dyn.el_residual(s.lagrangian, traj))}
            csv_text = traj.to_csv(names=names.get("q"), meta=meta)
        else:
            x0, xd0, y0, sigma = _reduced_initial(s, args)
            if args.mode == "herglotz":
                if s.herglotz is None:
                    raise UsageError(f"scenario {s.name} has no Herglotz Lagrangian")
                r = dyn.integrate_herglotz(s.herglotz, x0, xd0, y0, cfg)
                mom, act = dyn.herglotz_residual(s.herglotz, r)
                residuals = {"herglotz_momentum": _max(mom), "herglotz_action": _max(act)}
            else:
                ell = s.reduced
                if ell is None:
                    raise UsageError(f"scenario {s.name} has no reduced Lagrangian")
                if args.mode == "slp":
                    r = dyn.integrate_slp(ell, x0, xd0, y0, cfg, sigma)
                    hor, ver = dyn.slp_residual(ell, r)
                else:
                    r = dyn.integrate_std_lp(ell, x0, xd0, y0, cfg, sigma)
                    hor, ver = dyn.std_lp_residual(ell, r)
                residuals = {"horizontal": _max(hor), "vertical": _max(ver)}
            csv_text = r.to_csv(names=names.get("x"), meta=meta)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _finish(manifest, out, started)
        return 1
    stem = f"{s.name}-{args.mode}"
    (out / f"{stem}.csv").write_text(csv_text)
    _write_json(out / f"{stem}-residuals.json", {"manifest": manifest.replay(), "max_residual": residuals})
    _finish(manifest, out, started)
    for key, value in residuals.items():
        print(f"{key:22s} {value:.3e}")
    print(f"wrote {out / (stem + '.csv')}")
    return 0


def reduce_reconstruct(s: scenarios.Scenario, cfg, q0, v0) -> dict:
    """EL integration, projection, independent scaling-LP integration and reconstruction."""
    if s.lagrangian is None or s.scaling is None:
        raise UsageError(f"scenario {s.name} needs a Lagrangian and a scaling structure")
    ell = s.reduced
    full = dyn.integrate_el(s.lagrangian, q0, v0, cfg)
    projected = red.project_trajectory(s.scaling, full)
    reduced = dyn.integrate_slp(
        ell, projected.x[0], projected.xdot[0], projected.y[0], cfg, projected.sigma
    )
    rebuilt = red.reconstruct_trajectory(s.scaling, reduced)
    hor, ver = dyn.slp_residual(ell, reduced)
    prop = var.proportionality_check(s.lagrangian, s.scaling, full, ell)
    return {
        "full": full,
        "reduced": reduced,
        "rebuilt": rebuilt,
        "max_distance": float(np.max(np.linalg.norm(rebuilt.q - full.q, axis=1))),
        "el_residual_rebuilt": _max(dyn.el_residual(s.lagrangian, rebuilt)),
        "slp_residual": max(_max(hor), _max(ver)),
        "proportionality": prop.relative,
        "sigma": projected.sigma,
    }


def cmd_reduce_reconstruct(args) -> int:
    started = time.time()
    s = scenarios.resolve(args.scenario)
    cfg = _config(s, args)
    out = _out_dir(args)
    manifest = RunManifest(s.name, "reduce-reconstruct", _overrides(args), str(out), args.seed)
    q0, v0 = _full_initial(s, args)
    try:
        res = reduce_reconstruct(s, cfg, q0, v0)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _finish(manifest, out, started)
        return 1
    limits = {
        "max_distance": args.tolerance if args.tolerance is not None else 1e-5,
        "el_residual_rebuilt": 1e-4,
        "proportionality": 1e-7,
    }
    verdicts = {k: res[k] <= v for k, v in limits.items()}
    report = {
        "manifest": manifest.replay(),
        "sigma": res["sigma"],
        "metrics": {k: res[k] for k in ("max_distance", "el_residual_rebuilt", "slp_residual", "proportionality")},
        "limits": limits,
        "passed": verdicts,
    }
    _write_json(out / f"{s.name}-reduce-reconstruct.json", report)
    res["rebuilt"].to_csv(out / f"{s.name}-reconstructed.csv", meta={"scenario": s.name, "sigma": res["sigma"]})
    _finish(manifest, out, started)
    for k, limit in limits.items():
        print(f"{k:22s} {res[k]:.3e}  (<= {limit:g})  {'pass' if verdicts[k] else 'FAIL'}")
    return 0 if all(verdicts.values()) else 1


def variational_battery(s: scenarios.Scenario, cfg, q0, v0, seeds, h, tol) -> dict:
    res = reduce_reconstruct(s, cfg, q0, v0)
    ell = s.reduced
    hamilton = var.criticality_report(var.HAMILTON, s.lagrangian, res["full"], seeds, h, tol)
    reduced = var.criticality_report(var.REDUCED, ell, res["reduced"], seeds, h, tol)
    r = res["reduced"]
    t = r.times
    line = red.ReducedTrajectory(
        t, r.x[0] + np.outer(t, r.xdot[0]), np.broadcast_to(r.xdot[0], r.x.shape), np.full_like(t, r.y[0]), r.sigma
    )
    probe = var.criticality_report(var.REDUCED, ell, line, seeds, h, tol)
    probe["discriminates"] = bool(probe["max_abs"] > 1e-3)
    return {"hamilton": hamilton, "reduced": reduced, "straight_line_probe": probe}


def cmd_verify_variational(args) -> int:
    started = time.time()
    s = scenarios.resolve(args.scenario)
    cfg = _config(s, args)
    out = _out_dir(args)
    manifest = RunManifest(s.name, "verify-variational", _overrides(args), str(out), args.seed)
    q0, v0 = _full_initial(s, args)
    seeds = list(range(args.seed, args.seed + args.seeds))
    tol = args.tolerance if args.tolerance is not None else 1e-6
    try:
        battery = variational_battery(s, cfg, q0, v0, seeds, args.h, tol)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _finish(manifest, out, started)
        return 1
    _write_json(out / f"{s.name}-variational.json", {"manifest": manifest.replay(), **battery})
    _finish(manifest, out, started)
    for key, rep in battery.items():
        extra = f" discriminates={rep['discriminates']}" if "discriminates" in rep else ""
        print(f"{key:20s} max|dF| = {rep['max_abs']:.3e}  bound = {rep['tolerance']:.3e}  critical={rep['critical']}{extra}")
    ok = battery["hamilton"]["critical"] and battery["reduced"]["critical"]
    return 0 if ok else 1


def herglotz_probes(k: int, x0, horizon: float = 2.0, steps: int = 400):
    """Shared probe curves on the quotient: constant y, y = t, and a generic wiggle."""
    t = red.uniform_grid(steps, horizon)
    x0 = np.asarray(x0, float).reshape(k)
    v = np.linspace(0.4, 0.7, k)
    line_x = x0 + np.outer(t, v)
    line_xd = np.broadcast_to(v, line_x.shape)
    wig_x = x0 + 0.3 * np.outer(np.sin(t), np.ones(k))
    wig_xd = 0.3 * np.outer(np.cos(t), np.ones(k))
    return {
        "line, y = y0": red.ReducedTrajectory(t, line_x, line_xd, np.full_like(t, 0.2)),
        "line, y = t": red.ReducedTrajectory(t, line_x, line_xd, t.copy()),
        "wiggle": red.ReducedTrajectory(t, wig_x, wig_xd, 0.5 + 0.2 * np.cos(t)),
    }


def compare_herglotz(s: scenarios.Scenario) -> dict:
    k = s.base_dim
    ell = s.reduced
    if ell is None and s.herglotz is None:
        raise UsageError(f"scenario {s.name} has neither a reduced nor a Herglotz Lagrangian")
    x0 = s.initial.get("x", [0.3] * k)
    rows = {}
    for label, curve in herglotz_probes(k, x0).items():
        row = {}
        if ell is not None:
            hor, ver = dyn.slp_residual(ell, curve)
            row["slp_horizontal"], row["slp_vertical"] = _max(hor), _max(ver)
            std_h, _ = dyn.std_lp_residual(ell, curve)
            row["std_lp_horizontal"] = _max(std_h)
        if s.herglotz is not None:
            mom, act = dyn.herglotz_residual(s.herglotz, curve)
            row["herglotz_momentum"] = _max(mom)
            row["herglotz_action"] = _max(act)
            row["herglotz_action_mean"] = float(np.mean(act))
        rows[label] = row
    return rows


def cmd_compare_herglotz(args) -> int:
    started = time.time()
    s = scenarios.resolve(args.scenario)
    out = _out_dir(args)
    manifest = RunManifest(s.name, "compare-herglotz", _overrides(args), str(out), args.seed)
    rows = compare_herglotz(s)
    cols = sorted({c for row in rows.values() for c in row})
    print(f"{'probe':14s} " + " ".join(f"{c:>20s}" for c in cols))
    for label, row in rows.items():
        print(f"{label:14s} " + " ".join(f"{row.get(c, float('nan')):20.3e}" for c in cols))
    _write_json(out / f"{s.name}-herglotz.json", {"manifest": manifest.replay(), "probes": rows})
    _finish(manifest, out, started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homlag", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, integrate=True):
        p.add_argument("scenario", help="built-in name or path to a scenario JSON file")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./homlag-out)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tolerance", type=float)
        if integrate:
            p.add_argument("--steps", type=int)
            p.add_argument("--horizon", type=float)
            p.add_argument("--q0", help="comma-separated initial configuration")
            p.add_argument("--qdot0", help="comma-separated initial velocity")

    p = sub.add_parser("list-scenarios")
    p.set_defaults(func=cmd_list)
    p = sub.add_parser("validate")
    common(p, integrate=False)
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("simulate")
    common(p)
    p.add_argument("--mode", choices=MODES, default="el")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("reduce-reconstruct")
    common(p)
    p.set_defaults(func=cmd_reduce_reconstruct)
    p = sub.add_parser("verify-variational")
    common(p)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--h", type=float, default=1e-5)
    p.set_defaults(func=cmd_verify_variational)
    p = sub.add_parser("compare-herglotz")
    common(p, integrate=False)
    p.set_defaults(func=cmd_compare_herglotz)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
