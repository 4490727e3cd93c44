"""Command-line driver.

    biotpicard --mode solve --scenario case.json --out results/
    biotpicard --mode check-ops --seed 42 --out ops/

Modes write plot-ready text files into ``--out`` and print one
``PASS``/``FAIL`` line per check.  The exit status is 0 iff every check
passes, 1 if a check fails and 2 for configuration or solver errors.
"""

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from . import battery, diagnostics, evolution, fixedpoint
from .errors import ConfigurationError, PicardNonConvergence, PreconditionError, SolverBreakdown
from .mesh import format_float, write_mesh
from .scenario import expression_source, parse_scenario

log = logging.getLogger("biotpicard")

MODES = ("solve", "mms", "limit", "check-ops", "audit")
RESIDUAL_LIMIT = 1e-7


def _emit(checks, name, passed, detail=""):
    checks.append(bool(passed))
    print(f"{'PASS' if passed else 'FAIL'} {name}" + (f": {detail}" if detail else ""))


def _write_json(path, payload):
    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, (float, np.floating)):
            return format_float(float(obj))
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        return obj
    with open(path, "w") as fh:
        json.dump(clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _audit_payload(ops, record, sc):
    audit = evolution.energy_audit_linear(ops, record)
    fp = fixedpoint.verify_fixed_point(ops, record, sc)
    return audit, fp, {
        "energy_audit": {
            "applicable": audit.applicable,
            "passed": audit.passed,
            "max_violation": audit.max_violation,
            "initial_energy": audit.initial_energy,
            "min_slack": float(np.min(audit.slack[1:], initial=np.inf)),
            "preest2_constant": audit.preest2_constant,
            "preest3_constant": audit.preest3_constant,
            "preest3_stepwise": audit.preest3_stepwise,
        },
        "fixed_point": {
            "max_pressure_residual": fp.max_pressure_residual,
            "max_elasticity_residual": fp.max_elasticity_residual,
        },
    }


def _save_record(path, record):
    np.savez(path, times=record.times, p=record.p, u=record.u, zeta=record.zeta,
             zeta_cells=record.zeta_cells, content=record.content, z_used=record.z_used,
             c0=record.c0, mode=record.mode, data_functional=record.data_functional,
             d0_l2_sq=record.d0_l2_sq)


def _load_record(path, ops, sc):
    data = np.load(path)
    record = evolution.TrajectoryRecord(
        times=data["times"], p=data["p"], u=data["u"], zeta=data["zeta"],
        zeta_cells=data["zeta_cells"], content=data["content"], z_used=data["z_used"],
        c0=float(data["c0"]), mode=str(data["mode"]), data_functional=float(data["data_functional"]),
        d0_l2_sq=float(data["d0_l2_sq"]),
    )
    loads = evolution.assemble_sources(ops, sc)
    record.translated = evolution.translate_problem(ops, sc, loads)
    evolution.fill_ledger(ops, record)
    return record


def run_solve(sc, out, args, checks):
    ops = fixedpoint.operators_for(sc)
    write_mesh(ops.mesh, out / "mesh.txt")
    lagged = args.per_step_lagged_k or sc.lagged_k
    try:
        record, history = fixedpoint.picard_solve(sc, ops, lagged=lagged)
        converged = True
    except PicardNonConvergence as exc:
        fixedpoint.write_iteration_log(exc.history, out / "iteration_log.csv")
        _emit(checks, "picard convergence", False,
              f"{len(exc.history)} iterations, {fixedpoint.classify_history(exc.history)}")
        return
    fixedpoint.write_iteration_log(history, out / "iteration_log.csv")
    _emit(checks, "picard convergence", converged,
          f"{len(history)} iterations, residual {history[-1].residual:.3e}"
          + (" (lagged-k preview)" if lagged else ""))

    evolution.write_trajectory_csv(record, out / "trajectory.csv")
    for t in sc.snapshot_times:
        step = int(round(t / sc.dt))
        if not 0 <= step <= sc.n_steps:
            raise ConfigurationError(f"snapshot time {t} lies outside [0, T]")
        evolution.write_snapshot(ops, record, step, out / f"snapshot_{step:05d}.txt")
    _save_record(out / "trajectory.npz", record)

    audit, fp, payload = _audit_payload(ops, record, sc)
    payload["estimates"] = diagnostics.solution_estimates(ops, record, evolution.assemble_sources(ops, sc), sc.F)
    _write_json(out / "audit.json", payload)
    if audit.applicable:
        _emit(checks, "energy audit", audit.passed, f"max violation {audit.max_violation:.3e}")
    else:
        print("SKIP energy audit: initial content outside the range of c0 I + B")
    if not lagged:
        _emit(checks, "fixed-point residual", fp.max_pressure_residual <= RESIDUAL_LIMIT,
              f"max V' residual {fp.max_pressure_residual:.3e}")

    probe_agreed, gap = None, float("nan")
    if not lagged:
        try:
            gap, _, _ = diagnostics.uniqueness_probe(sc, ops)
            probe_agreed = gap <= 10 * sc.picard_tol
        except PicardNonConvergence:
            probe_agreed = False
    report = diagnostics.uniqueness_monitor(ops, record, sc.law, probe_agreed=probe_agreed)
    _write_json(out / "uniqueness.json", {
        "lipschitz": report.lipschitz,
        "k1": report.k1,
        "gronwall_exponent": report.gronwall_exponent,
        "max_grad_p_linf": float(np.max(report.grad_linf, initial=0.0)),
        "p_t_l2": report.p_t_norm,
        "regularity_finite": report.regularity_finite,
        "probe_gap": gap,
        "probe_agreed": probe_agreed,
        "criterion_satisfied": report.criterion_satisfied,
    })
    print(f"INFO uniqueness: exponent {report.gronwall_exponent:.6g}, probe gap {gap:.3e}")


def run_mms(sc, out, args, checks):
    spec = sc.mms
    if "p" not in spec or "u" not in spec:
        raise ConfigurationError("mode mms needs mms.p and mms.u expressions")
    from .expressions import parse_expression
    p = parse_expression(spec["p"]).to_sympy()
    if not isinstance(spec["u"], list):
        raise ConfigurationError("mms.u must be a list of expressions")
    u = [parse_expression(c).to_sympy() for c in spec["u"]]
    case = diagnostics.MMSCase(sc.dimension, p, u, sc.c0, sc.law)
    spatial, temporal = diagnostics.mms_convergence(
        case, tuple(spec.get("mesh_ladder", (4, 8, 16))), float(spec.get("dt_factor", 2.0)),
        temporal_n=int(spec.get("temporal_n", 64)), dt_ladder=spec.get("dt_ladder"), T_final=sc.T,
        picard_tol=float(spec.get("picard_tol", 1e-10)), max_iters=sc.max_iters)
    spatial.write_csv(out / "rates_spatial.csv")
    orders = spatial.orders_p
    _emit(checks, "spatial order p", bool(np.all(np.abs(orders - 2.0) <= 0.3)),
          " ".join(f"{o:.3f}" for o in orders))
    if temporal is not None:
        temporal.write_csv(out / "rates_temporal.csv")
        _emit(checks, "temporal order p", bool(np.all(np.abs(temporal.orders_p - 1.0) <= 0.2)),
              " ".join(f"{o:.3f}" for o in temporal.orders_p))


def run_limit(sc, out, args, checks):
    ladder = tuple(sc.limit.get("c0_ladder", (1e-1, 1e-2, 1e-3, 1e-4)))
    report = diagnostics.incompressible_limit(sc, ladder)
    report.write_csv(out / "limit.csv")
    _emit(checks, "limit runs converged",
          report.baseline_converged and all(r["converged"] for r in report.rows))
    _emit(checks, "|c0 p| strictly decreasing", report.c0p_decreasing)
    _emit(checks, "|p - p0| decreasing", report.gap_decreasing)


def run_check_ops(sc, out, args, checks):
    meshes = battery.BATTERY_MESHES if sc is None else ((sc.dimension, sc.n),)
    results = battery.run_battery(args.seed, meshes)
    with open(out / "check_ops.txt", "w") as fh:
        for dimension, n, check in results:
            line = f"d={dimension} n={n} {check.line()}"
            fh.write(line + "\n")
            checks.append(check.passed)
            print(line)


def run_audit(sc, out, args, checks):
    source = out / "trajectory.npz"
    if not source.exists():
        raise ConfigurationError(f"no stored trajectory at {source}; run --mode solve first")
    ops = fixedpoint.operators_for(sc)
    record = _load_record(source, ops, sc)
    audit, fp, payload = _audit_payload(ops, record, sc)
    _write_json(out / "reaudit.json", payload)
    stored = out / "audit.json"
    if stored.exists():
        with open(stored) as fh:
            before = json.load(fh)
        worst = 0.0
        for group in ("energy_audit", "fixed_point"):
            for key, value in payload[group].items():
                if isinstance(value, bool):
                    continue
                old = float(before[group][key])
                if np.isfinite(old) or np.isfinite(value):
                    worst = max(worst, abs(old - value) / max(1.0, abs(old)))
        _emit(checks, "audit round-trip", worst <= 1e-12, f"max relative gap {worst:.3e}")
    if audit.applicable:
        _emit(checks, "energy audit", audit.passed, f"max violation {audit.max_violation:.3e}")
    if record.mode != "lagged-k":
        _emit(checks, "fixed-point residual", fp.max_pressure_residual <= RESIDUAL_LIMIT,
              f"max V' residual {fp.max_pressure_residual:.3e}")


DISPATCH = {"solve": run_solve, "mms": run_mms, "limit": run_limit, "check-ops": run_check_ops,
            "audit": run_audit}


def build_parser():
    parser = argparse.ArgumentParser(prog="biotpicard", description=__doc__.splitlines()[0])
    parser.add_argument("--mode", choices=MODES, required=True)
    parser.add_argument("--scenario", type=Path, help="scenario JSON file (optional for check-ops)")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized property batteries")
    parser.add_argument("--per-step-lagged-k", action="store_true",
                        help="single sweep with the permeability argument lagged by one step")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed < 0 or args.seed >= 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    checks = []
    try:
        sc = None
        if args.scenario is not None:
            sc = parse_scenario(args.scenario)
        elif args.mode != "check-ops":
            raise ConfigurationError(f"mode {args.mode} needs --scenario")
        args.out.mkdir(parents=True, exist_ok=True)
        if sc is not None and args.mode != "audit":
            shutil.copyfile(args.scenario, args.out / "scenario.json")
            _write_json(args.out / "manifest.json", {
                "mode": args.mode, "seed": args.seed, "per_step_lagged_k": args.per_step_lagged_k,
                "law": sc.law.to_dict(),
                "sources": {k: expression_source(getattr(sc, k)) for k in ("S", "F", "F_t", "d0")},
            })
        DISPATCH[args.mode](sc, args.out, args, checks)
    except (ConfigurationError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverBreakdown, PicardNonConvergence) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return 2
    return 0 if all(checks) else 1


if __name__ == "__main__":
    sys.exit(main())
