"""Command-line driver for the stability pipeline and the integrators.

Subcommands:
  analyze   run Steps 1-3 on one PDE with early exit, report verdicts
  classify  run the pipeline over every registered PDE, emit a table
  run       integrate a PDE on the diamond mesh and record observers
  sweep     trace the stability boundary dt_max(dx) for a PDE

An "unstable" or "inconsistent" finding is a successful analysis: the exit
code is 0 whenever the requested computation completed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import msform, propagation, spectral, structure
from .integrator import MeshParams, gauss_tableau, integrate
from .solutions import builtin_initial_condition

__all__ = ["main", "analyze_pipeline", "classify_registry"]


def _fraction_str(x) -> str:
    if x is None:
        return "inf"
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}" if f.denominator != 1 else str(f.numerator)


def _linearization_for(form, rho: float | None):
    if form.name == "nls":
        return msform.nls_constant_amplitude_linearization(
            rho if rho is not None else 9.0, form.param("a")
        )
    return msform.linearize(form, np.zeros(form.d))


def _step1_dict(dm: structure.DMReport) -> dict:
    return {
        "consistent": dm.consistent,
        "matching": [[int(e), dm.names[u]] for e, u in dm.matching],
        "blocks": [
            {
                "kind": b.kind,
                "equations": [int(e) for e in b.equations],
                "unknowns": [dm.names[u] for u in b.unknowns],
            }
            for b in dm.blocks
        ],
        "order": [[int(e), dm.names[u]] for e, u in dm.order],
    }


def _step2_dict(graph, cycles, verdict) -> dict:
    return {
        "edges": [
            {"src": e.src, "dst": e.dst, "index": e.index.label(), "equation": e.equation}
            for e in graph.edges
        ],
        "cycles": [
            {"nodes": list(c.nodes), "weight": c.weight.label()} for c in cycles
        ],
        "verdict": {
            "unconditionally_unstable": verdict.unconditionally_unstable,
            "s_lo": None if verdict.s_lo is None else _fraction_str(verdict.s_lo),
            "s_hi": _fraction_str(verdict.s_hi) if verdict.feasible else None,
            "binding_cycles": [c.weight.label() for c in verdict.binding],
            "witness_cycles": [c.weight.label() for c in verdict.witness],
        },
    }


def analyze_pipeline(
    name: str,
    params: dict | None = None,
    dt: float = 0.05,
    dx: float = 0.1,
    N: int = 20,
    criterion: spectral.Criterion | None = None,
    scheme: str = "simple",
    dot_dir: str | None = None,
) -> dict:
    """Steps 1 -> 2 -> 3 with early exit; returns the JSON-ready report."""
    params = dict(params or {})
    rho = params.pop("rho", None)
    form = msform.registry_get(name, **params)
    report: dict = {"pde": name, "classification": None}

    bip = structure.build_equation_unknown_graph(form)
    dm = structure.dm_decompose(bip)
    report["step1"] = _step1_dict(dm)
    if dot_dir:
        out = Path(dot_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}_bipartite.dot").write_text(structure.bipartite_dot(bip, dm))
    if not dm.consistent:
        report["classification"] = "StructurallyInconsistent"
        return report

    lin = _linearization_for(form, rho)
    dm_lin = structure.classify_consistency(lin)
    graph = propagation.build_propagation_graph(lin, dm_lin)
    cycles = propagation.enumerate_cycles(graph)
    verdict = propagation.stability_threshold(cycles)
    report["step2"] = _step2_dict(graph, cycles, verdict)
    if dot_dir:
        (Path(dot_dir) / f"{name}_propagation.dot").write_text(
            propagation.propagation_dot(graph)
        )
    if verdict.unconditionally_unstable:
        report["classification"] = "UnconditionallyUnstable"
        return report

    criterion = criterion or spectral.Criterion("strict")
    if scheme == "simple":
        family = spectral.assemble_symbol_family_simple(
            spectral.build_blocks_simple(lin, dt, dx), N
        )
    else:
        tableau = gauss_tableau(int(scheme.split(":", 1)[1]))
        family = spectral.assemble_symbol_family_rk(
            spectral.build_blocks_rk(lin, tableau, dt, dx), N
        )
    sv = spectral.spectral_verdict(family, criterion, dt=dt)
    report["step3"] = {
        "dt": dt,
        "dx": dx,
        "N": N,
        "criterion": criterion.kind,
        "dominant_modulus": sv.dominant_all,
        "dominant_modulus_nonzero_modes": sv.dominant_nonzero,
        "stable": sv.stable,
    }
    report["classification"] = "ConditionallyStable"
    report["step2_lower_exponent"] = _fraction_str(verdict.s_lo)
    return report


def classify_registry(params: dict | None = None) -> list[dict]:
    rows = []
    for name in msform.registry_names():
        form = msform.registry_get(name)
        dm = structure.classify_consistency(form)
        if not dm.consistent:
            rows.append({"pde": name, "category": "StructurallyInconsistent", "s_lo": ""})
            continue
        lin = _linearization_for(form, None)
        dm_lin = structure.classify_consistency(lin)
        graph = propagation.build_propagation_graph(lin, dm_lin)
        verdict = propagation.stability_threshold(propagation.enumerate_cycles(graph))
        if verdict.unconditionally_unstable:
            rows.append({"pde": name, "category": "UnconditionallyUnstable", "s_lo": ""})
        else:
            rows.append({
                "pde": name,
                "category": "ConditionallyStable",
                "s_lo": _fraction_str(verdict.s_lo),
            })
    return rows


# ---------------------------------------------------------------------------
# subcommand drivers
# ---------------------------------------------------------------------------


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        key, _, val = item.partition("=")
        if not _:
            raise SystemExit(f"--params expects key=val, got {item!r}")
        out[key] = float(val)
    return out


def _emit(report: dict, args) -> None:
    report = dict(report)
    report["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
    print(text if args.format == "json" else _human_summary(report))


def _human_summary(report: dict) -> str:
    lines = [f"PDE: {report['pde']}"]
    s1 = report.get("step1")
    if s1:
        lines.append(f"  step 1: {'consistent' if s1['consistent'] else 'structurally inconsistent'}")
        for b in s1["blocks"]:
            lines.append(f"    {b['kind']}: equations {b['equations']} unknowns {b['unknowns']}")
    s2 = report.get("step2")
    if s2:
        v = s2["verdict"]
        if v["unconditionally_unstable"]:
            lines.append(f"  step 2: unconditionally unstable (witness {v['witness_cycles']})")
        else:
            lines.append(f"  step 2: feasible s in [{v['s_lo']}, {v['s_hi']}]")
    s3 = report.get("step3")
    if s3:
        lines.append(
            f"  step 3: dominant modulus {s3['dominant_modulus']:.12g} "
            f"(k>=1: {s3['dominant_modulus_nonzero_modes']:.12g}) -> "
            f"{'stable' if s3['stable'] else 'unstable'} under {s3['criterion']} "
            f"at dt={s3['dt']}, dx={s3['dx']}, N={s3['N']}"
        )
    lines.append(f"  classification: {report['classification']}")
    return "\n".join(lines)


def _cmd_analyze(args) -> int:
    report = analyze_pipeline(
        args.pde,
        params=_parse_params(args.params),
        dt=args.dt,
        dx=args.dx,
        N=args.N,
        criterion=spectral.Criterion.parse(args.criterion),
        scheme=args.scheme,
        dot_dir=args.dot_dir,
    )
    if args.step1:
        report = {"pde": report["pde"], "step1": report["step1"],
                  "classification": report["classification"]}
    elif args.step2:
        report = {k: v for k, v in report.items() if k in ("pde", "step2", "classification")}
    elif args.step3:
        report = {k: v for k, v in report.items() if k in ("pde", "step3", "classification")}
    _emit(report, args)
    return 0


def _cmd_classify(args) -> int:
    rows = classify_registry()
    if args.category:
        rows = [r for r in rows if r["category"] == args.category]
    out = args.out or "-"
    if out == "-":
        writer = csv.DictWriter(sys.stdout, fieldnames=["pde", "category", "s_lo"])
        writer.writeheader()
        writer.writerows(rows)
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["pde", "category", "s_lo"])
            writer.writeheader()
            writer.writerows(rows)
    return 0


def _cmd_run(args) -> int:
    params = _parse_params(args.params)
    params.pop("rho", None)
    form = msform.registry_get(args.pde, **params)
    a, b = (float(v) for v in args.domain.split(","))
    N = round((b - a) / args.dx)
    mesh = MeshParams(a=a, b=b, N=N, dt=args.dt, T=args.T)
    ic, exact = builtin_initial_condition(args.ic, form)
    observers = tuple(args.observe.split(",")) if args.observe else ()
    result = integrate(form, args.scheme, ic, mesh, observers=observers, exact=exact)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = {
        "pde": args.pde,
        "scheme": args.scheme,
        "dx": mesh.dx,
        "dt": args.dt,
        "T": args.T,
        "N": N,
        "status": result.status,
        "diverged_at": result.diverged_at,
    }
    (outdir / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if result.energies is not None:
        with open(outdir / "energy.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "energy"])
            w.writerows(zip(result.times, result.energies))
    if result.norms is not None:
        with open(outdir / "norms.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "max_abs"])
            w.writerows(zip(result.times, result.norms))
    if "snapshots" in observers and result.snapshots and result.edge_state is None:
        for idx, (t, snap) in enumerate(result.snapshots):
            with open(outdir / f"snapshot_{idx:04d}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x"] + list(form.names))
                for x, row in zip(mesh.x_int(), snap):
                    w.writerow([x] + list(row))
    if "snapshots" in observers and result.edge_state is not None:
        # collocation runs: resolve the final edge stacks at their node positions
        tableau = gauss_tableau(int(args.scheme.split(":", 1)[1]))
        with open(outdir / "edges_final.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + list(form.names))
            xs = mesh.x_int()
            for i in range(N):
                for k, c in enumerate(tableau.c):
                    w.writerow([xs[i] + 0.5 * mesh.dx * c] + list(result.edge_state[2 * i, k]))
                xnext = mesh.a + (i + 1) * mesh.dx
                for k, c in enumerate(tableau.c):
                    w.writerow([xnext - 0.5 * mesh.dx * c] + list(result.edge_state[2 * i + 1, k]))
    print(f"status: {result.status}" + (f" (diverged at t={result.diverged_at})" if result.diverged_at else ""))
    return 0


def _cmd_sweep(args) -> int:
    params = _parse_params(args.params)
    rho = params.pop("rho", None)
    form = msform.registry_get(args.pde, **params)
    lin = _linearization_for(form, rho)
    scheme = "simple" if args.scheme == "simple" else gauss_tableau(int(args.scheme.split(":")[1]))
    dx_list = [float(v) for v in args.dx_list.split(",")]
    result = spectral.stability_boundary_sweep(
        lin, scheme, args.domain_length, dx_list, spectral.Criterion.parse(args.criterion)
    )
    rows = [["dx", "N", "dt_max"]]
    rows += [[p.dx, p.N, p.dt_max if p.dt_max is not None else ""] for p in result.points]
    rows.append(["slope", "", result.slope if result.slope is not None else ""])
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(rows)
    else:
        csv.writer(sys.stdout).writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diamondstab", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=0,
        help="seed for any randomized checks (reproducibility control)",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="three-step stability analysis of one PDE", parents=[common])
    pa.add_argument("pde")
    pa.add_argument("--params", nargs="*", metavar="key=val")
    pa.add_argument("--dt", type=float, default=0.05)
    pa.add_argument("--dx", type=float, default=0.1)
    pa.add_argument("--N", type=int, default=20)
    pa.add_argument("--criterion", default="strict")
    pa.add_argument("--scheme", default="simple")
    pa.add_argument("--step1", action="store_true", help="report step 1 only")
    pa.add_argument("--step2", action="store_true", help="report step 2 only")
    pa.add_argument("--step3", action="store_true", help="report step 3 only")
    pa.add_argument("--out")
    pa.add_argument("--dot-dir", help="write Graphviz renderings of the step-1/2 graphs here")
    pa.add_argument("--format", choices=["json", "text"], default="text")
    pa.set_defaults(func=_cmd_analyze)

    pc = sub.add_parser("classify", help="classify every registered PDE", parents=[common])
    pc.add_argument("--category")
    pc.add_argument("--out")
    pc.set_defaults(func=_cmd_classify)

    pr = sub.add_parser("run", help="integrate a PDE on the diamond mesh", parents=[common])
    pr.add_argument("--pde", required=True)
    pr.add_argument("--scheme", default="simple", help="simple or rk:R")
    pr.add_argument("--dx", type=float, required=True)
    pr.add_argument("--dt", type=float, required=True)
    pr.add_argument("--domain", default="0,1", help="a,b")
    pr.add_argument("--T", type=float, required=True)
    pr.add_argument("--ic", required=True)
    pr.add_argument("--observe", default="energy")
    pr.add_argument("--out", required=True)
    pr.add_argument("--params", nargs="*", metavar="key=val")
    pr.set_defaults(func=_cmd_run)

    ps = sub.add_parser("sweep", help="stability boundary dt_max(dx)", parents=[common])
    ps.add_argument("--pde", required=True)
    ps.add_argument("--scheme", default="simple")
    ps.add_argument("--criterion", default="strict")
    ps.add_argument("--dx-list", required=True)
    ps.add_argument("--domain-length", type=float, required=True)
    ps.add_argument("--out")
    ps.add_argument("--params", nargs="*", metavar="key=val")
    ps.set_defaults(func=_cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except msform.UnknownFormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
