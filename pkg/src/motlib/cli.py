"""Command-line surface: scripted access to the library operations.

Exit codes: 0 success, 1 domain error (for instance a non-monotone input
where monotonicity is required), 2 usage error (bad flags, unparseable
files).  Reports are canonical JSON (sorted keys, 17-significant-digit
floats), so identical invocations produce identical bytes; the optional
``--stamp`` flag adds a wall-clock timestamp and breaks that property.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .convergence import ExperimentConfig, run_consistency_experiment
from .errors import DomainError, InputFormatError
from .monotone import (
    eval_subdifferential, is_cyclically_monotone, is_monotone,
    rockafellar_potential,
)
from .ranks import center_outward_grid, center_outward_ranks
from .serialize import (
    coupling_to_json, dumps_canonical, load_json, load_measure,
    load_pair_set, load_point_cloud, potential_from_json, potential_to_json,
    report_rows_to_csv, write_point_cloud,
)
from .transport import solve_discrete_ot
from .geometry import hausdorff_distance


@dataclass
class RunReport:
    header: dict
    body: dict
    exit_code: int = 0

    def to_json(self):
        return {"header": self.header, "body": self.body}


def _header(command, args, seed=None):
    header = {
        "tool": "motlib",
        "version": __version__,
        "command": command,
        "timestamp": None,
        "seed": seed,
    }
    if getattr(args, "stamp", False):
        import datetime
        header["timestamp"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
    return header


def write_report(report, out_path=None, fmt="json"):
    """Render a report deterministically; write to a file or stdout."""
    if fmt not in ("json", "csv"):
        raise InputFormatError(f"unknown output format {fmt!r}")
    if fmt == "csv":
        if out_path is None:
            raise InputFormatError("csv output requires --out")
        report_rows_to_csv(report.body, out_path)
        return ""
    text = dumps_canonical(report.to_json()) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_check_monotone(args):
    pairs = load_pair_set(args.pairs, args.dim)
    if args.pairwise:
        verdict = is_monotone(pairs, args.tol)
    else:
        verdict = is_cyclically_monotone(pairs, args.tol)
    body = {
        "holds": verdict.holds,
        "mode": "pairwise" if args.pairwise else "cyclical",
        "pairs": len(pairs),
        "witness": list(verdict.witness) if verdict.witness else None,
        "deficit": verdict.deficit,
    }
    return RunReport(_header("check-monotone", args), body,
                     exit_code=0 if verdict.holds else 1)


def _cmd_solve_ot(args):
    P = load_measure(args.source, args.dim, args.weights_col)
    Q = load_measure(args.target, args.dim, args.weights_col)
    coupling = solve_discrete_ot(P, Q, method=args.method)
    return RunReport(_header("solve-ot", args), coupling_to_json(coupling))


def _cmd_potential(args):
    pairs = load_pair_set(args.pairs, args.dim)
    psi = rockafellar_potential(pairs, base_index=args.base, tol=args.tol)
    return RunReport(_header("potential", args), potential_to_json(psi))


def _cmd_eval_map(args):
    psi = potential_from_json(load_json(args.potential))
    pts = load_point_cloud(args.points, psi.dim)
    rows = []
    for x in pts:
        verts = np.asarray(eval_subdifferential(psi, x, args.tol))
        rows.append({
            "point": x.tolist(),
            "value": psi.value(x),
            "vertices": verts.tolist(),
        })
    return RunReport(_header("eval-map", args), {"evaluations": rows})


def _cmd_hausdorff(args):
    A = load_point_cloud(args.first, args.dim)
    B = load_point_cloud(args.second, args.dim)
    return RunReport(_header("hausdorff", args),
                     {"distance": hausdorff_distance(A, B)})


def _cmd_ranks(args):
    sample = load_point_cloud(args.sample, args.dim)
    grid = center_outward_grid(args.nr, args.ns, args.n0, args.dim,
                               seed=args.seed)
    assignment = center_outward_ranks(sample, grid)
    rows = []
    for i, gi in enumerate(assignment.assignment):
        gp = grid.points[gi]
        ring = grid.ring_of(int(gi))
        entry = {
            "sample_point": sample[i].tolist(),
            "grid_point": gp.tolist(),
            "ring": ring,
        }
        if args.dim == 2:
            entry["angle"] = float(np.arctan2(gp[1], gp[0]))
        else:
            nrm = float(np.linalg.norm(gp))
            entry["direction"] = (gp / nrm).tolist() if nrm > 0 else None
        rows.append(entry)
    body = {
        "n_rings": args.nr,
        "n_per_ring": args.ns,
        "n_origin": args.n0,
        "origin_jitter": "copies offset by 1e-9*index along the first axis",
        "assignments": rows,
    }
    return RunReport(_header("ranks", args, seed=args.seed), body)


def _cmd_converge(args):
    cfg = ExperimentConfig.from_json(load_json(args.config))
    report = run_consistency_experiment(cfg)
    body = report.to_json(include_timing=args.timing)
    run = RunReport(_header("converge", args, seed=cfg.seed), body)
    if args.csv:
        report_rows_to_csv(body, args.csv)
    return run


def _cmd_gen_grid(args):
    grid = center_outward_grid(args.nr, args.ns, args.n0, args.dim,
                               seed=args.seed)
    body = {
        "n_rings": args.nr,
        "n_per_ring": args.ns,
        "n_origin": args.n0,
        "dim": args.dim,
        "count": len(grid),
    }
    if args.out:
        write_point_cloud(grid.points, args.out)
        body["written"] = args.out
        args.out = None  # the grid CSV claims the path; report goes to stdout
    else:
        body["points"] = grid.points.tolist()
    return RunReport(_header("gen-grid", args, seed=args.seed), body)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="motlib",
        description="exact optimal transport couplings, monotone map "
                    "extension, center-outward ranks, convergence "
                    "diagnostics")
    parser.add_argument("--version", action="version",
                        version=f"motlib {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="write the report here")
        p.add_argument("--stamp", action="store_true",
                       help="embed a wall-clock timestamp (breaks "
                            "byte-reproducibility)")

    p = sub.add_parser("check-monotone",
                       help="certify (cyclical) monotonicity of a pair set")
    p.add_argument("pairs")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--pairwise", action="store_true",
                   help="check plain monotonicity instead of cyclical")
    common(p)
    p.set_defaults(handler=_cmd_check_monotone)

    p = sub.add_parser("solve-ot", help="exact optimal coupling")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--weights-col", type=int, default=None)
    p.add_argument("--method", default="auto",
                   choices=("auto", "assignment", "simplex"))
    common(p)
    p.set_defaults(handler=_cmd_solve_ot)

    p = sub.add_parser("potential",
                       help="Rockafellar max-affine extension of a pair set")
    p.add_argument("pairs")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--base", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    common(p)
    p.set_defaults(handler=_cmd_potential)

    p = sub.add_parser("eval-map",
                       help="evaluate a potential's subdifferential")
    p.add_argument("potential")
    p.add_argument("points")
    p.add_argument("--tol", type=float, default=1e-9)
    common(p)
    p.set_defaults(handler=_cmd_eval_map)

    p = sub.add_parser("hausdorff", help="Hausdorff distance of two clouds")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--dim", type=int, required=True)
    common(p)
    p.set_defaults(handler=_cmd_hausdorff)

    p = sub.add_parser("ranks", help="center-outward ranks of a sample")
    p.add_argument("--sample", required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--nr", type=int, required=True)
    p.add_argument("--ns", type=int, required=True)
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(handler=_cmd_ranks)

    p = sub.add_parser("converge", help="run a consistency experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--csv", default=None,
                   help="also flatten rows to this CSV path")
    p.add_argument("--timing", action="store_true",
                   help="include wall_time in rows (breaks reproducibility)")
    common(p)
    p.set_defaults(handler=_cmd_converge)

    p = sub.add_parser("gen-grid", help="emit a center-outward grid")
    p.add_argument("--nr", type=int, required=True)
    p.add_argument("--ns", type=int, required=True)
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(handler=_cmd_gen_grid)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.handler(args)
    except InputFormatError as exc:
        sys.stderr.write(f"motlib: {exc}\n")
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        sys.stderr.write(f"motlib: {exc}\n")
        return 2
    except DomainError as exc:
        failure = RunReport(
            _header(args.command, args),
            {"error": str(exc),
             "witness": getattr(exc, "cycle", None),
             "deficit": getattr(exc, "deficit", None)},
            exit_code=1)
        write_report(failure, getattr(args, "out", None))
        return 1
    write_report(report, getattr(args, "out", None))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
