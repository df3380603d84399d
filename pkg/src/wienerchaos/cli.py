"""Command-line front end.

Every subcommand writes a JSON report (stdout, or ``--report``) that echoes
the configuration, the library version, sha256 hashes of the input files and
a ``timestamp`` block.  Apart from that block, the same command with the same
seed produces the same bytes.  CSV tables go to ``--out``.

Exit status: 0 on success, 2 when an input violates a theorem hypothesis,
1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS = 0, 1, 2


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# -- argument helpers ------------------------------------------------------------

def _int_like(text: str) -> int:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not val.is_integer() or val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(val)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_grid(text: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"empty grid {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _need_file(path: str | None, flag: str) -> str:
    if path is None:
        raise CliError(f"{flag} is required")
    if not Path(path).is_file():
        raise CliError(f"{flag}: no such file {path!r}")
    return path


def _need_out_dir(path: str | None):
    if path is not None and not Path(path).resolve().parent.is_dir():
        raise CliError(f"output directory for {path!r} does not exist")


def _need_seed(args):
    if args.seed is None:
        raise CliError(f"--seed is required for {args.command}")


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    Path(path).write_text(buf.getvalue())


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    return str(o)


# -- subcommands -----------------------------------------------------------------

def cmd_norms(args, report):
    from .partitions import norm_profile
    from .tensor import load_tensor

    path = _need_file(args.tensor, "--tensor")
    _need_out_dir(args.out)
    report["inputs"] = {"tensor": _sha256(path)}
    a = load_tensor(path)
    prof = norm_profile(a, restarts=args.restarts, tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    body = prof.to_json(certificates=args.certificates)
    if args.out:
        Path(args.out).write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n")
    report["result"] = body
    return EXIT_OK


def cmd_diagrams(args, report):
    from .diagrams import (
        DiagramCapError,
        connected_components,
        count_closed_diagrams,
        enumerate_closed_diagrams,
        evaluate,
        is_connected,
    )
    from .moments import connected_diagram_count
    from .tensor import load_tensor

    rows = args.rows
    if rows is None:
        raise CliError("--rows is required")
    if not rows or any(k < 1 for k in rows):
        raise CliError("--rows must list positive row lengths")
    report["caps"] = {"max_vertices": 24}
    if sum(rows) > 24:
        raise DiagramCapError(f"{sum(rows)} vertices exceed the cap 24")
    res = {"rows": rows, "count": count_closed_diagrams(rows), "connected_count": connected_diagram_count(rows)}
    if sum(rows) % 2:
        res["status"] = "odd vertex total: no closed diagrams"
    if not args.count_only and args.kernels:
        paths = [p for p in args.kernels.split(",") if p]
        for p in paths:
            _need_file(p, "--kernels")
        if len(paths) not in (1, len(rows)):
            raise CliError(f"give one kernel or one per row ({len(rows)}), got {len(paths)}")
        _need_out_dir(args.emit)
        report["inputs"] = {p: _sha256(p) for p in paths}
        ks = [load_tensor(p) for p in paths]
        ks = ks * len(rows) if len(ks) == 1 else ks
        out_rows = []
        total = []
        for i, d in enumerate(enumerate_closed_diagrams(rows), start=1):
            val = evaluate(d, ks).scalar
            total.append(val)
            comps = "|".join("{" + ",".join(map(str, c.rows)) + "}" for c in connected_components(d))
            out_rows.append([i, d.canonical_edge_string(), int(is_connected(d)), comps, val])
        res["sum_F"] = math.fsum(total)
        if args.emit:
            _write_csv(args.emit, ["diagram_id", "edges", "connected", "components", "F_gamma"], out_rows)
    report["result"] = res
    return EXIT_OK


def _load_kernels(args, report):
    from .tensor import load_tensor

    if args.kernels:
        paths = [p for p in args.kernels.split(",") if p]
        for p in paths:
            _need_file(p, "--kernels")
        report["inputs"] = {p: _sha256(p) for p in paths}
        return [load_tensor(p) for p in paths]
    path = _need_file(args.kernel, "--kernel")
    report["inputs"] = {"kernel": _sha256(path)}
    return [load_tensor(path)] * args.copies


def cmd_moments(args, report):
    from .gauss import isserlis_product_moment
    from .moments import cumulants, product_moment, reconstruct_moment

    ks = _load_kernels(args, report)
    report["caps"] = {"max_vertices": 24}
    rep = product_moment(ks, method=args.method)
    if args.cumulants:
        rep.cumulant_table = cumulants(ks)
        report["cumulant_reconstruction"] = reconstruct_moment(rep.cumulant_table)
    if args.oracle:
        rep.with_oracle(isserlis_product_moment(ks))
    report["result"] = rep.to_json()
    return EXIT_OK


def cmd_bounds(args, report):
    from .moments import (
        BoundParams,
        hanson_wright_bound,
        markov_tail_bound,
        moment_bound_main,
        moment_bound_theorem_a,
        simplified_theorem_check,
        tail_bound_main,
        tail_bound_theorem_a,
    )
    from .partitions import NormProfile, norm_profile
    from .tensor import load_tensor

    a = None
    if args.profile:
        path = _need_file(args.profile, "--profile")
        report["inputs"] = {"profile": _sha256(path)}
        prof = NormProfile.load(path)
    else:
        path = _need_file(args.tensor, "--tensor")
        report["inputs"] = {"tensor": _sha256(path)}
        a = load_tensor(path)
        prof = norm_profile(a, seed=args.seed if args.seed is not None else 0)
    k = prof.order
    params = BoundParams(k=k, M=args.M, R=args.R, C=args.C, C1=args.C1, C2=args.C2, C_tilde=args.C_tilde)
    v1 = prof.v(1)
    out = {"k": k, "v_s": list(prof.v_s), "M": args.M,
           "moment_bound_main": moment_bound_main(prof, params),
           "moment_bound_theorem_a": moment_bound_theorem_a(v1, params)}
    if args.x is not None:
        if args.x <= 0:
            raise CliError("--x must be positive")
        mk, Mstar = markov_tail_bound(prof, params, args.x)
        out.update({"x": args.x, "tail_bound_main": tail_bound_main(prof, params, args.x),
                    "markov_tail_bound": mk, "markov_M": Mstar})
        if v1 > 0:
            out["tail_bound_theorem_a"] = tail_bound_theorem_a(v1, params, args.x)
        if k == 2:
            out["hanson_wright_bound"] = hanson_wright_bound(v1, prof.v(2), params, args.x)
    status = EXIT_OK
    if args.simplified:
        if a is None:
            raise CliError("--simplified needs --tensor")
        chk = simplified_theorem_check(a, args.M, args.R, profile=prof)
        out["simplified"] = chk.to_json()
        if chk.status == "hypothesis_violated":
            status = EXIT_HYPOTHESIS
    report["result"] = out
    return status


def cmd_simulate(args, report):
    from .gauss import empirical_tail, sample_Z
    from .moments import BoundParams, tail_bound_main, tail_bound_theorem_a
    from .partitions import norm_profile
    from .tensor import load_tensor, symmetrize

    _need_seed(args)
    path = _need_file(args.kernel, "--kernel")
    _need_out_dir(args.out)
    report["inputs"] = {"kernel": _sha256(path)}
    a = load_tensor(path)
    grid = args.tail_grid
    samples = sample_Z(a, args.samples, args.seed, workers=args.workers)
    rows = empirical_tail(samples, grid)
    # the distribution only sees the symmetrized kernel
    prof = norm_profile(symmetrize(a), seed=args.seed)
    params = BoundParams(k=a.order, C=args.C, C1=args.C1, C2=args.C2)
    table = []
    for r in rows:
        bm = tail_bound_main(prof, params, r.x) if r.x > 0 else params.C1
        ba = tail_bound_theorem_a(prof.v(1), params, r.x) if prof.v(1) > 0 else 0.0
        table.append([r.x, r.p_hat, r.ci_half, bm, ba])
    header = ["x", "p_hat", "ci_half", "bound_main", "bound_theorem_a"]
    if args.out:
        _write_csv(args.out, header, table)
    report["result"] = {"samples": args.samples, "mean": float(samples.mean()),
                        "second_moment": float((samples ** 2).mean()), "v_s": list(prof.v_s),
                        "table": [dict(zip(header, t)) for t in table]}
    return EXIT_OK


def cmd_oracle(args, report):
    from .gauss import isserlis_moment
    from .moments import product_moment
    from .tensor import load_tensor

    path = _need_file(args.kernel, "--kernel")
    report["inputs"] = {"kernel": _sha256(path)}
    a = load_tensor(path)
    report["caps"] = {"max_dim": 4, "max_order": 3, "max_degree": 16}
    val = isserlis_moment(a, args.degree)
    rep = product_moment([a] * args.degree).with_oracle(val)
    report["result"] = {"degree": args.degree, "isserlis": val, "diagram": rep.moment_value,
                        "relative_gap": rep.relative_gap}
    return EXIT_OK


def cmd_latala(args, report):
    from .latala import CSV_HEADER, GENERATORS, check_hypotheses, estimate_sup_Y_expectation
    from .tensor import load_tensor

    _need_seed(args)
    _need_out_dir(args.out)
    Ms = args.M
    if args.tensor:
        path = _need_file(args.tensor, "--tensor")
        report["inputs"] = {"tensor": _sha256(path)}
        fixed = load_tensor(path)
        make = lambda M: fixed
    elif args.generator:
        if args.generator not in GENERATORS:
            raise CliError(f"unknown generator {args.generator!r}; choose from {', '.join(GENERATORS)}")
        make = lambda M: GENERATORS[args.generator](M, args.seed)
    else:
        raise CliError("give --tensor or --generator")
    rows, details = [], []
    status = EXIT_OK
    for M in Ms:
        a = make(M)
        hyp = check_hypotheses(a, M, args.R)
        est = estimate_sup_Y_expectation(a, M, args.samples, args.seed, R=args.R, check=False)
        if not hyp.ok:
            status = EXIT_HYPOTHESIS
        rows.append(est.csv_row())
        details.append({"M": M, "hypotheses": hyp.to_json(), "max_sup_Y_minus_sup_X": est.max_gap,
                        "E_sup_Y": est.mean, "ci": est.ci, "ratio_Mhalf": est.ratio_Mhalf,
                        "ratio_Mquarter": est.ratio_Mquarter})
    if args.out:
        _write_csv(args.out, CSV_HEADER, rows)
    report["result"] = {"note": "empirical evidence only; the M^-1/2 scaling is not asserted", "rows": details}
    return status


def cmd_verify(args, report):
    from .verify import SUITES, run_suite

    if args.suite is None:
        raise CliError(f"--suite is required; choose from {', '.join(SUITES)}")
    if args.suite not in SUITES:
        raise CliError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    kw = {}
    moment_suites = {"cross-oracle", "cumulant-identity", "simplified-theorem"}
    if args.suite in moment_suites:
        kw.update(max_k=args.max_k, max_n=args.max_n, max_2Mk=args.max_2Mk)
    if args.instances is not None and args.suite not in {"counts", "sharpness"}:
        kw["instances"] = args.instances
    if args.seed is not None and args.suite not in {"counts", "sharpness"}:
        kw["seed"] = args.seed
    res = run_suite(args.suite, **kw)
    if not args.quiet:
        for line in res.ledger():
            print(line, file=sys.stderr)
    report["caps"] = res.caps
    report["result"] = {**res.summary(), "failed_cases": res.failures}
    print(f"{res.name}: {len(res.cases)} cases, {len(res.failures)} failures -> "
          f"{'PASS' if res.passed else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_ERROR


COMMANDS = {
    "norms": cmd_norms, "diagrams": cmd_diagrams, "moments": cmd_moments, "bounds": cmd_bounds,
    "simulate": cmd_simulate, "oracle": cmd_oracle, "latala": cmd_latala, "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wienerchaos", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file with default values for any flag (flags win)")
        sp.add_argument("--report", help="write the JSON report here instead of stdout")
        sp.add_argument("--workers", type=int, default=1)
        return sp

    sp = common(sub.add_parser("norms", help="partition norms of a tensor"))
    sp.add_argument("--tensor")
    sp.add_argument("--restarts", type=int, default=32)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--certificates", action="store_true")
    sp.add_argument("--out")

    sp = common(sub.add_parser("diagrams", help="count, list and evaluate closed diagrams"))
    sp.add_argument("--rows", type=_int_list, required=False)
    sp.add_argument("--count-only", action="store_true")
    sp.add_argument("--kernels")
    sp.add_argument("--emit")

    sp = common(sub.add_parser("moments", help="exact moment of a product of chaos polynomials"))
    sp.add_argument("--kernel")
    sp.add_argument("--kernels", help="comma-separated list, one kernel per factor")
    sp.add_argument("--copies", type=_int_like, default=2)
    sp.add_argument("--method", choices=["auto", "enumerate", "grouped"], default="auto")
    sp.add_argument("--oracle", action="store_true")
    sp.add_argument("--cumulants", action="store_true")

    sp = common(sub.add_parser("bounds", help="evaluate moment and tail bounds"))
    sp.add_argument("--profile")
    sp.add_argument("--tensor")
    sp.add_argument("--M", type=_int_like, default=1)
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--x", type=float)
    sp.add_argument("--C", type=float, default=1.0)
    sp.add_argument("--C1", type=float, default=1.0)
    sp.add_argument("--C2", type=float, default=1.0)
    sp.add_argument("--C-tilde", dest="C_tilde", type=float, default=1.0)
    sp.add_argument("--simplified", action="store_true")
    sp.add_argument("--seed", type=int)

    sp = common(sub.add_parser("simulate", help="Monte Carlo tail of a chaos polynomial"))
    sp.add_argument("--kernel")
    sp.add_argument("--samples", type=_int_like, default=100000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tail-grid", type=parse_grid, default=parse_grid("0:0.5:12"))
    sp.add_argument("--C", type=float, default=1.0)
    sp.add_argument("--C1", type=float, default=1.0)
    sp.add_argument("--C2", type=float, default=1.0)
    sp.add_argument("--out")

    sp = common(sub.add_parser("oracle", help="Isserlis moment of one chaos polynomial"))
    sp.add_argument("--kernel")
    sp.add_argument("--degree", type=_int_like, default=2)

    sp = common(sub.add_parser("latala", help="E sup_Y against M^-1/2 and M^-1/4"))
    sp.add_argument("--tensor")
    sp.add_argument("--generator")
    sp.add_argument("--M", type=_int_list, default=[16])
    sp.add_argument("--R", type=float)
    sp.add_argument("--samples", type=_int_like, default=20000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")

    sp = common(sub.add_parser("verify", help="run a property sweep"))
    sp.add_argument("--suite", required=False)
    sp.add_argument("--max-k", type=int, default=3)
    sp.add_argument("--max-n", type=int, default=3)
    sp.add_argument("--max-2Mk", dest="max_2Mk", type=int, default=16)
    sp.add_argument("--instances", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--quiet", action="store_true")
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    path = Path(args.config)
    if not path.is_file():
        raise CliError(f"--config: no such file {args.config!r}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise CliError(f"{args.config}:{e.lineno}:{e.colno}: {e.msg}")
    if not isinstance(cfg, dict):
        raise CliError("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("help", "config"):
            raise CliError(f"unknown config key {key!r}")
        action = known[dest]
        if isinstance(val, str) and action.type is not None:
            val = action.type(val)
        defaults[dest] = val
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    started = time.time()
    try:
        args = _apply_config(parser, argv)
        config = {k: v for k, v in sorted(vars(args).items()) if k not in ("report",)}
        report = {"command": args.command, "version": __version__, "config": config}
        _need_out_dir(args.report)
        status = COMMANDS[args.command](args, report)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_ERROR
    except (CliError, ValueError, KeyError, OSError, argparse.ArgumentTypeError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR
    report["status"] = {EXIT_OK: "ok", EXIT_HYPOTHESIS: "hypothesis_violated"}.get(status, "failed")
    report["timestamp"] = {
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "elapsed_seconds": round(time.time() - started, 3),
    }
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    return status


def main() -> None:
    sys.exit(run())
