"""Command-line entry point: ``agesim {run,matrix,bits,prob,compare}``.

Errors exit non-zero with a one-line JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from agesim import __version__, report
from agesim.bitstats import network_distribution
from agesim.probmodel import deviation_curve, p_at_least_n, p_duty_deviation
from agesim.sim import RunResult, compare_to_model, parse_config, run, run_matrix
from agesim.weights import Format, fit_quantization, load_network, quantize_to_words


def cmd_run(args):
    cfg = parse_config(args.config)
    out = args.out or cfg.out_dir or "out"
    result = run(cfg)
    files = report.emit(result, out, raw_map=args.dump_map)
    print(json.dumps({"label": cfg.label(), "k_inf": result.k_inf, "total_k": result.total_k,
                      "mean_abs_dev": result.summary["mean_abs_dev"],
                      "pct_best_bin": result.pct_best_bin, "pct_worst_bin": result.pct_worst_bin,
                      "wall_time": round(result.wall_time, 3), "files": [str(f) for f in files]}))


def cmd_matrix(args):
    paths = sorted(Path(args.config_dir).glob("*.ini"))
    if not paths:
        raise FileNotFoundError(f"no *.ini run configs in {args.config_dir}")
    configs = [parse_config(p) for p in paths]
    results = run_matrix(configs, workers=args.workers)
    out = Path(args.out)
    for p, r in zip(paths, results):
        if isinstance(r, RunResult):
            report.emit(r, out / p.stem)
    report.emit(results, out)
    sys.stdout.write(report.matrix_csv(results))


def cmd_bits(args):
    net = load_network(args.manifest)
    dists = {}
    for name in args.format:
        fmt = Format.parse(name)
        words = quantize_to_words(net, fit_quantization(net, fmt))
        dists[f"{net.name}/{fmt.value}"] = network_distribution(words, fmt.bits)
    obj = next(iter(dists.values())) if len(dists) == 1 else dists
    if args.out:
        report.emit(obj, args.out)
    sys.stdout.write(report.bits_csv(obj))


def cmd_prob(args):
    if args.b is None:
        curve = deviation_curve(args.K, args.rho)
        if args.out:
            report.emit(curve, args.out)
        sys.stdout.write(report.curve_csv(curve))
        return
    doc = {"K": args.K, "rho": args.rho, "b": args.b, "P_b": p_duty_deviation(args.K, args.rho, args.b)}
    if args.cells is not None:
        n = args.n if args.n is not None else 0
        doc.update(cells=args.cells, n=n, P_n=p_at_least_n(args.K, args.rho, args.b, args.cells, n))
    print(json.dumps(doc))


def cmd_compare(args):
    path = Path(args.result)
    if path.is_dir():
        path = path / "run.json"
    result = RunResult.from_dict(json.loads(path.read_text()))
    print(json.dumps(compare_to_model(result, args.K, args.rho), indent=2))


def build_parser():
    p = argparse.ArgumentParser(prog="agesim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", help="run one experiment from a config file")
    s.add_argument("config")
    s.add_argument("--out")
    s.add_argument("--dump-map", action="store_true", help="also write the raw duty-cycle map")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("matrix", help="run every *.ini config in a directory")
    s.add_argument("config_dir")
    s.add_argument("--out", default="out/matrix")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_matrix)

    s = sub.add_parser("bits", help="per-bit '1' probability of a network's weights")
    s.add_argument("manifest")
    s.add_argument("--format", action="append", default=None,
                   help="float32 | int8-symmetric | int8-asymmetric (repeatable)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bits)

    s = sub.add_parser("prob", help="binomial duty-cycle deviation model")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--rho", type=float, default=0.5)
    s.add_argument("--b", type=int)
    s.add_argument("--cells", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_prob)

    s = sub.add_parser("compare", help="compare a run result with the binomial model")
    s.add_argument("result", help="run.json or the directory holding it")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--rho", type=float, default=0.5)
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "format", "x") is None:
        args.format = ["int8-symmetric"]
    try:
        args.func(args)
    except Exception as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
