"""Networks x formats x policies on the baseline accelerator.

Defaults are desk-scale (custom network, 64 KB memory). AlexNet and VGG-16
shapes run with synthesized weights; expect minutes for VGG-16 at 512 KB.

    python scripts/policy_matrix.py --networks custom_mnist alexnet --memory-kb 512 --workers 4
"""

import argparse
from dataclasses import replace

from agesim import report
from agesim.encoders import EncodingPolicy
from agesim.sim import RunConfig, run_matrix
from agesim.weights import ZOO, Format

POLICIES = [
    EncodingPolicy("none"),
    EncodingPolicy("inversion"),
    EncodingPolicy("barrel"),
    EncodingPolicy("trbg", bias=0.5),
    EncodingPolicy("trbg", bias=0.7, balancing=False),
    EncodingPolicy("trbg", bias=0.7),
]


def configs(args, accelerator="baseline"):
    base = RunConfig(accelerator=accelerator, memory_kb=args.memory_kb, inferences=args.inferences,
                     seed=args.seed, weight_seed=args.seed)
    for net in args.networks:
        for fmt in args.formats:
            for pol in POLICIES:
                yield replace(base, network=net, format=Format.parse(fmt), policy=pol)


def parser(desc, formats=("float32", "int8-symmetric", "int8-asymmetric"), memory_kb=64):
    ap = argparse.ArgumentParser(description=desc)
    ap.add_argument("--networks", nargs="+", default=["custom_mnist"], choices=sorted(ZOO))
    ap.add_argument("--formats", nargs="+", default=list(formats))
    ap.add_argument("--memory-kb", type=int, default=memory_kb)
    ap.add_argument("--inferences", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/matrix")
    return ap


def run_and_report(cfgs, args):
    results = run_matrix(list(cfgs), workers=args.workers)
    report.emit(results, args.out)
    print(report.matrix_csv(results), end="")


def main():
    args = parser(__doc__.splitlines()[0]).parse_args()
    run_and_report(configs(args), args)


if __name__ == "__main__":
    main()
