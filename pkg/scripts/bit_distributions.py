"""Per-bit '1' probability of synthesized weights under each number format.

    python scripts/bit_distributions.py --network custom_mnist --out out/bits
"""

import argparse

from agesim import report
from agesim.bitstats import network_distribution
from agesim.weights import ZOO, Format, fit_quantization, quantize_to_words, synthesize_network


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--network", default="custom_mnist", choices=sorted(ZOO))
    ap.add_argument("--std", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/bits")
    args = ap.parse_args()

    net = synthesize_network(ZOO[args.network], ("gaussian", 0.0, args.std), args.seed, name=args.network)
    dists = {}
    for fmt in Format:
        words = quantize_to_words(net, fit_quantization(net, fmt))
        dists[fmt.value] = network_distribution(words, fmt.bits)
        print(f"{fmt.value:>16}: mean p_one = {dists[fmt.value].p_one.mean():.4f}")
    for path in report.emit(dists, args.out):
        print("wrote", path)


if __name__ == "__main__":
    main()
