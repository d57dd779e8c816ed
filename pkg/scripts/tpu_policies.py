"""Policy comparison on the TPU-like accelerator (int8, 256-wide tiles, weight FIFO).

    python scripts/tpu_policies.py --networks custom_mnist alexnet
"""

from policy_matrix import configs, parser, run_and_report


def main():
    ap = parser(__doc__.splitlines()[0], formats=("int8-symmetric",), memory_kb=256)
    ap.set_defaults(out="out/tpu")
    args = ap.parse_args()
    run_and_report(configs(args, accelerator="tpu-like"), args)


if __name__ == "__main__":
    main()
