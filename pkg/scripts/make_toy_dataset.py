#!/usr/bin/env python3
"""Generate a small synthetic dataset in the expected directory layout.

Each image contains one bright geometric object on a textured background,
with its binary mask as ground truth. Useful for smoke tests and for
exercising the full pipeline without a benchmark dataset:

    python3 scripts/make_toy_dataset.py --root /tmp/toy --train 8 --test 4
    mccsod train --data-root /tmp/toy --out /tmp/run --smoke 4 --iters 200 \
        --set network.input_size=64 --set data.input_size=64
"""

import argparse
import sys

from mccsod.synthetic import make_toy_dataset


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--root", required=True, help="directory to create")
    parser.add_argument("--train", type=int, default=8, help="training images")
    parser.add_argument("--test", type=int, default=4, help="test images")
    parser.add_argument("--size", type=int, default=256, help="square image size")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    root = make_toy_dataset(
        args.root, n_train=args.train, n_test=args.test, size=args.size, seed=args.seed
    )
    print(f"toy dataset written to {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
