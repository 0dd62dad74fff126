#!/usr/bin/env python3
"""Convert torchvision VGG-16 weights into the backbone archive format.

The training code loads backbone weights from a .npz archive keyed as
``enc.b{block}.c{conv}.{weight|bias}``. This script produces that archive
either from a local torchvision-style state dict or by downloading the
torchvision weights (needs torchvision and network access).

    python3 scripts/convert_vgg16.py --download --out vgg16.npz
    python3 scripts/convert_vgg16.py --state-dict vgg16-397923af.pth --out vgg16.npz

Pass the result to ``mccsod train --pretrained vgg16.npz`` or point the
MCCSOD_VGG16 environment variable at it for the acceptance suite.
"""

import argparse
import sys

import numpy as np
import torch

from mccsod.encoder import convert_torchvision_state_dict


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--state-dict", help="local vgg16 state dict (.pth)")
    source.add_argument(
        "--download", action="store_true", help="fetch the weights via torchvision"
    )
    parser.add_argument("--out", required=True, help="archive path to write (.npz)")
    args = parser.parse_args(argv)

    if args.download:
        from torchvision.models import VGG16_Weights, vgg16

        state = vgg16(weights=VGG16_Weights.IMAGENET1K_V1).state_dict()
    else:
        state = torch.load(args.state_dict, map_location="cpu", weights_only=True)

    archive = convert_torchvision_state_dict(state)
    np.savez(args.out, **archive)
    print(f"wrote {len(archive)} arrays to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
