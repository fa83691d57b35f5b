"""Convert torchvision ResNet-50 ImageNet weights into a birdxfer backbone archive.

    python tools/convert_torchvision_resnet50.py resnet50-11ad3fa6.pth resnet50_imagenet.bxa

The input is a state_dict saved by torchvision (or a torch.hub download). The
fc.* classifier and num_batches_tracked counters are dropped; everything else
is stored as backbone.<torchvision name>.
"""
import argparse
import sys

import torch

from bxarchive import write_archive


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("state_dict", nargs="?", help="path to a .pth state_dict; omitted = torchvision download")
    ap.add_argument("output")
    args = ap.parse_args()

    if args.state_dict:
        state = torch.load(args.state_dict, map_location="cpu", weights_only=True)
    else:
        import torchvision
        state = torchvision.models.resnet50(weights="IMAGENET1K_V1").state_dict()

    arrays = []
    for name, value in state.items():
        if name.startswith("fc.") or name.endswith("num_batches_tracked"):
            continue
        arrays.append(("backbone." + name, value.detach().float().numpy()))
    write_archive(args.output, arrays, {"source": "torchvision resnet50 IMAGENET1K_V1", "format_version": 1})
    print("wrote %d arrays to %s" % (len(arrays), args.output), file=sys.stderr)


if __name__ == "__main__":
    main()
