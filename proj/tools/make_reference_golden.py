"""Record a backbone reference output with torchvision's Bottleneck.

Builds a narrow ResNet (same topology as ResNet-50, smaller width and block
counts) from torchvision.models.resnet.Bottleneck, randomizes weights and
batch-norm statistics, runs it in eval mode on a fixed input and stores
weights, input and output in one archive:

    python tools/make_reference_golden.py tests/data/resnet_golden.bxa
"""
import sys

import numpy as np
import torch
from torch import nn
from torchvision.models.resnet import Bottleneck, conv1x1

from bxarchive import write_archive

WIDTH = 4
BLOCKS = [2, 1, 1, 1]


class NarrowResNet(nn.Module):
    def __init__(self, width, blocks):
        super().__init__()
        self.inplanes = width
        self.conv1 = nn.Conv2d(3, width, kernel_size=7, stride=2, padding=3, bias=False)
        self.bn1 = nn.BatchNorm2d(width)
        self.relu = nn.ReLU(inplace=True)
        self.maxpool = nn.MaxPool2d(kernel_size=3, stride=2, padding=1)
        self.layer1 = self._make_layer(width, blocks[0])
        self.layer2 = self._make_layer(width * 2, blocks[1], stride=2)
        self.layer3 = self._make_layer(width * 4, blocks[2], stride=2)
        self.layer4 = self._make_layer(width * 8, blocks[3], stride=2)

    # Same construction as torchvision.models.resnet.ResNet._make_layer.
    def _make_layer(self, planes, blocks, stride=1):
        downsample = None
        if stride != 1 or self.inplanes != planes * Bottleneck.expansion:
            downsample = nn.Sequential(
                conv1x1(self.inplanes, planes * Bottleneck.expansion, stride),
                nn.BatchNorm2d(planes * Bottleneck.expansion),
            )
        layers = [Bottleneck(self.inplanes, planes, stride, downsample)]
        self.inplanes = planes * Bottleneck.expansion
        for _ in range(1, blocks):
            layers.append(Bottleneck(self.inplanes, planes))
        return nn.Sequential(*layers)

    def forward(self, x):
        x = self.maxpool(self.relu(self.bn1(self.conv1(x))))
        return self.layer4(self.layer3(self.layer2(self.layer1(x))))


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "tests/data/resnet_golden.bxa"
    torch.manual_seed(20240611)
    net = NarrowResNet(WIDTH, BLOCKS)
    with torch.no_grad():
        for m in net.modules():
            if isinstance(m, nn.BatchNorm2d):
                m.weight.uniform_(0.5, 1.5)
                m.bias.uniform_(-0.2, 0.2)
                m.running_mean.uniform_(-0.1, 0.1)
                m.running_var.uniform_(0.5, 1.5)
    net.eval()
    x = torch.rand(1, 3, 64, 64, dtype=torch.float64).float()
    with torch.no_grad():
        y = net.double()(x.double())

    arrays = []
    for name, value in net.state_dict().items():
        if name.endswith("num_batches_tracked"):
            continue
        arrays.append(("backbone." + name, value.float().numpy()))
    arrays.append(("input", x.numpy()))
    arrays.append(("expected", y.float().numpy()))
    write_archive(out, arrays, {"format_version": 1, "width": WIDTH, "blocks": BLOCKS,
                                "reference": "torchvision.models.resnet.Bottleneck, eval mode, float64"})
    print("output shape", tuple(y.shape), "max |y|", float(y.abs().max()), file=sys.stderr)


if __name__ == "__main__":
    main()
