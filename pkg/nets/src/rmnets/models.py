"""The three nets: material regression, illumination decoding, and a joint variant."""

import torch
from torch import nn

INPUT_SIZE = 128
ENV_SIZE = 64
MATERIAL_DIM = 7


def _stage(cin: int, cout: int) -> nn.Sequential:
    # conv + ReLU + 2x2 max pool; halves the spatial side
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, padding=1),
        nn.ReLU(inplace=True),
        nn.MaxPool2d(2),
    )


def _check_input(x: torch.Tensor) -> None:
    if x.ndim != 4 or x.shape[1] != 3 or x.shape[2] != INPUT_SIZE or x.shape[3] != INPUT_SIZE:
        raise ValueError(
            f"expected Bx3x{INPUT_SIZE}x{INPUT_SIZE} input, got {tuple(x.shape)}"
        )


class Trunk(nn.Module):
    """First two downsampling stages; the joint net shares this part.

    Both stage outputs are returned so the illumination decoder can tap
    the features at matching resolutions.
    """

    def __init__(self):
        super().__init__()
        self.stage1 = _stage(3, 32)   # 128 -> 64
        self.stage2 = _stage(32, 64)  # 64 -> 32

    def forward(self, x):
        f1 = self.stage1(x)
        f2 = self.stage2(f1)
        return f1, f2


class MaterialHead(nn.Module):
    """Three more conv/pool stages down to 4x4, then the fully-connected tail."""

    def __init__(self):
        super().__init__()
        self.stages = nn.Sequential(
            _stage(64, 96),    # 32 -> 16
            _stage(96, 160),   # 16 -> 8
            _stage(160, 256),  # 8 -> 4
        )
        self.fc = nn.Sequential(
            nn.Linear(256 * 4 * 4, 512),
            nn.ReLU(inplace=True),
            nn.Linear(512, 256),
            nn.ReLU(inplace=True),
            nn.Linear(256, MATERIAL_DIM),
        )

    def forward(self, f2):
        h = self.stages(f2)
        return self.fc(h.flatten(1))


def _coord_grid(side: int) -> torch.Tensor:
    """Two constant channels holding each texel's row and column in [-1, 1]."""
    r = torch.linspace(-1.0, 1.0, side)
    return torch.stack(torch.meshgrid(r, r, indexing="ij")).unsqueeze(0)


class IlluminationHead(nn.Module):
    """Squeeze to 25x25, convolve there, then two deconvolutions back to 64x64.

    Two fixed coordinate channels join the features entering the squeeze:
    a lat-long texel's position is its direction on the sphere, and away
    from the padded borders plain convolutions have no way to know where
    they are. Each deconvolution adds a 1x1-projected copy of the encoder
    feature at the same resolution before its rectifier. The final
    3-channel conv stays linear: it regresses log radiance, which is signed.
    """

    def __init__(self):
        super().__init__()
        self.squeeze = nn.Sequential(nn.Conv2d(64 + 2, 64, 8), nn.ReLU(inplace=True))  # 32 -> 25
        self.middle = nn.Sequential(nn.Conv2d(64, 64, 3, padding=1), nn.ReLU(inplace=True))
        self.up1 = nn.ConvTranspose2d(64, 64, 8)                        # 25 -> 32
        self.skip1 = nn.Conv2d(64, 64, 1)
        self.up2 = nn.ConvTranspose2d(64, 32, 4, stride=2, padding=1)   # 32 -> 64
        self.skip2 = nn.Conv2d(32, 32, 1)
        self.out = nn.Conv2d(32, 3, 3, padding=1)
        self.register_buffer("coords", _coord_grid(INPUT_SIZE // 4))

    def forward(self, f1, f2):
        pos = self.coords.expand(f2.shape[0], -1, -1, -1)
        h = self.middle(self.squeeze(torch.cat([f2, pos], dim=1)))
        h = torch.relu(self.up1(h) + self.skip1(f2))
        h = torch.relu(self.up2(h) + self.skip2(f1))
        return self.out(h)


class MaterialNet(nn.Module):
    """128x128x3 reflectance map -> 7 values (kd, ks, ln kg)."""

    def __init__(self):
        super().__init__()
        self.trunk = Trunk()
        self.head = MaterialHead()

    def forward(self, x):
        _check_input(x)
        _, f2 = self.trunk(x)
        return self.head(f2)


class IlluminationNet(nn.Module):
    """128x128x3 reflectance map -> 64x64x3 log-encoded environment map."""

    def __init__(self):
        super().__init__()
        self.trunk = Trunk()
        self.head = IlluminationHead()

    def forward(self, x):
        _check_input(x)
        f1, f2 = self.trunk(x)
        return self.head(f1, f2)


class JointNet(nn.Module):
    """One trunk feeding both heads; each head keeps its own loss."""

    def __init__(self):
        super().__init__()
        self.trunk = Trunk()
        self.material_head = MaterialHead()
        self.illumination_head = IlluminationHead()

    def forward(self, x):
        _check_input(x)
        f1, f2 = self.trunk(x)
        return self.material_head(f2), self.illumination_head(f1, f2)


def build_model(kind: str) -> nn.Module:
    if kind == "material":
        return MaterialNet()
    if kind == "illumination":
        return IlluminationNet()
    if kind == "joint":
        return JointNet()
    raise ValueError(f"unknown model kind {kind!r}")
