"""Backbone construction and layer-name resolution.

Every supported backbone exposes "stage1".."stage4" aliases for its four
major stages, so extraction requests stay architecture-agnostic.  Dotted
module paths (as printed by ``named_modules``) are accepted verbatim for
anything else.
"""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn

from gemos_extract.errors import SpecError, WeightsError

#: input edge length each backbone expects (images are resized to this)
INPUT_SIZES = {"small_convnet": 32, "resnet18": 224, "densenet121": 224}

#: stageN -> real module name, per architecture
STAGE_ALIASES = {
    "small_convnet": {f"stage{i}": f"stage{i}" for i in range(1, 5)},
    "resnet18": {f"stage{i}": f"layer{i}" for i in range(1, 5)},
    "densenet121": {f"stage{i}": f"features.denseblock{i}" for i in range(1, 5)},
}

DEFAULT_LAYERS = ("stage1", "stage2", "stage3", "stage4")


def _block(c_in: int, c_out: int, stride: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, kernel_size=3, stride=stride, padding=1, bias=False),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


class SmallConvNet(nn.Module):
    """Four-stage CIFAR-scale classifier (stage widths 16/32/64/128).

    ``embed`` is the flattened pooled vector, a 2D activation useful for
    exercising the raw-inclusion path of the extractor.
    """

    def __init__(self, num_classes: int = 4) -> None:
        super().__init__()
        self.stage1 = _block(3, 16, stride=1)
        self.stage2 = _block(16, 32, stride=2)
        self.stage3 = _block(32, 64, stride=2)
        self.stage4 = _block(64, 128, stride=2)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.embed = nn.Flatten(1)
        self.head = nn.Linear(128, num_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.stage4(self.stage3(self.stage2(self.stage1(x))))
        return self.head(self.embed(self.pool(x)))


def build_backbone(
    name: str,
    weights: str | Path | None = None,
    num_classes: int | None = None,
) -> tuple[nn.Module, int, int]:
    """Construct a backbone in eval mode.

    Returns (model, input_size, num_classes).  A small_convnet checkpoint
    carries its own class count; other backbones default to 10 classes
    unless told otherwise.

    Raises:
        SpecError: unknown backbone name.
        WeightsError: checkpoint unreadable or incompatible.
    """
    state = None
    if weights is not None:
        try:
            state = torch.load(weights, map_location="cpu", weights_only=True)
        except Exception as exc:
            raise WeightsError(f"cannot load weights from {weights}: {exc}") from exc

    if name == "small_convnet":
        if isinstance(state, dict) and "state_dict" in state:
            num_classes = int(state.get("num_classes", num_classes or 4))
            state = state["state_dict"]
        model: nn.Module = SmallConvNet(num_classes=num_classes or 4)
    elif name in ("resnet18", "densenet121"):
        import torchvision.models as tvm

        ctor = tvm.resnet18 if name == "resnet18" else tvm.densenet121
        model = ctor(weights=None, num_classes=num_classes or 10)
    else:
        raise SpecError(
            f"unknown backbone {name!r}; supported: {sorted(INPUT_SIZES)}"
        )

    if state is not None:
        try:
            model.load_state_dict(state)
        except Exception as exc:
            raise WeightsError(f"{weights} does not match {name}: {exc}") from exc
    model.eval()
    out_features = _head_width(model)
    return model, INPUT_SIZES[name], out_features


def _head_width(model: nn.Module) -> int:
    last_linear = None
    for module in model.modules():
        if isinstance(module, nn.Linear):
            last_linear = module
    if last_linear is None:
        raise SpecError("backbone has no linear classification head")
    return int(last_linear.out_features)


def resolve_layers(
    model: nn.Module, backbone_name: str, layer_names: tuple[str, ...]
) -> dict[str, nn.Module]:
    """Map requested layer names to modules, honoring stage aliases.

    Raises:
        SpecError: a name resolves to nothing; the message lists the
            alias table and a sample of real module names.
    """
    aliases = STAGE_ALIASES.get(backbone_name, {})
    modules = dict(model.named_modules())
    resolved = {}
    for requested in layer_names:
        real = aliases.get(requested, requested)
        if real not in modules:
            available = ", ".join(sorted(aliases)) or "none"
            raise SpecError(
                f"layer {requested!r} does not resolve on {backbone_name} "
                f"(aliases: {available}; dotted module paths also accepted)"
            )
        resolved[requested] = modules[real]
    return resolved
