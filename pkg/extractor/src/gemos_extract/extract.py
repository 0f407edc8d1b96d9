"""Forward-hook extraction: images -> pooled activation vectors -> GMF."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from gemos_extract.backbones import DEFAULT_LAYERS, build_backbone, resolve_layers
from gemos_extract.datasets import images_to_array, load_images
from gemos_extract.errors import SpecError
from gemos_extract.gmf_io import UNKNOWN_LABEL, write_gmf

POOLINGS = ("global_average", "global_max")

#: hard cap on the concatenated width; the header field is u32 but a wider
#: vector than this is certainly a misconfigured layer list
MAX_DIM = 1 << 22


@dataclass(frozen=True)
class ExtractionSpec:
    """One extraction request."""

    backbone: str
    dataset: str
    split: str
    out: str | Path
    weights: str | Path | None = None
    layers: tuple[str, ...] = DEFAULT_LAYERS
    pooling: str = "global_average"
    ood: bool = False  # mark every sample as unknown-class (true label -1)
    batch_size: int = 64
    device: str = "cpu"
    num_classes: int | None = None  # head width when no checkpoint dictates it

    def validated(self) -> "ExtractionSpec":
        if not self.layers:
            raise SpecError("at least one layer must be hooked")
        if self.pooling not in POOLINGS:
            raise SpecError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.batch_size < 1:
            raise SpecError(f"batch_size must be positive, got {self.batch_size}")
        return self


@dataclass
class ExtractResult:
    """What one extraction produced."""

    path: Path
    num_samples: int
    dim: int
    num_classes: int
    layer_widths: dict[str, int] = field(default_factory=dict)


def _pool(activation: torch.Tensor, pooling: str, layer: str) -> torch.Tensor:
    """Reduce one hooked activation to (N, width) float32."""
    if activation.ndim == 4:  # N, C, H, W -> one value per channel
        if pooling == "global_average":
            return activation.mean(dim=(2, 3))
        return activation.amax(dim=(2, 3))
    if activation.ndim == 2:  # already one value per feature
        return activation
    raise SpecError(
        f"layer {layer!r} produced a {activation.ndim}D activation; "
        "only 4D maps and 2D vectors are supported"
    )


def extract(spec: ExtractionSpec) -> ExtractResult:
    """Run the backbone over the dataset and write one GMF file.

    Per image, the feature vector is the concatenation, in spec order, of
    each hooked layer's pooled channels (4D activations) or raw values
    (2D activations).  The predicted label is the backbone's argmax; the
    true label comes from the dataset, or -1 everywhere under the OOD flag.
    """
    spec = spec.validated()
    model, input_size, head_width = build_backbone(
        spec.backbone, spec.weights, spec.num_classes
    )
    device = torch.device(spec.device)
    model = model.to(device)
    hooked = resolve_layers(model, spec.backbone, spec.layers)

    images, labels, class_names = load_images(spec.dataset, spec.split)
    pixels = images_to_array(images, input_size)
    n = pixels.shape[0]

    captured: dict[str, torch.Tensor] = {}

    def grab(name: str):
        def hook(_module, _inputs, output):
            captured[name] = output.detach()

        return hook

    handles = [module.register_forward_hook(grab(name)) for name, module in hooked.items()]
    feature_rows: list[np.ndarray] = []
    predicted = np.empty(n, dtype=np.int64)
    layer_widths: dict[str, int] = {}
    try:
        with torch.no_grad():
            for start in range(0, n, spec.batch_size):
                batch = torch.from_numpy(pixels[start : start + spec.batch_size]).to(device)
                captured.clear()
                logits = model(batch)
                missing = [name for name in spec.layers if name not in captured]
                if missing:
                    raise SpecError(
                        f"hooked layers {missing} never fired during the forward pass"
                    )
                pooled = [
                    _pool(captured[name], spec.pooling, name) for name in spec.layers
                ]
                if not layer_widths:
                    layer_widths = {
                        name: int(p.shape[1]) for name, p in zip(spec.layers, pooled)
                    }
                    total = sum(layer_widths.values())
                    if total > MAX_DIM:
                        raise SpecError(
                            f"concatenated width {total} exceeds the {MAX_DIM} cap"
                        )
                feature_rows.append(
                    torch.cat(pooled, dim=1).to(torch.float32).cpu().numpy()
                )
                predicted[start : start + batch.shape[0]] = (
                    logits.argmax(dim=1).cpu().numpy()
                )
    finally:
        for h in handles:
            h.remove()

    features = np.vstack(feature_rows)
    true = np.full(n, UNKNOWN_LABEL, dtype=np.int64) if spec.ood else labels
    manifest = {
        "backbone_name": spec.backbone,
        "layer_names": list(spec.layers),
        "pooling": spec.pooling,
        "class_names": class_names,
        "source_dataset": f"{spec.dataset}/{spec.split}",
    }
    out = Path(spec.out)
    write_gmf(out, features, true, predicted, head_width, manifest)
    return ExtractResult(
        path=out,
        num_samples=n,
        dim=int(features.shape[1]),
        num_classes=head_width,
        layer_widths=layer_widths,
    )
