"""Stage-wise CNN descriptions, (r, d, w) scaling and analytic cost counting.

FLOPs throughout this package are multiply-accumulate counts: one MAC is one
FLOP. With that convention the bundled EfficientNet-B0 description costs
about 387M FLOPs at 224x224, the figure commonly quoted for it.

Parameter counts include convolution weights, biases where a layer has them
(squeeze-excite and classifier layers), and two batch-norm scalars per output
channel of every normalized convolution. Batch-norm FLOPs are not counted
since they fold into the preceding convolution at inference time.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, NamedTuple

from .errors import SpecError

OPERATORS = ("mbconv", "ghost_bneck", "conv", "depthwise_conv")
MIN_RESOLUTION = 32


@dataclass(frozen=True)
class ConvLayer:
    kernel_size: int
    stride: int
    out_channels: int


@dataclass(frozen=True)
class StageSpec:
    """One stage of identical blocks.

    Only the first repeat uses ``stride``; the remaining repeats run at
    stride 1. ``se_ratio`` sizes the squeeze-excite bottleneck: relative to
    the block input channels for ``mbconv`` and to the expanded channels for
    ``ghost_bneck``. Zero disables squeeze-excite.
    """

    op: str
    kernel_size: int
    stride: int
    expansion_ratio: float
    out_channels: int
    se_ratio: float
    repeats: int


@dataclass(frozen=True)
class HeadSpec:
    """Classifier head: 1x1 conv, global pooling, optional 1x1 conv, linear."""

    out_channels: int
    classes: int
    pool: str = "avg"
    hidden_channels: int | None = None


@dataclass(frozen=True)
class ArchitectureSpec:
    name: str
    base_resolution: int
    stem: ConvLayer
    stages: tuple[StageSpec, ...]
    head: HeadSpec
    channel_divisor: int = 8

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        validate_spec(self)

    @property
    def depth(self) -> int:
        return sum(s.repeats for s in self.stages)

    @classmethod
    def from_dict(cls, doc: dict) -> "ArchitectureSpec":
        try:
            stem = doc["stem"]
            head = doc["head"]
            stages = [
                StageSpec(
                    op=s["op"],
                    kernel_size=int(s["k"]),
                    stride=int(s["stride"]),
                    expansion_ratio=float(s.get("exp", 1)),
                    out_channels=int(s["out"]),
                    se_ratio=float(s.get("se", 0)),
                    repeats=int(s["repeat"]),
                )
                for s in doc["stages"]
            ]
            return cls(
                name=str(doc["name"]),
                base_resolution=int(doc["base_resolution"]),
                stem=ConvLayer(int(stem["k"]), int(stem["stride"]), int(stem["out"])),
                stages=tuple(stages),
                head=HeadSpec(
                    out_channels=int(head["out"]),
                    classes=int(head["classes"]),
                    pool=str(head.get("pool", "avg")),
                    hidden_channels=(
                        None if head.get("hidden") is None else int(head["hidden"])
                    ),
                ),
                channel_divisor=int(doc.get("channel_divisor", 8)),
            )
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed architecture document: {exc!r}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base_resolution": self.base_resolution,
            "channel_divisor": self.channel_divisor,
            "stem": {
                "k": self.stem.kernel_size,
                "stride": self.stem.stride,
                "out": self.stem.out_channels,
            },
            "stages": [
                {
                    "op": s.op,
                    "k": s.kernel_size,
                    "stride": s.stride,
                    "exp": s.expansion_ratio,
                    "out": s.out_channels,
                    "se": s.se_ratio,
                    "repeat": s.repeats,
                }
                for s in self.stages
            ],
            "head": {
                "out": self.head.out_channels,
                "pool": self.head.pool,
                "hidden": self.head.hidden_channels,
                "classes": self.head.classes,
            },
        }


def validate_spec(spec: ArchitectureSpec) -> None:
    if not spec.stages:
        raise SpecError(f"{spec.name}: no stages")
    if spec.channel_divisor < 1:
        raise SpecError(f"{spec.name}: channel_divisor must be >= 1")
    if spec.base_resolution < MIN_RESOLUTION:
        raise SpecError(
            f"{spec.name}: base_resolution {spec.base_resolution} < {MIN_RESOLUTION}"
        )
    if spec.stem.stride not in (1, 2) or spec.stem.kernel_size < 1:
        raise SpecError(f"{spec.name}: bad stem {spec.stem}")
    if spec.stem.out_channels < 1:
        raise SpecError(f"{spec.name}: stem needs output channels")
    for i, s in enumerate(spec.stages):
        where = f"{spec.name}: stage {i}"
        if s.op not in OPERATORS:
            raise SpecError(f"{where}: unknown operator {s.op!r}")
        if s.stride not in (1, 2):
            raise SpecError(f"{where}: stride must be 1 or 2, got {s.stride}")
        if s.repeats < 1:
            raise SpecError(f"{where}: repeats must be >= 1, got {s.repeats}")
        if s.kernel_size < 1 or s.kernel_size % 2 == 0:
            raise SpecError(f"{where}: kernel size must be odd and positive")
        if not s.expansion_ratio >= 1:
            raise SpecError(f"{where}: expansion ratio must be >= 1")
        if s.out_channels < 1:
            raise SpecError(f"{where}: out_channels must be positive")
        if not 0 <= s.se_ratio <= 1:
            raise SpecError(f"{where}: se ratio must lie in [0, 1]")
    if spec.head.out_channels < 1 or spec.head.classes < 1:
        raise SpecError(f"{spec.name}: bad head {spec.head}")
    if spec.head.hidden_channels is not None and spec.head.hidden_channels < 1:
        raise SpecError(f"{spec.name}: bad head hidden channels")
    if spec.head.pool != "avg":
        raise SpecError(f"{spec.name}: only average pooling is supported")


def load_spec(path) -> ArchitectureSpec:
    """Read an architecture JSON file. Raises ``SpecError`` on bad content."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: {exc}") from exc
    return ArchitectureSpec.from_dict(doc)


def save_spec(spec: ArchitectureSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")


def bundled_spec(name: str) -> ArchitectureSpec:
    """Load ``efficientnet-b0`` or ``ghostnet-a`` from the package data."""
    fname = name if name.endswith(".json") else name + ".json"
    text = resources.files("tinyformula").joinpath("data").joinpath(fname).read_text("utf-8")
    return ArchitectureSpec.from_dict(json.loads(text))


@dataclass(frozen=True)
class ScalingCoefficients:
    r: float
    d: float
    w: float

    def __post_init__(self):
        for name in ("r", "d", "w"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise SpecError(f"coefficient {name} must be finite and > 0, got {v!r}")


IDENTITY = ScalingCoefficients(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class ResolvedArchitecture:
    """A spec with every scaled quantity rounded to a concrete integer."""

    resolution: int
    stem_channels: int
    repeats: tuple[int, ...]
    channels: tuple[int, ...]
    head_channels: int
    head_hidden: int | None
    coeffs: ScalingCoefficients = field(default=IDENTITY, compare=False)

    def to_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "stem_channels": self.stem_channels,
            "repeats": list(self.repeats),
            "channels": list(self.channels),
            "head_channels": self.head_channels,
            "head_hidden": self.head_hidden,
        }


@dataclass(frozen=True)
class CostReport:
    flops: int
    params: int

    def to_dict(self) -> dict:
        return asdict(self)


def round_channels(x: float, divisor: int = 8) -> int:
    """Round to the nearest multiple of ``divisor``, never dropping below 90%."""
    out = max(divisor, int(x + divisor / 2) // divisor * divisor)
    if out < 0.9 * x:
        out += divisor
    return out


def scale_repeats(repeats: int, d: float) -> int:
    """Scaled repeat count: floor of ``d * repeats`` but at least one block."""
    # the epsilon keeps d=0.7/0.35 style products from flooring one short
    return max(1, int(math.floor(d * repeats + 1e-9)))


def resolve(spec: ArchitectureSpec, coeffs: ScalingCoefficients) -> ResolvedArchitecture:
    if not isinstance(coeffs, ScalingCoefficients):
        coeffs = ScalingCoefficients(*coeffs)
    div = spec.channel_divisor
    resolution = max(MIN_RESOLUTION, int(math.floor(coeffs.r * spec.base_resolution + 0.5)))

    def ch(c):
        return round_channels(coeffs.w * c, div)

    head_hidden = spec.head.hidden_channels
    return ResolvedArchitecture(
        resolution=resolution,
        stem_channels=ch(spec.stem.out_channels),
        repeats=tuple(scale_repeats(s.repeats, coeffs.d) for s in spec.stages),
        channels=tuple(ch(s.out_channels) for s in spec.stages),
        head_channels=ch(spec.head.out_channels),
        head_hidden=None if head_hidden is None else ch(head_hidden),
        coeffs=coeffs,
    )


class Layer(NamedTuple):
    name: str
    flops: int
    params: int


def _down(size: int, stride: int) -> int:
    return -(-size // stride)


def _conv(name, k, cin, cout, hw, bn=True, bias=False) -> Layer:
    params = k * k * cin * cout + (cout if bias else 0) + (2 * cout if bn else 0)
    return Layer(name, k * k * cin * cout * hw, params)


def _dw(name, k, c, hw) -> Layer:
    return Layer(name, k * k * c * hw, k * k * c + 2 * c)


def _se(name, c, squeeze) -> Layer:
    # two fully connected layers on the pooled vector, both with bias
    return Layer(name, 2 * c * squeeze, 2 * c * squeeze + squeeze + c)


def _ghost(name, cin, cout, hw) -> Iterator[Layer]:
    primary = -(-cout // 2)
    cheap = cout - primary
    yield _conv(name + ".primary", 1, cin, primary, hw)
    if cheap:
        yield _dw(name + ".cheap", 3, cheap, hw)


def _block(name, stage: StageSpec, cin, cout, stride, size) -> tuple[list[Layer], int]:
    out_size = _down(size, stride)
    hw_in, hw_out = size * size, out_size * out_size
    k = stage.kernel_size
    hidden = int(math.floor(cin * stage.expansion_ratio + 0.5))
    layers: list[Layer] = []
    if stage.op == "mbconv":
        if hidden != cin:
            layers.append(_conv(name + ".expand", 1, cin, hidden, hw_in))
        layers.append(_dw(name + ".dw", k, hidden, hw_out))
        if stage.se_ratio > 0:
            layers.append(_se(name + ".se", hidden, max(1, int(cin * stage.se_ratio))))
        layers.append(_conv(name + ".project", 1, hidden, cout, hw_out))
    elif stage.op == "ghost_bneck":
        layers.extend(_ghost(name + ".ghost1", cin, hidden, hw_in))
        if stride > 1:
            layers.append(_dw(name + ".dw", k, hidden, hw_out))
        if stage.se_ratio > 0:
            layers.append(_se(name + ".se", hidden, max(1, int(hidden * stage.se_ratio))))
        layers.extend(_ghost(name + ".ghost2", hidden, cout, hw_out))
        if stride > 1 or cin != cout:
            layers.append(_dw(name + ".shortcut.dw", k, cin, hw_out))
            layers.append(_conv(name + ".shortcut.pw", 1, cin, cout, hw_out))
    elif stage.op == "conv":
        layers.append(_conv(name + ".conv", k, cin, cout, hw_out))
    elif stage.op == "depthwise_conv":
        layers.append(_dw(name + ".dw", k, cin, hw_out))
        layers.append(_conv(name + ".pw", 1, cin, cout, hw_out))
    else:  # pragma: no cover - rejected by validate_spec
        raise SpecError(f"unknown operator {stage.op!r}")
    return layers, out_size


def layers(resolved: ResolvedArchitecture, spec: ArchitectureSpec) -> Iterator[Layer]:
    """Yield every costed layer of ``resolved`` in forward order."""
    if len(resolved.repeats) != len(spec.stages):
        raise SpecError("resolved architecture does not match spec stage count")
    size = _down(resolved.resolution, spec.stem.stride)
    cin = resolved.stem_channels
    yield _conv("stem", spec.stem.kernel_size, 3, cin, size * size)
    for i, (stage, reps, cout) in enumerate(
        zip(spec.stages, resolved.repeats, resolved.channels)
    ):
        for j in range(reps):
            stride = stage.stride if j == 0 else 1
            block, size = _block(f"stage{i}.{j}", stage, cin, cout, stride, size)
            yield from block
            cin = cout
    feat = resolved.head_channels
    yield _conv("head.conv", 1, cin, feat, size * size)
    if resolved.head_hidden is not None:
        yield _conv("head.hidden", 1, feat, resolved.head_hidden, 1, bn=False, bias=True)
        feat = resolved.head_hidden
    yield Layer("head.fc", feat * spec.head.classes, feat * spec.head.classes + spec.head.classes)


def cost(resolved: ResolvedArchitecture, spec: ArchitectureSpec) -> CostReport:
    flops = params = 0
    for layer in layers(resolved, spec):
        flops += layer.flops
        params += layer.params
    return CostReport(flops=flops, params=params)


def conv2d_cost(k, cin, cout, height, width=None, stride=1, bias=True) -> CostReport:
    """Cost of one standalone convolution with 'same' padding."""
    width = height if width is None else width
    hw = _down(height, stride) * _down(width, stride)
    return CostReport(
        flops=k * k * cin * cout * hw,
        params=k * k * cin * cout + (cout if bias else 0),
    )


def estimate(spec: ArchitectureSpec, coeffs: ScalingCoefficients) -> CostReport:
    return cost(resolve(spec, coeffs), spec)


def flops_ratio(spec: ArchitectureSpec, coeffs: ScalingCoefficients) -> float:
    """Realized FLOPs of the scaled network relative to the unscaled one."""
    return estimate(spec, coeffs).flops / estimate(spec, IDENTITY).flops
