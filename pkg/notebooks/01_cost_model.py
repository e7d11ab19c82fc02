"""
Counting the cost of a scaled network
=====================================

Multiply-accumulates and parameters of EfficientNet-B0 as resolution, depth
and width move away from 1.
"""

# %%
from tinyformula import arch
from tinyformula.arch import ScalingCoefficients

b0 = arch.bundled_spec("efficientnet-b0")
base = arch.estimate(b0, arch.IDENTITY)
print(f"baseline: {base.flops / 1e6:.1f}M MACs, {base.params / 1e6:.2f}M params")

# %% [markdown]
# The per-layer breakdown sums to the totals. Most of the budget sits in the
# pointwise convolutions of the middle stages.

# %%
resolved = arch.resolve(b0, arch.IDENTITY)
for layer in list(arch.layers(resolved, b0))[:8]:
    print(f"{layer.name:28s} {layer.flops:>12,d} {layer.params:>9,d}")

# %%
# one knob at a time
for axis in ("r", "d", "w"):
    row = []
    for x in (0.5, 0.75, 1.0, 1.25):
        coeffs = ScalingCoefficients(**{"r": 1.0, "d": 1.0, "w": 1.0, axis: x})
        row.append(f"{arch.flops_ratio(b0, coeffs):6.3f}")
    print(axis, " ".join(row))

# %% [markdown]
# Width and resolution act roughly quadratically, depth roughly linearly, but
# channel rounding and the one-block-per-stage floor make the curve stepwise.
# Below d of about 0.25 every stage already has a single block, so depth stops
# buying anything.

# %%
for d in (0.5, 0.25, 0.1, 0.01):
    r = arch.resolve(b0, ScalingCoefficients(1, d, 1))
    print(d, r.repeats, arch.flops_ratio(b0, ScalingCoefficients(1, d, 1)))

# %%
ghost = arch.bundled_spec("ghostnet-a")
g = arch.estimate(ghost, arch.IDENTITY)
print(f"ghostnet-a: {g.flops / 1e6:.1f}M MACs, {g.params / 1e6:.2f}M params")
