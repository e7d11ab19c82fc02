"""
Random scalings and their frontier
==================================

Draw 100 scalings of B0 inside a FLOPs band, label them with the synthetic
accuracy oracle and keep the best fifth by nondominated sorting.
"""

# %%
import numpy as np

from tinyformula import arch, oracle, pareto, search

b0 = arch.bundled_spec("efficientnet-b0")
cfg = search.SamplingConfig(sample_count=100, seed=42)
records = search.sample_band(b0, cfg)
ratios = np.array([r.ratio for r in records])
print(f"{len(records)} records, ratio range {ratios.min():.3f} to {ratios.max():.3f}")

# %% [markdown]
# Accuracies here are synthetic. The oracle is a smooth saturating curve in
# FLOPs with a mild preference for resolution near 1.1, plus seeded noise.
# Swap in real numbers with `search.ingest` when you have them.

# %%
labeled = oracle.label(records, oracle.OracleConfig(noise_sd=0.003, seed=42))
front = pareto.select_frontier(labeled, 0.2)
print(len(front), "on the frontier")

by_id = {r.id: r for r in labeled}
for rid in front.members[:10]:
    r = by_id[rid]
    print(f"{rid}  front {front.fronts[rid]}  ratio {r.ratio:.3f}  "
          f"r={r.r:.2f} d={r.d:.2f} w={r.w:.2f}  acc {r.accuracy:.4f}")

# %%
stats = pareto.frontier_stats(front, labeled)
print(stats)

# %% [markdown]
# On this oracle resolution tracks the FLOPs ratio far more closely than
# width does across the frontier, so a shrinking rule should give up width
# first.

# %%
# sampling straight onto one budget instead of a band
at_half = search.sample_at_target(b0, search.SamplingConfig(sample_count=10, seed=1,
                                                           target_ratio=0.5))
print([round(r.ratio, 3) for r in at_half])
