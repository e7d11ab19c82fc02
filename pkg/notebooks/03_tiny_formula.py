"""
From a FLOPs budget to a network
================================

Regress resolution and depth on the FLOPs ratio over the frontier, then let
the budget fix the width.
"""

# %%
import numpy as np

from tinyformula import arch, formula, gpr, pareto, search

b0 = arch.bundled_spec("efficientnet-b0")
records = list(search.demo_store())
front = pareto.select_frontier(records, 0.2)
by_id = {r.id: r for r in records}
members = [by_id[i] for i in front.members]

tf = formula.fit_formula(members)
for m in (tf.model_r, tf.model_d):
    print(m.target, m.kernel, f"noise={m.noise_variance:.3g}")

# %% [markdown]
# The posterior mean with its two-sigma band, on a coarse grid.

# %%
grid = np.linspace(0.05, 1.0, 12)
post = gpr.predict(tf.model_r, grid)
for c, mu, var in zip(grid, post.mean, post.variance):
    print(f"c={c:.2f}  r={mu:.3f} +- {2 * np.sqrt(var):.3f}")

# %%
for c in (0.9, 0.5, 0.25, 0.13, 0.06):
    co = tf.solve(c)
    shrunk = formula.solve_resolved(tf, b0, c)
    print(f"c={c:<5} continuous r={co.r:.3f} d={co.d:.3f} w={co.w:.3f} | "
          f"{shrunk.resolved.resolution}px, {shrunk.cost.flops / 1e6:.1f}M, "
          f"ratio {shrunk.ratio:.3f}")

# %% [markdown]
# `solve` gives continuous coefficients with r^2 d w^2 = c exactly.
# `solve_resolved` rounds them onto a real network and nudges width (and, if
# needed, the input size) until the realized FLOPs sit within a few percent
# of the budget.

# %%
print(formula.solve_resolved(tf, b0, 0.25).to_json(b0)[:400])
