"""
Compound scaling run backwards
==============================

d = 1.2**-phi, w = 1.1**-phi, r = 1.15**-phi halves FLOPs per step of phi,
up to rounding. Compare it with the regression-based rule at the same budgets.
"""

# %%
from tinyformula import arch, formula, pareto, search

b0 = arch.bundled_spec("efficientnet-b0")
base = arch.estimate(b0, arch.IDENTITY).flops

records = list(search.demo_store())
by_id = {r.id: r for r in records}
front = pareto.select_frontier(records, 0.2)
tf = formula.fit_formula([by_id[i] for i in front.members])

# %%
print("phi  giant(r,d,w)          MACs     tiny(r,d,w)           MACs")
for phi in (1, 2, 3, 4):
    g = formula.inversed_giant(b0, phi)
    t = formula.solve_resolved(tf, b0, 2.0 ** -phi)
    print(f"{phi}    ({g.coeffs.r:.2f},{g.coeffs.d:.2f},{g.coeffs.w:.2f})  "
          f"{g.cost.flops / 1e6:6.1f}M  ({t.coeffs.r:.2f},{t.coeffs.d:.2f},{t.coeffs.w:.2f})  "
          f"{t.cost.flops / 1e6:6.1f}M")

# %% [markdown]
# At phi=4 width alone cannot land on the budget: rounding makes FLOPs jump
# across it, so the input size moves by a pixel or two instead.
