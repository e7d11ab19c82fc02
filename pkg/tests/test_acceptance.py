"""Acceptance checks, one per criterion.

Run under pytest (``pytest tests/test_acceptance.py -s`` shows the lines) or
directly with ``python tests/test_acceptance.py`` for a plain PASS/FAIL list.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import (brute_force_fronts, explicit_posterior,  # noqa: E402
                     rank_then_pearson)
from tinyformula import arch, formula, gpr, oracle, pareto, search  # noqa: E402
from tinyformula.arch import ScalingCoefficients  # noqa: E402
from tinyformula.search import ExperimentRecord  # noqa: E402

BUDGETS = (0.9, 0.5, 0.25, 0.13, 0.06)


def check_cost_calibration():
    start = time.perf_counter()
    spec = arch.bundled_spec("efficientnet-b0")
    report = arch.estimate(spec, arch.IDENTITY)
    elapsed = time.perf_counter() - start
    ok = 375e6 <= report.flops <= 399e6 and 5.14e6 <= report.params <= 5.46e6 and elapsed < 1
    return ok, f"B0 flops={report.flops / 1e6:.2f}M params={report.params / 1e6:.3f}M in {elapsed:.3f}s"


def check_b_minus_one():
    spec = arch.bundled_spec("efficientnet-b0")
    flops = arch.estimate(spec, ScalingCoefficients(0.86, 0.8, 0.89)).flops
    return 194e6 <= flops <= 206e6, f"(0.86, 0.8, 0.89) flops={flops / 1e6:.2f}M"


def check_inversed_giant():
    spec = arch.bundled_spec("efficientnet-b0")
    parts, ok = [], True
    for phi, want in zip((1, 2, 3, 4), (201e6, 98e6, 51e6, 24e6)):
        got = formula.inversed_giant(spec, phi).cost.flops
        err = got / want - 1
        ok &= abs(err) <= 0.05
        parts.append(f"phi={phi}: {got / 1e6:.2f}M ({err:+.1%})")
    return ok, "; ".join(parts)


def check_ghostnet():
    flops = arch.estimate(arch.bundled_spec("ghostnet-a"), arch.IDENTITY).flops
    err = flops / 591e6 - 1
    return abs(err) <= 0.05, f"GhostNet-A flops={flops / 1e6:.2f}M ({err:+.1%})"


def _demo_formula():
    records = list(search.demo_store())
    front = pareto.select_frontier(records, 0.2)
    by_id = {r.id: r for r in records}
    return formula.fit_formula([by_id[i] for i in front.members])


def check_flops_identity():
    tf = _demo_formula()
    worst = 0.0
    for c in np.random.default_rng(0).uniform(1e-4, 1 - 1e-4, size=1000):
        co = tf.solve(float(c))
        worst = max(worst, abs(co.r**2 * co.d * co.w**2 - c))
    return worst <= 1e-12, f"max |r^2 d w^2 - c| = {worst:.2e} over 1000 solves"


def check_gpr():
    rng = np.random.default_rng(0)
    mean_err = var_err = interp_err = 0.0
    bound_ok = True
    for _ in range(100):
        m = int(rng.integers(2, 11))
        c = np.sort(rng.uniform(0.05, 1.0, size=m))
        y = rng.normal(size=m)
        ell, sf2 = float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.1, 2.0))
        noise = float(rng.uniform(1e-3, 0.1))
        model = gpr.fit(list(zip(c, y)), gpr.Kernel(ell, sf2), noise)
        for cs in rng.uniform(0, 1.2, size=10):
            want = explicit_posterior(c, y, cs, ell, sf2, noise)
            got = gpr.predict(model, cs)
            mean_err = max(mean_err, abs(got.mean - want[0]))
            var_err = max(var_err, abs(got.variance - want[1]))
        if m <= 8:
            spaced = np.linspace(0.1, 0.9, m)
            exact = gpr.fit(list(zip(spaced, y)), gpr.Kernel(0.15, 1.0), 0.0)
            interp_err = max(interp_err, np.max(np.abs(gpr.predict(exact, spaced).mean - y)))
    for _ in range(10):
        c = rng.uniform(0, 1, size=6)
        sf2, noise = float(rng.uniform(0.1, 2)), float(rng.uniform(0, 0.1))
        model = gpr.fit(list(zip(c, rng.normal(size=6))), gpr.Kernel(0.3, sf2), noise)
        var = gpr.predict(model, rng.uniform(-0.5, 1.5, size=100)).variance
        bound_ok &= bool(((var >= 0) & (var <= sf2 + noise + 1e-12)).all())
    ok = mean_err <= 1e-9 and var_err <= 1e-9 and interp_err <= 1e-8 and bound_ok
    return ok, (f"mean err {mean_err:.1e}, var err {var_err:.1e}, "
                f"interpolation err {interp_err:.1e}, variance bound on 1000 points: {bound_ok}")


def check_pareto():
    ok = True
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n = 1000 if seed == 0 else int(rng.integers(1, 300))
        if seed % 2:
            pts = list(zip(rng.integers(1, 20, n).tolist(), (rng.integers(0, 10, n) / 10).tolist()))
        else:
            pts = list(zip(rng.integers(1, 10**6, n).tolist(), rng.random(n).tolist()))
        recs = [ExperimentRecord(f"x{i}", arch.IDENTITY, f, 1, f / 1e6, a)
                for i, (f, a) in enumerate(pts)]
        ok &= pareto.front_ranks(recs).tolist() == brute_force_fronts(pts)
    selected = len(pareto.select_frontier(list(search.demo_store()), 0.2))
    ok &= selected == 20
    return ok, f"50 instances match brute force; demo frontier size {selected}"


def check_spearman():
    worst, ok = 0.0, True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 60))
        if seed % 2:
            xs, ys = rng.integers(0, 5, n).astype(float), rng.integers(0, 4, n).astype(float)
        else:
            xs = rng.normal(size=n)
            ys = xs + rng.normal(size=n)
        want, got = rank_then_pearson(xs.tolist(), ys.tolist()), pareto.spearman(xs, ys)
        if want is None or got is None:
            ok &= want is None and got is None
        else:
            worst = max(worst, abs(got - want))
    return ok and worst <= 1e-12, f"max deviation {worst:.1e} over 100 instances (half tied)"


def run_demo(seed=42):
    spec = arch.bundled_spec("efficientnet-b0")
    records = search.sample_band(spec, search.SamplingConfig(sample_count=100, seed=seed))
    records = oracle.label(records, oracle.OracleConfig(noise_sd=0.003, seed=seed))
    front = pareto.select_frontier(records, 0.2)
    by_id = {r.id: r for r in records}
    members = [by_id[i] for i in front.members]
    tf = formula.fit_formula(members)
    shrunk = [formula.solve_resolved(tf, spec, c) for c in BUDGETS]
    return records, front, shrunk


def check_end_to_end():
    start = time.perf_counter()
    _, _, shrunk = run_demo()
    elapsed = time.perf_counter() - start
    ok = len(shrunk) == 5 and elapsed < 60
    parts = []
    for c, s in zip(BUDGETS, shrunk):
        ok &= s.reachable and abs(s.ratio / c - 1) <= 0.05
        parts.append(f"c={c}: {s.ratio / c:.3f}")
    return ok, f"ratio/c {', '.join(parts)}; {elapsed:.2f}s"


def check_qualitative():
    records, front, _ = run_demo()
    stats = pareto.frontier_stats(front, records)
    r, w = stats["spearman_r"], stats["spearman_w"]
    ok = r is not None and w is not None and r > w
    return ok, f"spearman r={r:.3f} d={stats['spearman_d']:.3f} w={w:.3f}"


CRITERIA = [
    (1, "cost-model calibration", check_cost_calibration),
    (2, "B-1 reproduction", check_b_minus_one),
    (3, "inversed giant baseline", check_inversed_giant),
    (4, "GhostNet-A cost", check_ghostnet),
    (5, "FLOPs identity", check_flops_identity),
    (6, "GP closed form", check_gpr),
    (7, "Pareto oracle", check_pareto),
    (8, "Spearman oracle", check_spearman),
    (9, "end-to-end budget soundness", check_end_to_end),
    (10, "resolution beats width on the frontier", check_qualitative),
]


def report(number, name, check):
    ok, detail = check()
    print(f"{'PASS' if ok else 'FAIL'} criterion {number} ({name}): {detail}")
    return ok


@pytest.mark.parametrize("number, name, check", CRITERIA, ids=[f"c{n}" for n, _, _ in CRITERIA])
def test_criterion(number, name, check):
    assert report(number, name, check)


def main():
    results = [report(*item) for item in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
