import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tinyformula import arch, formula, gpr, pareto
from tinyformula.errors import BudgetError
from tinyformula.formula import TinyFormula


@pytest.fixture(scope="module")
def fitted(demo_records):
    front = pareto.select_frontier(demo_records, 0.2)
    by_id = {r.id: r for r in demo_records}
    return formula.fit_formula([by_id[i] for i in front.members])


def flat_formula(r, d):
    pairs = [(0.2, 0), (0.5, 0), (0.8, 0)]
    zero = gpr.fit(pairs, gpr.Kernel(0.3, 1.0), 0.01, mean="constant")
    shift = lambda m, v: gpr.GprModel(  # noqa: E731
        m.inputs, m.targets + v, m.kernel, m.noise_variance, m.target, m.mean, m.jitter,
        m.factor, m.alpha, v)
    return TinyFormula(shift(zero, r), shift(zero, d))


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1 - 1e-6, exclude_max=True))
def test_flops_identity_holds(fitted, c):
    co = formula.solve(fitted, c)
    assert abs(co.r**2 * co.d * co.w**2 - c) <= 1e-12


def test_identity_over_many_random_budgets(fitted):
    for c in np.random.default_rng(0).uniform(1e-4, 0.9999, size=1000):
        co = fitted.solve(float(c))
        assert abs(co.r**2 * co.d * co.w**2 - c) <= 1e-12


@pytest.mark.parametrize("c", [0, 1, 1.5, -0.2, math.nan])
def test_budget_domain(fitted, c):
    with pytest.raises(BudgetError):
        formula.solve(fitted, c)


def test_clamping_keeps_coefficients_positive():
    tf = flat_formula(-3.0, 50.0)
    co = tf.solve(0.5)
    assert co.r == tf.r_bounds[0]
    assert co.d == tf.d_bounds[1]
    assert co.r**2 * co.d * co.w**2 == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("c", [0.9, 0.5, 0.25, 0.13, 0.06])
def test_solved_architectures_meet_budget(b0, fitted, c):
    result = formula.solve_resolved(fitted, b0, c)
    assert result.reachable
    assert abs(result.ratio / c - 1) <= 0.05
    assert result.cost == arch.estimate(b0, result.coeffs)


def test_shrunk_spec_reproduces_cost(b0, fitted):
    result = formula.solve_resolved(fitted, b0, 0.25)
    doc = result.to_dict(b0)
    spec = arch.ArchitectureSpec.from_dict(json.loads(json.dumps(doc)))
    assert arch.estimate(spec, arch.IDENTITY).flops == result.cost.flops
    assert doc["reachable"] is True and doc["c"] == 0.25


@pytest.mark.parametrize("phi, target", [(1, 201e6), (2, 98e6), (3, 51e6), (4, 24e6)])
def test_inversed_giant(b0, phi, target):
    result = formula.inversed_giant(b0, phi)
    assert result.reachable
    assert abs(result.cost.flops / target - 1) <= 0.05


def test_inversed_giant_phi_zero_is_baseline(b0):
    result = formula.inversed_giant(b0, 0)
    assert result.cost == arch.estimate(b0, arch.IDENTITY)


def test_unreachable_budget_reports_closest(b0):
    # far below what one block per stage at the smallest input can reach
    result = formula.meet_budget(b0, arch.ScalingCoefficients(0.15, 0.1, 0.1), 1e-5,
                                 width_steps=((0.03, 0.3),), resolution_span=0.1)
    assert not result.reachable
    assert result.ratio > 1e-5


def test_fit_needs_four_records(demo_records):
    with pytest.raises(ValueError):
        formula.fit_formula(demo_records[:3])
