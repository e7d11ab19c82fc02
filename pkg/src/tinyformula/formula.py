"""Turn a FLOPs reduction factor into concrete (r, d, w) and a shrunken network.

Resolution and depth come from GP posterior means fitted on frontier
models; width is whatever the FLOPs budget leaves over,

    w = sqrt(c / (r**2 * d)),  0 < c < 1.

The module also provides the compound-scaling rule run backwards (depth
1.2**-phi, width 1.1**-phi, resolution 1.15**-phi, the EfficientNet
constants) as a baseline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

from . import arch
from .arch import ArchitectureSpec, CostReport, ResolvedArchitecture, ScalingCoefficients
from .errors import BudgetError
from .gpr import GprModel, Hyperparameters, fit, fit_hyperparameters
from .search import DEFAULT_RANGE, ExperimentRecord, tune_coefficient

COMPOUND_ALPHA = 1.2  # depth
COMPOUND_BETA = 1.1  # width
COMPOUND_GAMMA = 1.15  # resolution

SOLVE_TOLERANCE = 0.03
BUDGET_TOLERANCE = 0.05


@dataclass(frozen=True)
class TinyFormula:
    model_r: GprModel
    model_d: GprModel
    r_bounds: tuple[float, float] = DEFAULT_RANGE
    d_bounds: tuple[float, float] = DEFAULT_RANGE

    def __post_init__(self):
        for lo, hi in (self.r_bounds, self.d_bounds):
            if not 0 < lo <= hi:
                raise ValueError(f"clamp bounds must satisfy 0 < lo <= hi, got {(lo, hi)}")

    def solve(self, c: float) -> ScalingCoefficients:
        return solve(self, c)


def _check_budget(c: float) -> None:
    if not (isinstance(c, (int, float)) and 0 < c < 1):
        raise BudgetError(f"reduction factor must satisfy 0 < c < 1, got {c!r}")


def _clamp(x: float, bounds: tuple[float, float]) -> float:
    return min(max(x, bounds[0]), bounds[1])


def solve(formula: TinyFormula, c: float) -> ScalingCoefficients:
    """r and d from the posterior means (clamped), w from the FLOPs constraint."""
    _check_budget(c)
    r = _clamp(formula.model_r.predict(c).mean, formula.r_bounds)
    d = _clamp(formula.model_d.predict(c).mean, formula.d_bounds)
    return ScalingCoefficients(r, d, math.sqrt(c / (r * r * d)))


def fit_formula(frontier: Sequence[ExperimentRecord], mean: str = "zero",
                r_bounds=DEFAULT_RANGE, d_bounds=DEFAULT_RANGE) -> TinyFormula:
    """Fit both regressors on frontier records, choosing hyperparameters by grid search."""
    if len(frontier) < 4:
        raise ValueError(f"need at least 4 frontier records to fit, got {len(frontier)}")
    models = {}
    for dim in ("r", "d"):
        pairs = [(rec.ratio, getattr(rec, dim)) for rec in frontier]
        hp: Hyperparameters = fit_hyperparameters(pairs, mean=mean)
        models[dim] = fit(pairs, hp.kernel, hp.noise_variance, target=dim, mean=mean)
    return TinyFormula(models["r"], models["d"], tuple(r_bounds), tuple(d_bounds))


@dataclass(frozen=True)
class ShrunkArchitecture:
    """Outcome of fitting a concrete network to a FLOPs budget."""

    target: float
    coeffs: ScalingCoefficients
    resolved: ResolvedArchitecture
    cost: CostReport
    ratio: float
    reachable: bool = True

    def to_dict(self, spec: ArchitectureSpec) -> dict:
        concrete = resolved_spec(spec, self.resolved)
        doc = {
            "c": self.target,
            "r": self.coeffs.r,
            "d": self.coeffs.d,
            "w": self.coeffs.w,
            "resolution": self.resolved.resolution,
            "flops": self.cost.flops,
            "params": self.cost.params,
            "ratio": self.ratio,
            "reachable": self.reachable,
        }
        doc.update({k: v for k, v in concrete.to_dict().items() if k != "base_resolution"})
        doc["base_resolution"] = self.resolved.resolution
        return doc

    def to_json(self, spec: ArchitectureSpec) -> str:
        return json.dumps(self.to_dict(spec), indent=2) + "\n"


def resolved_spec(spec: ArchitectureSpec, resolved: ResolvedArchitecture) -> ArchitectureSpec:
    """An unscaled spec whose identity resolution reproduces ``resolved`` exactly."""
    stages = tuple(
        arch.StageSpec(s.op, s.kernel_size, s.stride, s.expansion_ratio, ch, s.se_ratio, reps)
        for s, ch, reps in zip(spec.stages, resolved.channels, resolved.repeats)
    )
    return ArchitectureSpec(
        name=f"{spec.name}-r{resolved.resolution}",
        base_resolution=resolved.resolution,
        stem=arch.ConvLayer(spec.stem.kernel_size, spec.stem.stride, resolved.stem_channels),
        stages=stages,
        head=arch.HeadSpec(resolved.head_channels, spec.head.classes, spec.head.pool,
                           resolved.head_hidden),
        channel_divisor=spec.channel_divisor,
    )


def _closest(spec, coeffs, axis, target, base) -> ScalingCoefficients:
    """Value of one coefficient (within a factor 1000) giving the ratio nearest ``target``."""
    x0 = getattr(coeffs, axis)
    lo, hi = x0 * 1e-3, x0 * 1e3

    def at(x):
        return replace(coeffs, **{axis: x})

    def ratio(x):
        return arch.estimate(spec, at(x)).flops / base

    if ratio(lo) >= target:
        return at(lo)
    if ratio(hi) <= target:
        return at(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ratio(mid) < target:
            lo = mid
        else:
            hi = mid
    return at(lo) if abs(ratio(lo) - target) <= abs(ratio(hi) - target) else at(hi)


def _first_fit(spec, coeffs, target, axis, steps, base) -> ScalingCoefficients | None:
    for tol, span in steps:
        found = tune_coefficient(spec, coeffs, target, axis, tol, span, baseline_flops=base)
        if found is not None:
            return found
    return None


def _resolution_ladder(spec, coeffs, span, r_bounds):
    """Integer input sizes ordered by distance from the one ``coeffs`` resolves to."""
    base_res = spec.base_resolution
    start = arch.resolve(spec, coeffs).resolution
    lo = max(arch.MIN_RESOLUTION, math.ceil(start * (1 - span)))
    hi = math.floor(start * (1 + span))
    if r_bounds is not None:
        lo = max(lo, math.ceil(r_bounds[0] * base_res))
        hi = min(hi, math.floor(r_bounds[1] * base_res))
    sizes = sorted(range(lo, hi + 1), key=lambda s: (abs(s - start), s))
    return [s for s in sizes if s != start]


def meet_budget(spec: ArchitectureSpec, coeffs: ScalingCoefficients, target: float,
                width_steps=((SOLVE_TOLERANCE, 0.3), (BUDGET_TOLERANCE, 0.9)),
                resolution_span: float = 0.3,
                r_bounds: tuple[float, float] | None = None) -> ShrunkArchitecture:
    """Discretize ``coeffs`` onto ``spec`` and nudge it into the FLOPs budget.

    Width is retuned first, over each ``(tolerance, span)`` window in turn.
    Channel rounding and stride-2 ceil division can make the ratio jump
    straight over the band; in that case the input size is stepped one pixel
    at a time away from the starting size (up to ``resolution_span``), and
    width is retuned at each size. If nothing fits, the network whose ratio
    is closest to ``target`` is returned with ``reachable=False``.
    """
    base = arch.estimate(spec, arch.IDENTITY).flops
    found = _first_fit(spec, coeffs, target, "w", width_steps, base)
    if found is None:
        for size in _resolution_ladder(spec, coeffs, resolution_span, r_bounds):
            moved = replace(coeffs, r=size / spec.base_resolution)
            found = _first_fit(spec, moved, target, "w", width_steps, base)
            if found is not None:
                break
    reachable = found is not None
    if found is None:
        found = _closest(spec, coeffs, "w", target, base)
    resolved = arch.resolve(spec, found)
    report = arch.cost(resolved, spec)
    return ShrunkArchitecture(target, found, resolved, report, report.flops / base, reachable)


def solve_resolved(formula: TinyFormula, spec: ArchitectureSpec, c: float) -> ShrunkArchitecture:
    """Solve for (r, d, w) at budget ``c`` and discretize onto ``spec``."""
    return meet_budget(spec, solve(formula, c), c, r_bounds=formula.r_bounds)


def inversed_giant(spec: ArchitectureSpec, phi: float, tolerance: float = SOLVE_TOLERANCE,
                   alpha: float = COMPOUND_ALPHA, beta: float = COMPOUND_BETA,
                   gamma: float = COMPOUND_GAMMA) -> ShrunkArchitecture:
    """Compound scaling run backwards to 2**-phi of the baseline FLOPs.

    Starts from d = alpha**-phi, w = beta**-phi, r = gamma**-phi and then
    moves w (or, failing that, r) by the smallest amount that puts the
    realized FLOPs within ``tolerance`` of the target.
    """
    if not (phi >= 0 and math.isfinite(phi)):
        raise ValueError(f"phi must be finite and >= 0, got {phi}")
    start = ScalingCoefficients(gamma**-phi, alpha**-phi, beta**-phi)
    return meet_budget(spec, start, 2.0**-phi, width_steps=((tolerance, 0.6),))
