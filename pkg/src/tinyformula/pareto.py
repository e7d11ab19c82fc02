"""Accuracy/FLOPs nondominated sorting, frontier selection and rank statistics."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import MissingAccuracyError
from .search import ExperimentRecord

FRONTIER_HEADER = ("id", "front", "r", "d", "w", "ratio", "accuracy")


def _objectives(records: Sequence[ExperimentRecord]) -> tuple[np.ndarray, np.ndarray]:
    missing = [r.id for r in records if r.accuracy is None]
    if missing:
        raise MissingAccuracyError(missing)
    acc = np.array([r.accuracy for r in records], dtype=float)
    flops = np.array([r.flops for r in records], dtype=float)
    return acc, flops


def dominates(a: ExperimentRecord, b: ExperimentRecord) -> bool:
    """True when ``a`` is at least as accurate and as cheap as ``b``, and better in one."""
    return (
        a.accuracy >= b.accuracy
        and a.flops <= b.flops
        and (a.accuracy > b.accuracy or a.flops < b.flops)
    )


def front_ranks(records: Sequence[ExperimentRecord]) -> np.ndarray:
    """1-based front index for every record, aligned with the input order."""
    acc, flops = _objectives(records)
    n = len(records)
    if n == 0:
        return np.zeros(0, dtype=int)
    no_worse = (acc[:, None] >= acc[None, :]) & (flops[:, None] <= flops[None, :])
    better = (acc[:, None] > acc[None, :]) | (flops[:, None] < flops[None, :])
    dom = no_worse & better  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    ranks = np.zeros(n, dtype=int)
    current = np.flatnonzero(count == 0)
    level = 1
    while current.size:
        ranks[current] = level
        count = count - dom[current].sum(axis=0)
        count[ranks > 0] = -1
        current = np.flatnonzero(count == 0)
        level += 1
    return ranks


def nondominated_sort(records: Sequence[ExperimentRecord]) -> list[list[ExperimentRecord]]:
    """Partition into fronts; front 0 is nondominated. Each front sorted by FLOPs then id."""
    ranks = front_ranks(records)
    fronts: list[list[ExperimentRecord]] = [[] for _ in range(int(ranks.max(initial=0)))]
    for rec, k in zip(records, ranks):
        fronts[k - 1].append(rec)
    for front in fronts:
        front.sort(key=lambda r: (r.flops, r.id))
    return fronts


def crowding_distance(front: Sequence[ExperimentRecord]) -> np.ndarray:
    """Crowding distance over within-front ranks of accuracy and FLOPs.

    Ranks instead of raw values keep the truncation invariant under any
    strictly increasing rescaling of either objective. Boundary points get
    infinite distance.
    """
    n = len(front)
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    acc, flops = _objectives(front)
    for values in (rankdata(acc, method="dense"), rankdata(flops, method="dense")):
        order = np.argsort(values, kind="stable")
        span = values[order[-1]] - values[order[0]]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span == 0:
            continue
        gaps = (values[order[2:]] - values[order[:-2]]) / span
        dist[order[1:-1]] += gaps
    return dist


@dataclass(frozen=True)
class ParetoFront:
    members: tuple[str, ...]
    fronts: dict[str, int]

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, rid) -> bool:
        return rid in self.members


def select_frontier(records: Sequence[ExperimentRecord], fraction: float = 0.20) -> ParetoFront:
    """Pick the best ``ceil(fraction * n)`` records by front rank, then crowding."""
    if not records:
        raise ValueError("cannot select a frontier from an empty population")
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    wanted = math.ceil(fraction * len(records) - 1e-9)
    fronts = nondominated_sort(records)
    ranks = {}
    chosen: list[ExperimentRecord] = []
    for level, front in enumerate(fronts, start=1):
        for rec in front:
            ranks[rec.id] = level
        room = wanted - len(chosen)
        if room <= 0:
            continue
        if len(front) <= room:
            chosen.extend(front)
            continue
        dist = crowding_distance(front)
        order = sorted(range(len(front)), key=lambda i: (-dist[i], front[i].flops, front[i].id))
        chosen.extend(sorted((front[i] for i in order[:room]), key=lambda r: (r.flops, r.id)))
    return ParetoFront(members=tuple(r.id for r in chosen), fronts=ranks)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Spearman rank correlation with average ranks for ties.

    Returns None when either rank vector has zero variance, where the
    coefficient is undefined.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("spearman needs at least two observations")
    rx = rankdata(x) - (x.size + 1) / 2
    ry = rankdata(y) - (y.size + 1) / 2
    sxx, syy = rx @ rx, ry @ ry
    if sxx == 0 or syy == 0:
        return None
    rho = (rx @ ry) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, rho)))


def frontier_stats(front: ParetoFront, records: Sequence[ExperimentRecord]) -> dict:
    """Spearman correlation of r, d and w against the FLOPs ratio over the front."""
    if not front.members:
        raise ValueError("empty frontier")
    by_id = {r.id: r for r in records}
    members = [by_id[i] for i in front.members]
    ratio = [m.ratio for m in members]
    return {
        f"spearman_{dim}": spearman([getattr(m, dim) for m in members], ratio)
        for dim in ("r", "d", "w")
    }


def frontier_csv(front: ParetoFront, records: Sequence[ExperimentRecord]) -> str:
    by_id = {r.id: r for r in records}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FRONTIER_HEADER)
    for rid in front.members:
        rec = by_id[rid]
        writer.writerow([rid, front.fronts[rid], repr(rec.r), repr(rec.d), repr(rec.w),
                         repr(rec.ratio), repr(rec.accuracy)])
    return buf.getvalue()


def read_frontier_ids(stream) -> list[str]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    return [row["id"] for row in csv.DictReader(stream)]


def stats_json(stats: dict) -> str:
    return json.dumps(stats, indent=2, sort_keys=True) + "\n"
