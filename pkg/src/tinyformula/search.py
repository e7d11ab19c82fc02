"""Random (r, d, w) sampling under FLOPs constraints and the record store.

Randomness comes from numpy's PCG64 bit generator. Record ``i`` of a run
seeded with ``seed`` draws from its own stream keyed by ``SeedSequence((seed,
i))``, so a given (seed, index) pair always yields the same record no matter
how many records are requested or in which order they are produced.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import arch
from .arch import ArchitectureSpec, ScalingCoefficients
from .errors import IngestError, SamplingError

CSV_HEADER = ("id", "r", "d", "w", "flops", "params", "ratio", "accuracy")
DEFAULT_RANGE = (0.35, 2.8)
MAX_DRAWS = 1_000_000


@dataclass(frozen=True)
class SamplingConfig:
    sample_count: int = 100
    seed: int = 0
    r_range: tuple[float, float] = DEFAULT_RANGE
    d_range: tuple[float, float] = DEFAULT_RANGE
    w_range: tuple[float, float] = DEFAULT_RANGE
    band_low: float = 0.03
    band_high: float = 1.05
    target_ratio: float | None = None
    tolerance: float = 0.03
    max_draws: int = MAX_DRAWS
    width_span: float = 0.3

    def __post_init__(self):
        if not 0 < self.band_low < self.band_high:
            raise ValueError(f"need 0 < band_low < band_high, got {self.band_low}, {self.band_high}")
        if not 0 < self.tolerance <= 0.1:
            raise ValueError(f"tolerance must lie in (0, 0.1], got {self.tolerance}")
        for name in ("r_range", "d_range", "w_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        if self.sample_count < 0:
            raise ValueError("sample_count must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.target_ratio is not None and not self.target_ratio > 0:
            raise ValueError("target_ratio must be positive")
        if not 0 < self.width_span < 1:
            raise ValueError("width_span must lie in (0, 1)")


@dataclass(frozen=True)
class ExperimentRecord:
    id: str
    coeffs: ScalingCoefficients
    flops: int
    params: int
    ratio: float
    accuracy: float | None = None

    def __post_init__(self):
        if self.accuracy is not None and not 0 <= self.accuracy <= 1:
            raise ValueError(f"record {self.id}: accuracy {self.accuracy} outside [0, 1]")

    @property
    def r(self) -> float:
        return self.coeffs.r

    @property
    def d(self) -> float:
        return self.coeffs.d

    @property
    def w(self) -> float:
        return self.coeffs.w

    def row(self) -> list[str]:
        acc = "" if self.accuracy is None else repr(float(self.accuracy))
        return [
            self.id,
            repr(float(self.r)),
            repr(float(self.d)),
            repr(float(self.w)),
            str(self.flops),
            str(self.params),
            repr(float(self.ratio)),
            acc,
        ]


def make_record(spec: ArchitectureSpec, rid: str, coeffs: ScalingCoefficients,
                baseline_flops: int | None = None) -> ExperimentRecord:
    if baseline_flops is None:
        baseline_flops = arch.estimate(spec, arch.IDENTITY).flops
    report = arch.estimate(spec, coeffs)
    return ExperimentRecord(rid, coeffs, report.flops, report.params,
                            report.flops / baseline_flops)


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))


def _record_id(seed: int, index: int) -> str:
    return f"s{seed}-{index:04d}"


def _draw(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return float(rng.uniform(lo, hi)) if hi > lo else float(lo)


def sample_band(spec: ArchitectureSpec, cfg: SamplingConfig) -> list[ExperimentRecord]:
    """Draw ``cfg.sample_count`` scalings whose FLOPs ratio lies in the band.

    Coefficients are uniform over their ranges; draws outside
    ``[band_low, band_high]`` are rejected. Raises ``SamplingError`` once
    ``cfg.max_draws`` draws have been spent, or immediately when the band is
    provably out of reach of the coefficient box.
    """
    base = arch.estimate(spec, arch.IDENTITY).flops
    lo_box = ScalingCoefficients(cfg.r_range[0], cfg.d_range[0], cfg.w_range[0])
    hi_box = ScalingCoefficients(cfg.r_range[1], cfg.d_range[1], cfg.w_range[1])
    # cost is monotone in every coefficient, so the box corners bound all draws
    box_min = arch.estimate(spec, lo_box).flops / base
    box_max = arch.estimate(spec, hi_box).flops / base
    if box_max < cfg.band_low or box_min > cfg.band_high:
        raise SamplingError(
            f"band [{cfg.band_low}, {cfg.band_high}] unreachable: coefficient box "
            f"spans ratios [{box_min:.4g}, {box_max:.4g}]"
        )

    records = []
    draws = 0
    for i in range(cfg.sample_count):
        rng = _stream(cfg.seed, i)
        while True:
            if draws >= cfg.max_draws:
                raise SamplingError(
                    f"retry budget of {cfg.max_draws} draws exhausted after "
                    f"{len(records)}/{cfg.sample_count} accepted samples"
                )
            draws += 1
            coeffs = ScalingCoefficients(
                _draw(rng, cfg.r_range), _draw(rng, cfg.d_range), _draw(rng, cfg.w_range)
            )
            rec = make_record(spec, _record_id(cfg.seed, i), coeffs, base)
            if cfg.band_low <= rec.ratio <= cfg.band_high:
                records.append(rec)
                break
    return records


def tune_coefficient(spec: ArchitectureSpec, coeffs: ScalingCoefficients, target: float,
                     axis: str = "w", tolerance: float = 0.03, span: float = 0.3,
                     iterations: int = 40,
                     baseline_flops: int | None = None) -> ScalingCoefficients | None:
    """Smallest change to one coefficient that brings the FLOPs ratio within tolerance.

    The realized ratio is monotone non-decreasing and piecewise constant in
    each coefficient, so the search bisects for the band edge nearest the
    starting value inside ``[x0 * (1 - span), x0 * (1 + span)]``. Returns None
    when no value in that window lands inside ``target * (1 +- tolerance)``.
    """
    if axis not in ("r", "d", "w"):
        raise ValueError(f"axis must be one of r, d, w, got {axis!r}")
    if baseline_flops is None:
        baseline_flops = arch.estimate(spec, arch.IDENTITY).flops
    lower, upper = target * (1 - tolerance), target * (1 + tolerance)
    x0 = getattr(coeffs, axis)

    def at(x):
        return replace(coeffs, **{axis: x})

    def ratio(x):
        return arch.estimate(spec, at(x)).flops / baseline_flops

    q0 = ratio(x0)
    if lower <= q0 <= upper:
        return coeffs
    if q0 > upper:
        # `ok` keeps ratio <= upper, `bad` violates it
        ok, bad = x0 * (1 - span), x0
        if ratio(ok) > upper:
            return None
        in_band = lambda q: q <= upper  # noqa: E731
    else:
        ok, bad = x0 * (1 + span), x0
        if ratio(ok) < lower:
            return None
        in_band = lambda q: q >= lower  # noqa: E731
    for _ in range(iterations):
        mid = 0.5 * (ok + bad)
        if in_band(ratio(mid)):
            ok = mid
        else:
            bad = mid
    q = ratio(ok)
    return at(ok) if lower <= q <= upper else None


def tune_width(spec: ArchitectureSpec, r: float, d: float, w0: float, target: float,
               tolerance: float = 0.03, span: float = 0.3, iterations: int = 40,
               baseline_flops: int | None = None) -> float | None:
    """Width nearest ``w0`` whose realized ratio is within tolerance of ``target``."""
    out = tune_coefficient(spec, ScalingCoefficients(r, d, w0), target, "w", tolerance,
                           span, iterations, baseline_flops)
    return None if out is None else out.w


def sample_at_target(spec: ArchitectureSpec, cfg: SamplingConfig) -> list[ExperimentRecord]:
    """Sample (r, d) uniformly and solve w so the FLOPs ratio hits ``target_ratio``."""
    t = cfg.target_ratio
    if t is None:
        raise ValueError("sample_at_target needs cfg.target_ratio")
    base = arch.estimate(spec, arch.IDENTITY).flops
    w_lo, w_hi = cfg.w_range
    records = []
    draws = 0
    for i in range(cfg.sample_count):
        rng = _stream(cfg.seed, i)
        while True:
            if draws >= cfg.max_draws:
                raise SamplingError(
                    f"retry budget of {cfg.max_draws} draws exhausted after "
                    f"{len(records)}/{cfg.sample_count} accepted samples"
                )
            draws += 1
            r = _draw(rng, cfg.r_range)
            d = _draw(rng, cfg.d_range)
            w0 = math.sqrt(t / (d * r * r))
            w = tune_width(spec, r, d, w0, t, cfg.tolerance, cfg.width_span,
                           baseline_flops=base)
            if w is None or not w_lo <= w <= w_hi:
                continue
            records.append(make_record(spec, _record_id(cfg.seed, i),
                                       ScalingCoefficients(r, d, w), base))
            break
    return records


@dataclass
class RecordStore:
    """Ordered collection of experiment records keyed by id."""

    records: dict[str, ExperimentRecord] = field(default_factory=dict)

    @classmethod
    def from_records(cls, records: Iterable[ExperimentRecord]) -> "RecordStore":
        store = cls()
        for rec in records:
            if rec.id in store.records:
                raise IngestError(f"duplicate record id {rec.id!r}")
            store.records[rec.id] = rec
        return store

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ExperimentRecord]:
        return iter(self.records.values())

    def __getitem__(self, rid: str) -> ExperimentRecord:
        return self.records[rid]

    def __contains__(self, rid) -> bool:
        return rid in self.records

    def complete(self) -> list[ExperimentRecord]:
        """Records that already carry an accuracy."""
        return [r for r in self if r.accuracy is not None]

    def pending(self) -> list[ExperimentRecord]:
        return [r for r in self if r.accuracy is None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in self:
            writer.writerow(rec.row())
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="")

    @classmethod
    def load(cls, path) -> "RecordStore":
        with open(path, encoding="utf-8", newline="") as fh:
            return ingest(cls(), fh)


def _parse_float(value: str, column: str, lineno: int) -> float:
    try:
        out = float(value)
    except ValueError:
        raise IngestError(f"line {lineno}: column {column!r} is not a number: {value!r}") from None
    if not math.isfinite(out):
        raise IngestError(f"line {lineno}: column {column!r} is not finite")
    return out


def _parse_int(value: str, column: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise IngestError(f"line {lineno}: column {column!r} is not an integer: {value!r}") from None


def ingest(store: RecordStore, stream) -> RecordStore:
    """Merge CSV rows from ``stream`` into a copy of ``store``.

    A row either names an existing id and supplies its accuracy, or defines a
    full record (all of ``CSV_HEADER``). Rows for an existing id whose
    coefficients disagree with the stored ones are rejected.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    out = RecordStore(dict(store.records))
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        return out
    fields = [f.strip() for f in reader.fieldnames]
    reader.fieldnames = fields
    if "id" not in fields:
        raise IngestError("line 1: header has no 'id' column")
    unknown = set(fields) - set(CSV_HEADER)
    if unknown:
        raise IngestError(f"line 1: unknown columns {sorted(unknown)}")
    full = set(CSV_HEADER) <= set(fields)

    for row in reader:
        lineno = reader.line_num
        if None in row or any(v is None for v in row.values()):
            raise IngestError(f"line {lineno}: wrong number of fields")
        rid = row["id"].strip()
        if not rid:
            raise IngestError(f"line {lineno}: empty id")
        acc_text = (row.get("accuracy") or "").strip()
        accuracy = None
        if acc_text:
            accuracy = _parse_float(acc_text, "accuracy", lineno)
            if not 0 <= accuracy <= 1:
                raise IngestError(f"line {lineno}: accuracy {accuracy} outside [0, 1]")

        coeffs = None
        if any((row.get(c) or "").strip() for c in ("r", "d", "w")):
            try:
                coeffs = ScalingCoefficients(
                    *(_parse_float(row.get(c, ""), c, lineno) for c in ("r", "d", "w"))
                )
            except ValueError as exc:
                if isinstance(exc, IngestError):
                    raise
                raise IngestError(f"line {lineno}: {exc}") from None

        existing = out.records.get(rid)
        if existing is not None:
            if coeffs is not None and coeffs != existing.coeffs:
                raise IngestError(f"record {rid!r}: conflicting coefficients on line {lineno}")
            if accuracy is not None:
                out.records[rid] = replace(existing, accuracy=accuracy)
            continue
        if not full or coeffs is None:
            raise IngestError(f"line {lineno}: unknown id {rid!r} without a full record definition")
        out.records[rid] = ExperimentRecord(
            id=rid,
            coeffs=coeffs,
            flops=_parse_int(row["flops"], "flops", lineno),
            params=_parse_int(row["params"], "params", lineno),
            ratio=_parse_float(row["ratio"], "ratio", lineno),
            accuracy=accuracy,
        )
    return out


def demo_store() -> RecordStore:
    """The bundled demo store: 100 band samples of EfficientNet-B0 (seed 42)
    labeled by the synthetic oracle (seed 42, noise 0.003)."""
    text = resources.files("tinyformula").joinpath("data").joinpath("demo_store.csv")
    return ingest(RecordStore(), text.read_text("utf-8"))
