"""Command-line pipeline: estimate, sample, oracle, ingest, pareto, fit, solve, report.

Exit codes: 0 success, 1 domain error (infeasible request, too little data,
numerical failure), 2 input error (unreadable or malformed files, bad
arguments).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import arch, formula, oracle, pareto, search
from .errors import (BudgetError, ConditioningError, IngestError, MissingAccuracyError,
                     SamplingError, SpecError)
from .gpr import GprModel

DEFAULT_BUDGETS = (0.9, 0.5, 0.25, 0.13, 0.06)
FRONTIER_FILE = "frontier.csv"
STATS_FILE = "frontier_stats.json"
MODEL_FILES = {"r": "model_r.json", "d": "model_d.json"}
SYNTHETIC_NOTE = "accuracies come from the synthetic oracle, not from training"


class InputError(Exception):
    """Bad or missing input file; maps to exit code 2."""


class DomainError(Exception):
    """Request cannot be satisfied; maps to exit code 1."""


def _spec(value: str) -> arch.ArchitectureSpec:
    path = Path(value)
    if path.exists():
        return arch.load_spec(path)
    if value in ("efficientnet-b0", "ghostnet-a"):
        return arch.bundled_spec(value)
    raise InputError(f"spec file not found: {value}")


def _load_store(path: Path, hint: str = "sample") -> search.RecordStore:
    if not path.exists():
        raise InputError(f"record store {path} not found; run `tinyformula {hint}` first")
    return search.RecordStore.load(path)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


def cmd_estimate(args) -> int:
    spec = _spec(args.spec)
    coeffs = arch.ScalingCoefficients(args.r, args.d, args.w)
    resolved = arch.resolve(spec, coeffs)
    report = arch.cost(resolved, spec)
    base = arch.estimate(spec, arch.IDENTITY)
    doc = {
        "spec": spec.name,
        "r": coeffs.r,
        "d": coeffs.d,
        "w": coeffs.w,
        "flops": report.flops,
        "params": report.params,
        "ratio": report.flops / base.flops,
        **resolved.to_dict(),
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_sample(args) -> int:
    spec = _spec(args.spec)
    cfg = search.SamplingConfig(
        sample_count=args.count,
        seed=args.seed,
        band_low=args.band_low,
        band_high=args.band_high,
        target_ratio=args.target,
        tolerance=args.tolerance,
    )
    records = (search.sample_band if args.target is None else search.sample_at_target)(spec, cfg)
    store = search.RecordStore.from_records(records)
    _write(Path(args.store), store.to_csv())
    print(f"wrote {len(store)} records to {args.store}")
    return 0


def cmd_oracle(args) -> int:
    store_path = Path(args.store)
    store = _load_store(store_path)
    cfg = oracle.OracleConfig(noise_sd=args.noise_sd, seed=args.seed)
    labeled = oracle.label(store, cfg, overwrite=args.overwrite)
    _write(store_path, search.RecordStore.from_records(labeled).to_csv())
    meta = {"synthetic": True, "note": SYNTHETIC_NOTE, "noise_sd": cfg.noise_sd, "seed": cfg.seed}
    _write(store_path.with_name(store_path.name + ".oracle.json"), json.dumps(meta, indent=2) + "\n")
    print(f"labeled {len(labeled)} records ({SYNTHETIC_NOTE})")
    return 0


def cmd_ingest(args) -> int:
    store_path = Path(args.store)
    store = search.RecordStore.load(store_path) if store_path.exists() else search.RecordStore()
    for name in args.csv:
        path = Path(name)
        if not path.exists():
            raise InputError(f"CSV file not found: {name}")
        with open(path, encoding="utf-8", newline="") as fh:
            try:
                store = search.ingest(store, fh)
            except IngestError as exc:
                raise IngestError(f"{name}: {exc}") from None
    _write(store_path, store.to_csv())
    print(f"store has {len(store)} records, {len(store.complete())} with accuracy")
    return 0


def _frontier(store: search.RecordStore, fraction: float):
    population = store.complete()
    if not population:
        raise DomainError("no records with accuracy; run `tinyformula oracle` or `ingest` first")
    return population, pareto.select_frontier(population, fraction)


def cmd_pareto(args) -> int:
    store = _load_store(Path(args.store))
    population, front = _frontier(store, args.fraction)
    out = Path(args.out)
    _write(out / FRONTIER_FILE, pareto.frontier_csv(front, population))
    _write(out / STATS_FILE, pareto.stats_json(pareto.frontier_stats(front, population)))
    print(f"selected {len(front)} of {len(population)} records into {out / FRONTIER_FILE}")
    return 0


def cmd_fit(args) -> int:
    out = Path(args.out)
    frontier_path = out / FRONTIER_FILE
    if not frontier_path.exists():
        raise InputError(f"{frontier_path} not found; run `tinyformula pareto` first")
    store = _load_store(Path(args.store))
    with open(frontier_path, encoding="utf-8", newline="") as fh:
        ids = pareto.read_frontier_ids(fh)
    missing = [i for i in ids if i not in store]
    if missing:
        raise InputError(f"frontier ids not in store: {', '.join(missing)}")
    members = [store[i] for i in ids]
    if len(members) < 4:
        raise DomainError(
            f"only {len(members)} frontier records; the regression needs at least 4 "
            "(sample more models or raise --fraction in `pareto`)"
        )
    tf = formula.fit_formula(members, mean=args.mean)
    for dim, model in (("r", tf.model_r), ("d", tf.model_d)):
        model.save(out / MODEL_FILES[dim])
        print(f"{dim}: lengthscale={model.kernel.lengthscale:.4g} "
              f"signal_variance={model.kernel.signal_variance:.4g} "
              f"noise_variance={model.noise_variance:.4g}")
    return 0


def load_formula(out: Path) -> formula.TinyFormula:
    models = {}
    for dim, name in MODEL_FILES.items():
        path = out / name
        if not path.exists():
            raise InputError(f"{path} not found; run `tinyformula fit` first")
        try:
            models[dim] = GprModel.load(path)
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise InputError(f"{path}: malformed model file ({exc})") from None
    return formula.TinyFormula(models["r"], models["d"])


def cmd_solve(args) -> int:
    spec = _spec(args.spec)
    out = Path(args.out)
    tf = load_formula(out)
    for c in args.c:
        result = formula.solve_resolved(tf, spec, c)
        path = out / f"arch_c{c:g}.json"
        _write(path, result.to_json(spec))
        flag = "" if result.reachable else "  (unreachable budget: closest achievable shown)"
        print(f"c={c:g}: r={result.coeffs.r:.3f} d={result.coeffs.d:.3f} "
              f"w={result.coeffs.w:.3f} flops={result.cost.flops} "
              f"ratio={result.ratio:.4f} -> {path}{flag}")
    return 0


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_report(args) -> int:
    store = _load_store(Path(args.store))
    if len(store) == 0:
        raise DomainError("record store is empty")
    population, front = _frontier(store, args.fraction)
    out = Path(args.out)
    members = set(front.members)
    _write(out / "acc_vs_flops.csv", _csv_text(
        ("id", "flops", "ratio", "accuracy", "frontier"),
        [(r.id, r.flops, repr(r.ratio), repr(r.accuracy), int(r.id in members))
         for r in population],
    ))
    by_id = {r.id: r for r in population}
    for dim in ("r", "d", "w"):
        _write(out / f"frontier_{dim}_vs_ratio.csv", _csv_text(
            ("id", "ratio", dim),
            [(i, repr(by_id[i].ratio), repr(getattr(by_id[i], dim))) for i in front.members],
        ))
    _write(out / "spearman.json", pareto.stats_json(pareto.frontier_stats(front, population)))
    print(f"report written to {out} ({len(population)} records, {len(front)} on frontier)")
    return 0


def _budgets(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS lets the flags appear before or after the subcommand
    common.add_argument("--spec", default=argparse.SUPPRESS,
                        help="architecture JSON path or bundled name (default efficientnet-b0)")
    common.add_argument("--store", default=argparse.SUPPRESS, help="record store CSV")
    common.add_argument("--seed", type=_seed, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")

    parser = argparse.ArgumentParser(prog="tinyformula", description=__doc__.splitlines()[0])
    parser.add_argument("--spec", default="efficientnet-b0")
    parser.add_argument("--store", default="records.csv")
    parser.add_argument("--seed", type=_seed, default=0)
    parser.add_argument("--out", default="out")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="cost a scaled architecture")
    p.add_argument("r", type=float)
    p.add_argument("d", type=float)
    p.add_argument("w", type=float)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sample", parents=[common], help="sample scalings into a record store")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--band-low", type=float, default=0.03)
    p.add_argument("--band-high", type=float, default=1.05)
    p.add_argument("--target", type=float, default=None,
                   help="sample at a fixed FLOPs ratio instead of a band")
    p.add_argument("--tolerance", type=float, default=0.03)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("oracle", parents=[common], help="label records with synthetic accuracy")
    p.add_argument("--noise-sd", type=float, default=0.003)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("ingest", parents=[common], help="merge accuracy CSVs into the store")
    p.add_argument("csv", nargs="+")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pareto", parents=[common], help="select the accuracy/FLOPs frontier")
    p.add_argument("--fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("fit", parents=[common], help="fit the r and d regressors on the frontier")
    p.add_argument("--mean", choices=("zero", "constant"), default="zero")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("solve", parents=[common], help="emit architectures for FLOPs budgets")
    p.add_argument("--c", type=_budgets, default=list(DEFAULT_BUDGETS),
                   help="comma-separated reduction factors (default 0.9,0.5,0.25,0.13,0.06)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("report", parents=[common], help="write plot-ready CSVs")
    p.add_argument("--fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SpecError, IngestError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, SamplingError, ConditioningError, BudgetError,
            MissingAccuracyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
