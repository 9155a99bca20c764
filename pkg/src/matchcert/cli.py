"""matchcert command line interface.

Subcommands: gen (synthesize a correlated pair), match (run a matcher),
split (train/validation subsampling), validate batch / validate query
(emit certificate reports as JSON), coverage (Monte Carlo failure-rate
table as CSV + JSON), report (pretty-print a saved report).

Exit codes: 0 success, 1 error, 2 success but at least one bound was
mathematically vacuous (reported as 0 with a flag).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .batch import (
    BatchValidationInput,
    complete_batch_precision,
    complete_batch_recall,
    holdout_batch_precision,
    holdout_batch_recall,
)
from .bounds import BoundMethod, DeltaBudget
from .coverage import ExperimentConfig, run_coverage
from .errors import MatchcertError
from .graphs import (
    MatchRole,
    NetworkPair,
    load_matches,
    load_network,
    save_matches,
    save_network,
)
from .matchers import MatcherConfig, build_matcher, run_batch
from .query import (
    QueryValidationInput,
    complete_query_precision,
    complete_query_recall,
    compute_node_stats,
    error_rate_bounds,
    holdout_query_bounds,
)
from .reports import combine_reports
from .sampling import SplitSpec, split_train_validation
from .synth import GeneratorConfig, generate_pair

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VACUOUS = 2


def _read_pairs(path: str) -> list[tuple[str, str]]:
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), 1):
        if not raw or raw.isspace() or raw.startswith("#"):
            continue
        fields = raw.split("\t")
        if len(fields) != 2:
            raise MatchcertError(f"malformed-line: {path}:{lineno}: {raw!r}")
        rows.append((fields[0], fields[1]))
    return rows


def _read_items(path: str) -> list[str]:
    out = []
    for raw in Path(path).read_text(encoding="utf-8").split("\n"):
        if not raw or raw.isspace() or raw.startswith("#"):
            continue
        out.append(raw.strip())
    return out


def _load_pair(args) -> NetworkPair:
    x_net = load_network(args.x)
    if getattr(args, "self_match", False):
        return NetworkPair(x_net, x_net, self_match_mode=True)
    if not args.y:
        raise MatchcertError("missing-network: supply --y or --self-match")
    return NetworkPair(x_net, load_network(args.y))


def _parse_deltas(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError as e:
        raise MatchcertError(f"invalid-confidence: cannot parse {text!r}") from e


def _budget_for(deltas: list[float], arity: int) -> DeltaBudget:
    """Exact-arity budgets pass through; a single delta splits equally."""
    if len(deltas) == arity:
        return DeltaBudget.of(*deltas)
    if len(deltas) == 1:
        return DeltaBudget.equal_split(deltas[0], arity)
    raise MatchcertError(
        f"budget-arity: need {arity} delta parts (or one to split), got {len(deltas)}"
    )


def _write_report(args, reports, node_stats=None) -> int:
    doc = combine_reports(reports).to_json_dict()
    doc["invocation"] = {
        key: value
        for key, value in sorted(vars(args).items())
        if key != "func" and value is not None
    }
    if node_stats is not None:
        doc["node_stats"] = [s.to_json_dict() for s in node_stats]
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    vacuous = any(r.vacuous for r in reports)
    for r in reports:
        value = r.lower_bound if r.lower_bound is not None else r.upper_bound
        kind = ">=" if r.lower_bound is not None else "<="
        print(
            f"{r.bound_id}: {r.quantity} {kind} {value:.6f} "
            f"(confidence {r.confidence:.4f}{', VACUOUS' if r.vacuous else ''})",
            file=sys.stderr,
        )
    return EXIT_VACUOUS if vacuous else EXIT_OK


def cmd_gen(args) -> int:
    cfg = GeneratorConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        cfg = GeneratorConfig.from_json_dict(
            {**cfg.to_json_dict(), "rng_seed": args.seed}
        )
    pair, truth = generate_pair(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_network(pair.x_net, out / "x.tsv")
    save_network(pair.y_net, out / "y.tsv")
    save_matches(truth, out / "matches.tsv")
    print(
        f"wrote {out}/x.tsv ({len(pair.x_net.nodes)} nodes, "
        f"{len(pair.x_net.edges)} edges), {out}/y.tsv "
        f"({len(pair.y_net.nodes)} nodes, {len(pair.y_net.edges)} edges), "
        f"{out}/matches.tsv ({len(truth.pairs)} pairs)"
    )
    return EXIT_OK


def cmd_match(args) -> int:
    pair = _load_pair(args)
    config = MatcherConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    seeds = _read_pairs(args.seeds) if args.seeds else []
    handle = build_matcher(config, training_matches=seeds,
                           trained_on=("cli-seeds",) if seeds else ())
    result = run_batch(handle, pair)
    save_matches(result, args.out)
    print(f"wrote {args.out} ({len(result.pairs)} identified matches)")
    return EXIT_OK


def cmd_split(args) -> int:
    items = _read_items(args.items)
    spec = SplitSpec(
        population_n=args.population_n,
        labeled=tuple(items),
        t=args.train_size,
        s=args.validation_size,
        rng_seed=args.seed if args.seed is not None else 0,
    )
    train, validation = split_train_validation(spec)
    Path(args.train_out).write_text(
        "".join(f"{item}\n" for item in train), encoding="utf-8"
    )
    Path(args.validation_out).write_text(
        "".join(f"{item}\n" for item in validation), encoding="utf-8"
    )
    overlap = len(set(train) & set(validation))
    print(
        f"wrote {args.train_out} ({len(train)}) and {args.validation_out} "
        f"({len(validation)}), overlap {overlap}"
    )
    return EXIT_OK


def _actual_map(pair: NetworkPair, actual_path: str, s_x: list[str]):
    actual_pairs = load_matches(actual_path, pair, MatchRole.ACTUAL)
    per_x: dict[str, set[str]] = {x: set() for x in s_x}
    for x, y in actual_pairs.pairs:
        per_x.setdefault(x, set()).add(y)
    return {x: frozenset(ys) for x, ys in per_x.items()}


def cmd_validate_batch(args) -> int:
    pair = _load_pair(args)
    m_hat_h = load_matches(args.m_hat_holdout, pair, MatchRole.IDENTIFIED_HOLDOUT)
    m_hat_c = (
        load_matches(args.m_hat_complete, pair, MatchRole.IDENTIFIED)
        if args.m_hat_complete
        else None
    )
    s_m = tuple(_read_pairs(args.s_m))
    s_x = _read_items(args.s_x)
    deltas = _parse_deltas(args.delta)
    method = BoundMethod.parse(args.method)

    def inp(budget, with_complete=False):
        return BatchValidationInput(
            pair=pair,
            m_hat_holdout=m_hat_h,
            s_m=s_m,
            s_x=tuple(s_x),
            actual_for=_actual_map(pair, args.actual, s_x),
            method=method,
            budget=budget,
            k_y=args.k_y,
            m_hat_complete=m_hat_c if with_complete else None,
            m_size=args.m_size,
            m_size_upper=args.m_size_upper,
        )

    reports = [
        holdout_batch_recall(inp(_budget_for(deltas, 1))),
        holdout_batch_precision(inp(_budget_for(deltas, 2))),
    ]
    if m_hat_c is not None:
        reports.append(
            complete_batch_recall(inp(_budget_for(deltas, 2), with_complete=True))
        )
        reports.append(
            complete_batch_precision(inp(_budget_for(deltas, 2), with_complete=True))
        )
    return _write_report(args, reports)


def cmd_validate_query(args) -> int:
    pair = _load_pair(args)
    holdout_cfg = MatcherConfig.from_json(
        Path(args.matcher).read_text(encoding="utf-8")
    )
    seeds = _read_pairs(args.seeds) if args.seeds else []
    holdout = build_matcher(holdout_cfg, training_matches=seeds,
                            trained_on=("cli-seeds",) if seeds else ())
    complete = None
    if args.matcher_complete or args.seeds_complete:
        complete_cfg = (
            MatcherConfig.from_json(
                Path(args.matcher_complete).read_text(encoding="utf-8")
            )
            if args.matcher_complete
            else holdout_cfg
        )
        complete_seeds = (
            _read_pairs(args.seeds_complete) if args.seeds_complete else seeds
        )
        complete = build_matcher(
            complete_cfg, training_matches=complete_seeds, holdout=False
        )
    s_x = _read_items(args.s_x)
    s_x_prime = _read_items(args.s_x_prime) if args.s_x_prime else []
    deltas = _parse_deltas(args.delta)
    method = BoundMethod.parse(args.method)

    def inp(budget, with_complete=False):
        return QueryValidationInput(
            pair=pair,
            holdout=holdout,
            s_x=tuple(s_x),
            actual_for=_actual_map(pair, args.actual, s_x),
            method=method,
            budget=budget,
            complete=complete if with_complete else None,
            s_x_prime=tuple(s_x_prime),
            k_cap=args.k_cap,
        )

    precision, recall = holdout_query_bounds(inp(_budget_for(deltas, 1)))
    reports = [
        precision,
        recall,
        error_rate_bounds(inp(_budget_for(deltas, 1))),
    ]
    if complete is not None:
        reports.append(complete_query_recall(inp(_budget_for(deltas, 3), True)))
        reports.append(complete_query_precision(inp(_budget_for(deltas, 4), True)))
        reports.append(error_rate_bounds(inp(_budget_for(deltas, 2), True)))
    node_stats = None
    if args.emit_node_stats:
        node_stats = compute_node_stats(
            inp(_budget_for(deltas, 1), complete is not None)
        )
    return _write_report(args, reports, node_stats)


def cmd_coverage(args) -> int:
    cfg = ExperimentConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if overrides:
        cfg = ExperimentConfig.from_json_dict({**cfg.to_json_dict(), **overrides})
    table = run_coverage(cfg)
    csv_path = Path(args.out_prefix + ".csv")
    json_path = Path(args.out_prefix + ".json")
    csv_path.write_text(table.to_csv(), encoding="utf-8")
    json_path.write_text(table.to_json() + "\n", encoding="utf-8")
    worst = max(r.failure_rate for r in table.rows.values())
    print(f"wrote {csv_path} and {json_path}; worst failure rate {worst:.4f}")
    return EXIT_OK


def cmd_report(args) -> int:
    doc = json.loads(Path(getattr(args, "in")).read_text(encoding="utf-8"))
    if "rows" in doc:  # coverage table
        print(f"coverage table ({len(doc['rows'])} rows)")
        for row in doc["rows"]:
            print(
                f"  {row['bound']} [{row['method']}] deltas={row['deltas']} "
                f"trials={row['trials']} mean_bound={row['mean_bound']:.4f} "
                f"mean_truth={row['mean_truth']:.4f} "
                f"failure_rate={row['failure_rate']:.4f}"
            )
        return EXIT_OK
    print(f"joint confidence: {doc['joint_confidence']:.6f}")
    for rep in doc["reports"]:
        value = rep["lower_bound"] if rep["lower_bound"] is not None else rep["upper_bound"]
        kind = ">=" if rep["lower_bound"] is not None else "<="
        flags = f" flags={','.join(rep['flags'])}" if rep["flags"] else ""
        print(
            f"  {rep['bound_id']}: {rep['quantity']} {kind} {value:.6f} "
            f"at confidence {rep['confidence']:.4f}{flags}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchcert",
        description="PAC certification of precision and recall for "
        "network reconciliation algorithms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a correlated network pair")
    p.add_argument("--config", required=True, help="GeneratorConfig JSON file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("match", help="run a matcher in batch mode")
    p.add_argument("--x", required=True)
    p.add_argument("--y")
    p.add_argument("--self-match", action="store_true")
    p.add_argument("--config", required=True, help="MatcherConfig JSON file")
    p.add_argument("--seeds", help="training seed pairs TSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("split", help="train/validation subsampling")
    p.add_argument("--items", required=True, help="one item id per line")
    p.add_argument("--population-n", type=int, required=True)
    p.add_argument("--train-size", type=int, required=True)
    p.add_argument("--validation-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--train-out", required=True)
    p.add_argument("--validation-out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("validate", help="compute certificates")
    vsub = p.add_subparsers(dest="validate_mode", required=True)

    b = vsub.add_parser("batch", help="batch-matcher certificates")
    b.add_argument("--x", required=True)
    b.add_argument("--y")
    b.add_argument("--self-match", action="store_true")
    b.add_argument("--m-hat-holdout", required=True)
    b.add_argument("--m-hat-complete")
    b.add_argument("--s-m", required=True, help="verified match sample TSV")
    b.add_argument("--s-x", required=True, help="node sample, one id per line")
    b.add_argument("--actual", required=True, help="verified matches TSV for s-x")
    b.add_argument("--k-y", type=int, default=1)
    b.add_argument("--m-size", type=int, default=None)
    b.add_argument("--m-size-upper", type=int, default=None)
    b.add_argument("--method", default="hypergeometric-exact")
    b.add_argument("--delta", default="0.05", help="comma-separated delta parts")
    b.add_argument("--out")
    b.set_defaults(func=cmd_validate_batch)

    q = vsub.add_parser("query", help="query-matcher certificates")
    q.add_argument("--x", required=True)
    q.add_argument("--y")
    q.add_argument("--self-match", action="store_true")
    q.add_argument("--matcher", required=True, help="holdout MatcherConfig JSON")
    q.add_argument("--matcher-complete")
    q.add_argument("--seeds")
    q.add_argument("--seeds-complete")
    q.add_argument("--s-x", required=True)
    q.add_argument("--s-x-prime")
    q.add_argument("--actual", required=True)
    q.add_argument("--k-cap", type=int, default=1)
    q.add_argument("--method", default="hypergeometric-exact")
    q.add_argument("--delta", default="0.05")
    q.add_argument("--emit-node-stats", action="store_true")
    q.add_argument("--out")
    q.set_defaults(func=cmd_validate_query)

    p = sub.add_parser("coverage", help="Monte Carlo failure-rate experiment")
    p.add_argument("--config", required=True, help="ExperimentConfig JSON file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("report", help="pretty-print a saved report")
    p.add_argument("--in", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MatchcertError as e:
        print(f"matchcert: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"matchcert: i/o error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
