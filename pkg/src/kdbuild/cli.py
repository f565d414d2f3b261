"""Command-line front end.

Subcommands: ``bench`` (size/thread sweeps to CSV), ``sweep-k`` (dimension
sweep at fixed n), ``analyze`` (fit a scaling model to a CSV, JSON out),
``verify`` (build with every algorithm and cross-check), ``demo`` (walk
through the small sample data set step by step).

Exit codes: 0 success; 1 a verification check failed; 2 invalid arguments
or malformed input; 3 the requested fit could not be determined from the
data (too few samples or a degenerate system).
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import (
    DegenerateFitError,
    InsufficientDataError,
    MODEL_FITTERS,
    doubling_sizes,
    generate_points,
    load_points,
    read_samples,
    run_benchmark,
    sweep_dimensions,
    warm_up,
    write_samples,
)
from .build_median import build_median, build_median_staged
from .build_presort import build_presort, build_presort_staged
from .core import ContractViolationError, EmptyInputError, Ordering, compare_super_key
from .presort import merge_sort_indices, remove_duplicates
from .sampledata import example_point_set
from .verify import build_naive, check_validity, trees_equal


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated int list")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _open_out(path: str | None):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _progress(sample) -> None:
    print(
        f"  {sample.algorithm:>7} n={sample.n:<8d} k={sample.k} q={sample.q} "
        f"total={sample.total_s:.4f}s",
        file=sys.stderr,
    )


def cmd_bench(args: argparse.Namespace) -> int:
    sizes = doubling_sizes(args.n_min, args.n_max)
    print(
        f"benchmark: {args.algorithm}, n={sizes}, k={args.k}, q={args.threads}, "
        f"{args.repeats} repeats, seed {args.seed}",
        file=sys.stderr,
    )
    samples = run_benchmark(
        algorithm=args.algorithm,
        n_values=sizes,
        k=args.k,
        q_values=args.threads,
        repeats=args.repeats,
        seed=args.seed,
        progress=_progress,
    )
    out, close = _open_out(args.out)
    try:
        write_samples(out, samples)
    finally:
        if close:
            out.close()
    return 0


def cmd_sweep_k(args: argparse.Namespace) -> int:
    print(
        f"dimension sweep: {args.algorithm}, n={args.n}, k in {args.k_list}, "
        f"{args.repeats} repeats, seed {args.seed}",
        file=sys.stderr,
    )
    samples, fits = sweep_dimensions(
        n=args.n,
        k_values=args.k_list,
        seed=args.seed,
        repeats=args.repeats,
        algorithm=args.algorithm,
        progress=_progress,
    )
    out, close = _open_out(args.out)
    try:
        write_samples(out, samples)
    finally:
        if close:
            out.close()
    for alg, fit in fits.items():
        if fit is None:
            print(f"{alg}: need two distinct k values for a slope", file=sys.stderr)
        else:
            print(
                f"{alg}: slope {fit.slope:.6g} s per dimension, "
                f"intercept {fit.intercept:.6g} s, r {fit.r:.4f}",
                file=sys.stderr,
            )
    both = [fits.get(a) for a in ("presort", "median")]
    if all(f is not None for f in both) and both[1].slope != 0.0:
        print(
            f"slope ratio presort/median: {both[0].slope / both[1].slope:.2f}",
            file=sys.stderr,
        )
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    samples = read_samples(args.infile)
    if args.algorithm is not None:
        samples = [s for s in samples if s.algorithm == args.algorithm]
    else:
        algorithms = {s.algorithm for s in samples}
        if len(algorithms) > 1:
            print(
                f"error: samples mix algorithms {sorted(algorithms)}; "
                "pass --algorithm to pick one",
                file=sys.stderr,
            )
            return 2
    fit = MODEL_FITTERS[args.model](samples)
    report = {
        "samples": [s.to_json_dict() for s in samples],
        "fits": fit.to_json_dict(),
    }
    text = json.dumps(report, indent=2)
    if args.out in (None, "-"):
        print(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.points is not None:
        points = load_points(args.points)
        print(f"loaded {points.n} tuples of dimension {points.k} from {args.points}")
    else:
        points = generate_points(args.n, args.k, args.seed)
        print(f"generated {points.n} tuples of dimension {points.k} (seed {args.seed})")
    warm_up()
    failures = 0

    def check(label: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        state = "ok" if ok else "FAILED"
        suffix = f" ({detail})" if detail else ""
        print(f"  {label}: {state}{suffix}")
        if not ok:
            failures += 1

    pre = build_presort_staged(points, threads=args.threads)
    med = build_median_staged(points, threads=args.threads)
    naive = build_naive(points)
    expected = points.n - pre.removed
    check(
        "duplicate counts agree",
        pre.removed == med.removed,
        f"removed {pre.removed}",
    )
    for label, tree in (
        ("presort build valid", pre.tree),
        ("median build valid", med.tree),
        ("naive build valid", naive),
    ):
        report = check_validity(points, tree, expected_count=expected)
        check(label, report.valid, report.summary())
    check("presort == median", trees_equal(pre.tree, med.tree))
    check("presort == naive", trees_equal(pre.tree, naive))
    if failures:
        print(f"{failures} check(s) failed")
        return 1
    print("all checks passed")
    return 0


def _print_tree(points, tree, node: int, prefix: str, tag: str) -> None:
    print(f"{prefix}{tag}{points[node]}  #{node}")
    for child, mark in ((int(tree.less[node]), "< "), (int(tree.greater[node]), "> ")):
        if child >= 0:
            _print_tree(points, tree, child, prefix + "   ", mark)


def cmd_demo(args: argparse.Namespace) -> int:
    points = example_point_set()
    print(f"sample data: {points.n} tuples in {points.k} dimensions")
    for i in range(points.n):
        print(f"  {i:2d}: {points[i]}")
    key_names = ("x:y:z", "y:z:x", "z:x:y")
    arrays = [merge_sort_indices(points, d) for d in range(points.k)]
    print("\nindex arrays after the three super-key merge sorts:")
    for d in range(points.k):
        print(f"  {key_names[d]}: {' '.join(f'{int(i):2d}' for i in arrays[d])}")
    trimmed, removed = remove_duplicates(points, arrays)
    print(f"\nduplicates removed: {removed}")
    m = len(trimmed[0])
    mid = (m - 1) // 2
    med = int(trimmed[0][mid])
    print(
        f"first split: the {key_names[0]} median is tuple {med} {points[med]} "
        f"(slot {mid}); partitioning the {key_names[1]} array about it:"
    )
    lower, upper = 0, 0
    for raw in trimmed[1]:
        e = int(raw)
        order = compare_super_key(points[e], points[med], 0)
        if order is Ordering.LESS:
            print(f"  tuple {e:2d} {points[e]} -> lower half, slot {lower}")
            lower += 1
        elif order is Ordering.GREATER:
            print(f"  tuple {e:2d} {points[e]} -> upper half, slot {mid + 1 + upper}")
            upper += 1
        else:
            print(f"  tuple {e:2d} {points[e]} is the median itself: skipped")
    tree = build_presort(points)
    other = build_median(points)
    print(f"\nboth builders produce the identical tree: {trees_equal(tree, other)}")
    report = check_validity(points, tree, expected_count=points.n - removed)
    print(f"validity: {report.summary()}")
    print("\ntree (< less child, > greater child):")
    _print_tree(points, tree, tree.root, "", "")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdbuild",
        description="balanced k-d tree builders with a benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="time builds over a doubling size sweep")
    p.add_argument("--algorithm", choices=["presort", "median", "both"], default="both")
    p.add_argument("--n-min", type=int, required=True, help="first size of the sweep")
    p.add_argument("--n-max", type=int, required=True, help="sizes double up to this")
    p.add_argument("--k", type=int, required=True, help="dimensions per tuple")
    p.add_argument(
        "--threads",
        type=_int_list,
        default=[1],
        help="comma-separated thread budgets, e.g. 1,2,4",
    )
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep-k", help="time builds across dimensions at fixed n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument(
        "--k-list", type=_int_list, required=True, help="comma-separated k values"
    )
    p.add_argument("--algorithm", choices=["presort", "median", "both"], default="both")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("analyze", help="fit a scaling model to benchmark CSV")
    p.add_argument("--model", choices=sorted(MODEL_FITTERS), required=True)
    p.add_argument("--in", dest="infile", required=True, help="CSV from bench/sweep-k")
    p.add_argument(
        "--algorithm",
        choices=["presort", "median"],
        default=None,
        help="required when the CSV mixes algorithms",
    )
    p.add_argument("--out", default=None, help="JSON path (default: stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="build with all algorithms and cross-check")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--points", default=None, help="read tuples from this file instead")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo", help="walk through the sample data set")
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InsufficientDataError, DegenerateFitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ContractViolationError, EmptyInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
