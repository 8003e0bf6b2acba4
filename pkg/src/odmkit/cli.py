"""Command line front end.

Subcommands:

  train      fit one model with explicit hyperparameters (or --cv)
  predict    apply a saved model to new data
  cv         grid search with k-fold cross validation, then refit
  margins    margin statistics and cumulative margin curve as CSV
  loo-bound  leave-one-out error bound from a saved model
  bench      repeated random splits over a directory of datasets

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import sys
import time
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .analysis import loo_bound, loo_exact, margin_report, write_margin_curve
from .boxqp import SolverOptions
from .data import ParseError, kfold, looks_labeled, parse_libsvm, parse_unlabeled, split
from .duals import (
    OdmlParams,
    OdmParams,
    SvmParams,
    TrainedModel,
    predict_labels,
    train_kernel,
)
from .kernels import KernelSpec, avg_pairwise_distance
from .linear import LinearModel, SvrgOptions, decision_function_linear, svrg_train
from .model_io import load_model, save_model


@dataclass(frozen=True)
class GridSpec:
    """Candidate hyperparameter values for cross validation."""

    Cs: tuple
    lam1s: tuple
    lam2s: tuple
    C1s: tuple
    C2s: tuple
    Ds: tuple
    width_scales: tuple

    @classmethod
    def full(cls):
        """The full search ranges used for benchmark reproduction."""
        return cls(
            Cs=(10.0, 50.0, 100.0),
            lam1s=tuple(2.0**k for k in range(-8, -1)),
            lam2s=tuple(2.0**k for k in range(-8, -1)),
            C1s=tuple(2.0**k for k in range(0, 11)),
            C2s=tuple(2.0**k for k in range(0, 11)),
            Ds=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
            width_scales=(0.25, 0.5, 1.0, 2.0, 4.0),
        )

    @classmethod
    def coarse(cls):
        """Three points per axis; the default for desk-scale runs."""
        return cls(
            Cs=(10.0, 50.0, 100.0),
            lam1s=(2.0**-8, 2.0**-5, 2.0**-2),
            lam2s=(2.0**-8, 2.0**-5, 2.0**-2),
            C1s=(1.0, 32.0, 1024.0),
            C2s=(1.0, 32.0, 1024.0),
            Ds=(0.0, 0.2, 0.4),
            width_scales=(0.25, 1.0, 4.0),
        )


@dataclass(frozen=True)
class BenchResult:
    dataset: str
    method: str
    kernel: str
    mean_acc: float
    std_acc: float
    seconds: float


def _candidate_params(grid, variant):
    """Parameter combinations in canonical ascending order, so that the
    first strict maximum during search realizes the tie-break rule
    (smaller C, then C1, then first listed)."""
    if variant == "svm":
        return [SvmParams(C) for C in sorted(grid.Cs)]
    if variant == "odml":
        return [
            OdmlParams(C, l1, l2)
            for C, l1, l2 in product(sorted(grid.Cs), sorted(grid.lam1s), sorted(grid.lam2s))
        ]
    if variant == "odm":
        return [
            OdmParams(c1, c2, d)
            for c1, c2, d in product(sorted(grid.C1s), sorted(grid.C2s), sorted(grid.Ds))
        ]
    raise ValueError(f"unknown variant {variant!r}")


def grid_search(train, variant, kernel_kind, grid, folds, seed, options):
    """Pick (params, kernel) maximizing mean validation accuracy over k folds.

    Sees only the dataset it is given; callers pass the training half.
    The RBF width grid is built from fixed scale multiples of the average
    pairwise distance of ``train``, computed once.
    """
    if kernel_kind == "rbf":
        delta = avg_pairwise_distance(train, seed=seed)
        specs = [KernelSpec("rbf", s * delta) for s in grid.width_scales]
    else:
        specs = [KernelSpec("linear")]
    pairs = kfold(train, folds, seed)
    best = (None, None, -1.0)
    for params in _candidate_params(grid, variant):
        for spec in specs:
            correct = 0
            total = 0
            for tr, va in pairs:
                model = train_kernel(tr, variant, spec, params, options)
                correct += int(np.sum(predict_labels(model, va.instances) == va.labels))
                total += len(va)
            acc = correct / total
            if acc > best[2]:
                best = (params, spec, acc)
    return best


def _read_labeled(path):
    text = Path(path).read_text(encoding="utf-8")
    return parse_libsvm(text)


def _float_or_auto(value):
    if value == "auto":
        return "auto"
    return float(value)


def _solver_options(args):
    return SolverOptions(tolerance=args.tol, max_passes=args.max_passes, seed=args.seed)


def _variant_params(args, parser):
    if args.variant == "svm":
        if args.c is None:
            parser.error("--variant svm requires --c")
        return SvmParams(args.c)
    if args.variant == "odml":
        if args.c is None or args.lambda1 is None or args.lambda2 is None:
            parser.error("--variant odml requires --c, --lambda1 and --lambda2")
        return OdmlParams(args.c, args.lambda1, args.lambda2)
    if args.c1 is None or args.c2 is None or args.d is None:
        parser.error("--variant odm requires --c1, --c2 and --d")
    return OdmParams(args.c1, args.c2, args.d)


def _resolve_kernel(args, train, parser):
    if args.kernel == "linear":
        if args.width is not None:
            parser.error("--width only applies to --kernel rbf")
        return KernelSpec("linear")
    if args.width is None:
        parser.error("--kernel rbf requires --width (a value or 'auto')")
    width = avg_pairwise_distance(train, seed=args.seed) if args.width == "auto" else args.width
    return KernelSpec("rbf", width)


def cmd_train(args, parser):
    train = _read_labeled(args.input)
    if len(train) == 0:
        print("error: training file is empty", file=sys.stderr)
        return 1
    if args.solver == "svrg":
        if args.kernel != "linear":
            parser.error("--solver svrg supports only --kernel linear")
        if args.cv:
            parser.error("--cv is only available with --solver dcd")
        params = _variant_params(args, parser)
        opts = SvrgOptions(eta=args.eta, stages=args.stages, seed=args.seed)
        model = svrg_train(train, args.variant, params, opts)
        print(f"trained {args.variant} (svrg, {model.stages_run} stages), "
              f"objective {model.objective:.6g}")
    else:
        if args.cv:
            grid = GridSpec.full() if args.grid == "full" else GridSpec.coarse()
            params, spec, acc = grid_search(
                train, args.variant, args.kernel, grid, args.folds, args.seed,
                _solver_options(args),
            )
            print(f"cv winner: {params} {spec}, validation accuracy {acc:.6f}")
        else:
            params = _variant_params(args, parser)
            spec = _resolve_kernel(args, train, parser)
        model = train_kernel(
            train, args.variant, spec, params, _solver_options(args),
            keep_alpha=args.keep_alpha, normalize=not args.no_normalize,
        )
        state = "converged" if model.converged else "NOT converged (pass budget exhausted)"
        print(f"trained {args.variant} ({state}), {len(model.support_vectors)} support "
              f"vectors, dual objective {model.objective:.6g}")
    save_model(model, args.model_out)
    print(f"model written to {args.model_out}")
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    text = Path(args.input).read_text(encoding="utf-8")
    labeled = looks_labeled(text)
    if labeled:
        ds = parse_libsvm(text)
        instances, truth = ds.instances, ds.labels
    else:
        instances, truth = parse_unlabeled(text), None
    if isinstance(model, LinearModel):
        decisions = decision_function_linear(model, instances)
    else:
        from .duals import decision_function

        decisions = decision_function(model, instances)
    labels = np.where(decisions >= 0.0, 1, -1)
    with open(args.output, "w", encoding="utf-8") as fh:
        for lab, dec in zip(labels, decisions):
            fh.write(f"{'+1' if lab > 0 else '-1'} {dec:.12g}\n")
    if truth is not None and len(truth):
        acc = float(np.mean(labels == truth))
        print(f"accuracy {acc:.6f} on {len(truth)} instances")
    else:
        print(f"wrote {len(instances)} predictions")
    return 0


def cmd_cv(args, parser):
    train = _read_labeled(args.input)
    if len(train) == 0:
        print("error: training file is empty", file=sys.stderr)
        return 1
    grid = GridSpec.full() if args.grid == "full" else GridSpec.coarse()
    params, spec, acc = grid_search(
        train, args.variant, args.kernel, grid, args.folds, args.seed, _solver_options(args)
    )
    print(f"best params: {params}")
    print(f"best kernel: {spec}")
    print(f"mean validation accuracy: {acc:.6f}")
    model = train_kernel(
        train, args.variant, spec, params, _solver_options(args), keep_alpha=args.keep_alpha
    )
    if args.model_out:
        save_model(model, args.model_out)
        print(f"model written to {args.model_out}")
    return 0


def cmd_margins(args):
    model = load_model(args.model)
    ds = _read_labeled(args.input)
    report = margin_report(model, ds)
    if report.zero_norm:
        print("error: weight norm is zero, normalized margins undefined", file=sys.stderr)
        return 1
    with open(args.output, "w", encoding="utf-8") as fh:
        write_margin_curve(report, fh)
    print(f"margin mean {report.mean:.6g}, variance {report.variance:.6g}, "
          f"norm {report.weight_norm:.6g}")
    print(f"curve written to {args.output}")
    return 0


def cmd_loo_bound(args):
    model = load_model(args.model)
    if not isinstance(model, TrainedModel):
        print("error: leave-one-out bounds need a kernel model", file=sys.stderr)
        return 1
    if model.alpha is None:
        print(
            "error: model lacks the raw dual solution; retrain with --keep-alpha",
            file=sys.stderr,
        )
        return 1
    report = loo_bound(model)
    print(f"bound on leave-one-out error rate: {report.bound_value:.6f}")
    for name in report.terms:
        print(f"  {name}: term {report.terms[name]:.6g}"
              + (f", count {report.counts[name]}" if name in report.counts else ""))
    if args.exact:
        if not args.input:
            print("error: --exact needs --input (the training data)", file=sys.stderr)
            return 1
        ds = _read_labeled(args.input)
        if len(ds) != model.n_train:
            print(
                f"error: --input has {len(ds)} instances, model was trained on "
                f"{model.n_train}", file=sys.stderr,
            )
            return 1
        if len(ds) > args.max_m:
            print(
                f"error: exact leave-one-out on {len(ds)} instances exceeds "
                f"--max-m {args.max_m}", file=sys.stderr,
            )
            return 1
        opts = SolverOptions(tolerance=args.tol, max_passes=args.max_passes, seed=args.seed)

        def trainer(subset):
            sub = train_kernel(subset, model.variant, model.kernel, model.params, opts)
            return lambda x: predict_labels(sub, [x])[0]

        errors = loo_exact(ds, trainer)
        rate = errors / len(ds)
        print(f"exact leave-one-out errors: {errors} / {len(ds)} (rate {rate:.6f})")
        print(f"bound {'holds' if report.bound_value >= rate else 'VIOLATED'}")
    return 0


def _bench_one(ds, name, method, kernel_kind, grid, args):
    t0 = time.perf_counter()
    accs = []
    for r in range(args.repeats):
        tr, te = split(ds, 0.5, seed=[args.seed, r])
        params, spec, _ = grid_search(
            tr, method, kernel_kind, grid, args.folds, args.seed + r,
            SolverOptions(tolerance=args.tol, max_passes=args.max_passes, seed=args.seed),
        )
        model = train_kernel(tr, method, spec, params,
                             SolverOptions(tolerance=args.tol, max_passes=args.max_passes,
                                           seed=args.seed))
        accs.append(float(np.mean(predict_labels(model, te.instances) == te.labels)))
    seconds = time.perf_counter() - t0 if args.timing == "wall" else 0.0
    accs = np.asarray(accs)
    std = float(accs.std(ddof=1)) if len(accs) > 1 else 0.0
    return BenchResult(name, method, kernel_kind, float(accs.mean()), std, seconds)


def cmd_bench(args):
    root = Path(args.datasets)
    if not root.is_dir():
        print(f"error: {root} is not a directory", file=sys.stderr)
        return 1
    methods = args.methods.split(",")
    for mth in methods:
        if mth not in ("svm", "odml", "odm"):
            print(f"error: unknown method {mth!r}", file=sys.stderr)
            return 1
    grid = GridSpec.full() if args.grid == "full" else GridSpec.coarse()
    loaded = []
    for path in sorted(p for p in root.iterdir() if p.is_file()):
        try:
            ds = parse_libsvm(path.read_text(encoding="utf-8"))
            if len(ds) < 4:
                raise ParseError("too few instances")
            loaded.append((path.stem, ds))
        except (ParseError, UnicodeDecodeError, OSError) as e:
            print(f"warning: skipping {path.name}: {e}", file=sys.stderr)
    if not loaded:
        print("error: no usable datasets", file=sys.stderr)
        return 1
    rows = []
    for name, ds in loaded:
        for method in methods:
            res = _bench_one(ds, name, method, args.kernel, grid, args)
            rows.append(res)
            print(f"{name} {method}: {res.mean_acc:.4f} +- {res.std_acc:.4f}")
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("dataset,method,kernel,mean_acc,std_acc,seconds\n")
        for r in rows:
            fh.write(f"{r.dataset},{r.method},{r.kernel},"
                     f"{r.mean_acc:.6f},{r.std_acc:.6f},{r.seconds:.6f}\n")
    print(f"results written to {args.output}")
    return 0


def _add_solver_flags(p):
    p.add_argument("--tol", type=float, default=1e-6, help="solver tolerance")
    p.add_argument("--max-passes", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="odmkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model with given hyperparameters")
    p.add_argument("--input", required=True)
    p.add_argument("--variant", required=True, choices=("svm", "odml", "odm"))
    p.add_argument("--kernel", default="linear", choices=("linear", "rbf"))
    p.add_argument("--width", type=_float_or_auto, default=None,
                   help="rbf width, or 'auto' for the mean pairwise distance")
    p.add_argument("--model-out", required=True)
    p.add_argument("--solver", default="dcd", choices=("dcd", "svrg"))
    p.add_argument("--c", type=float, default=None, help="cost (svm and odml)")
    p.add_argument("--lambda1", type=float, default=None, help="deviation weight (odml)")
    p.add_argument("--lambda2", type=float, default=None, help="mean weight (odml)")
    p.add_argument("--c1", type=float, default=None, help="short-side cost (odm)")
    p.add_argument("--c2", type=float, default=None, help="long-side cost (odm)")
    p.add_argument("--d", type=float, default=None, help="zero-loss band half-width (odm)")
    p.add_argument("--eta", type=float, default=0.01, help="svrg step size")
    p.add_argument("--stages", type=int, default=20, help="svrg stages")
    p.add_argument("--keep-alpha", action="store_true",
                   help="retain the raw dual solution for loo-bound")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--cv", action="store_true", help="pick hyperparameters by grid search")
    p.add_argument("--grid", default="coarse", choices=("coarse", "full"))
    p.add_argument("--folds", type=int, default=5)
    _add_solver_flags(p)
    p.set_defaults(func=lambda a, _p=p: cmd_train(a, _p))

    p = sub.add_parser("predict", help="apply a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="cross-validated grid search")
    p.add_argument("--input", required=True)
    p.add_argument("--variant", required=True, choices=("svm", "odml", "odm"))
    p.add_argument("--kernel", default="linear", choices=("linear", "rbf"))
    p.add_argument("--grid", default="coarse", choices=("coarse", "full"))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--model-out", default=None)
    p.add_argument("--keep-alpha", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=lambda a, _p=p: cmd_cv(a, _p))

    p = sub.add_parser("margins", help="margin statistics and CDF curve")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_margins)

    p = sub.add_parser("loo-bound", help="leave-one-out error bound")
    p.add_argument("--model", required=True)
    p.add_argument("--input", default=None, help="training data (needed for --exact)")
    p.add_argument("--exact", action="store_true",
                   help="also compute the exact count by retraining")
    p.add_argument("--max-m", type=int, default=200,
                   help="refuse --exact beyond this many instances")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_loo_bound)

    p = sub.add_parser("bench", help="repeated-split comparison over a dataset directory")
    p.add_argument("--datasets", required=True)
    p.add_argument("--methods", default="svm,odml,odm")
    p.add_argument("--kernel", default="linear", choices=("linear", "rbf"))
    p.add_argument("--repeats", type=int, default=30)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--grid", default="coarse", choices=("coarse", "full"))
    p.add_argument("--output", required=True)
    p.add_argument("--timing", default="wall", choices=("wall", "none"),
                   help="'none' writes 0 in the seconds column for reproducible files")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
