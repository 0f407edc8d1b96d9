"""Command-line surface: fit, score, threshold, eval, ablate.

Every command is deterministic given its inputs, flags, and --seed.
Exit codes: 0 success, 2 usage or data error, 1 internal error.  The
GEMOS_THREADS environment variable caps the worker count used for
per-class fitting and scoring.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from gemos.bank import (
    comparison_scores,
    fit_bank,
    load_bank,
    read_scores_csv,
    save_bank,
    score_dataset,
    write_scores_csv,
)
from gemos.dataset import read_dataset
from gemos.errors import GemosError, ValidationError
from gemos.metrics import evaluate, roc_points
from gemos.models import GmmModel, ScorerConfig, dumps_deterministic
from gemos.threshold import (
    DEFAULT_FOLDS,
    DEFAULT_GRID_SIZE,
    ThresholdPolicy,
    cross_validate_threshold,
    load_policy,
    policy_from_report,
    quantile_threshold,
    save_policy,
)

# §-style sweep used by the ablate command; OCSVM is deliberately absent
# (it needs a quadratic-programming solver and is out of scope).
ABLATION_SWEEP: list[tuple[str, str, int]] = [
    ("GMM2", "gmm", 2),
    ("GMM4", "gmm", 4),
    ("GMM8", "gmm", 8),
    ("GMM16", "gmm", 16),
    ("PCA2", "pca", 2),
    ("PCA4", "pca", 4),
    ("PCA8", "pca", 8),
    ("PCA16", "pca", 16),
    ("IF", "iforest", 0),
    ("LOF", "lof", 0),
]

_OCSVM_FOOTNOTE = (
    "OCSVM omitted: it needs a quadratic-programming solver, which this "
    "toolkit deliberately does not ship."
)


def _config_from_args(args: argparse.Namespace) -> ScorerConfig:
    return ScorerConfig(
        kind=args.model,
        num_components=args.components,
        num_trees=args.trees,
        subsample_size=args.subsample,
        k_neighbors=args.k_neighbors,
        em_tolerance=args.em_tolerance,
        em_max_iters=args.em_max_iters,
        em_restarts=args.em_restarts,
        rng_seed=args.seed,
    )


def cmd_fit(args: argparse.Namespace) -> int:
    if args.model == "ocsvm":
        print(
            "error: unsupported model kind 'ocsvm' (needs a quadratic-programming "
            "solver; deliberately out of scope). Choose gmm, pca, iforest, or lof.",
            file=sys.stderr,
        )
        return 2
    train = read_dataset(args.features)
    cfg = _config_from_args(args)
    bank = fit_bank(train, cfg, min_class_samples=args.min_class_samples)
    save_bank(bank, args.out)

    print(f"fitted {cfg.kind} bank: {bank.num_classes} classes, dim {bank.dim}")
    for c in range(bank.num_classes):
        used = int(
            np.sum((train.true_labels == c) & (train.predicted_labels == c))
        )
        line = f"  class {c}: {used} training samples"
        scorer = bank.scorers[c]
        if isinstance(scorer, GmmModel):
            line += f", fit mean log-likelihood {scorer.final_mean_loglik:.6g}"
        print(line)
    print(f"bank written to {args.out}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    bank = load_bank(args.bank)
    data = read_dataset(args.features)
    records = score_dataset(bank, data)
    write_scores_csv(records, args.out)
    print(f"wrote {len(records)} score records to {args.out}")
    return 0


def cmd_threshold(args: argparse.Namespace) -> int:
    records = read_scores_csv(args.scores)
    if args.per_class and args.quantile is None:
        raise ValidationError(
            "--per-class requires --quantile: per-class cutoffs are chosen "
            "from training score percentiles, not by grid search"
        )
    if args.quantile is not None:
        mode = "per_class_raw" if args.per_class else "global_normalized"
        policy = quantile_threshold(
            records, percentile=args.quantile, mode=mode, num_classes=args.num_classes
        )
        save_policy(policy, args.out)
        print(f"quantile policy ({mode}, percentile {args.quantile}) written to {args.out}")
        return 0

    report = cross_validate_threshold(
        records,
        folds=args.folds,
        grid_size=args.grid_size,
        seed=args.seed,
        num_classes=args.num_classes,
    )
    policy = policy_from_report(report)
    save_policy(policy, args.out, report)
    for f, (tau, f1) in enumerate(zip(report.fold_taus, report.fold_f1s)):
        print(f"  fold {f}: tau {tau:.6g}, held-out macro-F1 {f1:.4f}")
    print(
        f"final tau {report.final_tau:.6g} "
        f"(mean held-out macro-F1 {report.mean_f1:.4f} +/- {report.std_f1:.4f})"
    )
    print(f"policy written to {args.out}")
    return 0


def _policy_from_eval_args(args: argparse.Namespace) -> ThresholdPolicy:
    if (args.policy is None) == (args.tau is None):
        raise ValidationError("provide exactly one of --policy or --tau")
    if args.policy is not None:
        policy, _ = load_policy(args.policy)
        return policy
    if args.num_classes is None:
        raise ValidationError("--tau needs --num-classes")
    return ThresholdPolicy(
        mode=args.mode,
        tau=args.tau,
        num_classes=args.num_classes,
        provenance="cli --tau override",
    ).validated()


def cmd_eval(args: argparse.Namespace) -> int:
    records = read_scores_csv(args.scores)
    policy = _policy_from_eval_args(args)
    report = evaluate(records, policy)
    Path(args.out).write_text(dumps_deterministic(report.to_dict()) + "\n")
    if args.roc is not None:
        scores = comparison_scores(records, policy.mode)
        is_known = [r.true_label >= 0 for r in records]
        rows = ["score,fpr,tpr"]
        for score, fpr, tpr in roc_points(scores, is_known):
            rows.append(
                f"{format(score, '.17g')},{format(fpr, '.17g')},{format(tpr, '.17g')}"
            )
        Path(args.roc).write_text("\n".join(rows) + "\n")
        print(f"ROC points written to {args.roc}")
    print(
        f"auc {report.auc:.4f}  macro-F1 {report.macro_f1:.4f}  "
        f"micro-F1 {report.micro_f1:.4f}  kkc-accuracy {report.kkc_accuracy:.4f}"
    )
    print(f"report written to {args.out}")
    return 0


def _run_one_ablation(
    kind: str,
    components: int,
    train,
    eval_data,
    args: argparse.Namespace,
) -> tuple[float, float]:
    cfg = ScorerConfig(kind=kind, rng_seed=args.seed)
    if components:
        cfg = cfg.with_(num_components=components)
    bank = fit_bank(train, cfg)
    records = score_dataset(bank, eval_data)
    report = cross_validate_threshold(
        records,
        folds=args.folds,
        grid_size=args.grid_size,
        seed=args.seed,
        num_classes=bank.num_classes,
    )
    result = evaluate(records, policy_from_report(report))
    return result.macro_f1, result.auc


def _render_ablation_text(
    columns: list[str],
    f1_row: list[str],
    auc_row: list[str],
    failures: list[tuple[str, str]],
) -> str:
    headers = ["metric", *columns]
    rows = [headers, ["F1", *f1_row], ["AUC", *auc_row]]
    widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
    lines.append("")
    lines.append(_OCSVM_FOOTNOTE)
    for label, reason in failures:
        lines.append(f"{label} failed: {reason}")
    return "\n".join(lines) + "\n"


def cmd_ablate(args: argparse.Namespace) -> int:
    train = read_dataset(args.train)
    eval_data = read_dataset(args.eval)

    columns: list[str] = []
    f1_row: list[str] = []
    auc_row: list[str] = []
    failures: list[tuple[str, str]] = []
    for label, kind, components in ABLATION_SWEEP:
        columns.append(label)
        try:
            f1, auc = _run_one_ablation(kind, components, train, eval_data, args)
            f1_row.append(f"{f1:.4f}")
            auc_row.append(f"{auc:.4f}")
        except GemosError as exc:
            f1_row.append("—")
            auc_row.append("—")
            failures.append((label, str(exc)))

    csv_text = "\n".join(
        [
            ",".join(["metric", *columns]),
            ",".join(["F1", *f1_row]),
            ",".join(["AUC", *auc_row]),
        ]
    ) + "\n"
    text = _render_ablation_text(columns, f1_row, auc_row, failures)
    csv_path = Path(f"{args.out_prefix}.csv")
    txt_path = Path(f"{args.out_prefix}.txt")
    csv_path.write_text(csv_text)
    txt_path.write_text(text)
    print(text, end="")
    print(f"tables written to {csv_path} and {txt_path}")
    return 0


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", required=True, help="training GMF file")
    p.add_argument(
        "--model",
        default="gmm",
        choices=["gmm", "pca", "iforest", "lof", "ocsvm"],
        help="scorer kind (ocsvm is recognized but unsupported)",
    )
    p.add_argument("--components", type=int, default=8, help="GMM/PCA component count")
    p.add_argument("--trees", type=int, default=100, help="isolation forest tree count")
    p.add_argument("--subsample", type=int, default=256, help="isolation forest subsample size")
    p.add_argument("--k-neighbors", type=int, default=20, help="LOF neighbor count")
    p.add_argument("--em-tolerance", type=float, default=1e-4)
    p.add_argument("--em-max-iters", type=int, default=200)
    p.add_argument("--em-restarts", type=int, default=3)
    p.add_argument(
        "--min-class-samples",
        type=int,
        default=None,
        help="override the per-kind minimum of correctly predicted rows per class",
    )
    p.add_argument("--out", required=True, help="output bank JSON path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gemos",
        description=(
            "Open-set recognition on top of a closed-set classifier: fit "
            "per-class generative scorers on intermediate-activation features, "
            "score, choose a rejection cutoff, and evaluate."
        ),
    )
    seed_parent = argparse.ArgumentParser(add_help=False)
    seed_parent.add_argument(
        "--seed", type=int, default=42, help="random seed for every stochastic step"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser(
        "fit", parents=[seed_parent], help="fit a per-class scorer bank from a GMF file"
    )
    _add_fit_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_score = sub.add_parser(
        "score", parents=[seed_parent], help="score a GMF file against a fitted bank"
    )
    p_score.add_argument("--features", required=True, help="GMF file to score")
    p_score.add_argument("--bank", required=True, help="bank JSON from the fit command")
    p_score.add_argument("--out", required=True, help="output scores CSV path")
    p_score.set_defaults(func=cmd_score)

    p_thr = sub.add_parser(
        "threshold", parents=[seed_parent], help="choose a rejection cutoff from scores"
    )
    p_thr.add_argument("--scores", required=True, help="scores CSV from the score command")
    p_thr.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p_thr.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    p_thr.add_argument(
        "--quantile",
        type=float,
        default=None,
        help="skip cross-validation; cut at this percentile of training scores",
    )
    p_thr.add_argument(
        "--per-class",
        action="store_true",
        help="with --quantile: one raw-score cutoff per class",
    )
    p_thr.add_argument("--num-classes", type=int, default=None)
    p_thr.add_argument("--out", required=True, help="output policy JSON path")
    p_thr.set_defaults(func=cmd_threshold)

    p_eval = sub.add_parser(
        "eval", parents=[seed_parent], help="evaluate scores under a threshold policy"
    )
    p_eval.add_argument("--scores", required=True, help="scores CSV")
    p_eval.add_argument("--policy", default=None, help="policy JSON from the threshold command")
    p_eval.add_argument("--tau", type=float, default=None, help="direct global cutoff")
    p_eval.add_argument(
        "--mode",
        default="global_normalized",
        choices=["global_normalized", "per_class_raw"],
        help="threshold mode when using --tau",
    )
    p_eval.add_argument("--num-classes", type=int, default=None)
    p_eval.add_argument("--roc", default=None, help="optional ROC points CSV path")
    p_eval.add_argument("--out", required=True, help="output report JSON path")
    p_eval.set_defaults(func=cmd_eval)

    p_abl = sub.add_parser(
        "ablate",
        parents=[seed_parent],
        help="sweep all scorer configurations and tabulate F1/AUC",
    )
    p_abl.add_argument("--train", required=True, help="training GMF file")
    p_abl.add_argument("--eval", required=True, help="evaluation GMF file (with unknowns)")
    p_abl.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p_abl.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    p_abl.add_argument("--out-prefix", required=True, help="prefix for .csv and .txt outputs")
    p_abl.set_defaults(func=cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with code 2
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except GemosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
