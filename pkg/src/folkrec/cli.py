"""Command-line pipeline: ingest -> split -> lda -> recommend/eval/drift.

Each stage reads and writes files so the expensive topic model is trained
once per Z and reused. Every output embeds the run fingerprint; stages refuse
inputs whose fingerprints do not line up. Exit codes: 0 ok, 2 invalid
config, 3 missing input, 4 fingerprint mismatch, 5 malformed data.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import synth
from .errors import ConfigError, FingerprintMismatchError, FolkrecError, MissingInputError
from .evaluation import drift_analysis, evaluate, significance_stars
from .folksonomy import (
    DEFAULT_BLACKLIST,
    DatasetSplit,
    Folksonomy,
    filter_test_users,
    ingest,
    leave_one_out_split,
    sample_users,
)
from .harness import ALGORITHMS, UNIMPLEMENTED, RecommenderSet, check_model_fingerprint
from .topics import LdaConfig, TopicModel, train_lda


def _load(path: str, blacklist=DEFAULT_BLACKLIST) -> Folksonomy:
    if not os.path.exists(path):
        raise MissingInputError(f"input file not found: {path}")
    return ingest(path, blacklist)


def _blacklist_from(args) -> frozenset[str]:
    if args.blacklist is None:
        return DEFAULT_BLACKLIST
    return frozenset(t.strip().lower() for t in args.blacklist.split(",") if t.strip())


def _parse_algos(value: str) -> list[str]:
    names = [name.strip() for name in value.split(",") if name.strip()]
    if not names:
        raise ConfigError("no algorithms given")
    for name in names:
        if name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)}")
    return names


def cmd_ingest(args) -> int:
    f = _load(args.data, _blacklist_from(args))
    if args.sample_users is not None:
        f = sample_users(f, args.sample_users, args.sample_seed)
    f.save(args.out)
    stats = {
        "posts": f.n_posts,
        "users": f.n_users,
        "resources": f.n_resources,
        "tags": f.n_tags,
        "assignments": f.n_assignments,
        "fingerprint": f.fingerprint(),
    }
    print(json.dumps(stats, sort_keys=True))
    return 0


def cmd_split(args) -> int:
    f = _load(args.data)
    split = leave_one_out_split(f)
    os.makedirs(args.out_dir, exist_ok=True)
    train_path = os.path.join(args.out_dir, "train.tsv")
    test_path = os.path.join(args.out_dir, "test.tsv")
    split.train.save(train_path)
    Folksonomy(list(split.test)).save(test_path)
    meta = {
        "source_fingerprint": f.fingerprint(),
        "train_fingerprint": split.train.fingerprint(),
        "n_train_posts": split.train.n_posts,
        "n_test_posts": len(split.test),
    }
    with open(os.path.join(args.out_dir, "split.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(json.dumps(meta, sort_keys=True))
    return 0


def cmd_lda(args) -> int:
    train = _load(args.train)
    if args.paper_mode:
        if not args.test:
            raise ConfigError("--paper-mode needs --test to train on the full dataset")
        test = _load(args.test)
        train = Folksonomy(train.posts + test.posts)
    config = LdaConfig(
        num_topics=args.topics,
        alpha=args.alpha,
        eta=args.eta,
        iterations=args.iters,
        seed=args.seed,
    )
    model = train_lda(train, config, ll_every=args.ll_every)
    model.save(args.out)
    print(
        json.dumps(
            {
                "trained_on": model.trained_on,
                "topics": model.num_topics,
                "resources": len(model.resources),
                "tags": len(model.tags),
                "paper_mode": bool(args.paper_mode),
            },
            sort_keys=True,
        )
    )
    return 0


def _load_split(args) -> DatasetSplit:
    train = _load(args.train)
    test = _load(args.test)
    return DatasetSplit(train=train, test=list(test.posts))


def _recommender_set(args, split: DatasetSplit) -> RecommenderSet:
    model = None
    if args.model:
        model = TopicModel.load(args.model)
        check_model_fingerprint(model, split)
        if getattr(args, "topics", None) and args.topics != model.num_topics:
            raise ConfigError(f"--topics {args.topics} does not match model Z={model.num_topics}")
    return RecommenderSet(
        train=split.train,
        model=model,
        beta=args.beta,
        d=args.d,
        k=args.k,
        k_neighbors=args.cf_neighbors,
    )


def cmd_recommend(args) -> int:
    split = _load_split(args)
    rec_set = _recommender_set(args, split)
    algo = args.algo
    fn = rec_set.recommender(algo)
    config = _run_config(args, [algo], split)
    lines = [
        f"# fingerprint={split.train.fingerprint()}",
        f"# config={json.dumps(config, sort_keys=True)}",
        "user\tresource\trank\ttag\tscore",
    ]
    for post in sorted(split.test, key=lambda p: (p.user, p.resource)):
        for rank, (tag, score) in enumerate(fn(post.user, post.resource, post.timestamp), start=1):
            lines.append(f"{post.user}\t{post.resource}\t{rank}\t{tag}\t{score:.10g}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_eval(args) -> int:
    split = _load_split(args)
    names = _parse_algos(args.algos)
    rec_set = _recommender_set(args, split)
    config = _run_config(args, names, split)
    report = evaluate(
        rec_set.table(names),
        split,
        b_min=args.b_min,
        significance=args.sig,
        config=config,
    )
    if "girptm" in names:
        report.notes["girptm_standin"] = True
    report.notes["not_implemented"] = {
        name: "n/a (external factorization framework)" for name in UNIMPLEMENTED
    }
    os.makedirs(args.out_dir, exist_ok=True)
    _write(os.path.join(args.out_dir, "report.json"), report.to_json())
    _write(os.path.join(args.out_dir, "report.tsv"), report.summary_tsv())
    if args.curves:
        _write(os.path.join(args.out_dir, "curves.tsv"), report.curves_tsv())
    if args.figures:
        from .figures import save_pr_curve_figure

        save_pr_curve_figure(report, os.path.join(args.out_dir, "precision_recall.png"))
    for name, res in sorted(report.algorithms.items()):
        print(
            f"{name}\tF1@5={res.f1_at_5:.4f}\tMRR={res.mrr:.4f}\tMAP={res.map_at_10:.4f}"
            f"\tcases={res.n_cases}\tfailures={res.n_failures}"
        )
    if args.sig:
        for metric, table in sorted(report.pairwise_p.items()):
            for pair, p in sorted(table.items()):
                print(f"sig\t{metric}\t{pair}\tp={p:.4g}\t{significance_stars(p)}")
    return 0


def cmd_drift(args) -> int:
    f = _load(args.data)
    model = TopicModel.load(args.model)
    fingerprint = f.fingerprint()
    if model.trained_on != fingerprint:
        raise FingerprintMismatchError(
            f"model was trained on dataset {model.trained_on}, drift input is {fingerprint}"
        )
    table = drift_analysis(f, model, max_lag=args.max_lag)
    os.makedirs(args.out_dir, exist_ok=True)
    _write(os.path.join(args.out_dir, "drift_bookmarks.tsv"), table.to_tsv("bookmark", fingerprint))
    _write(os.path.join(args.out_dir, "drift_days.tsv"), table.to_tsv("days", fingerprint))
    if args.figures:
        from .figures import save_drift_figure

        save_drift_figure(table, os.path.join(args.out_dir, "drift.png"))
    print(f"bookmark-lag rows: {len(table.by_bookmark)}, day-lag rows: {len(table.by_days)}")
    return 0


def cmd_fixture(args) -> int:
    synth.write_drift_fixture(args.out)
    print(f"wrote fixture to {args.out}")
    return 0


def _run_config(args, names: list[str], split: DatasetSplit) -> dict:
    return {
        "algos": names,
        "beta": args.beta,
        "d": args.d,
        "k": args.k,
        "b_min": getattr(args, "b_min", None),
        "cf_neighbors": args.cf_neighbors,
        "model": os.path.basename(args.model) if args.model else None,
        "train_fingerprint": split.train.fingerprint(),
    }


def _write(path: str, content: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="folkrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse TAS rows into a canonical snapshot")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--blacklist", help="comma-separated tag blacklist (default: built-in)")
    p.add_argument("--sample-users", type=float, help="keep this fraction of user profiles")
    p.add_argument("--sample-seed", type=int, default=0)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("split", help="leave-one-out split into train/test snapshots")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("lda", help="train the topic model on the training snapshot")
    p.add_argument("--train", required=True)
    p.add_argument("--test", help="test snapshot (only with --paper-mode)")
    p.add_argument("--paper-mode", action="store_true", help="train on train+test")
    p.add_argument("--topics", type=int, required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ll-every", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_lda)

    def add_rec_args(p):
        p.add_argument("--train", required=True)
        p.add_argument("--test", required=True)
        p.add_argument("--model", help="topic model snapshot")
        p.add_argument("--topics", type=int, help="cross-check against the model's Z")
        p.add_argument("--beta", type=float, default=0.5)
        p.add_argument("--d", type=float, default=0.5)
        p.add_argument("--k", type=int, default=10)
        p.add_argument("--cf-neighbors", type=int, default=20)

    p = sub.add_parser("recommend", help="emit top-k predictions for the test posts")
    add_rec_args(p)
    p.add_argument("--algo", required=True, choices=ALGORITHMS)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_recommend)

    p = sub.add_parser("eval", help="run the benchmark and write the report")
    add_rec_args(p)
    p.add_argument("--algos", required=True, help="comma-separated algorithm names")
    p.add_argument("--b-min", type=int, default=None)
    p.add_argument("--curves", action="store_true", help="also write per-k precision/recall rows")
    p.add_argument("--sig", action="store_true", help="pairwise rank-sum significance tests")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("drift", help="gist-vs-verbatim similarity decline curves")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--max-lag", type=int, default=100)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_drift)

    p = sub.add_parser("fixture", help="regenerate the bundled synthetic corpus")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_fixture)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FolkrecError as exc:
        print(f"error[{exc.exit_code}]: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
