"""Command-line front end.

    extractlab gen-data  --name circles --n 5000 --seed 0 --out data.csv
    extractlab train     --data data.csv --kind binary_lr --out model.json
    extractlab serve-oracle --model model.json --schema data.schema.json \
                            --queries qs.jsonl --out transcript.jsonl
    extractlab attack    --config experiment.toml --out report.csv
    extractlab report    --report report.json --out report.csv
    extractlab repro     [--acceptance-dir tests]

``attack`` reads a TOML experiment config; ``repro`` shells out to pytest on
the acceptance suite, which prints one pass/fail line per criterion.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import FeatureSpace, load_dataset_csv, save_dataset_csv
from .harness import ExperimentReport, emit_report, gen_synthetic, load_config, run_experiment
from .models import load_model, save_model
from .oracle import DisclosurePolicy, Oracle
from .training import OptimizerConfig, fit_logistic_family, fit_svm, fit_tree


def _cmd_gen_data(args) -> int:
    ds = gen_synthetic(args.name, args.n, args.seed)
    schema = save_dataset_csv(ds, args.out)
    print(f"wrote {args.out} ({ds.n} rows, {ds.classes} classes) and {schema}")
    return 0


def _cmd_train(args) -> int:
    ds = load_dataset_csv(args.data)
    cfg = OptimizerConfig(seed=args.seed)
    if args.kind == "tree":
        model = fit_tree(ds, max_depth=args.max_depth)
    elif args.kind in ("svm_linear", "svm_rbf"):
        from .models import RBF, Linear

        kernel = Linear() if args.kind == "svm_linear" else RBF(args.gamma)
        model = fit_svm(kernel, ds, cfg)
    else:
        model, report = fit_logistic_family(args.kind, ds, cfg)
        if not report.converged:
            print(f"warning: stopped after {report.epochs_run} epochs without converging")
    save_model(model, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_serve_oracle(args) -> int:
    model = load_model(args.model)
    schema = json.loads(Path(args.schema).read_text())
    space = FeatureSpace.from_json(schema["dims"])
    policy = DisclosurePolicy(
        outputs=args.outputs,
        rounding=args.rounding,
        allow_partial=args.allow_partial,
        reveal_fields=args.reveal_fields,
    )
    oracle = Oracle(model, space, policy, record_path=args.out)
    n = 0
    with open(args.queries) as fh:
        for line in fh:
            q = [float("nan") if v is None else float(v) for v in json.loads(line)]
            oracle.query(np.asarray(q))
            n += 1
    print(f"answered {n} queries; transcript at {args.out}")
    return 0


def _cmd_attack(args) -> int:
    cfg = load_config(args.config)
    report = run_experiment(cfg)
    out = Path(args.out)
    emit_report(report, out, fmt="csv" if out.suffix != ".json" else "json")
    emit_report(report, out.with_suffix(".json"), fmt="json")
    failures = [c for c in report.cells if c.error]
    for c in failures:
        print(f"cell seed={c.seed} alpha={c.alpha} failed: {c.error}", file=sys.stderr)
    print(f"wrote {out} ({len(report.cells)} cells, {len(failures)} failed)")
    return 0


def _cmd_report(args) -> int:
    raw = json.loads(Path(args.report).read_text())
    emit_report(ExperimentReport.from_json(raw), args.out, fmt="csv")
    print(f"wrote {args.out}")
    return 0


def _cmd_repro(args) -> int:
    import subprocess

    target = Path(args.acceptance_dir) / "test_acceptance.py"
    if not target.exists():
        print(f"acceptance suite not found at {target}; run from a source checkout", file=sys.stderr)
        return 2
    return subprocess.call([sys.executable, "-m", "pytest", str(target), "-v", "-s"])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="extractlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset CSV plus schema")
    p.add_argument("--name", required=True,
                   choices=["circles", "moons", "blobs", "blobs_binary", "five_class"])
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="train a target model on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", required=True,
                   choices=["binary_lr", "softmax", "ovr", "mlp", "klr", "tree",
                            "svm_linear", "svm_rbf"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--max-depth", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("serve-oracle", help="answer recorded queries, writing a transcript")
    p.add_argument("--model", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--queries", required=True, help="JSONL, one query array per line")
    p.add_argument("--outputs", default="probs", choices=["probs", "labels"])
    p.add_argument("--rounding", type=int, default=None)
    p.add_argument("--allow-partial", action="store_true")
    p.add_argument("--reveal-fields", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_serve_oracle)

    p = sub.add_parser("attack", help="run an experiment config and emit reports")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("report", help="re-emit a JSON report as CSV")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("repro", help="run the acceptance suite")
    p.add_argument("--acceptance-dir", default="tests")
    p.set_defaults(func=_cmd_repro)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
