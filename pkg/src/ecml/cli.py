"""Command-line interface: gen-data, train, eval, ablate, verify, report."""

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import config as cfgmod
from . import experiments, net, report, synthetic, verify
from .errors import ConfigError
from .evaluation import clustering_report, recall_at_k


def _ensure_outdir(path, force):
    if os.path.exists(path) and os.listdir(path) and not force:
        raise ConfigError(f"output directory {path!r} is not empty; "
                          "pass --force to overwrite")
    os.makedirs(path, exist_ok=True)


def _load_dataset(path):
    if not path:
        raise ConfigError("--data is required")
    return synthetic.load_csv(path)


def _final_metrics(params, dataset, train_cfg):
    out = {}
    for split in ("seen", "unseen"):
        rows = dataset.split_rows(split)
        emb, _ = net.forward(params, dataset.features[rows],
                             train_cfg.normalize_embeddings)
        ret = recall_at_k(emb, dataset.labels[rows], train_cfg.recall_ks)
        clus = clustering_report(emb, dataset.labels[rows], train_cfg.seed)
        out[split] = {"recall_at": {str(k): v for k, v in ret.recall_at.items()},
                      "nmi": clus.nmi, "f1": clus.f1}
    return out


def cmd_gen_data(args):
    cfg = cfgmod.load_config(args.config)
    if args.seed is not None:
        cfg["data"]["seed"] = args.seed
    dataset = synthetic.generate(cfgmod.build_synth_config(cfg))
    if os.path.exists(args.out) and not args.force:
        raise ConfigError(f"{args.out!r} exists; pass --force to overwrite")
    synthetic.save_csv(dataset, args.out)
    print(f"wrote {len(dataset.labels)} rows to {args.out}")
    return 0


def _write_run_dir(out, cfg, train_cfg, params, history, dataset):
    _ensure_outdir(out, force=True)
    experiments.write_history_csv(history, os.path.join(out, "history.csv"))
    experiments.save_params(params, os.path.join(out, "weights"))
    summary = {
        "config": cfg,
        "seed": train_cfg.seed,
        "final": _final_metrics(params, dataset, train_cfg),
        "final_train_loss": history.final().train_loss,
    }
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)


def cmd_train(args):
    cfg = cfgmod.load_config(args.config)
    if args.seed is not None:
        cfg["train"]["seed"] = args.seed
    dataset = _load_dataset(args.data)
    train_cfg = cfgmod.build_train_config(cfg)
    mlp_cfg = cfgmod.build_mlp_config(cfg, dataset.input_dim,
                                      train_cfg.normalize_embeddings)
    _ensure_outdir(args.out, args.force)
    params, history = experiments.train(dataset, mlp_cfg, train_cfg)
    _write_run_dir(args.out, cfg, train_cfg, params, history, dataset)
    f = history.final()
    print(f"done: iteration {f.iteration} seen R@1 {f.seen_r1:.3f} "
          f"unseen R@1 {f.unseen_r1:.3f} NMI {f.nmi:.3f} F1 {f.f1:.3f}")
    return 0


def cmd_eval(args):
    with open(os.path.join(args.weights, "summary.json")) as fh:
        summary = json.load(fh)
    cfg = cfgmod.merge_with_defaults(summary["config"])
    train_cfg = cfgmod.build_train_config(cfg)
    params = experiments.load_params(os.path.join(args.weights, "weights"))
    dataset = _load_dataset(args.data)
    metrics = _final_metrics(params, dataset, train_cfg)
    payload = json.dumps(metrics, indent=2)
    if args.out:
        if os.path.exists(args.out) and not args.force:
            raise ConfigError(f"{args.out!r} exists; pass --force to overwrite")
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    print(payload)
    return 0


def _run_one(job):
    dataset, mlp_cfg, run_cfg = job
    _, history = experiments.train(dataset, mlp_cfg, run_cfg)
    return history.final()


def _fan_out(jobs, n_jobs):
    if n_jobs <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_one, jobs))


def _write_table_csv(rows, path):
    cols = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(format(r[c], ".17g") if isinstance(r[c], float)
                              else str(r[c]) for c in cols) + "\n")


def cmd_ablate(args):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cfg = cfgmod.load_config(args.config)
    dataset = _load_dataset(args.data)
    train_cfg = cfgmod.build_train_config(cfg)
    mlp_cfg = cfgmod.build_mlp_config(cfg, dataset.input_dim,
                                      train_cfg.normalize_embeddings)
    _ensure_outdir(args.out, args.force)
    base_seed = args.seed if args.seed is not None else train_cfg.seed
    seeds = [base_seed + i for i in range(args.seeds)]

    if args.dims:
        dims = [int(v) for v in args.dims.split(",")]
        jobs, keys = [], []
        for seed in seeds:
            for dim in dims:
                m = dataclasses.replace(mlp_cfg, embedding_dim=dim)
                for arm, lam in (("baseline", 0.0), ("regularized", train_cfg.ec.lam)):
                    run_cfg = dataclasses.replace(
                        train_cfg, seed=seed,
                        ec=dataclasses.replace(train_cfg.ec, lam=lam))
                    jobs.append((dataset, m, run_cfg))
                    keys.append({"dim": dim, "arm": arm, "seed": seed})
        finals = _fan_out(jobs, args.jobs)
        rows = [{**k, "seen_r1": f.seen_r1, "unseen_r1": f.unseen_r1,
                 "nmi": f.nmi, "f1": f.f1} for k, f in zip(keys, finals)]
        _write_table_csv(rows, os.path.join(args.out, "dim_sweep.csv"))
        print(f"wrote {len(rows)} rows to {args.out}/dim_sweep.csv")
        return 0

    if not args.lambdas:
        raise ConfigError("ablate needs --lambdas or --dims")
    lambdas = [float(v) for v in args.lambdas.split(",")]
    if len(lambdas) < 2 or 0.0 not in lambdas:
        raise ConfigError("--lambdas needs >= 2 values including 0")
    jobs, keys = [], []
    for seed in seeds:
        for lam in lambdas:
            run_cfg = dataclasses.replace(
                train_cfg, seed=seed,
                ec=dataclasses.replace(train_cfg.ec, lam=lam))
            jobs.append((dataset, mlp_cfg, run_cfg))
            keys.append({"lambda": lam, "seed": seed})
    finals = _fan_out(jobs, args.jobs)
    rows = [{**k, "seen_r1": f.seen_r1, "unseen_r1": f.unseen_r1,
             "nmi": f.nmi, "f1": f.f1} for k, f in zip(keys, finals)]
    _write_table_csv(rows, os.path.join(args.out, "lambda_ablation.csv"))

    # median unseen R@1 per lambda, plotted alongside the table
    medians = {lam: float(np.median([r["unseen_r1"] for r in rows
                                     if r["lambda"] == lam]))
               for lam in lambdas}
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(list(medians.keys()), list(medians.values()), "o-")
    ax.set_xlabel("lambda")
    ax.set_ylabel("median unseen Recall@1")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(os.path.join(args.out, "lambda_ablation.svg"), format="svg")
    plt.close(fig)
    for lam, v in medians.items():
        print(f"lambda {lam:g}: median unseen R@1 {v:.3f}")
    return 0


def cmd_verify(args):
    result = verify.run_verification(fuzz=args.fuzz, seed=args.seed)
    for c in result["checks"]:
        status = "PASS" if c["violations"] == 0 else "FAIL"
        print(f"{status}  {c['name']:<24} instances={c['instances']:<6} "
              f"violations={c['violations']} worst_margin={c['worst_margin']:.3e}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result, fh, indent=2)
    return 0 if result["passed"] else 1


def cmd_report(args):
    csv_path, svg_path = report.write_report(args.runs, args.out)
    print(f"wrote {csv_path} and {svg_path}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ecml",
                                description="Energy-confusion regularized "
                                            "metric learning lab")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate the synthetic benchmark CSV")
    g.add_argument("--config")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--force", action="store_true")
    g.set_defaults(fn=cmd_gen_data)

    t = sub.add_parser("train", help="train one run and write a run directory")
    t.add_argument("--config")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int)
    t.add_argument("--force", action="store_true")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="evaluate saved weights on a dataset")
    e.add_argument("--weights", required=True, help="run directory")
    e.add_argument("--data", required=True)
    e.add_argument("--out")
    e.add_argument("--force", action="store_true")
    e.set_defaults(fn=cmd_eval)

    a = sub.add_parser("ablate", help="lambda grid or embedding-size sweep")
    a.add_argument("--config")
    a.add_argument("--data", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--lambdas", help="comma separated, must include 0")
    a.add_argument("--dims", help="comma separated embedding sizes")
    a.add_argument("--seeds", type=int, default=1, help="number of seeds")
    a.add_argument("--seed", type=int, help="first seed")
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--force", action="store_true")
    a.set_defaults(fn=cmd_ablate)

    v = sub.add_parser("verify", help="run the divergence/gradient property suite")
    v.add_argument("--fuzz", type=int, default=1000)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--out", help="JSON report path")
    v.set_defaults(fn=cmd_verify)

    r = sub.add_parser("report", help="aggregate run directories")
    r.add_argument("runs", nargs="+", help="run directories")
    r.add_argument("--out", required=True)
    r.set_defaults(fn=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
