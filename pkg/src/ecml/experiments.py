"""Training loop, evaluation schedule, lambda ablation, and the
embedding-size sweep, plus run-directory serialization."""

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import net
from .confusion import EcConfig, confusion_penalty
from .errors import ConfigError, TrainingDiverged
from .evaluation import clustering_report, recall_at_k
from .losses import (BinomialConfig, NPairConfig, TripletConfig,
                     binomial_loss, npair_loss, triplet_loss)
from .sampling import (BatchSpec, build_contrastive_pairs, build_npair_tuples,
                       build_triplets, sample_batch)

LOSS_NAMES = ("triplet", "npair", "binomial")


def default_loss_config(name):
    return {"triplet": TripletConfig, "npair": NPairConfig,
            "binomial": BinomialConfig}[name]()


@dataclass
class TrainConfig:
    iterations: int = 2000
    lr: float = 1e-3
    weight_decay: float = 2e-4
    last_layer_lr_mult: float = 10.0
    eval_every: int = 100
    batch: BatchSpec = field(default_factory=lambda: BatchSpec(8, 2))
    loss: str = "binomial"
    loss_cfg: object = None
    ec: EcConfig = field(default_factory=EcConfig)
    seed: int = 0
    recall_ks: tuple = (1, 2, 4, 8)

    def __post_init__(self):
        if self.loss not in LOSS_NAMES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.iterations < 0 or self.lr <= 0 or self.weight_decay < 0:
            raise ConfigError("bad iterations / lr / weight_decay")
        if self.eval_every < 1 or self.last_layer_lr_mult <= 0:
            raise ConfigError("bad eval_every / last_layer_lr_mult")
        if self.loss_cfg is None:
            self.loss_cfg = default_loss_config(self.loss)

    @property
    def normalize_embeddings(self):
        # triplet assumes unit-sphere embeddings; the other two measure
        # inner products / cosines on raw outputs
        return self.loss == "triplet"


@dataclass
class EvalRecord:
    iteration: int
    seen_r1: float
    unseen_r1: float
    nmi: float
    f1: float
    train_loss: float
    ec_value: float


@dataclass
class RunHistory:
    records: list = field(default_factory=list)
    iteration_losses: list = field(default_factory=list)

    def final(self):
        return self.records[-1]


def _base_loss(cfg: TrainConfig, embeddings, batch, rng):
    if cfg.loss == "triplet":
        return triplet_loss(embeddings, build_triplets(batch, rng), cfg.loss_cfg)
    if cfg.loss == "npair":
        return npair_loss(embeddings, build_npair_tuples(batch), cfg.loss_cfg)
    return binomial_loss(embeddings, build_contrastive_pairs(batch), cfg.loss_cfg)


def _evaluate(params, dataset, cfg: TrainConfig, iteration, loss_val, ec_val):
    out = {}
    for split in ("seen", "unseen"):
        rows = dataset.split_rows(split)
        emb, _ = net.forward(params, dataset.features[rows], cfg.normalize_embeddings)
        report = recall_at_k(emb, dataset.labels[rows], [1])
        out[split] = (emb, dataset.labels[rows], report.recall_at[1])
    cluster = clustering_report(out["unseen"][0], out["unseen"][1], cfg.seed)
    return EvalRecord(iteration, out["seen"][2], out["unseen"][2],
                      cluster.nmi, cluster.f1, loss_val, ec_val)


def train(dataset, mlp_cfg: net.MlpConfig, cfg: TrainConfig):
    """Run the full loop; returns (final params, RunHistory)."""
    if mlp_cfg.input_dim != dataset.input_dim:
        raise ConfigError(
            f"mlp input_dim {mlp_cfg.input_dim} != dataset {dataset.input_dim}")
    ss = np.random.SeedSequence(cfg.seed)
    batch_rng, pair_rng = [np.random.default_rng(s) for s in ss.spawn(2)]

    params = net.init_params(mlp_cfg)
    state = net.init_adam(params)
    lr_mults = [1.0] * (params.n_layers - 1) + [cfg.last_layer_lr_mult]

    history = RunHistory()
    history.records.append(_evaluate(params, dataset, cfg, 0, float("nan"), float("nan")))

    loss_val = ec_val = float("nan")
    for it in range(1, cfg.iterations + 1):
        batch = sample_batch(dataset, cfg.batch, "seen", batch_rng)
        emb, trace = net.forward(params, batch.features, cfg.normalize_embeddings)
        base = _base_loss(cfg, emb, batch, batch_rng)

        lam = cfg.ec.lam
        if lam > 0:
            pen = confusion_penalty(emb, batch.groups, cfg.ec, pair_rng)
            loss_val = base.value + lam * pen.value
            ec_val = pen.value
        else:
            loss_val, ec_val = base.value, 0.0
        if not np.isfinite(loss_val):
            exc = TrainingDiverged(f"non-finite loss at iteration {it}: {loss_val}")
            exc.last_params = params
            raise exc
        history.iteration_losses.append(loss_val)

        if lam > 0 and cfg.ec.stop_gradient:
            grads, _ = net.backward(trace, base.grad, params)
            ec_grads, _ = net.backward(trace, lam * pen.grad, params, last_layer_only=True)
            for a, b in zip(grads.arrays(), ec_grads.arrays()):
                a += b
        elif lam > 0:
            grads, _ = net.backward(trace, base.grad + lam * pen.grad, params)
        else:
            grads, _ = net.backward(trace, base.grad, params)

        params = net.adam_step(params, grads, state, cfg.lr,
                               cfg.weight_decay, lr_mults)

        if it % cfg.eval_every == 0 or it == cfg.iterations:
            rec = _evaluate(params, dataset, cfg, it, loss_val, ec_val)
            if history.records[-1].iteration != it:
                history.records.append(rec)
    return params, history


def ablate_lambda(dataset, mlp_cfg, cfg: TrainConfig, lambdas, seeds=None):
    """One full run per (lambda, seed); rows of final metrics."""
    if len(lambdas) < 2 or 0.0 not in [float(l) for l in lambdas]:
        raise ConfigError("lambda grid needs >= 2 values including 0")
    seeds = [cfg.seed] if seeds is None else list(seeds)
    rows = []
    for seed in seeds:
        for lam in lambdas:
            run_cfg = dataclasses.replace(
                cfg, seed=seed, ec=dataclasses.replace(cfg.ec, lam=float(lam)))
            _, hist = train(dataset, mlp_cfg, run_cfg)
            f = hist.final()
            rows.append({"lambda": float(lam), "seed": seed,
                         "seen_r1": f.seen_r1, "unseen_r1": f.unseen_r1,
                         "nmi": f.nmi, "f1": f.f1})
    return rows


def embedding_size_sweep(dataset, dims, mlp_cfg, cfg: TrainConfig, seeds=None):
    """Paired baseline (lambda=0) vs regularized runs per embedding size."""
    if not dims:
        raise ConfigError("dims must be non-empty")
    seeds = [cfg.seed] if seeds is None else list(seeds)
    rows = []
    for seed in seeds:
        for dim in dims:
            m_cfg = dataclasses.replace(mlp_cfg, embedding_dim=int(dim))
            for arm, lam in (("baseline", 0.0), ("regularized", cfg.ec.lam)):
                run_cfg = dataclasses.replace(
                    cfg, seed=seed, ec=dataclasses.replace(cfg.ec, lam=lam))
                _, hist = train(dataset, m_cfg, run_cfg)
                f = hist.final()
                rows.append({"dim": int(dim), "arm": arm, "seed": seed,
                             "seen_r1": f.seen_r1, "unseen_r1": f.unseen_r1,
                             "nmi": f.nmi, "f1": f.f1})
    return rows


HISTORY_COLUMNS = ("iteration", "seen_r1", "unseen_r1", "nmi", "f1",
                   "train_loss", "ec_value")


def write_history_csv(history: RunHistory, path):
    with open(path, "w") as fh:
        fh.write(",".join(HISTORY_COLUMNS) + "\n")
        for r in history.records:
            fh.write(",".join(format(getattr(r, c), ".17g") if c != "iteration"
                              else str(r.iteration)
                              for c in HISTORY_COLUMNS) + "\n")


def read_history_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != HISTORY_COLUMNS:
            raise ValueError(f"{path}: unexpected history columns {header}")
        records = []
        for ln in fh:
            vals = ln.strip().split(",")
            records.append(EvalRecord(int(vals[0]), *[float(v) for v in vals[1:]]))
    return RunHistory(records=records)


def save_params(params: net.MlpParams, dirpath):
    os.makedirs(dirpath, exist_ok=True)
    meta = {"n_layers": params.n_layers,
            "shapes": [list(w.shape) for w in params.weights]}
    with open(os.path.join(dirpath, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        np.savetxt(os.path.join(dirpath, f"layer{l}_W.csv"), w,
                   delimiter=",", fmt="%.17g")
        np.savetxt(os.path.join(dirpath, f"layer{l}_b.csv"), b[None, :],
                   delimiter=",", fmt="%.17g")


def load_params(dirpath) -> net.MlpParams:
    with open(os.path.join(dirpath, "meta.json")) as fh:
        meta = json.load(fh)
    weights, biases = [], []
    for l in range(meta["n_layers"]):
        w = np.loadtxt(os.path.join(dirpath, f"layer{l}_W.csv"),
                       delimiter=",", ndmin=2)
        b = np.loadtxt(os.path.join(dirpath, f"layer{l}_b.csv"),
                       delimiter=",", ndmin=2)[0]
        weights.append(w)
        biases.append(b)
    return net.MlpParams(weights, biases)
