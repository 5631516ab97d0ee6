"""JSON run-config loading with defaults for every field and strict
rejection of unknown keys.
"""

import json

from .confusion import EcConfig
from .errors import ConfigError
from .experiments import TrainConfig, default_loss_config
from .losses import BinomialConfig, TripletConfig
from .net import MlpConfig
from .sampling import BatchSpec
from .synthetic import SynthConfig

DEFAULTS = {
    "mlp": {
        "hidden_dims": [64, 64],
        "embedding_dim": 32,
        "seed": 0,
    },
    "train": {
        "iterations": 2000,
        "lr": 1e-3,
        "weight_decay": 2e-4,
        "last_layer_lr_mult": 10.0,
        "eval_every": 100,
        "classes_per_batch": 8,
        "instances_per_class": 2,
        "seed": 0,
    },
    "loss": {
        "name": "binomial",
        "margin": 0.1,
        "alpha": 2.0,
        "beta": 0.5,
        "eta_pos": 1.0,
        "eta_neg": 25.0,
    },
    "ec": {
        "lambda": 0.1,
        "pair_mode": "sample_k",
        "k": 8,
        "log_form": True,
        "stop_gradient": True,
    },
    "data": {
        "seen_classes": 8,
        "unseen_classes": 8,
        "samples_per_class": 16,
        "d_general": 16,
        "d_shortcut": 4,
        "noise_sigma": 0.3,
        "shortcut_gain": 6.0,
        "seed": 0,
    },
    "eval": {
        "recall_ks": [1, 2, 4, 8],
    },
}


def merge_with_defaults(user, defaults=None, path="config"):
    """Overlay a user dict on the defaults; unknown keys are an error."""
    defaults = DEFAULTS if defaults is None else defaults
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: expected an object, got {type(user).__name__}")
    merged = {}
    for key, default in defaults.items():
        if key in user and isinstance(default, dict):
            merged[key] = merge_with_defaults(user[key], default, f"{path}.{key}")
        elif key in user:
            merged[key] = user[key]
        else:
            merged[key] = default
    for key in user:
        if key not in defaults:
            raise ConfigError(f"{path}.{key}: unknown key")
    return merged


def load_config(path=None):
    """Read and validate a JSON config file; None means all defaults."""
    if path is None:
        return merge_with_defaults({})
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return merge_with_defaults(raw)


def build_synth_config(cfg) -> SynthConfig:
    return SynthConfig(**cfg["data"])


def build_mlp_config(cfg, input_dim, normalize) -> MlpConfig:
    m = cfg["mlp"]
    return MlpConfig(input_dim=input_dim, hidden_dims=list(m["hidden_dims"]),
                     embedding_dim=m["embedding_dim"],
                     normalize_output=normalize, seed=m["seed"])


def build_loss_config(cfg):
    name = cfg["loss"]["name"]
    if name == "triplet":
        return TripletConfig(margin=cfg["loss"]["margin"])
    if name == "binomial":
        return BinomialConfig(alpha=cfg["loss"]["alpha"], beta=cfg["loss"]["beta"],
                              eta_pos=cfg["loss"]["eta_pos"],
                              eta_neg=cfg["loss"]["eta_neg"])
    if name == "npair":
        return default_loss_config("npair")
    raise ConfigError(f"config.loss.name: unknown loss {name!r}")


def build_train_config(cfg) -> TrainConfig:
    t = cfg["train"]
    e = cfg["ec"]
    return TrainConfig(
        iterations=t["iterations"], lr=t["lr"], weight_decay=t["weight_decay"],
        last_layer_lr_mult=t["last_layer_lr_mult"], eval_every=t["eval_every"],
        batch=BatchSpec(t["classes_per_batch"], t["instances_per_class"]),
        loss=cfg["loss"]["name"], loss_cfg=build_loss_config(cfg),
        ec=EcConfig(lam=e["lambda"], pair_mode=e["pair_mode"], k=e["k"],
                    log_form=e["log_form"], stop_gradient=e["stop_gradient"]),
        seed=t["seed"], recall_ks=tuple(cfg["eval"]["recall_ks"]))
