import dataclasses

import numpy as np
import pytest

from ecml.confusion import EcConfig
from ecml.errors import ConfigError
from ecml.experiments import (HISTORY_COLUMNS, TrainConfig, ablate_lambda,
                              embedding_size_sweep, load_params,
                              read_history_csv, save_params, train,
                              write_history_csv)
from ecml.net import MlpConfig
from ecml.sampling import BatchSpec
from ecml.synthetic import SynthConfig, generate


@pytest.fixture(scope="module")
def small_dataset():
    return generate(SynthConfig(seen_classes=4, unseen_classes=4,
                                samples_per_class=8, d_general=8,
                                d_shortcut=2, seed=3))


def small_mlp(dataset, normalize=False, dim=8):
    return MlpConfig(input_dim=dataset.input_dim, hidden_dims=[16],
                     embedding_dim=dim, normalize_output=normalize, seed=0)


def small_cfg(**overrides):
    base = dict(iterations=30, eval_every=10, batch=BatchSpec(4, 2),
                loss="binomial", seed=0)
    base.update(overrides)
    return TrainConfig(**base)


class TestTrainConfig:
    def test_defaults_valid(self):
        cfg = TrainConfig()
        assert cfg.loss == "binomial"
        assert cfg.loss_cfg is not None

    def test_triplet_normalizes(self):
        assert TrainConfig(loss="triplet").normalize_embeddings
        assert not TrainConfig(loss="npair").normalize_embeddings
        assert not TrainConfig(loss="binomial").normalize_embeddings

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            TrainConfig(loss="contrastive")
        with pytest.raises(ConfigError):
            TrainConfig(lr=0.0)
        with pytest.raises(ConfigError):
            TrainConfig(iterations=-1)
        with pytest.raises(ConfigError):
            TrainConfig(eval_every=0)


class TestTrain:
    def test_zero_iterations_single_record(self, small_dataset):
        cfg = small_cfg(iterations=0)
        _, hist = train(small_dataset, small_mlp(small_dataset), cfg)
        assert len(hist.records) == 1
        assert hist.records[0].iteration == 0
        assert hist.iteration_losses == []

    def test_record_schedule(self, small_dataset):
        cfg = small_cfg(iterations=25, eval_every=10)
        _, hist = train(small_dataset, small_mlp(small_dataset), cfg)
        assert [r.iteration for r in hist.records] == [0, 10, 20, 25]
        assert len(hist.iteration_losses) == 25

    def test_bitwise_reproducible(self, small_dataset):
        cfg = small_cfg(ec=EcConfig(lam=0.2))
        mlp = small_mlp(small_dataset)
        p1, h1 = train(small_dataset, mlp, cfg)
        p2, h2 = train(small_dataset, mlp, cfg)
        for a, b in zip(p1.arrays(), p2.arrays()):
            assert np.array_equal(a, b)
        assert h1.iteration_losses == h2.iteration_losses

    def test_seed_changes_trajectory(self, small_dataset):
        mlp = small_mlp(small_dataset)
        _, h1 = train(small_dataset, mlp, small_cfg(seed=0))
        _, h2 = train(small_dataset, mlp, small_cfg(seed=1))
        assert h1.iteration_losses != h2.iteration_losses

    def test_lambda_zero_matches_across_ec_settings(self, small_dataset):
        # with lambda=0 the regularizer machinery is skipped entirely, so
        # every other regularizer knob is irrelevant to the trajectory
        mlp = small_mlp(small_dataset)
        cfg_a = small_cfg(ec=EcConfig(lam=0.0, pair_mode="all_unordered",
                                      log_form=False, stop_gradient=False))
        cfg_b = small_cfg(ec=EcConfig(lam=0.0, pair_mode="sample_k", k=3,
                                      log_form=True, stop_gradient=True))
        p_a, h_a = train(small_dataset, mlp, cfg_a)
        p_b, h_b = train(small_dataset, mlp, cfg_b)
        assert h_a.iteration_losses == h_b.iteration_losses
        for a, b in zip(p_a.arrays(), p_b.arrays()):
            assert np.array_equal(a, b)

    def test_lambda_positive_changes_trajectory(self, small_dataset):
        mlp = small_mlp(small_dataset)
        _, h0 = train(small_dataset, mlp, small_cfg(ec=EcConfig(lam=0.0)))
        _, h1 = train(small_dataset, mlp, small_cfg(ec=EcConfig(lam=1.0)))
        assert h0.iteration_losses != h1.iteration_losses

    def test_ec_value_recorded(self, small_dataset):
        cfg = small_cfg(ec=EcConfig(lam=0.5))
        _, hist = train(small_dataset, small_mlp(small_dataset), cfg)
        assert hist.final().ec_value > 0.0

    @pytest.mark.parametrize("loss", ["triplet", "npair", "binomial"])
    def test_all_losses_run(self, small_dataset, loss):
        cfg = small_cfg(loss=loss, iterations=10, eval_every=5,
                        ec=EcConfig(lam=0.1))
        normalize = cfg.normalize_embeddings
        _, hist = train(small_dataset, small_mlp(small_dataset, normalize), cfg)
        assert np.isfinite(hist.final().train_loss)

    def test_input_dim_mismatch(self, small_dataset):
        mlp = MlpConfig(input_dim=small_dataset.input_dim + 1,
                        hidden_dims=[8], embedding_dim=4)
        with pytest.raises(ConfigError):
            train(small_dataset, mlp, small_cfg())


class TestAblation:
    def test_lambda_grid_rows(self, small_dataset):
        rows = ablate_lambda(small_dataset, small_mlp(small_dataset),
                             small_cfg(iterations=5, eval_every=5),
                             lambdas=[0.0, 0.5], seeds=[0, 1])
        assert len(rows) == 4
        assert {r["lambda"] for r in rows} == {0.0, 0.5}
        assert {r["seed"] for r in rows} == {0, 1}
        assert all(0.0 <= r["unseen_r1"] <= 1.0 for r in rows)

    def test_grid_must_include_zero(self, small_dataset):
        with pytest.raises(ConfigError):
            ablate_lambda(small_dataset, small_mlp(small_dataset),
                          small_cfg(), lambdas=[0.1, 0.5])
        with pytest.raises(ConfigError):
            ablate_lambda(small_dataset, small_mlp(small_dataset),
                          small_cfg(), lambdas=[0.0])

    def test_deterministic(self, small_dataset):
        args = (small_dataset, small_mlp(small_dataset),
                small_cfg(iterations=5, eval_every=5))
        a = ablate_lambda(*args, lambdas=[0.0, 0.3])
        b = ablate_lambda(*args, lambdas=[0.0, 0.3])
        assert a == b

    def test_dim_sweep_rows(self, small_dataset):
        cfg = small_cfg(iterations=5, eval_every=5, ec=EcConfig(lam=0.2))
        rows = embedding_size_sweep(small_dataset, [4, 8],
                                    small_mlp(small_dataset), cfg, seeds=[0])
        assert len(rows) == 4
        assert {(r["dim"], r["arm"]) for r in rows} == {
            (4, "baseline"), (4, "regularized"),
            (8, "baseline"), (8, "regularized")}

    def test_dim_sweep_empty_dims(self, small_dataset):
        with pytest.raises(ConfigError):
            embedding_size_sweep(small_dataset, [],
                                 small_mlp(small_dataset), small_cfg())


class TestSerialization:
    def test_history_round_trip(self, small_dataset, tmp_path):
        cfg = small_cfg(iterations=12, eval_every=5)
        _, hist = train(small_dataset, small_mlp(small_dataset), cfg)
        path = tmp_path / "history.csv"
        write_history_csv(hist, path)
        back = read_history_csv(path)
        assert len(back.records) == len(hist.records)
        for a, b in zip(back.records, hist.records):
            assert a.iteration == b.iteration
            for col in HISTORY_COLUMNS[1:]:
                va, vb = getattr(a, col), getattr(b, col)
                assert va == vb or (np.isnan(va) and np.isnan(vb))

    def test_history_header_check(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("iteration,wrong\n")
        with pytest.raises(ValueError):
            read_history_csv(path)

    def test_params_round_trip(self, small_dataset, tmp_path):
        params, _ = train(small_dataset, small_mlp(small_dataset),
                          small_cfg(iterations=3, eval_every=3))
        save_params(params, tmp_path / "weights")
        back = load_params(tmp_path / "weights")
        assert back.n_layers == params.n_layers
        for a, b in zip(back.arrays(), params.arrays()):
            assert np.array_equal(a, b)
