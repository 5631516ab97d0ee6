import numpy as np
import pytest
from sklearn.linear_model import LogisticRegression

from ecml.errors import ConfigError
from ecml.synthetic import SynthConfig, generate, load_csv, save_csv


class TestGenerate:
    def test_shapes_and_split(self):
        cfg = SynthConfig(seen_classes=8, unseen_classes=8,
                          samples_per_class=16, d_general=16, d_shortcut=4,
                          seed=0)
        ds = generate(cfg)
        assert ds.features.shape == (256, 20)
        assert len(np.unique(ds.labels)) == 16
        assert len(ds.seen_classes) == 8 and len(ds.unseen_classes) == 8

    def test_deterministic(self):
        cfg = SynthConfig(seed=5)
        a, b = generate(cfg), generate(cfg)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_shortcut_separates_seen_classes(self):
        cfg = SynthConfig(seed=0)
        ds = generate(cfg)
        rows = ds.split_rows("seen")
        x = ds.features[rows][:, cfg.d_general:]
        y = ds.labels[rows]
        probe = LogisticRegression(max_iter=2000).fit(x, y)
        assert probe.score(x, y) >= 0.95

    def test_shortcut_uninformative_on_unseen(self):
        cfg = SynthConfig(seed=0)
        ds = generate(cfg)
        rows = ds.split_rows("unseen")
        x = ds.features[rows][:, cfg.d_general:]
        y = ds.labels[rows]
        probe = LogisticRegression(max_iter=2000).fit(x, y)
        chance = 1.0 / cfg.unseen_classes
        assert probe.score(x, y) <= 2.0 * chance

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            SynthConfig(seen_classes=1)
        with pytest.raises(ConfigError):
            SynthConfig(noise_sigma=0.0)
        with pytest.raises(ConfigError):
            SynthConfig(samples_per_class=3)


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        ds = generate(SynthConfig(seed=2, samples_per_class=4))
        path = tmp_path / "d.csv"
        save_csv(ds, path)
        back = load_csv(path)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)
        assert back.split == ds.split

    def test_byte_identical_output(self, tmp_path):
        ds = generate(SynthConfig(seed=2, samples_per_class=4))
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        save_csv(ds, p1)
        save_csv(ds, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_format(self, tmp_path):
        ds = generate(SynthConfig(seed=2, samples_per_class=4, d_general=2,
                                  d_shortcut=1))
        path = tmp_path / "d.csv"
        save_csv(ds, path)
        header = path.read_text().splitlines()[0]
        assert header == "label,split,f0,f1,f2"

    def test_class_in_both_splits_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("label,split,f0\n0,seen,1.0\n0,unseen,2.0\n")
        with pytest.raises(ValueError, match="both splits"):
            load_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="empty"):
            load_csv(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("label,split,f0,f1\n0,seen,1.0\n")
        with pytest.raises(ValueError, match=":2"):
            load_csv(path)

    def test_unknown_split_token_rejected(self, tmp_path):
        path = tmp_path / "tok.csv"
        path.write_text("label,split,f0\n0,train,1.0\n0,train,1.5\n")
        with pytest.raises(ValueError, match="split token"):
            load_csv(path)
