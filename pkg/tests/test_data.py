import numpy as np
import pytest

from fairpriv.data import (LabeledDataset, SplitSpec, SyntheticSpec, generate,
                           load_csv, make_splits, sample_labels, save_csv)
from fairpriv.evaluation import (balanced_accuracy, fit_attacker,
                                 fit_multinomial_logistic, attack_accuracy)


def uniform_joint():
    return np.full((2, 2, 2), 0.125)


def raw_feature_attack(ds, n_fit, seed=0):
    """Fit the evaluation attacker on raw features of one half, score the other."""
    fit = ds.subset(np.arange(n_fit))
    held = ds.subset(np.arange(n_fit, len(ds)))
    attacker = fit_attacker(fit.x, fit.y, fit.y_p, iters=1500, lr=1.0,
                            k_y=ds.k_y, k_p=ds.k_p)
    return attack_accuracy(attacker, held.x, held.y, held.y_p)


class TestSampleLabels:
    def test_point_mass(self):
        joint = np.zeros((2, 2, 2))
        joint[0, 1, 0] = 1.0
        y, y_a, y_p = sample_labels(joint, 50, seed=0)
        assert np.all(y == 0) and np.all(y_a == 1) and np.all(y_p == 0)

    def test_uniform_marginals(self):
        y, y_a, y_p = sample_labels(uniform_joint(), 10000, seed=1)
        for labels in (y, y_a, y_p):
            assert abs(labels.mean() - 0.5) < 0.02

    def test_same_seed_identical(self):
        a = sample_labels(uniform_joint(), 200, seed=5)
        b = sample_labels(uniform_joint(), 200, seed=5)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_invalid_joint(self):
        bad = np.full((2, 2, 2), 0.2)
        with pytest.raises(ValueError, match="sum"):
            sample_labels(bad, 10, seed=0)


class TestGenerate:
    def test_no_private_signal_gives_chance_attack(self):
        spec = SyntheticSpec(n=5000, mu_p=0.0, joint=uniform_joint(), seed=2)
        ds = generate(spec)
        ba = raw_feature_attack(ds, 2500)
        assert abs(ba - 0.5) < 0.03

    def test_strong_task_signal_linearly_separable(self):
        spec = SyntheticSpec(n=5000, mu_y=4.0, d_y=4, joint=uniform_joint(), seed=3)
        ds = generate(spec)
        mu, sd = ds.x.mean(0), ds.x.std(0)
        fit = slice(0, 2500)
        w, b = fit_multinomial_logistic((ds.x[fit] - mu) / sd, ds.y[fit], 2,
                                        np.ones(2), 1500, 1.0)
        preds = np.argmax(((ds.x[2500:] - mu) / sd) @ w + b, axis=1)
        assert np.mean(preds == ds.y[2500:]) > 0.95

    def test_noise_only_everything_at_chance(self):
        spec = SyntheticSpec(n=4000, d_y=0, d_a=0, d_p=0, d_noise=6,
                             joint=uniform_joint(), seed=4)
        ds = generate(spec)
        assert ds.dim == 6
        assert abs(raw_feature_attack(ds, 2000) - 0.5) < 0.05

    def test_deterministic(self):
        spec = SyntheticSpec(n=100, joint=uniform_joint(), seed=6)
        a, b = generate(spec), generate(spec)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y_p, b.y_p)

    def test_monotone_leakage(self):
        bas = []
        for mu_p in (0.0, 1.0, 2.0, 4.0):
            spec = SyntheticSpec(n=5000, mu_p=mu_p, joint=uniform_joint(), seed=7)
            bas.append(raw_feature_attack(generate(spec), 2500))
        for lo, hi in zip(bas, bas[1:]):
            assert hi >= lo - 0.02, f"leakage not monotone: {bas}"

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            generate(SyntheticSpec(n=0, joint=uniform_joint()))
        with pytest.raises(ValueError):
            generate(SyntheticSpec(n=10, d_y=0, d_a=0, d_p=0, d_noise=0,
                                   joint=uniform_joint()))


class TestMakeSplits:
    def test_trio_balanced_exact_counts(self):
        ds = generate(SyntheticSpec(n=3200, joint=uniform_joint(), seed=8))
        split = SplitSpec(val_fraction=0.2, test_fraction=0.2, test_mode="trio-balanced")
        _, _, test = make_splits(ds, split, seed=0)
        assert len(test) == 640
        for y in range(2):
            for a in range(2):
                for p in range(2):
                    cell = np.sum((test.y == y) & (test.y_a == a) & (test.y_p == p))
                    assert cell == 80

    def test_balanced_test_makes_constant_predictor_chance(self):
        ds = generate(SyntheticSpec(n=3200, joint=uniform_joint(), seed=8))
        split = SplitSpec(test_mode="trio-balanced")
        _, _, test = make_splits(ds, split, seed=1)
        assert balanced_accuracy(np.zeros(len(test), dtype=int), test.y_p) == 0.5

    def test_undersample_factor_one_balances_only(self):
        ds = generate(SyntheticSpec(n=2000, joint=uniform_joint(), seed=9))
        split = SplitSpec(train_mode="exacerbated", undersample_factor=1.0)
        train, _, _ = make_splits(ds, split, seed=2)
        counts = np.bincount(train.y)
        assert counts[0] == counts[1]

    def test_undersample_quarter(self):
        ds = generate(SyntheticSpec(n=8000, joint=uniform_joint(), seed=10))
        balanced, _, _ = make_splits(
            ds, SplitSpec(train_mode="exacerbated", undersample_factor=1.0), seed=3)
        reduced, _, _ = make_splits(
            ds, SplitSpec(train_mode="exacerbated", undersample_factor=0.25), seed=3)
        full_cell = np.sum((balanced.y == 1) & (balanced.y_a == 1))
        kept_cell = np.sum((reduced.y == 1) & (reduced.y_a == 1))
        assert kept_cell == int(np.floor(0.25 * full_cell))
        # other cells untouched
        assert (np.sum((reduced.y == 1) & (reduced.y_a == 0))
                == np.sum((balanced.y == 1) & (balanced.y_a == 0)))

    def test_disjoint_and_exhaustive_as_is(self):
        ds = generate(SyntheticSpec(n=500, joint=uniform_joint(), seed=11))
        tagged = LabeledDataset(np.arange(500, dtype=float).reshape(-1, 1) ,
                                ds.y, ds.y_a, ds.y_p, 2, 2, 2)
        train, val, test = make_splits(tagged, SplitSpec(), seed=4)
        ids = np.concatenate([train.x[:, 0], val.x[:, 0], test.x[:, 0]])
        assert len(ids) == 500 and len(np.unique(ids)) == 500

    def test_empty_cell_error_names_cell(self):
        joint = np.zeros((2, 2, 2))
        joint[0, 0, 0] = joint[1, 1, 1] = 0.5
        ds = generate(SyntheticSpec(n=400, joint=joint, seed=12))
        with pytest.raises(ValueError, match=r"y=0, y_a=0, y_p=1"):
            make_splits(ds, SplitSpec(test_mode="trio-balanced"), seed=5)

    def test_deterministic(self):
        ds = generate(SyntheticSpec(n=600, joint=uniform_joint(), seed=13))
        split = SplitSpec(train_mode="exacerbated", undersample_factor=0.5,
                          test_mode="trio-balanced")
        a = make_splits(ds, split, seed=6)
        b = make_splits(ds, split, seed=6)
        for da, db in zip(a, b):
            assert np.array_equal(da.x, db.x)

    def test_invalid_fractions(self):
        ds = generate(SyntheticSpec(n=100, joint=uniform_joint(), seed=14))
        with pytest.raises(ValueError):
            make_splits(ds, SplitSpec(val_fraction=0.6, test_fraction=0.5), seed=0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        ds = generate(SyntheticSpec(n=50, joint=uniform_joint(), seed=15))
        path = tmp_path / "data.csv"
        save_csv(ds, path)
        loaded = load_csv(path)
        assert np.array_equal(loaded.x, ds.x)
        assert np.array_equal(loaded.y, ds.y)
        assert np.array_equal(loaded.y_a, ds.y_a)
        assert np.array_equal(loaded.y_p, ds.y_p)

    def test_header_names(self, tmp_path):
        ds = generate(SyntheticSpec(n=3, d_y=1, d_a=1, d_p=1, d_noise=0,
                                    joint=uniform_joint(), seed=16))
        path = tmp_path / "data.csv"
        save_csv(ds, path)
        header = path.read_text().splitlines()[0]
        assert header == "x0,x1,x2,y,y_a,y_p"

    def test_missing_label_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x0,x1,y,y_a\n1.0,2.0,0,1\n")
        with pytest.raises(ValueError, match="y_a,y_p"):
            load_csv(path)

    def test_non_numeric_cell_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x0,y,y_a,y_p\n1.0,0,0,0\noops,1,0,1\n")
        with pytest.raises(ValueError, match=r":3:"):
            load_csv(path)

    def test_wrong_field_count_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x0,y,y_a,y_p\n1.0,0,0\n")
        with pytest.raises(ValueError, match=r":2:"):
            load_csv(path)
