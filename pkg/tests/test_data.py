"""Tests for dataset parsing, splits, synthetic fixtures, and caching."""

import numpy as np
import pytest

from sea.data import (
    Dataset,
    load_cora,
    load_dataset,
    make_split,
    save_dataset,
    synthetic_blobs,
)
from sea.errors import (
    ClassTooSmall,
    ConfigError,
    CorruptCache,
    MalformedRow,
    ShapeMismatch,
    UnknownNodeIdWarning,
)
from sea.graph import WeightedGraph
from sea.models import create_model
from sea.training import TrainConfig, train


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def _tiny_corpus(tmp_path, cites_text):
    content = _write(
        tmp_path / "tiny.content",
        "p3\t1\t0\t1\tml\n"
        "p1\t0\t1\t0\tdb\n"
        "p2\t1\t1\t0\tml\n"
        "p4\t0\t0\t1\tai\n",
    )
    cites = _write(tmp_path / "tiny.cites", cites_text)
    return content, cites


class TestLoadCora:
    def test_node_order_and_sorted_class_ids(self, tmp_path):
        content, cites = _tiny_corpus(tmp_path, "p3\tp1\n")
        data = load_cora(content, cites)
        assert data.n == 4 and data.num_features == 3
        assert data.class_names == ("ai", "db", "ml")
        # file order p3, p1, p2, p4 with labels ml, db, ml, ai
        assert data.labels.tolist() == [2, 1, 2, 0]
        assert np.array_equal(data.features[0], [1, 0, 1])
        assert np.array_equal(data.features[3], [0, 0, 1])

    def test_reciprocal_and_duplicate_citations_merge(self, tmp_path):
        content, cites = _tiny_corpus(
            tmp_path, "p3\tp1\np1\tp3\np3\tp1\np2\tp4\n"
        )
        data = load_cora(content, cites)
        assert data.graph.num_edges == 2
        assert {(p, q) for p, q, _ in data.graph.edge_list()} == {(0, 1), (2, 3)}
        assert np.all(data.graph.w == 1.0)

    def test_self_citations_dropped_silently(self, tmp_path):
        content, cites = _tiny_corpus(tmp_path, "p3\tp3\np1\tp2\n")
        data = load_cora(content, cites)
        assert data.graph.num_edges == 1

    def test_unknown_ids_warn_once_with_count(self, tmp_path):
        content, cites = _tiny_corpus(
            tmp_path, "p3\tp1\npX\tp1\np2\tpY\n"
        )
        with pytest.warns(UnknownNodeIdWarning, match="2 citation"):
            data = load_cora(content, cites)
        assert data.graph.num_edges == 1

    def test_masks_start_empty(self, tmp_path):
        content, cites = _tiny_corpus(tmp_path, "p3\tp1\n")
        data = load_cora(content, cites)
        assert not data.train_mask.any()
        assert not data.val_mask.any()
        assert not data.test_mask.any()

    def test_ragged_row_rejected(self, tmp_path):
        content = _write(
            tmp_path / "bad.content",
            "p1\t1\t0\tml\np2\t1\t0\t1\tdb\n",
        )
        cites = _write(tmp_path / "bad.cites", "")
        with pytest.raises(MalformedRow) as info:
            load_cora(content, cites)
        assert info.value.line_no == 2

    def test_duplicate_id_rejected(self, tmp_path):
        content = _write(
            tmp_path / "bad.content", "p1\t1\t0\tml\np1\t0\t1\tdb\n"
        )
        cites = _write(tmp_path / "bad.cites", "")
        with pytest.raises(MalformedRow, match="duplicate"):
            load_cora(content, cites)

    def test_non_numeric_feature_rejected(self, tmp_path):
        content = _write(
            tmp_path / "bad.content", "p1\t1\tx\tml\np2\t0\t1\tdb\n"
        )
        cites = _write(tmp_path / "bad.cites", "")
        with pytest.raises(MalformedRow, match="non-numeric"):
            load_cora(content, cites)

    def test_non_finite_feature_rejected(self, tmp_path):
        content = _write(
            tmp_path / "bad.content", "p1\t1\tinf\tml\np2\t0\t1\tdb\n"
        )
        cites = _write(tmp_path / "bad.cites", "")
        with pytest.raises(MalformedRow, match="non-finite"):
            load_cora(content, cites)

    def test_short_rows_rejected(self, tmp_path):
        content = _write(tmp_path / "bad.content", "p1\tml\np2\tdb\n")
        cites = _write(tmp_path / "bad.cites", "")
        with pytest.raises(MalformedRow):
            load_cora(content, cites)

    def test_bad_cites_arity_rejected(self, tmp_path):
        content, _ = _tiny_corpus(tmp_path, "")
        cites = _write(tmp_path / "bad.cites", "p1\tp2\tp3\n")
        with pytest.raises(MalformedRow):
            load_cora(content, cites)

    def test_single_row_rejected(self, tmp_path):
        content = _write(tmp_path / "bad.content", "p1\t1\t0\tml\n")
        cites = _write(tmp_path / "bad.cites", "")
        with pytest.raises(MalformedRow):
            load_cora(content, cites)

    def test_loading_is_deterministic(self, tmp_path):
        content, cites = _tiny_corpus(tmp_path, "p3\tp1\np2\tp4\n")
        a = load_cora(content, cites)
        b = load_cora(content, cites)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.graph.p, b.graph.p)


class TestBundledCorpus:
    def test_pinned_statistics(self, cora):
        assert cora.n == 2708
        assert cora.num_features == 1433
        assert cora.num_classes == 7
        assert cora.graph.num_edges == 5429
        assert set(np.unique(cora.features)) == {0.0, 1.0}

    def test_class_names_and_sizes(self, cora):
        assert cora.class_names == (
            "Case_Based",
            "Genetic_Algorithms",
            "Neural_Networks",
            "Probabilistic_Methods",
            "Reinforcement_Learning",
            "Rule_Learning",
            "Theory",
        )
        counts = np.bincount(cora.labels, minlength=7).tolist()
        assert counts == [298, 418, 818, 426, 217, 180, 351]

    def test_homophily_level(self, cora):
        same = np.mean(cora.labels[cora.graph.p] == cora.labels[cora.graph.q])
        assert same == pytest.approx(0.810, abs=0.005)

    def test_no_isolated_nodes(self, cora):
        assert cora.graph.degrees().min() > 0


class TestMakeSplit:
    def _labels(self, sizes):
        return np.concatenate(
            [np.full(size, c, dtype=np.int64) for c, size in enumerate(sizes)]
        )

    def test_planetoid_layout(self):
        labels = self._labels([400, 400, 400, 400])
        n = labels.size
        train, val, test = make_split(n, labels, strategy="planetoid")
        assert train.sum() == 80 and val.sum() == 500 and test.sum() == 1000
        for c in range(4):
            members = np.nonzero(labels == c)[0]
            assert train[members[:20]].all()
            assert not train[members[20:]].any()
        rest = np.nonzero(~train)[0]
        assert val[rest[:500]].all()
        remaining = np.nonzero(~train & ~val)[0]
        assert test[remaining[-1000:]].all()
        assert not (train & val).any() and not (train & test).any()

    def test_planetoid_small_class_rejected(self):
        labels = self._labels([30, 19])
        with pytest.raises(ClassTooSmall):
            make_split(labels.size, labels, strategy="planetoid")

    def test_random_balanced_100_gives_60_20_20(self):
        labels = self._labels([25, 25, 25, 25])
        train, val, test = make_split(100, labels, strategy="random", seed=1)
        assert train.sum() == 60 and val.sum() == 20 and test.sum() == 20
        for c in range(4):
            members = labels == c
            assert (train & members).sum() == 15
            assert (val & members).sum() == 5
            assert (test & members).sum() == 5

    def test_random_split_partitions_all_nodes(self, rng):
        labels = rng.integers(0, 3, size=200)
        labels[:3] = np.arange(3)
        train, val, test = make_split(200, labels, strategy="random", seed=7)
        combined = train.astype(int) + val.astype(int) + test.astype(int)
        assert np.all(combined == 1)

    def test_random_per_class_counts_are_rounded_fractions(self, rng):
        sizes = [31, 17, 52]
        labels = self._labels(sizes)
        train, val, test = make_split(
            labels.size, labels, strategy="random", seed=2
        )
        for c, m in enumerate(sizes):
            members = labels == c
            assert (train & members).sum() == int(m * 0.6 + 0.5)
            assert (val & members).sum() == int(m * 0.2 + 0.5)

    def test_random_seed_controls_assignment(self):
        labels = self._labels([40, 40])
        a = make_split(80, labels, seed=0)
        b = make_split(80, labels, seed=0)
        c = make_split(80, labels, seed=1)
        assert np.array_equal(a[0], b[0])
        assert not np.array_equal(a[0], c[0])

    def test_tiny_class_rejected_when_val_required(self):
        labels = self._labels([40, 2])
        with pytest.raises(ClassTooSmall):
            make_split(42, labels, strategy="random")
        # without a validation share the same class splits fine
        train, val, test = make_split(
            42, labels, strategy="random", val_frac=0.0, train_frac=0.5
        )
        assert val.sum() == 0 and (train & (labels == 1)).sum() == 1

    def test_strategy_and_fraction_validation(self):
        labels = self._labels([30, 30])
        with pytest.raises(ConfigError):
            make_split(60, labels, strategy="degree")
        with pytest.raises(ConfigError):
            make_split(60, labels, train_frac=0.0)
        with pytest.raises(ConfigError):
            make_split(60, labels, train_frac=0.9, val_frac=0.2)
        with pytest.raises(ShapeMismatch):
            make_split(61, labels)


class TestSyntheticBlobs:
    def test_zero_noise_edges_stay_within_classes(self):
        data = synthetic_blobs(n=70, d=6, classes=7, noise=0.0, seed=0)
        assert np.array_equal(
            data.labels[data.graph.p], data.labels[data.graph.q]
        )

    def test_label_balance_and_names(self):
        data = synthetic_blobs(n=71, d=4, classes=7, noise=0.2, seed=1)
        counts = np.bincount(data.labels, minlength=7)
        assert counts.max() - counts.min() <= 1
        assert data.class_names == tuple(f"blob_{c}" for c in range(7))

    def test_seeded_determinism(self):
        a = synthetic_blobs(n=60, d=5, classes=3, noise=0.3, seed=9)
        b = synthetic_blobs(n=60, d=5, classes=3, noise=0.3, seed=9)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.graph.p, b.graph.p)
        assert np.array_equal(a.train_mask, b.train_mask)

    def test_rejects_fewer_nodes_than_classes(self):
        with pytest.raises(ConfigError):
            synthetic_blobs(n=3, d=2, classes=4, noise=0.1)

    def test_low_noise_blobs_are_learnable(self):
        data = synthetic_blobs(n=210, d=8, classes=3, noise=0.5, seed=0)
        model = create_model("GCN", 8, 3, seed=0)
        model, _ = train(model, data, TrainConfig(epochs=30))
        from sea.models import evaluate

        assert evaluate(model, data, data.test_mask) >= 0.95


class TestDatasetValidation:
    def _parts(self, rng, n=6):
        g = WeightedGraph.from_edges(n, [(0, 1, 1.0), (2, 3, 1.0)])
        x = rng.normal(size=(n, 3))
        labels = np.zeros(n, dtype=np.int64)
        empty = np.zeros(n, dtype=bool)
        return g, x, labels, empty

    def test_overlapping_masks_rejected(self, rng):
        g, x, labels, empty = self._parts(rng)
        both = np.ones(6, dtype=bool)
        with pytest.raises(ShapeMismatch):
            Dataset(g, x, labels, both, both, empty)

    def test_size_mismatches_rejected(self, rng):
        g, x, labels, empty = self._parts(rng)
        with pytest.raises(ShapeMismatch):
            Dataset(g, x[:5], labels[:5], empty[:5], empty[:5], empty[:5])
        with pytest.raises(ShapeMismatch):
            Dataset(g, x, labels[:5], empty, empty, empty)
        with pytest.raises(ShapeMismatch):
            Dataset(g, x, labels, empty[:5], empty, empty)

    def test_non_finite_features_rejected(self, rng):
        g, x, labels, empty = self._parts(rng)
        x[0, 0] = np.inf
        with pytest.raises(ShapeMismatch):
            Dataset(g, x, labels, empty, empty, empty)

    def test_negative_labels_rejected(self, rng):
        g, x, labels, empty = self._parts(rng)
        labels[2] = -1
        with pytest.raises(ShapeMismatch):
            Dataset(g, x, labels, empty, empty, empty)

    def test_with_masks_replaces_only_masks(self, rng):
        g, x, labels, empty = self._parts(rng)
        data = Dataset(g, x, labels, empty, empty, empty)
        train = np.zeros(6, dtype=bool)
        train[:2] = True
        out = data.with_masks(train, empty, empty)
        assert out.train_mask.sum() == 2
        assert out.graph is data.graph
        assert not data.train_mask.any()


class TestCache:
    def test_round_trip_is_bitwise(self, tmp_path):
        data = synthetic_blobs(n=40, d=4, classes=4, noise=0.4, seed=3)
        path = tmp_path / "blob.npz"
        save_dataset(data, str(path))
        loaded = load_dataset(str(path))
        assert np.array_equal(loaded.features, data.features)
        assert np.array_equal(loaded.labels, data.labels)
        assert np.array_equal(loaded.graph.p, data.graph.p)
        assert np.array_equal(loaded.graph.w, data.graph.w)
        assert np.array_equal(loaded.train_mask, data.train_mask)
        assert np.array_equal(loaded.val_mask, data.val_mask)
        assert np.array_equal(loaded.test_mask, data.test_mask)
        assert loaded.class_names == data.class_names

    def test_tampered_file_raises_corrupt_cache(self, tmp_path):
        data = synthetic_blobs(n=30, d=4, classes=3, noise=0.4, seed=4)
        path = tmp_path / "blob.npz"
        save_dataset(data, str(path))
        with np.load(path) as blob:
            arrays = dict(blob.items())
        arrays["features"] = arrays["features"].copy()
        arrays["features"][0, 0] += 1.0  # checksum left stale
        np.savez(path, **arrays)
        with pytest.raises(CorruptCache):
            load_dataset(str(path))

    def test_missing_class_names_round_trip_to_none(self, tmp_path, rng):
        g = WeightedGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 2.0)])
        empty = np.zeros(4, dtype=bool)
        data = Dataset(g, rng.normal(size=(4, 2)), np.zeros(4, np.int64),
                       empty, empty, empty)
        path = tmp_path / "anon.npz"
        save_dataset(data, str(path))
        assert load_dataset(str(path)).class_names is None
