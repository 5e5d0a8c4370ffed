import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weatherclf import svm
from weatherclf.errors import DimensionError, ParameterError, SchemaError

from oracles import svm_qp


def projected_gradient(X, y, w, b, alpha, c):
    g = y * (X @ w + b) - 1.0
    return np.where(alpha <= 0, np.minimum(g, 0), np.where(alpha >= c, np.maximum(g, 0), g))


def blobs(rng, n_per=30, d=20, classes=svm.CLASSES, spread=0.3, gap=6.0):
    X, y = [], []
    for k, cls in enumerate(classes):
        center = np.zeros(d)
        center[k % d] = gap
        X.append(center + spread * rng.normal(size=(n_per, d)))
        y += [cls] * n_per
    X = np.vstack(X)
    return svm.LabeledDataset(X, np.array(y, dtype=object), [f"p{i}" for i in range(len(y))],
                              tuple(f"f{j}" for j in range(d)))


class TestScaler:
    def test_simple_column(self):
        s = svm.fit_scaler(np.array([[1.0], [2.0], [3.0]]))
        assert s.means[0] == 2.0
        assert s.stds[0] == pytest.approx(np.sqrt(2 / 3), abs=1e-12)

    def test_constant_guard(self):
        s = svm.fit_scaler(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]))
        assert s.means[0] == 5.0 and s.stds[0] == 1.0
        Z = s.transform(np.array([[7.0, 2.0]]))
        assert Z[0, 0] == 2.0

    def test_standardises(self, rng):
        X = rng.normal(3.0, 7.0, size=(50, 6))
        Z = svm.transform(svm.fit_scaler(X), X)
        assert np.all(np.abs(Z.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(Z.var(axis=0) - 1) < 1e-9)
        s2 = svm.fit_scaler(Z)
        assert np.allclose(s2.means, 0, atol=1e-12) and np.allclose(s2.stds, 1, atol=1e-12)
        np.testing.assert_allclose(s2.transform(Z), Z, atol=1e-9)

    def test_row_of_means_is_zero(self, rng):
        X = rng.normal(size=(10, 4))
        s = svm.fit_scaler(X)
        assert np.array_equal(s.transform(s.means), np.zeros(4))

    def test_errors(self):
        with pytest.raises(DimensionError):
            svm.fit_scaler(np.zeros((0, 3)))
        with pytest.raises(DimensionError):
            svm.fit_scaler(np.zeros((4, 3))).transform(np.zeros((2, 2)))


class TestBinary:
    def test_symmetric_1d(self):
        m = svm.train_binary(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]), c=1.0)
        assert m.converged
        assert m.weights[0] == pytest.approx(1.0, abs=1e-4)
        assert m.bias == pytest.approx(0.0, abs=1e-4)
        assert m.decision_function(np.array([[2.0]]))[0] == pytest.approx(2.0, abs=1e-3)

    def test_eight_point_qp(self):
        X = np.array([[0, 0], [1, 0.5], [0.5, 1.5], [-0.5, 0.8], [3, 3], [4, 2.5], [3.5, 4], [2.5, 4.2]])
        y = np.array([-1, -1, -1, -1, 1, 1, 1, 1], dtype=float)
        m = svm.train_binary(X, y, c=1.0, tol=1e-8, max_iter=100000)
        w_ref, b_ref = svm_qp(X, y, 1.0)
        assert np.max(np.abs(m.weights - w_ref)) < 1e-3
        assert abs(m.bias - b_ref) < 1e-3

    def test_random_small_problems_match_qp(self):
        worst = 0.0
        for s in range(50):
            r = np.random.default_rng(1000 + s)
            n, d = int(r.integers(3, 11)), int(r.integers(1, 4))
            X = r.normal(size=(n, d))
            y = np.where(r.random(n) < 0.5, -1.0, 1.0)
            y[0], y[1] = 1.0, -1.0
            c = float(10 ** r.uniform(-1, 1))
            m = svm.train_binary(X, y, c=c, tol=1e-9, max_iter=200000)
            w_ref, b_ref = svm_qp(X, y, c)
            worst = max(worst, np.max(np.abs(m.weights - w_ref)), abs(m.bias - b_ref))
        assert worst < 1e-3

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), c=st.floats(0.01, 10.0))
    def test_kkt_and_box(self, seed, c):
        r = np.random.default_rng(seed)
        n, d = int(r.integers(4, 40)), int(r.integers(1, 6))
        X = r.normal(size=(n, d))
        y = np.where(X[:, 0] + 0.5 * r.normal(size=n) > 0, 1.0, -1.0)
        y[0], y[1] = 1.0, -1.0
        m = svm.train_binary(X, y, c=c)
        assert np.all(m.alpha >= 0) and np.all(m.alpha <= c)
        if m.converged:
            assert np.max(np.abs(projected_gradient(X, y, m.weights, m.bias, m.alpha, c))) < svm.DEFAULT_TOL
        w_from_alpha = (m.alpha * y) @ np.hstack([X, np.ones((n, 1))])
        np.testing.assert_allclose(np.append(m.weights, m.bias), w_from_alpha, atol=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), c=st.floats(0.05, 20.0))
    def test_dual_monotone_and_gap_closes(self, seed, c):
        r = np.random.default_rng(seed)
        n = int(r.integers(6, 40))
        X = r.normal(size=(n, 3))
        y = np.where(X[:, 1] + 0.3 * r.normal(size=n) > 0, 1.0, -1.0)
        y[0], y[1] = 1.0, -1.0
        m = svm.train_binary(X, y, c=c, tol=1e-6, max_iter=5000)
        dual = m.dual_history
        assert np.all(np.diff(dual) <= 1e-8 * (1 + np.abs(dual[:-1])))
        primal = m.primal_history
        # weak duality: primal >= -dual at every sweep
        assert np.all(primal + dual >= -1e-8 * (1 + np.abs(primal)))
        if m.converged:
            gap = primal[-1] + dual[-1]
            assert gap <= 1e-3 * max(1.0, abs(primal[-1]))

    def test_errors(self):
        X = np.zeros((3, 2))
        with pytest.raises(ParameterError):
            svm.train_binary(X, np.ones(3))
        with pytest.raises(ParameterError):
            svm.train_binary(np.array([[np.nan, 0], [1, 1]]), np.array([1.0, -1.0]))
        with pytest.raises(ParameterError):
            svm.train_binary(X, np.array([1.0, -1.0, 0.0]))
        with pytest.raises(ParameterError):
            svm.train_binary(X, np.array([1.0, -1.0, 1.0]), c=0.0)
        with pytest.raises(DimensionError):
            svm.train_binary(X, np.array([1.0, -1.0]))


class TestOvr:
    def test_blobs_perfect(self, rng):
        data = blobs(rng)
        model = svm.train_ovr(data, c=1.0)
        assert model.classes == svm.CLASSES
        assert svm.accuracy(model, data) == 1.0
        assert model.predict(data.X[0]) == data.y[0]

    def test_two_class_scores_mirror(self, rng):
        data = blobs(rng, n_per=40, d=5, classes=("clear", "rain"), spread=1.5, gap=2.0)
        model = svm.train_ovr(data, c=1.0)
        s = model.decision_scores(data.X)
        assert np.mean(np.sign(s[:, 0]) == -np.sign(s[:, 1])) >= 0.95

    def test_single_class(self, rng):
        data = blobs(rng, classes=("haze",))
        with pytest.raises(ParameterError):
            svm.train_ovr(data)

    def _toy(self, weights, biases):
        names = ("a", "b")
        scaler = svm.Scaler(np.zeros(2), np.ones(2))
        return svm.WeatherModel(names, svm.CLASSES, scaler, np.array(weights, float), np.array(biases, float), 1.0)

    def test_argmax_and_ties(self):
        m = self._toy(np.zeros((4, 2)), [-1, 3, 0, 0])
        assert m.predict(np.zeros(2)) == "haze"
        m = self._toy(np.zeros((4, 2)), [-1, 2, 0, 2])
        assert m.predict(np.zeros(2)) == "haze"

    def test_scores_affine_and_hyperplane(self, rng):
        w = rng.normal(size=(4, 2))
        m = self._toy(w, [0.5, -0.2, 0.0, 1.0])
        x1, x2 = rng.normal(size=2), rng.normal(size=2)
        lam = 0.3
        np.testing.assert_allclose(
            m.decision_scores(lam * x1 + (1 - lam) * x2),
            lam * m.decision_scores(x1) + (1 - lam) * m.decision_scores(x2),
            atol=1e-12,
        )
        # a point on class 0's hyperplane: w0 . x = -b0
        x = -0.5 * w[0] / (w[0] @ w[0])
        assert abs(m.decision_scores(x)[0]) < 1e-12

    def test_schema_mismatch(self):
        m = self._toy(np.zeros((4, 2)), np.zeros(4))
        with pytest.raises(SchemaError):
            m.predict(np.zeros(3))

    def test_shift_invariance(self, rng):
        data = blobs(rng, n_per=25, d=6, spread=1.0, gap=2.5)
        shifted = svm.LabeledDataset(data.X.copy(), data.y, data.paths, data.feature_names)
        shifted.X[:, 2] += 1000.0
        a = svm.train_ovr(data).predict(data.X)
        b = svm.train_ovr(shifted).predict(shifted.X)
        assert np.array_equal(a, b)

    def test_deterministic_bytes(self, rng, tmp_path):
        data = blobs(rng, n_per=15, d=20, spread=2.0, gap=1.5)
        data = svm.LabeledDataset(data.X, data.y, data.paths)
        for name in ("a.json", "b.json"):
            svm.save_model(svm.fit_protocol(data, c_grid=(0.1, 1.0), k=3, seed=4), tmp_path / name)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestFoldsAndSplit:
    def test_exact_folds(self, rng):
        y = np.array([c for c in svm.CLASSES for _ in range(25)], dtype=object)
        folds = svm.stratified_kfold(y, 5, seed=1)
        assert [len(f) for f in folds] == [20] * 5
        for f in folds:
            assert all(np.sum(y[f] == c) == 5 for c in svm.CLASSES)
        allidx = np.sort(np.concatenate(folds))
        assert np.array_equal(allidx, np.arange(100))
        again = svm.stratified_kfold(y, 5, seed=1)
        assert all(np.array_equal(a, b) for a, b in zip(folds, again))

    @settings(max_examples=40, deadline=None)
    @given(sizes=st.lists(st.integers(5, 30), min_size=2, max_size=4), k=st.integers(2, 5), seed=st.integers(0, 99))
    def test_fold_proportions(self, sizes, k, seed):
        y = np.array([f"c{i}" for i, n in enumerate(sizes) for _ in range(n)], dtype=object)
        folds = svm.stratified_kfold(y, k, seed)
        assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(len(y)))
        for f in folds:
            for i, n in enumerate(sizes):
                assert abs(np.sum(y[f] == f"c{i}") - n / k) <= 1

    def test_small_class(self):
        y = np.array(["clear"] * 10 + ["haze"] * 3, dtype=object)
        with pytest.raises(ParameterError):
            svm.stratified_kfold(y, 5)
        with pytest.raises(ParameterError):
            svm.stratified_kfold(y, 1)

    def test_split(self):
        y = np.array([c for c in svm.CLASSES for _ in range(25)], dtype=object)
        tr, te = svm.split_train_test(y, 0.8, seed=3)
        assert len(tr) == 80 and len(te) == 20
        assert not set(tr) & set(te)
        assert all(np.sum(y[te] == c) == 5 for c in svm.CLASSES)
        tr2, te2 = svm.split_train_test(y, 0.8, seed=3)
        assert np.array_equal(tr, tr2) and np.array_equal(te, te2)

    def test_split_errors(self):
        y = np.array(["clear", "haze"] * 5, dtype=object)
        with pytest.raises(ParameterError):
            svm.split_train_test(y, 1.0)
        with pytest.raises(ParameterError):
            svm.split_train_test(y[:4], 0.8)


class TestGridSearch:
    def test_single_value(self, rng):
        data = blobs(rng, n_per=10, d=4)
        best, table = svm.grid_search_cv(data, (0.5,), k=2)
        assert best == 0.5 and table[0][0] == 0.5 and 0 <= table[0][1] <= 1

    def test_ties_pick_smaller(self, rng):
        data = blobs(rng, n_per=10, d=4)
        best, table = svm.grid_search_cv(data, (10.0, 1.0), k=2)
        assert table[0][1] == table[1][1] == 1.0
        assert best == 1.0

    def test_no_leakage(self, rng, monkeypatch):
        data = blobs(rng, n_per=10, d=4)
        seen = []
        real = svm.fit_scaler

        def spy(X):
            seen.append(len(X))
            return real(X)

        monkeypatch.setattr(svm, "fit_scaler", spy)
        svm.grid_search_cv(data, (1.0,), k=4)
        assert seen == [30] * 4


class TestModelIo:
    def test_round_trip(self, rng, tmp_path):
        data = blobs(rng, n_per=12, d=20)
        data = svm.LabeledDataset(data.X, data.y, data.paths)
        model = svm.fit_protocol(data, c_grid=(0.1, 1.0), k=3)
        path = tmp_path / "m.json"
        svm.save_model(model, path)
        back = svm.load_model(path)
        assert np.array_equal(back.weights, model.weights)
        assert np.array_equal(back.biases, model.biases)
        assert np.array_equal(back.scaler.means, model.scaler.means)
        assert np.array_equal(back.scaler.stds, model.scaler.stds)
        assert back.cv_table == model.cv_table and back.best_c == model.best_c
        assert np.array_equal(back.predict(data.X), model.predict(data.X))
        d = json.loads(path.read_text())
        assert d["format_version"] == 1 and len(d["feature_schema"]) == 20
        assert [m["class"] for m in d["machines"]] == list(svm.CLASSES)
        assert d["training"]["folds"] == 3

    def test_bad_files(self, rng, tmp_path):
        data = blobs(rng, n_per=8, d=20)
        data = svm.LabeledDataset(data.X, data.y, data.paths)
        d = svm.model_to_dict(svm.train_ovr(data))
        bad = dict(d, feature_schema=d["feature_schema"][::-1])
        with pytest.raises(SchemaError):
            svm.model_from_dict(bad)
        with pytest.raises(SchemaError):
            svm.model_from_dict(dict(d, format_version=2))
        broken = dict(d)
        del broken["scaler"]
        with pytest.raises(SchemaError):
            svm.model_from_dict(broken)
        p = tmp_path / "x.json"
        p.write_text("{not json")
        with pytest.raises(SchemaError):
            svm.load_model(p)
