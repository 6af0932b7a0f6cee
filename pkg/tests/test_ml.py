import numpy as np
import pytest

from slabselect import _fallback
from slabselect._backend import available_backends
from slabselect.ml import (
    KNNClassifier, LDAClassifier, MLPClassifier, RandomForestClassifier, SVMClassifier,
    Scaling, TrainingError, gini, gini_importance, grow, load_model, make_model, save_model,
)
from slabselect.ml.knn import squared_distances
from slabselect.ml.persist import ModelFormatError, dumps, loads

from oracles import knn_oracle, tree_oracle

BACKENDS = available_backends()


# -- scaling -----------------------------------------------------------------

def test_standardize_population_sd():
    s = Scaling.fit(np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]))
    z = s.apply(np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]))
    np.testing.assert_allclose(z[:, 0], [-1.224744871391589, 0.0, 1.224744871391589], rtol=1e-12)
    np.testing.assert_array_equal(z[:, 1], 0.0)
    assert Scaling.from_dict(s.to_dict()).apply([[2.5, 1.0]]).tolist() == s.apply([[2.5, 1.0]]).tolist()


# -- LDA ---------------------------------------------------------------------

def test_lda_nearer_mean_wins():
    m = LDAClassifier.from_moments([[-1, 0, 0], [1, 0, 0]], np.eye(3), [0.5, 0.5], [0, 1])
    assert m._predict(np.array([[0.9, 0.0, 0.0]]))[0] == 1


def test_lda_priors_decide_equal_means():
    m = LDAClassifier.from_moments([[0, 0, 0], [0, 0, 0]], np.eye(3), [0.99, 0.01], [0, 2])
    rng = np.random.default_rng(0)
    assert set(m._predict(rng.normal(size=(50, 3)))) == {0}


def test_lda_blobs_match_bayes_rule():
    rng = np.random.default_rng(11)
    centers = np.array([[0, 0, 0], [5, 0, 0], [0, 5, 0]], dtype=float)
    X = np.vstack([c + rng.normal(size=(50, 3)) for c in centers])
    y = np.repeat([0, 1, 2], 50)
    model = LDAClassifier().fit(X, y)
    pred = model.predict(X)
    assert np.mean(pred == y) >= 0.99
    # Bayes rule with the fitted parameters, computed by explicit inverse
    Z = model.scaling.apply(X)
    inv = np.linalg.inv(model.covariance)
    scores = np.column_stack([
        Z @ inv @ mu - 0.5 * mu @ inv @ mu + np.log(pi) for mu, pi in zip(model.means, model.priors)
    ])
    np.testing.assert_array_equal(pred, np.argmax(scores, axis=1))
    np.testing.assert_allclose(model.discriminants(X), scores, rtol=1e-9, atol=1e-9)


def test_lda_needs_two_classes():
    with pytest.raises(TrainingError):
        LDAClassifier().fit(np.random.default_rng(0).normal(size=(5, 3)), np.zeros(5, dtype=int))


# -- KNN ---------------------------------------------------------------------

def test_knn_matches_bruteforce_oracle():
    rng = np.random.default_rng(3)
    X = rng.integers(0, 4, size=(60, 3)).astype(float)  # many distance ties
    y = rng.integers(0, 3, 60)
    model = KNNClassifier(k=4).fit(X, y)
    Q = rng.integers(0, 4, size=(200, 3)).astype(float)
    ref = knn_oracle(model.scaling.apply(X), y, model.scaling.apply(Q), 4)
    np.testing.assert_array_equal(model.predict(Q), ref)


def test_knn_k1_and_k_equals_n():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(12, 3))
    y = np.array([0, 1, 2, 1, 1, 0, 2, 1, 0, 1, 2, 1])
    np.testing.assert_array_equal(KNNClassifier(k=1).fit(X, y).predict(X), y)
    assert set(KNNClassifier(k=12).fit(X, y).predict(rng.normal(size=(20, 3)))) == {1}


def test_knn_k_too_large():
    with pytest.raises(TrainingError):
        KNNClassifier(k=7).fit(np.zeros((6, 3)), np.zeros(6, dtype=int))


def test_squared_distances():
    A = np.array([[0.0, 0.0], [1.0, 1.0]])
    B = np.array([[3.0, 4.0]])
    np.testing.assert_array_equal(squared_distances(A, B), [[25.0], [13.0]])


# -- SVM ---------------------------------------------------------------------

XOR = np.array([[0, 0, 0], [0, 1, 0], [1, 0, 0], [1, 1, 0],
                [0.1, 0.1, 0], [0.1, 0.9, 0], [0.9, 0.1, 0], [0.9, 0.9, 0]], dtype=float)
XOR_Y = np.array([0, 1, 1, 0, 0, 1, 1, 0])


def test_svm_separable_pair():
    m = SVMClassifier(C=10.0).fit(np.array([[-1.0, 0, 0], [1.0, 0, 0]]), np.array([0, 1]))
    vals = m.decision_values(np.array([[-1.0, 0, 0], [1.0, 0, 0]]))[:, 0]
    assert vals[0] > 0 > vals[1]
    assert m.predict(np.array([[-1.0, 0, 0], [1.0, 0, 0]])).tolist() == [0, 1]


def test_svm_xor_rbf_vs_linear():
    m = SVMClassifier(C=100.0, gamma=2.0).fit(XOR, XOR_Y)
    assert np.mean(m.predict(XOR) == XOR_Y) == 1.0
    # no linear separator on the same set gets all points right
    rng = np.random.default_rng(0)
    Z = m.scaling.apply(XOR)
    for _ in range(2000):
        w, b = rng.normal(size=3), rng.normal()
        pred = (Z @ w + b > 0).astype(int)
        assert max(np.mean(pred == XOR_Y), np.mean(pred != XOR_Y)) < 1.0


def test_svm_conflicting_duplicates_terminate():
    X = np.array([[0.0, 0, 0], [0.0, 0, 0], [1.0, 0, 0]])
    m = SVMClassifier().fit(X, np.array([0, 1, 1]))
    assert m.predict(X[:1])[0] in (0, 1)


def test_svm_argmax_invariant_to_scaling():
    m = SVMClassifier(C=100.0, gamma=2.0).fit(XOR, XOR_Y)
    vals = m.decision_values(XOR)
    np.testing.assert_array_equal(m._vote(vals), m._vote(vals * 7.5))


@pytest.mark.parametrize("bad", [dict(C=0.0), dict(gamma=-1.0)])
def test_svm_rejects_bad_parameters(bad):
    with pytest.raises(ValueError):
        SVMClassifier(**bad)


# -- MLP ---------------------------------------------------------------------

def test_mlp_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    Z = rng.normal(size=(5, 3))
    target = np.array([0, 1, 2, 1, 0])
    net = MLPClassifier(hidden_size=4, seed=3)
    weights = net.init_weights(3, 3)
    _, grad = MLPClassifier.loss_and_gradient(weights, Z, target)
    h = 1e-5
    for key, w in weights.items():
        for idx in np.ndindex(w.shape):
            orig = w[idx]
            w[idx] = orig + h
            up, _ = MLPClassifier.loss_and_gradient(weights, Z, target)
            w[idx] = orig - h
            down, _ = MLPClassifier.loss_and_gradient(weights, Z, target)
            w[idx] = orig
            fd = (up - down) / (2 * h)
            assert abs(fd - grad[key][idx]) <= 1e-5 * max(abs(fd), abs(grad[key][idx]), 1e-8)


def test_mlp_zero_weights_uniform():
    zero = {k: np.zeros_like(v) for k, v in MLPClassifier().init_weights(3, 3).items()}
    _, prob = MLPClassifier.forward(zero, np.random.default_rng(0).normal(size=(4, 3)))
    np.testing.assert_allclose(prob, 1 / 3, rtol=1e-15)


def test_mlp_separable_reaches_full_training_accuracy():
    rng = np.random.default_rng(2)
    X = np.vstack([rng.normal(-2, 0.5, (20, 3)), rng.normal(2, 0.5, (20, 3))])
    y = np.repeat([0, 2], 20)
    m = MLPClassifier(hidden_size=5, learning_rate=0.1, epochs=2000, seed=1).fit(X, y)
    assert np.mean(m.predict(X) == y) == 1.0
    p = m.predict_proba(X)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    assert m.loss_history[-1] < m.loss_history[0]


def test_mlp_nonfinite_loss_reports_epoch(monkeypatch):
    real = MLPClassifier.loss_and_gradient.__func__
    calls = []

    def flaky(cls, weights, Z, target):
        loss, grad = real(cls, weights, Z, target)
        calls.append(1)
        return (np.nan if len(calls) == 4 else loss), grad

    monkeypatch.setattr(MLPClassifier, "loss_and_gradient", classmethod(flaky))
    X = np.array([[0.0, 0, 0], [1.0, 1, 1], [2.0, 2, 2]])
    with pytest.raises(TrainingError, match="epoch 3"):
        MLPClassifier(epochs=10).fit(X, np.array([0, 1, 2]))


# -- trees and forests -------------------------------------------------------

def test_gini_formula():
    assert gini([5, 5, 0]) == 0.5
    assert gini([4, 0, 0]) == 0.0
    assert gini([0, 0, 0]) == 0.0


def test_four_point_split_and_importance():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    t = grow(X, y)
    assert t.feature[0] == 0 and t.threshold[0] == 1.5
    assert t.n_nodes == 3 and t.counts[1].tolist() == [2, 0, 0] and t.counts[2].tolist() == [0, 2, 0]
    assert t.feature_importance(1)[0] == 2.0


def test_pure_labels_single_leaf():
    t = grow(np.random.default_rng(0).normal(size=(9, 3)), np.full(9, 2))
    assert t.n_nodes == 1 and t.feature[0] == -1


def _compare_tree(t, ref):
    assert t.n_nodes == len(ref)
    for i, node in enumerate(ref):
        assert t.feature[i] == node["feature"]
        assert t.counts[i].tolist() == node["counts"]
        if node["feature"] >= 0:
            assert t.threshold[i] == node["threshold"]
            assert (t.left[i], t.right[i]) == (node["left"], node["right"])
            assert t.decrease[i] == pytest.approx(node["decrease"], rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_trees_match_exhaustive_oracle(backend):
    k = BACKENDS[backend]
    rng = np.random.default_rng(21)
    for trial in range(150):
        n = int(rng.integers(1, 11))
        X = rng.integers(0, 4, size=(n, 3)).astype(float)
        y = rng.integers(0, 3, n).astype(np.intp)
        rows = rng.integers(0, n, n).astype(np.intp)
        mtry = int(rng.integers(1, 4))
        keys = rng.random((2 * n - 1, 3))
        arrays = k.grow_tree(X, y, rows, 3, mtry, 1, keys)
        from slabselect.ml.tree import DecisionTree
        _compare_tree(DecisionTree(*(np.asarray(a) for a in arrays)), tree_oracle(X, y, rows, keys, mtry))


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
def test_tree_backends_bit_identical():
    rng = np.random.default_rng(8)
    X = np.column_stack([rng.choice([2, 4, 8], 400), rng.choice([4, 16, 64], 400),
                         rng.integers(0, 101, 400) / 100]).astype(float)
    y = rng.integers(0, 3, 400).astype(np.intp)
    s = rng.integers(0, 400, 400).astype(np.intp)
    keys = rng.random((799, 3))
    a = _fallback.grow_tree(X, y, s, 3, 1, 1, keys)
    b = BACKENDS["cython"].grow_tree(X, y, s, 3, 1, 1, keys)
    for u, v in zip(a, b):
        np.testing.assert_array_equal(np.asarray(u), np.asarray(v))


def test_min_leaf_respected():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(60, 3))
    y = rng.integers(0, 3, 60)
    t = grow(X, y, min_leaf=5)
    leaves = t.counts[t.is_leaf].sum(axis=1)
    assert leaves.min() >= 5
    assert leaves.sum() == 60


def test_single_tree_forest_equals_tree():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 3, 40)
    rf = RandomForestClassifier(n_trees=1, feature_subset_size=3, bootstrap=False).fit(X, y)
    t = grow(X, y, feature_subset_size=3, keys=rf.tree_streams()[0].random((79, 3)))
    np.testing.assert_array_equal(rf.predict(X), t.predict(X))


def test_forest_prediction_comes_from_some_tree():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(80, 3))
    y = rng.integers(0, 3, 80)
    rf = RandomForestClassifier(n_trees=15, seed=4).fit(X, y)
    Q = rng.normal(size=(50, 3))
    votes = rf.tree_votes(Q)
    pred = rf.predict(Q)
    assert all(pred[i] in votes[i] for i in range(len(Q)))


def test_importance_zero_for_unused_features():
    X = np.column_stack([np.arange(30.0), np.zeros(30), np.full(30, 7.0)])
    y = (np.arange(30) % 3).astype(int)
    imp = gini_importance(RandomForestClassifier(n_trees=10, seed=1).fit(X, y))
    assert imp[1] == 0.0 and imp[2] == 0.0 and imp[0] > 0
    with pytest.raises(TypeError):
        gini_importance(KNNClassifier())


def test_forest_determinism():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(100, 3))
    y = rng.integers(0, 3, 100)
    a = RandomForestClassifier(n_trees=20, seed=12).fit(X, y)
    b = RandomForestClassifier(n_trees=20, seed=12).fit(X, y)
    assert dumps(a) == dumps(b)
    c = RandomForestClassifier(n_trees=20, seed=13).fit(X, y)
    assert dumps(a) != dumps(c)


def test_tree_export_text():
    X = np.array([[0.0, 1, 0.5], [1.0, 2, 0.1], [2.0, 3, 0.9], [3.0, 4, 0.2]])
    t = grow(X, np.array([0, 0, 1, 1]))
    text = t.export_text()
    first = text.splitlines()[0]
    assert "split:" in first and any(f in first for f in ("sn_order", "num_cells", "scattering_ratio"))
    assert "100.0% of sample" in first


# -- persistence -------------------------------------------------------------

@pytest.mark.parametrize("kind", ["lda", "knn", "svm", "mlp", "rf"])
def test_round_trip_predictions(kind, tmp_path):
    rng = np.random.default_rng(10)
    X = np.column_stack([rng.choice([2, 8, 32], 90), rng.choice([4, 64, 1024], 90), rng.random(90)])
    y = np.where(X[:, 2] < 0.3, 2, np.where(X[:, 1] < 32, 0, 1))
    hp = {"rf": dict(n_trees=10), "mlp": dict(epochs=50)}.get(kind, {})
    model = make_model(kind, **hp).fit(X, y)
    path = tmp_path / "m.json"
    save_model(model, path, {"seed": 0})
    back, meta = load_model(path)
    assert meta == {"seed": 0}
    Q = np.column_stack([rng.choice([2, 8, 32], 40), rng.choice([4, 64, 1024], 40), rng.random(40)])
    np.testing.assert_array_equal(back.predict(Q), model.predict(Q))
    assert dumps(back, meta) == path.read_text()


def test_load_rejects_garbage():
    with pytest.raises(ModelFormatError):
        loads("{}")
    with pytest.raises(ModelFormatError):
        loads("not json")
    with pytest.raises(ModelFormatError):
        loads('{"format": "slabselect-model", "version": 99}')


def test_unknown_kind():
    with pytest.raises(ValueError, match="lda, knn, svm, mlp, rf"):
        make_model("xgb")
