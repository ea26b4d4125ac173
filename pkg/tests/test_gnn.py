import numpy as np
import pytest
import scipy.sparse as sp

from tape_app.errors import DatasetFormatError, NumericError, ShapeError
from tape_app.gnn import (CheckpointMeta, GnnConfig, GnnModel, build_model, forward, load_checkpoint,
                          normalize_adjacency, predict, save_checkpoint, train_gnn)
from tape_app.numeric import Tape
from tape_app.numeric.gradcheck import check_gradients
from tape_app.numeric.sparse import csr_from_edges, permute


def random_graph(n, seed, density=0.3):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < density, k=1)
    src, dst = np.nonzero(upper)
    return csr_from_edges(n, src, dst)


def test_gcn_normalization_small_cases():
    single = normalize_adjacency(sp.csr_matrix((1, 1), dtype=np.float32), "gcn")
    assert single.toarray().tolist() == [[1.0]]
    pair = normalize_adjacency(csr_from_edges(2, [0], [1]), "gcn")
    np.testing.assert_allclose(pair.toarray(), np.full((2, 2), 0.5), rtol=1e-6)


def test_gcn_normalization_is_symmetric_with_unit_spectral_radius():
    a = normalize_adjacency(random_graph(12, seed=2), "gcn", dtype=np.float64).toarray()
    np.testing.assert_allclose(a, a.T, atol=1e-12)
    assert np.max(np.abs(np.linalg.eigvalsh(a))) == pytest.approx(1.0, abs=1e-9)


def test_sage_normalization_averages_neighbours():
    a = csr_from_edges(4, [0, 0], [1, 2])
    mean = normalize_adjacency(a, "sage").toarray()
    np.testing.assert_allclose(mean.sum(axis=1), [1.0, 1.0, 1.0, 0.0], rtol=1e-6)
    np.testing.assert_allclose(mean[0], [0.0, 0.5, 0.5, 0.0], rtol=1e-6)


def test_normalization_rejects_bad_adjacency():
    with pytest.raises(ShapeError):
        normalize_adjacency(sp.csr_matrix((2, 3), dtype=np.float32), "gcn")
    with pytest.raises(ValueError):
        normalize_adjacency(sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=np.float32)), "gcn")
    with pytest.raises(ValueError):
        normalize_adjacency(csr_from_edges(2, [0], [1]), "gat")


def dense_oracle(model, a, x):
    a = a.toarray().astype(np.float64)
    n = a.shape[0]
    if model.config.arch == "gcn":
        tilde = a + np.eye(n)
        d = 1.0 / np.sqrt(tilde.sum(axis=1))
        prop = tilde * d[:, None] * d[None, :]
    else:
        deg = a.sum(axis=1)
        prop = np.divide(a, deg[:, None], out=np.zeros_like(a), where=deg[:, None] > 0)
    h = x
    for layer in range(model.config.num_layers):
        p = model.params
        if model.config.arch == "gcn":
            h = prop @ h @ p[f"w{layer}"]
        else:
            h = h @ p[f"w_self{layer}"] + p[f"b{layer}"] + prop @ h @ p[f"w_nbr{layer}"]
        if layer < model.config.num_layers - 1:
            h = np.maximum(h, 0)
    return h


@pytest.mark.parametrize("arch", ["gcn", "sage"])
@pytest.mark.parametrize("seed", range(10))
def test_forward_matches_dense_oracle(arch, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 13))
    a = random_graph(n, seed)
    x = rng.normal(size=(n, 5))
    config = GnnConfig(arch=arch, num_layers=2, hidden_dim=4, dropout=0.0, seed=seed)
    model = build_model(a, 5, 3, config, dtype=np.float64)
    if arch == "sage":
        for layer in range(2):
            model.params[f"b{layer}"] = rng.normal(size=model.params[f"b{layer}"].shape)
    np.testing.assert_allclose(predict(model, x), dense_oracle(model, a, x), atol=1e-5)


@pytest.mark.parametrize("arch", ["gcn", "sage"])
def test_permutation_equivariance(arch):
    rng = np.random.default_rng(0)
    a = random_graph(10, seed=1)
    x = rng.normal(size=(10, 4))
    config = GnnConfig(arch=arch, num_layers=3, hidden_dim=6, dropout=0.0)
    model = build_model(a, 4, 3, config, dtype=np.float64)
    perm = rng.permutation(10)
    moved = GnnModel(config=config, params=model.params, adjacency=normalize_adjacency(permute(a, perm), arch,
                                                                                        np.float64),
                     input_dim=4, num_classes=3)
    np.testing.assert_allclose(predict(moved, x[perm]), predict(model, x)[perm], atol=1e-10)


def test_isolated_node_sees_only_itself():
    a = csr_from_edges(3, [0], [1])
    x = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, -1.0]])
    gcn = build_model(a, 2, 2, GnnConfig(arch="gcn", num_layers=1, dropout=0.0), dtype=np.float64)
    np.testing.assert_allclose(predict(gcn, x)[2], x[2] @ gcn.params["w0"], atol=1e-12)
    sage = build_model(a, 2, 2, GnnConfig(arch="sage", num_layers=1, dropout=0.0), dtype=np.float64)
    np.testing.assert_allclose(predict(sage, x)[2], x[2] @ sage.params["w_self0"] + sage.params["b0"], atol=1e-12)


@pytest.mark.parametrize("arch", ["gcn", "sage"])
def test_adding_an_isolated_node_leaves_other_logits_unchanged(arch):
    rng = np.random.default_rng(6)
    a = random_graph(7, seed=6, density=0.5)
    x = rng.normal(size=(7, 3))
    config = GnnConfig(arch=arch, num_layers=3, hidden_dim=5, dropout=0.0)
    model = build_model(a, 3, 2, config, dtype=np.float64)
    grown = sp.csr_matrix((a.data, a.indices, np.append(a.indptr, a.indptr[-1])), shape=(8, 8))
    bigger = GnnModel(config=config, params=model.params, adjacency=normalize_adjacency(grown, arch, np.float64),
                      input_dim=3, num_classes=2)
    x_grown = np.vstack([x, rng.normal(size=(1, 3))])
    np.testing.assert_allclose(predict(bigger, x_grown)[:7], predict(model, x), atol=1e-12)


def test_forward_rejects_wrong_feature_shape():
    model = build_model(csr_from_edges(3, [0], [1]), 4, 2, GnnConfig(num_layers=1))
    with pytest.raises(ShapeError):
        predict(model, np.zeros((3, 5), dtype=np.float32))


@pytest.mark.parametrize("arch", ["gcn", "sage"])
def test_gradients_match_finite_differences(arch):
    rng = np.random.default_rng(3)
    a = csr_from_edges(6, [0, 1, 2, 3, 4], [1, 2, 3, 4, 5])
    x = rng.normal(size=(6, 3))
    labels = np.array([0, 1, 2, 0, 1, 2])
    model = build_model(a, 3, 3, GnnConfig(arch=arch, num_layers=3, hidden_dim=4, dropout=0.0, seed=1),
                        dtype=np.float64)

    def loss(tape, params):
        logits = forward(tape, model, params, x, train=True)
        return tape.nll_loss(tape.log_softmax(logits), labels, np.arange(6))

    errors = check_gradients(loss, {k: v.copy() for k, v in model.params.items()})
    assert max(errors.values()) < 1e-3


def test_dropout_free_train_pass_equals_eval():
    a = random_graph(8, seed=4)
    x = np.random.default_rng(4).normal(size=(8, 3)).astype(np.float32)
    model = build_model(a, 3, 2, GnnConfig(num_layers=2, hidden_dim=5, dropout=0.0))
    tape = Tape()
    params = {k: tape.param(k, v) for k, v in model.params.items()}
    train_logits = forward(tape, model, params, x, train=True, epoch=7).value
    assert np.array_equal(train_logits, predict(model, x))


def test_input_projection_adds_a_layer_of_weights():
    config = GnnConfig(num_layers=2, hidden_dim=4, input_projection_dim=3)
    model = build_model(csr_from_edges(4, [0, 1], [1, 2]), 10, 2, config)
    assert model.params["proj"].shape == (10, 3)
    assert model.params["w0"].shape == (3, 4)
    assert predict(model, np.ones((4, 10), dtype=np.float32)).shape == (4, 2)


@pytest.mark.parametrize("arch", ["gcn", "sage"])
def test_checkpoint_round_trip(tmp_path, small_tag, arch):
    config = GnnConfig(arch=arch, num_layers=2, hidden_dim=8, max_epochs=5)
    x = np.random.default_rng(0).normal(size=(small_tag.num_nodes, 6)).astype(np.float32)
    model, _ = train_gnn(x, small_tag, config)
    meta = CheckpointMeta(config=config, input_dim=6, num_classes=small_tag.num_classes, source="orig",
                          best_epoch=3, metrics={"val_accuracy": 0.5})
    path = save_checkpoint(model, tmp_path / "orig.ckpt", meta)
    assert path.read_bytes().startswith(b"TAPEGNN1")
    loaded = load_checkpoint(path, small_tag.adjacency)
    assert sorted(loaded.params) == sorted(model.params)
    for name, value in model.params.items():
        assert np.array_equal(loaded.params[name], value)
    assert np.array_equal(predict(loaded, x), predict(model, x))


def test_damaged_checkpoint_is_rejected(tmp_path, small_tag):
    config = GnnConfig(num_layers=1, max_epochs=1)
    model = build_model(small_tag.adjacency, 4, small_tag.num_classes, config)
    path = save_checkpoint(model, tmp_path / "m.ckpt", CheckpointMeta(config=config, input_dim=4,
                                                                      num_classes=small_tag.num_classes))
    good = path.read_bytes()
    path.write_bytes(good[:-3])
    with pytest.raises(DatasetFormatError):
        load_checkpoint(path, small_tag.adjacency)
    path.write_bytes(b"NOTAGNN!" + good[8:])
    with pytest.raises(DatasetFormatError):
        load_checkpoint(path, small_tag.adjacency)


def test_zero_features_fall_back_to_majority_class(small_tag):
    x = np.zeros((small_tag.num_nodes, 4), dtype=np.float32)
    model, history = train_gnn(x, small_tag, GnnConfig(num_layers=2, hidden_dim=8, max_epochs=40, patience=5))
    predicted = predict(model, x).argmax(axis=1)
    assert np.all(predicted == 0)
    counts = np.bincount(small_tag.labels[small_tag.labeled_indices], minlength=small_tag.num_classes)
    assert counts.argmax() == 0
    assert len(history) == 7


@pytest.mark.parametrize("arch", ["gcn", "sage"])
def test_informative_features_are_learned(small_tag, arch):
    rng = np.random.default_rng(1)
    x = np.eye(small_tag.num_classes, dtype=np.float32)[small_tag.labels]
    x = x + rng.normal(scale=0.1, size=x.shape).astype(np.float32)
    config = GnnConfig(arch=arch, num_layers=2, hidden_dim=16, learning_rate=0.01, max_epochs=200, patience=50)
    model, history = train_gnn(x, small_tag, config)
    test = small_tag.splits.test
    accuracy = np.mean(predict(model, x)[test].argmax(axis=1) == small_tag.labels[test])
    assert accuracy >= 0.8
    assert history[-1].train_loss < history[0].train_loss


def test_training_is_deterministic(small_tag):
    x = np.random.default_rng(5).normal(size=(small_tag.num_nodes, 6)).astype(np.float32)
    config = GnnConfig(num_layers=2, hidden_dim=8, max_epochs=15, dropout=0.5, seed=2)
    a, history_a = train_gnn(x, small_tag, config)
    b, history_b = train_gnn(x, small_tag, config)
    assert history_a == history_b
    for name in a.params:
        assert np.array_equal(a.params[name], b.params[name])


def test_non_finite_features_are_rejected(small_tag):
    x = np.ones((small_tag.num_nodes, 2), dtype=np.float32)
    x[0, 0] = np.inf
    with pytest.raises(NumericError):
        train_gnn(x, small_tag, GnnConfig(num_layers=1, max_epochs=2))
