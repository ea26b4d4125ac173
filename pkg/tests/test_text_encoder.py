import json
import math
from collections import Counter

import httpx
import numpy as np
import pytest

from tape_app.errors import ConfigError, DatasetFormatError, NumericError, ShapeError
from tape_app.features import (FeatureMatrix, FeatureMeta, InterpreterConfig, encode, encode_batch, extract_features,
                               fit_tfidf, load_feature_matrix, save_feature_matrix, train_interpreter)
from tape_app.features.interpreter import InterpreterModel, forward, init_params, interpreter_logits
from tape_app.features.remote import EmbeddingCache, embed_remote
from tape_app.features.storage import read_matrix, write_matrix
from tape_app.features.tfidf import tfidf_matrix, tokenize
from tape_app.numeric.gradcheck import check_gradients


def test_idf_formula_on_two_documents():
    model = fit_tfidf(["a b", "b c"], min_df=1, min_token_len=1)
    idf = {term: model.idf[i] for term, i in model.vocabulary.items()}
    assert idf["b"] == pytest.approx(1.0, abs=1e-12)
    assert idf["a"] == pytest.approx(math.log(3 / 2) + 1, abs=1e-12)
    assert idf["a"] == pytest.approx(1.405465, abs=1e-6)


def test_min_df_filter():
    model = fit_tfidf(["a b", "b c"], min_df=2, min_token_len=1)
    assert set(model.vocabulary) == {"b"}


def test_single_letter_tokens_dropped_by_default():
    assert tokenize("A cat, a DOG! x-ray 42") == ["cat", "dog", "ray", "42"]


def test_max_features_keeps_most_frequent_then_lexicographic():
    corpus = ["zz yy xx", "zz yy ww", "zz vv uu"]
    model = fit_tfidf(corpus, max_features=3, min_df=1)
    # zz df=3, yy df=2, then the df=1 tie resolves lexicographically to uu
    assert set(model.vocabulary) == {"zz", "yy", "uu"}
    assert list(model.vocabulary) == sorted(model.vocabulary)


def test_empty_inputs_are_rejected():
    with pytest.raises(ConfigError):
        fit_tfidf([])
    with pytest.raises(ConfigError):
        fit_tfidf(["a b", "c d"], min_df=5)


def brute_force_tfidf(corpus, min_df, min_token_len):
    docs = [[t for t in tokenize(text, min_token_len)] for text in corpus]
    df = Counter(term for doc in docs for term in set(doc))
    terms = sorted(t for t, c in df.items() if c >= min_df)
    n = len(corpus)
    out = np.zeros((n, len(terms)))
    for row, doc in enumerate(docs):
        tf = Counter(doc)
        for col, term in enumerate(terms):
            out[row, col] = tf[term] * (math.log((1 + n) / (1 + df[term])) + 1)
        norm = math.sqrt(sum(v * v for v in out[row]))
        if norm > 0:
            out[row] /= norm
    return terms, out


@pytest.mark.parametrize("seed", range(10))
def test_matches_brute_force_oracle(seed):
    rng = np.random.default_rng(seed)
    words = [f"w{i}" for i in range(30)]
    corpus = [" ".join(rng.choice(words, size=int(rng.integers(0, 25)))) for _ in range(int(rng.integers(5, 51)))]
    corpus[0] = corpus[0] + " w0 w1"
    corpus[1] = corpus[1] + " w0 w1"
    min_df = int(rng.integers(1, 3))
    model = fit_tfidf(corpus, min_df=min_df)
    terms, expected = brute_force_tfidf(corpus, min_df, 2)
    assert sorted(model.vocabulary, key=model.vocabulary.get) == terms
    np.testing.assert_allclose(tfidf_matrix(model, corpus).toarray(), expected, atol=1e-9, rtol=0)


def test_out_of_vocabulary_text_is_zero():
    model = fit_tfidf(["alpha beta", "beta gamma"], min_df=1, dim=8, seed=3)
    assert np.all(encode(model, "delta epsilon") == 0)
    assert np.all(encode(model, "") == 0)


def test_single_term_text_is_its_projection_row():
    model = fit_tfidf(["aa bb", "bb cc"], min_df=1, dim=6, seed=5)
    row = model.projection[model.vocabulary["bb"]]
    np.testing.assert_allclose(encode(model, "bb"), row.astype(np.float32), rtol=1e-6)
    np.testing.assert_allclose(encode(model, "bb bb bb"), row.astype(np.float32), rtol=1e-6)


def test_encoding_is_deterministic():
    corpus = ["graph neural networks", "text classification", "graph text models"]
    a = encode_batch(fit_tfidf(corpus, min_df=1, dim=16, seed=9), corpus)
    b = encode_batch(fit_tfidf(corpus, min_df=1, dim=16, seed=9), corpus)
    assert a.dtype == np.float32
    assert np.array_equal(a, b)


def test_output_norm_bounded_by_projection_norm():
    rng = np.random.default_rng(0)
    words = [f"t{i}" for i in range(40)]
    corpus = [" ".join(rng.choice(words, size=12)) for _ in range(30)]
    model = fit_tfidf(corpus, min_df=1, dim=10, seed=1)
    bound = np.linalg.norm(model.projection, ord=2)
    norms = np.linalg.norm(encode_batch(model, corpus).astype(np.float64), axis=1)
    assert np.all(norms <= bound + 1e-5)


def separable_toy():
    rng = np.random.default_rng(0)
    labels = np.repeat([0, 1], 10)
    features = rng.normal(size=(20, 4)).astype(np.float32)
    features[:, 0] = np.where(labels == 1, 2.0, -2.0) + features[:, 0] * 0.1
    return features, labels


def test_interpreter_fits_separable_toy():
    features, labels = separable_toy()
    hyper = InterpreterConfig(hidden_dim=8, learning_rate=0.05, epochs=200, patience=200, seed=0)
    model = train_interpreter(features, labels, np.arange(20), np.array([], dtype=np.int64), hyper)
    predicted = interpreter_logits(model, features).argmax(axis=1)
    assert np.array_equal(predicted, labels)
    assert model.num_classes == 2
    assert extract_features(model, features).shape == (20, 8)


def test_interpreter_is_deterministic():
    features, labels = separable_toy()
    hyper = InterpreterConfig(hidden_dim=6, learning_rate=0.01, epochs=25, patience=5, seed=4)
    a = train_interpreter(features, labels, np.arange(0, 20, 2), np.arange(1, 20, 2), hyper)
    b = train_interpreter(features, labels, np.arange(0, 20, 2), np.arange(1, 20, 2), hyper)
    for name in a.params:
        assert np.array_equal(a.params[name], b.params[name])
    assert a.history == b.history


def test_patience_zero_stops_one_epoch_after_best():
    # val labels contradict train labels, so val loss rises from the first step on
    features = np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=np.float32)
    labels = np.array([0, 1, 1, 0])
    hyper = InterpreterConfig(hidden_dim=4, learning_rate=0.01, epochs=50, patience=0, seed=0)
    model = train_interpreter(features, labels, np.array([0, 1]), np.array([2, 3]), hyper)
    assert model.best_epoch == 1
    assert len(model.history) == 2


def test_best_weights_restored():
    features = np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=np.float32)
    labels = np.array([0, 1, 1, 0])
    hyper = InterpreterConfig(hidden_dim=4, learning_rate=0.01, epochs=50, patience=3, seed=0)
    model = train_interpreter(features, labels, np.array([0, 1]), np.array([2, 3]), hyper)
    assert len(model.history) == 5
    best_val = min(h["val_loss"] for h in model.history)
    assert model.history[model.best_epoch - 1]["val_loss"] == best_val


def test_non_finite_input_aborts():
    features, labels = separable_toy()
    features[3, 1] = np.nan
    with pytest.raises(NumericError):
        train_interpreter(features, labels, np.arange(20), np.arange(0), InterpreterConfig(epochs=2))


def test_divergence_reports_epoch_and_learning_rate():
    features, labels = separable_toy()
    features = features * np.float32(1e30)
    hyper = InterpreterConfig(hidden_dim=4, learning_rate=1e6, epochs=50, seed=0)
    with pytest.raises(NumericError) as excinfo:
        train_interpreter(features, labels, np.arange(20), np.arange(0), hyper)
    assert "epoch" in excinfo.value.context
    assert excinfo.value.context["learning_rate"] == 1e6


def test_extract_features_identity_case():
    d = 3
    model = InterpreterModel(params={"w1": np.eye(d, dtype=np.float32), "b1": np.zeros(d, dtype=np.float32),
                                     "w2": np.ones((d, 2), dtype=np.float32), "b2": np.zeros(2, dtype=np.float32)},
                             hidden_dim=d, num_classes=2)
    x = np.array([[1.0, -2.0, 0.5], [0.0, 0.0, 0.0]], dtype=np.float32)
    np.testing.assert_array_equal(extract_features(model, x), np.maximum(x, 0))


def test_zero_row_gives_relu_of_bias():
    model = InterpreterModel(params={"w1": np.ones((2, 3), dtype=np.float32),
                                     "b1": np.array([0.5, -1.0, 2.0], dtype=np.float32),
                                     "w2": np.ones((3, 2), dtype=np.float32), "b2": np.zeros(2, dtype=np.float32)},
                             hidden_dim=3, num_classes=2)
    out = extract_features(model, np.zeros((4, 2), dtype=np.float32))
    np.testing.assert_array_equal(out, np.tile([0.5, 0.0, 2.0], (4, 1)))


def test_extract_features_dimension_mismatch():
    features, labels = separable_toy()
    model = train_interpreter(features, labels, np.arange(20), np.arange(0),
                              InterpreterConfig(hidden_dim=4, epochs=2))
    with pytest.raises(ShapeError):
        extract_features(model, np.zeros((3, 5), dtype=np.float32))


def test_mlp_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 4))
    labels = np.array([0, 2, 1, 2, 0])
    params = init_params(4, 6, 3, seed=2, dtype=np.float64)
    params["b1"] += rng.normal(size=6) * 0.1

    def loss(tape, tensors):
        _, logits = forward(tape, tensors, tape.constant(x))
        return tape.nll_loss(tape.log_softmax(logits), labels, np.arange(5))

    errors = check_gradients(loss, params)
    assert max(errors.values()) < 1e-4


def test_feature_matrix_round_trip(tmp_path):
    values = np.arange(12, dtype=np.float32).reshape(4, 3) / 7
    meta = FeatureMeta(source="orig", seed=2, config_hash="abc123", rows=4, cols=3, extra={"best_epoch": 5})
    path = save_feature_matrix(FeatureMatrix(values=values, meta=meta), tmp_path / "orig.fm")
    loaded = load_feature_matrix(path)
    assert np.array_equal(loaded.values, values)
    assert loaded.meta == meta
    raw = path.read_bytes()
    assert raw[:7] == b"TAPEFM1"
    assert len(raw) == 7 + 16 + 4 * 12


def test_feature_matrix_rejects_damaged_files(tmp_path):
    path = write_matrix(tmp_path / "m.fm", np.ones((2, 2), dtype=np.float32))
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(DatasetFormatError):
        read_matrix(path)
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 30)
    with pytest.raises(DatasetFormatError):
        read_matrix(path)


def embedding_transport(calls, dim=3):
    def handler(request):
        body = json.loads(request.content)
        calls.append(len(body["input"]))
        data = [{"embedding": [float(len(text)), float(i), 1.0][:dim]} for i, text in enumerate(body["input"])]
        return httpx.Response(200, json={"data": data})

    return httpx.MockTransport(handler)


def test_remote_embeddings_are_cached(tmp_path):
    calls = []
    cache = EmbeddingCache(tmp_path / "emb.jsonl")
    texts = ["abc", "de", "abc"]
    first = embed_remote(texts, "https://embed.test/v1/embeddings", cache=cache,
                         transport=embedding_transport(calls), sleep=lambda s: None)
    assert first.shape == (3, 3)
    assert calls == [2]
    assert np.array_equal(first[0], first[2])

    again = embed_remote(texts, "https://embed.test/v1/embeddings", cache=EmbeddingCache(tmp_path / "emb.jsonl"),
                         transport=embedding_transport(calls), sleep=lambda s: None)
    assert calls == [2]
    assert np.array_equal(first, again)
