import json
import zlib

import httpx
import numpy as np
import pytest

from tape_app.data import SplitMask
from tape_app.errors import ConfigError, DatasetFormatError, ShapeError
from tape_app.experiment import MetricSummary, accuracy, ensemble_mean
from tape_app.experiment.report import (load_ablation, load_report, render_ablation, render_report, save_ablation,
                                        save_report)
from tape_app.experiment.runner import (ablation_sweep, check_sources, leave_one_out_sweep, run_tape_experiment,
                                        zero_shot_accuracy)
from tape_app.experiment.workspace import ensure_records, load_graph
from tape_app.features import builder
from tape_app.features.remote import embed_remote
from tape_app.llm import EnrichmentRecord, ParseStatus


def test_mean_of_one_matrix_is_itself():
    logits = np.array([[1.0, -2.0], [0.5, 0.25]])
    np.testing.assert_array_equal(ensemble_mean([logits]), logits)


def test_mean_of_two_matrices():
    a = np.array([[2.0, 0.0]])
    b = np.array([[0.0, 4.0]])
    np.testing.assert_array_equal(ensemble_mean([a, b]), [[1.0, 2.0]])


def test_mean_rejects_empty_and_mismatched_input():
    with pytest.raises(ValueError):
        ensemble_mean([])
    with pytest.raises(ShapeError):
        ensemble_mean([np.zeros((2, 3)), np.zeros((3, 2))])
    with pytest.raises(ValueError):
        ensemble_mean([np.zeros((2, 3))], mode="vote")


def test_probability_mode_averages_softmaxes():
    a = np.array([[0.0, 0.0]])
    b = np.array([[100.0, 0.0]])
    out = ensemble_mean([a, b], mode="probs")
    np.testing.assert_allclose(out, [[0.75, 0.25]], atol=1e-12)
    np.testing.assert_allclose(out.sum(axis=1), 1.0)


def test_accuracy_cases():
    labels = np.array([0, 1, 1, 0])
    logits = np.array([[2.0, 1.0], [0.0, 3.0], [5.0, 1.0], [1.0, 1.0]])
    assert accuracy(logits, labels, np.array([0, 1])) == 1.0
    assert accuracy(logits, labels, np.array([True, True, True, False])) == pytest.approx(2 / 3)
    # an exact tie resolves to class 0
    assert accuracy(logits, labels, np.array([3])) == 1.0
    assert accuracy(logits, labels, np.arange(4)) == 0.75
    with pytest.raises(ValueError):
        accuracy(logits, labels, np.array([], dtype=np.int64))


def test_accuracy_ignores_row_shifts():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(30, 4))
    labels = rng.integers(0, 4, size=30)
    shifted = logits + rng.normal(size=(30, 1)) * 10
    assert accuracy(logits, labels, np.arange(30)) == accuracy(shifted, labels, np.arange(30))


def test_ensemble_is_order_independent():
    rng = np.random.default_rng(1)
    members = [rng.normal(size=(8, 3)) for _ in range(3)]
    np.testing.assert_allclose(ensemble_mean(members), ensemble_mean(members[::-1]), atol=1e-12)


def test_metric_summary():
    summary = MetricSummary.from_values([0.5, 0.7])
    assert summary.mean == pytest.approx(0.6)
    assert summary.std == pytest.approx(np.sqrt(0.02))
    assert MetricSummary.from_values([0.9]).std == 0.0
    assert summary.render() == "0.6000 ± 0.1414"
    with pytest.raises(ValueError):
        MetricSummary.from_values([1.2])


def test_check_sources():
    assert check_sources(["orig", "pred", "orig"]) == ["orig", "pred"]
    with pytest.raises(ConfigError):
        check_sources(["orig", "votes"])
    with pytest.raises(ConfigError):
        check_sources([])


def test_zero_shot_counts_fallbacks_as_wrong(graph_factory):
    graph = graph_factory([0, 1, 2, 0, 1, 2, 0, 1, 2, 0])
    records = []
    for i in range(graph.num_nodes):
        if i % 2:
            records.append(EnrichmentRecord(node_id=i, parse_status=ParseStatus.FALLBACK, explanation="?"))
        else:
            records.append(EnrichmentRecord(node_id=i, ranked=[int(graph.labels[i])], parse_status=ParseStatus.FULL))
    scores = zero_shot_accuracy(records, graph)
    for part in ("val", "test"):
        idx = getattr(graph.splits, part)
        assert scores[part] == pytest.approx(np.mean(idx % 2 == 0))


def test_orig_only_run_and_report_round_trip(make_config, tmp_path):
    config = make_config({"experiment.sources": ["orig"]})
    report = run_tape_experiment(config)
    assert report.sources == ["orig"]
    assert set(report.per_source) == {"orig"}
    # a single member ensemble is that member
    assert report.ensemble.test.values == report.per_source["orig"].test.values
    assert report.llm_zero_shot is None
    assert "orig" in report.interpreter
    assert not (config.out_dir / "enriched.jsonl").exists()
    assert (config.out_dir / "features" / "seed0" / "orig.fm").exists()
    assert (config.out_dir / "checkpoints" / "seed0" / "orig.gnn").exists()

    path = save_report(report, tmp_path / "report.json")
    assert load_report(path) == report
    text = path.with_suffix(".txt").read_text(encoding="utf-8")
    assert "h_TAPE" in text and "h_orig" in text
    assert render_report(report, "val").startswith("dataset: tiny  split: val")


def test_load_report_rejects_garbage(tmp_path):
    path = tmp_path / "report.json"
    path.write_text('{"dataset": 3}', encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        load_report(path)


def test_features_are_reused_on_rerun(make_config):
    config = make_config({"experiment.sources": ["orig"], "experiment.save_checkpoints": False})
    first = run_tape_experiment(config)
    feature_file = config.out_dir / "features" / "seed0" / "orig.fm"
    stamp = feature_file.stat().st_mtime_ns
    second = run_tape_experiment(config)
    assert feature_file.stat().st_mtime_ns == stamp
    assert second.ensemble.test.values == first.ensemble.test.values


def test_mock_run_with_all_sources(make_config):
    config = make_config({"experiment.shallow_baseline": True})
    report = run_tape_experiment(config)
    assert set(report.per_source) == {"orig", "expl", "pred"}
    assert report.llm_zero_shot is not None
    assert report.shallow is not None
    assert "G_up" in report.improvements and "L_up" in report.improvements
    for metrics in list(report.per_source.values()) + [report.ensemble]:
        assert all(0.0 <= v <= 1.0 for v in metrics.test.values)
    assert (config.out_dir / "enriched.jsonl").exists()


def test_ablation_argument_errors(make_config):
    config = make_config()
    with pytest.raises(ConfigError):
        ablation_sweep(config, ["votes"])
    with pytest.raises(ConfigError):
        ablation_sweep(config, ["orig", "expl", "pred"])
    with pytest.raises(ConfigError):
        leave_one_out_sweep(make_config({"experiment.sources": ["orig"]}, out="single"))


def test_experiment_refuses_a_graph_without_a_val_split(make_config):
    config = make_config({"experiment.sources": ["orig"]})
    graph = load_graph(config)
    train = np.concatenate([graph.splits.train, graph.splits.val])
    graph = graph.with_splits(SplitMask.from_indices(train=train, val=np.array([], dtype=np.int64),
                                                     test=graph.splits.test))
    with pytest.raises(ConfigError, match="empty val split"):
        run_tape_experiment(config, graph=graph)


def test_ablation_reuses_trained_models(make_config):
    config = make_config()
    graph = load_graph(config)
    ablation = leave_one_out_sweep(config, graph=graph)
    assert [row.left_out for row in ablation.rows] == [["orig"], ["expl"], ["pred"]]
    for row in ablation.rows:
        assert len(row.sources) == 2
        assert row.deltas["ensemble_test"] == pytest.approx(row.ensemble.test.mean - ablation.full.ensemble.test.mean)
        for source in row.sources:
            assert row.per_source[source] == ablation.full.per_source[source]

    single = ablation_sweep(config, ["expl"], graph=graph)
    assert single.sources == ["orig", "pred"]
    assert single.ensemble == ablation.rows[1].ensemble

    path = save_ablation(ablation, config.out_dir / "ablation.json")
    assert load_ablation(path) == ablation
    assert "-orig" in path.with_suffix(".txt").read_text(encoding="utf-8")
    assert render_ablation(ablation).count("\n") >= 5


def test_remote_encoder_embeds_each_text_once_across_seeds(make_config, monkeypatch):
    sent = []
    caches = []

    def handler(request):
        texts = json.loads(request.content)["input"]
        sent.extend(texts)
        data = [{"embedding": np.random.default_rng(zlib.crc32(t.encode("utf-8"))).normal(size=8).tolist()}
                for t in texts]
        return httpx.Response(200, json={"data": data})

    transport = httpx.MockTransport(handler)

    def embed_offline(*args, **kwargs):
        caches.append(kwargs["cache"])
        return embed_remote(*args, transport=transport, sleep=lambda s: None, **kwargs)

    monkeypatch.setattr(builder, "embed_remote", embed_offline)
    settings = {"encoder.remote_endpoint": "https://embed.test/v1/embeddings", "experiment.save_checkpoints": False}
    config = make_config(settings)
    run_tape_experiment(config)
    first_run = len(sent)
    assert first_run > 0
    assert (config.out_dir / "cache" / "embeddings.jsonl").exists()

    run_tape_experiment(make_config({**settings, "experiment.seeds": [0, 1]}))
    assert len(sent) == first_run
    assert (config.out_dir / "features" / "seed1" / "orig.fm").exists()
    assert len(caches) == 4
    assert all(cache is not None for cache in caches)


def test_enriched_records_are_rebuilt_when_prompt_settings_change(make_config):
    config = make_config({"experiment.sources": ["pred"]})
    graph = load_graph(config)
    records, _ = ensure_records(config, graph)
    assert ensure_records(config, graph) == (records, 0.0)
    summary_path = config.out_dir / "enrich_summary.json"
    assert json.loads(summary_path.read_text(encoding="utf-8"))["k"] == 3

    fewer, _ = ensure_records(make_config({"experiment.sources": ["pred"], "prompt.k": 2}), graph)
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    assert summary["k"] == 2
    assert summary["network_calls"] == graph.num_nodes
    assert max(len(r.ranked) for r in fewer) <= 2

    ensure_records(make_config({"experiment.sources": ["pred"], "prompt.k": 2, "prompt.abstract_budget": 50}), graph)
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    assert summary["abstract_budget"] == 50
    assert summary["network_calls"] == graph.num_nodes
