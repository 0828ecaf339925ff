"""Corpus generation, metrics, and the experiment harness."""

import json
from dataclasses import replace

import pytest

from xpir.conceptindex import build_index
from xpir.errors import ConfigError
from xpir.evalkit import (
    CorpusConfig,
    ExperimentConfig,
    f1_score,
    generate_corpus,
    precision_recall_f1,
    run_experiment,
    write_corpus,
    write_report,
)
from xpir.evalkit.generate import load_qrels
from xpir.evalkit.report import report_csv, report_text
from xpir.fixtures import computer_science_ontology_bytes
from xpir.ontology import load_ontology
from xpir.retrieval import RankedResult
from xpir.xmldoc import TEXT, parse_document

from helpers import REFERENCE_GRID


@pytest.fixture(scope="module")
def cs():
    return load_ontology(computer_science_ontology_bytes())


@pytest.fixture(scope="module")
def corpus(cs):
    return generate_corpus(cs, CorpusConfig(seed=7))


# ---------------------------------------------------------------------------
# Corpus generation


def test_corpus_is_deterministic(cs, corpus):
    again = generate_corpus(cs, CorpusConfig(seed=7))
    assert corpus.documents == again.documents
    assert corpus.queries == again.queries
    assert corpus.qrels.relevant == again.qrels.relevant


def test_different_seed_changes_corpus(cs, corpus):
    other = generate_corpus(cs, CorpusConfig(seed=8))
    assert corpus.documents != other.documents


def test_desk_scale_node_counts(cs, corpus):
    index = build_index(list(corpus.documents), cs)
    assert len(corpus.documents) == 40
    assert 645 * 0.8 <= len(index.element_entries) <= 645 * 1.2
    assert 580 * 0.8 <= len(index.text_entries) <= 580 * 1.2


def test_paper_scale_node_counts(cs):
    config = CorpusConfig(seed=7, doc_count=400, query_count=40)
    corpus = generate_corpus(cs, config)
    elements = texts = 0
    for doc_id, data in corpus.documents:
        tree = parse_document(doc_id, data)
        for d in tree.descriptors:
            if d.node_type == "element":
                elements += 1
            elif d.node_type == TEXT:
                texts += 1
    assert len(corpus.documents) == 400
    assert 6450 * 0.8 <= elements <= 6450 * 1.2
    assert 5800 * 0.8 <= texts <= 5800 * 1.2


def test_single_domain_ontology_rejected():
    ontology = load_ontology(json.dumps({
        "name": "tiny",
        "concepts": [
            {"id": "root", "keywords": ["root"]},
            {"id": "only", "keywords": ["only"], "parents": ["root"]},
            {"id": "leaf", "keywords": ["leaf"], "parents": ["only"]},
        ],
    }).encode())
    with pytest.raises(ConfigError):
        generate_corpus(ontology, CorpusConfig(doc_count=4))


def test_queries_have_relevant_docs(cs, corpus):
    assert len(corpus.queries) >= 20
    for query in corpus.queries:
        assert corpus.qrels.relevant_docs(query.query_id)


def test_qrels_reference_existing_nodes(cs, corpus):
    trees = {doc_id: parse_document(doc_id, data) for doc_id, data in corpus.documents}
    for query_id, pairs in corpus.node_qrels.relevant.items():
        for doc_id, start in pairs:
            node = trees[doc_id].node(start)
            assert node is not None and node.node_type == TEXT


def test_relevance_matches_topic_closure(cs, corpus):
    for query in corpus.queries:
        closure = cs.descendants(query.concept) | {query.concept}
        expected = {
            doc_id for doc_id, topic in corpus.doc_topics.items() if topic in closure
        }
        assert corpus.qrels.relevant_docs(query.query_id) == expected


def test_required_topics_are_anchored(cs):
    config = CorpusConfig(seed=5, required_topics=("paging", "quicksort"))
    corpus = generate_corpus(cs, config)
    assert "paging" in corpus.doc_topics.values()
    assert "quicksort" in corpus.doc_topics.values()


def test_write_corpus_round_trip(tmp_path, cs, corpus):
    write_corpus(corpus, tmp_path)
    docs = sorted((tmp_path / "docs").glob("*.xml"))
    assert len(docs) == len(corpus.documents)
    qrels = load_qrels(tmp_path / "qrels_docs.txt")
    assert qrels.granularity == "document"
    assert {q: set(p) for q, p in qrels.relevant.items()} == corpus.qrels.relevant
    node_qrels = load_qrels(tmp_path / "qrels_nodes.txt")
    assert node_qrels.relevant == corpus.node_qrels.relevant


# ---------------------------------------------------------------------------
# Metrics


def result(doc_id, start=1, score=1.0):
    return RankedResult(doc_id, start, start + 1, "element", score, ())


def test_perfect_retrieval():
    results = [result("a"), result("b")]
    relevant = {("a", 0), ("b", 0)}
    assert precision_recall_f1(results, relevant) == (1.0, 1.0, 1.0)


def test_printed_f1_for_080_100():
    p, r, f1 = 0.80, 1.00, f1_score(0.80, 1.00)
    assert f1 == pytest.approx(0.8889, abs=5e-5)


def test_25_returned_20_relevant():
    results = [result(f"d{i}") for i in range(25)]
    relevant = {(f"d{i}", 0) for i in range(20)}
    p, r, f1 = precision_recall_f1(results, relevant)
    assert p == pytest.approx(0.80)
    assert r == pytest.approx(1.00)


def test_reference_grid_f1_consistency():
    for row in REFERENCE_GRID:
        for recall, precision, printed_f1 in row:
            assert f1_score(precision, recall) == pytest.approx(printed_f1, abs=5e-4)


def test_f1_zero_iff_product_zero():
    assert f1_score(0.0, 1.0) == 0.0
    assert f1_score(1.0, 0.0) == 0.0
    assert f1_score(0.0, 0.0) == 0.0
    assert f1_score(0.01, 0.01) > 0.0


def test_node_granularity_matches_exact_pairs():
    results = [result("a", 5), result("a", 9)]
    p, r, f1 = precision_recall_f1(results, {("a", 5), ("b", 2)}, granularity="node")
    assert p == pytest.approx(0.5)
    assert r == pytest.approx(0.5)


def test_document_granularity_collapses_nodes():
    results = [result("a", 5, 3.0), result("a", 9, 2.0), result("b", 2, 1.0)]
    p, r, f1 = precision_recall_f1(results, {("a", 0)})
    assert p == pytest.approx(0.5)
    assert r == pytest.approx(1.0)


def test_cutoff_applies_after_collapse():
    results = [result("a", 5, 3.0), result("a", 9, 2.0), result("b", 2, 1.0)]
    p, r, f1 = precision_recall_f1(results, {("a", 0)}, cutoff=1)
    assert (p, r) == (1.0, 1.0)


def test_metric_errors():
    with pytest.raises(ValueError):
        precision_recall_f1([], set())
    with pytest.raises(ValueError):
        precision_recall_f1([], {("a", 0)}, cutoff=0)
    with pytest.raises(ValueError):
        precision_recall_f1([], {("a", 0)}, granularity="page")


def test_empty_retrieved_gives_zero_precision():
    p, r, f1 = precision_recall_f1([], {("a", 0)})
    assert (p, r, f1) == (0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Experiment harness


@pytest.fixture(scope="module")
def default_report():
    return run_experiment(ExperimentConfig())


def test_rows_cover_all_cells(default_report):
    config = default_report.config
    adaptation = default_report.rows_for("adaptation")
    assert len(adaptation) == len(config.users) * len(config.instants)
    for row in default_report.rows:
        assert 0.0 <= row.precision <= 1.0
        assert 0.0 <= row.recall <= 1.0
        assert 0.0 <= row.f1 <= 1.0


def test_means_equal_recomputation(default_report):
    for configuration in ("baseline", "proposed"):
        rows = default_report.rows_for("comparison", configuration)
        for metric, attr in (("precision", "precision"), ("recall", "recall"), ("f1", "f1")):
            recomputed = sum(getattr(r, attr) for r in rows) / len(rows)
            assert default_report.means[configuration][metric] == pytest.approx(
                recomputed, abs=1e-12
            )


def test_proposed_beats_baseline(default_report):
    baseline = default_report.means["baseline"]
    proposed = default_report.means["proposed"]
    assert proposed["precision"] - baseline["precision"] >= 0.05
    assert proposed["recall"] >= baseline["recall"]
    assert len(default_report.rows_for("comparison", "proposed")) >= 20


def test_report_outputs_are_deterministic(default_report):
    again = run_experiment(ExperimentConfig())
    assert report_csv(default_report) == report_csv(again)
    assert report_text(default_report) == report_text(again)


def test_report_text_mentions_reference_means(default_report):
    text = report_text(default_report)
    assert "0.426" in text and "0.756" in text
    assert "0.710" in text and "0.978" in text


def test_write_report_files(tmp_path, default_report):
    outputs = write_report(default_report, tmp_path)
    assert outputs["csv"].read_text("utf-8").startswith("phase,")
    assert outputs["text"].stat().st_size > 0
    for name in ("config_comparison", "per_request_precision", "user_instants_f1"):
        assert outputs[name].stat().st_size > 0
        assert outputs[name].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_config_json_round_trip(tmp_path):
    config = ExperimentConfig()
    payload = {
        "seed": 99,
        "corpus": {"doc_count": 12, "seed": 99, "query_count": 6},
        "users": [{"user_id": "u1", "interest": "databases"}],
        "instants": [{"label": "T1", "concept": "databases"}],
        "retrieval": {"mode": "topk", "cutoff": 5},
        "warmup_repeats": 2,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload), "utf-8")
    loaded = ExperimentConfig.from_json(path)
    assert loaded.seed == 99
    assert loaded.corpus.doc_count == 12
    assert loaded.retrieval.mode == "topk"
    assert loaded.users[0].user_id == "u1"
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"nope": 1})


def test_unknown_retrieval_mode_rejected():
    config = replace(
        ExperimentConfig(),
        retrieval=replace(ExperimentConfig().retrieval, mode="psychic"),
        users=(ExperimentConfig().users[0],),
        instants=(ExperimentConfig().instants[0],),
        corpus=CorpusConfig(doc_count=8, query_count=4),
    )
    with pytest.raises(ConfigError):
        run_experiment(config)
