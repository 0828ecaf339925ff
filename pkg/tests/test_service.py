"""HTTP API: registration, search flow, node inspection, error mapping."""

import json

import pytest
from fastapi.testclient import TestClient

from xpir.conceptindex import build_index
from xpir.fixtures import computer_science_ontology_bytes, small_corpus
from xpir.ontology import load_ontology
from xpir.profile import create_profile
from xpir.retrieval import Query, search
from xpir.service import ServiceConfig, create_app
from xpir.storage import ProfileStore, save_index


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("service")
    ontology_path = tmp_path / "ontology.json"
    ontology_path.write_bytes(computer_science_ontology_bytes())
    ontology = load_ontology(ontology_path)
    index = build_index(small_corpus(), ontology)
    index_path = tmp_path / "corpus.xpir"
    save_index(index, index_path)
    config = ServiceConfig(
        ontology=str(ontology_path),
        index=str(index_path),
        profiles_dir=str(tmp_path / "profiles"),
        k=10,
    )
    app = create_app(config)
    return TestClient(app), ontology, index, ProfileStore(tmp_path / "profiles")


def test_health_reports_fingerprints(service):
    client, ontology, index, _ = service
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["ontology_fingerprint"] == ontology.fingerprint
    assert body["index_fingerprint"] == index.header.ontology_fingerprint
    assert body["documents"] == 3


def test_register_then_conflict(service):
    client, *_ = service
    first = client.post("/users", json={"user_id": "pat"})
    assert first.status_code == 201
    second = client.post("/users", json={"user_id": "pat"})
    assert second.status_code == 409


def test_fresh_profile_is_uniform(service):
    client, ontology, *_ = service
    client.post("/users", json={"user_id": "quinn"})
    body = client.get("/users/quinn/profile").json()
    assert body["user_id"] == "quinn"
    assert len(body["weights"]) == len(ontology)
    assert all(w == pytest.approx(1 / len(ontology)) for w in body["weights"].values())
    assert body["history"] == []


def test_unknown_user_is_404(service):
    client, *_ = service
    assert client.get("/users/ghost/profile").status_code == 404
    response = client.post("/search", json={"user_id": "ghost", "query": "sql"})
    assert response.status_code == 404


def test_search_matches_library_and_learns(service):
    client, ontology, index, store = service
    client.post("/users", json={"user_id": "sam"})
    expected = search(
        index, ontology, Query(concept="quicksort", max_hops=1),
        create_profile("sam", ontology), k=10,
    )
    response = client.post("/search", json={"user_id": "sam", "concept": "quicksort"})
    assert response.status_code == 200
    body = response.json()
    got = [(r["doc_id"], r["start"], r["node_type"], r["score"]) for r in body["results"]]
    want = [(r.doc_id, r.start, r.node_type, pytest.approx(r.score)) for r in expected]
    assert got == want

    profile = client.get("/users/sam/profile").json()
    uniform = 1 / len(ontology)
    assert profile["weights"]["quicksort"] > uniform
    assert profile["weights"]["databases"] == pytest.approx(uniform)
    assert len(profile["history"]) == 1


def test_empty_query_is_422(service):
    client, *_ = service
    client.post("/users", json={"user_id": "uma"})
    response = client.post("/search", json={"user_id": "uma", "query": "xylophones"})
    assert response.status_code == 422
    # the failed request must not touch the profile
    assert client.get("/users/uma/profile").json()["history"] == []


def test_malformed_request_is_400(service):
    client, *_ = service
    assert client.post("/search", json={"query": "sql"}).status_code == 400
    assert client.post("/users", json={}).status_code == 400


def test_node_endpoint_returns_context(service):
    client, ontology, index, _ = service
    tree = index.document_tree("doc_databases")
    title = tree.by_name["title"][0]
    body = client.get(f"/documents/doc_databases/nodes/{title.start}").json()
    assert body["node_type"] == "element"
    assert body["name"] == "title"
    assert body["path"] == ["doc"]
    assert "database" in body["text_content"].lower()

    missing = client.get("/documents/doc_databases/nodes/99999")
    assert missing.status_code == 404
    assert client.get("/documents/nope/nodes/1").status_code == 404


def test_no_learn_flag_leaves_profile_unchanged(service):
    client, *_ = service
    client.post("/users", json={"user_id": "vic"})
    response = client.post(
        "/search", json={"user_id": "vic", "concept": "sql", "learn": False}
    )
    assert response.status_code == 200
    assert client.get("/users/vic/profile").json()["history"] == []


def test_search_personalize_flag(service):
    client, *_ = service
    client.post("/users", json={"user_id": "wes"})
    for _ in range(3):
        client.post("/search", json={"user_id": "wes", "concept": "routing"})
    personalized = client.post(
        "/search", json={"user_id": "wes", "concept": "routing", "learn": False}
    ).json()
    neutral = client.post(
        "/search",
        json={"user_id": "wes", "concept": "routing", "learn": False, "personalize": False},
    ).json()
    assert personalized["results"]
    # After three reinforcements the element scores must reflect the profile.
    per_scores = {(r["doc_id"], r["start"]): r["score"] for r in personalized["results"]
                  if r["node_type"] == "element"}
    neu_scores = {(r["doc_id"], r["start"]): r["score"] for r in neutral["results"]
                  if r["node_type"] == "element"}
    common = set(per_scores) & set(neu_scores)
    assert common
    assert any(abs(per_scores[k] - neu_scores[k]) > 1e-9 for k in common)
