"""Ontology loading, coefficient assignment, and concept weighting."""

import io
import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xpir.errors import (
    DegenerateOntologyError,
    InvalidWeightingError,
    OntologyParseError,
    OntologyValidationError,
    UnknownConceptError,
    UnknownRelationError,
)
from xpir.fixtures import computer_science_ontology_bytes, generic_ontology_bytes
from xpir.ontology import (
    assign_coefficients,
    compute_avg_coefficient,
    compute_margin,
    compute_real_weights,
    load_ontology,
    most_specific,
    related_concepts,
)

from helpers import random_valid_ontology


def make_ontology(concepts):
    payload = {"name": "test", "concepts": concepts}
    return load_ontology(json.dumps(payload).encode())


def chain(ids):
    return [
        {"id": cid, "keywords": [f"kw {cid}"], "parents": [] if i == 0 else [ids[i - 1]]}
        for i, cid in enumerate(ids)
    ]


@pytest.fixture(scope="module")
def generic7():
    return load_ontology(generic_ontology_bytes())


@pytest.fixture(scope="module")
def cs():
    return load_ontology(computer_science_ontology_bytes())


# ---------------------------------------------------------------------------
# Loading and validation


def test_load_generic_fixture_has_seven_concepts(generic7):
    assert len(generic7) == 7
    assert set(generic7.concepts) == {
        "domain", "path", "field", "element", "script", "concept", "granule",
    }


def test_load_accepts_stream_and_is_deterministic():
    a = load_ontology(io.BytesIO(generic_ontology_bytes()))
    b = load_ontology(generic_ontology_bytes())
    assert a.fingerprint == b.fingerprint
    assert a.weights == b.weights


def test_single_concept_gets_full_weight():
    ont = make_ontology([{"id": "only", "keywords": ["only"]}])
    assert ont.weights["only"] == 1.0
    assert ont.margin is None


def test_dangling_parent_reference_names_the_missing_id():
    with pytest.raises(OntologyValidationError, match="ghost"):
        make_ontology(
            [{"id": "a", "keywords": ["a"], "parents": ["ghost"]}]
        )


def test_duplicate_id_rejected():
    with pytest.raises(OntologyValidationError, match="dup"):
        make_ontology(
            [
                {"id": "dup", "keywords": ["x"]},
                {"id": "dup", "keywords": ["y"]},
            ]
        )


def test_empty_keywords_rejected():
    with pytest.raises(OntologyValidationError, match="a"):
        make_ontology([{"id": "a", "keywords": []}])
    with pytest.raises(OntologyValidationError):
        make_ontology([{"id": "a", "keywords": ["  "]}])


def test_unknown_fields_rejected():
    with pytest.raises(OntologyParseError, match="color"):
        make_ontology([{"id": "a", "keywords": ["a"], "color": "red"}])
    with pytest.raises(OntologyParseError):
        load_ontology(json.dumps({"name": "x", "concepts": [], "extra": 1}).encode())


def test_cycle_detected():
    with pytest.raises(OntologyValidationError, match="cycle"):
        make_ontology(
            [
                {"id": "a", "keywords": ["a"], "parents": ["b"]},
                {"id": "b", "keywords": ["b"], "parents": ["a"]},
            ]
        )


def test_malformed_json_is_a_parse_error():
    with pytest.raises(OntologyParseError):
        load_ontology(b"{not json")


# ---------------------------------------------------------------------------
# Coefficients


def test_generic_fixture_coefficients(generic7):
    expected = {
        "domain": Fraction(1),
        "path": Fraction(2),
        "field": Fraction(5, 2),
        "element": Fraction(3),
        "script": Fraction(4),
        "concept": Fraction(9, 2),
        "granule": Fraction(5),
    }
    assert generic7.coefficients == expected


def test_root_only_coefficient():
    ont = make_ontology([{"id": "r", "keywords": ["r"]}])
    assert ont.coefficients == {"r": Fraction(1)}


def test_chain_coefficients_equal_depth():
    # Oracle: on a pure chain the coefficient telescopes to the depth.
    ids = ["a", "b", "c", "d"]
    coefs = assign_coefficients({cid: ([] if i == 0 else [ids[i - 1]]) for i, cid in enumerate(ids)})
    assert [coefs[c] for c in ids] == [1, 2, 3, 4]


# ---------------------------------------------------------------------------
# Margin, average coefficient, real weights


def test_generic_fixture_margin_and_average(generic7):
    assert generic7.margin == Fraction(1, 225)
    assert float(generic7.margin) == pytest.approx(0.0044, abs=5e-5)
    assert generic7.coef_avg == Fraction(22, 7)
    assert float(generic7.coef_avg) == pytest.approx(3.1428, abs=1e-4)


def test_margin_of_three_chain():
    coefs = {"a": Fraction(1), "b": Fraction(2), "c": Fraction(3)}
    assert compute_margin(coefs) == Fraction(1, 9)


def test_margin_degenerate_single_concept():
    with pytest.raises(DegenerateOntologyError):
        compute_margin({"a": Fraction(1)})


def test_avg_coefficient_three_chain():
    assert compute_avg_coefficient({"a": 1, "b": 2, "c": 3}) == Fraction(2)


def test_avg_coefficient_empty_errors():
    with pytest.raises(OntologyValidationError):
        compute_avg_coefficient({})


def test_generic_fixture_real_weights(generic7):
    # Oracle: direct evaluation with exact rationals.
    # granule: 1/7 + (1/225) * (5 - 22/7) = 238/1575
    assert generic7.weights["granule"] == pytest.approx(float(Fraction(238, 1575)), abs=1e-12)
    # Evaluating with the rounded constants 0.1428/0.0044/3.1428 instead
    # gives the coarser 0.15097 figure; keep it as a sanity cross-check.
    assert 0.1428 + 0.0044 * (5 - 3.1428) == pytest.approx(0.15097, abs=5e-5)
    # root: 1/7 + (1/225) * (1 - 22/7) = 2/15
    assert generic7.weights["domain"] == pytest.approx(float(Fraction(2, 15)), abs=1e-12)
    assert generic7.weights["domain"] == pytest.approx(0.13333, abs=5e-6)
    assert sum(generic7.weights.values()) == pytest.approx(1.0, abs=1e-9)


def test_weight_sum_is_exact_for_cs_fixture(cs):
    assert len(cs) >= 40
    assert sum(cs.weights.values()) == pytest.approx(1.0, abs=1e-9)


def test_two_concept_chain_is_rejected():
    # Spread of 1 forces the root weight to exactly zero.
    with pytest.raises(InvalidWeightingError, match="a"):
        make_ontology(chain(["a", "b"]))


def test_degenerate_all_roots_fall_back_to_uniform():
    ont = make_ontology(
        [{"id": f"r{i}", "keywords": [f"r{i}"]} for i in range(4)]
    )
    assert ont.margin is None
    assert all(w == pytest.approx(0.25) for w in ont.weights.values())


def test_compute_real_weights_rejects_nonpositive():
    with pytest.raises(InvalidWeightingError):
        compute_real_weights({"a": Fraction(1), "b": Fraction(2)})


# ---------------------------------------------------------------------------
# Relation traversal and specificity


def test_related_concepts_hop_zero(generic7):
    assert related_concepts(generic7, "concept", (), 0) == [("concept", 0)]


def test_related_concepts_children_of_domain(generic7):
    got = related_concepts(generic7, "domain", (), 1)
    assert got == [("domain", 0), ("path", 1)]


def test_related_concepts_named_relation(generic7):
    got = related_concepts(generic7, "domain", ("made-of",), 1)
    assert got == [("domain", 0), ("path", 1)]
    # two hops reach path's is-a children as well
    got2 = related_concepts(generic7, "domain", ("made-of",), 2)
    assert ("element", 2) in got2 and ("field", 2) in got2


def test_related_concepts_unknown_inputs(generic7):
    with pytest.raises(UnknownConceptError):
        related_concepts(generic7, "nope", (), 1)
    with pytest.raises(UnknownRelationError):
        related_concepts(generic7, "domain", ("sibling-of",), 1)


def test_most_specific_drops_ancestor(cs):
    assert most_specific(cs, {"databases", "relational-model"}) == {"relational-model"}
    assert most_specific(cs, {"databases", "relational-dbms"}) == {"relational-dbms"}


def test_most_specific_singleton_and_unrelated(cs):
    assert most_specific(cs, {"sql"}) == {"sql"}
    assert most_specific(cs, {"sql", "routing"}) == {"sql", "routing"}


def test_most_specific_unknown_id(cs):
    with pytest.raises(UnknownConceptError):
        most_specific(cs, {"sql", "nope"})


# ---------------------------------------------------------------------------
# Properties on random ontologies


def test_weight_sum_and_monotonicity_on_random_ontologies():
    rng = random.Random(1234)
    for _ in range(60):
        ont = random_valid_ontology(rng, max_concepts=120)
        assert sum(ont.weights.values()) == pytest.approx(1.0, abs=1e-9)
        for cid, concept in ont.concepts.items():
            for pid in concept.parents:
                if ont.levels[cid] > ont.levels[pid]:
                    assert ont.weights[cid] >= ont.weights[pid]
                    assert ont.coefficients[cid] >= ont.coefficients[pid]


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_most_specific_idempotent_and_antichain(seed):
    rng = random.Random(seed)
    ont = random_valid_ontology(rng, max_concepts=40)
    ids = set(rng.sample(sorted(ont.concepts), min(len(ont.concepts), 8)))
    reduced = most_specific(ont, ids)
    assert most_specific(ont, reduced) == reduced
    for a in reduced:
        assert not (ont.ancestors(a) & reduced)


def test_related_concepts_deterministic_order(cs):
    a = related_concepts(cs, "databases", ("made-of", "trait"), 2)
    b = related_concepts(cs, "databases", ("made-of", "trait"), 2)
    assert a == b
    hops = [h for _, h in a]
    assert hops == sorted(hops)
