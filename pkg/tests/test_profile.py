"""Centers-of-interest vectors: creation, the update rule, replay."""

import math
import random

import pytest

from xpir.errors import StaleProfileError, UnknownConceptError
from xpir.fixtures import computer_science_ontology_bytes, generic_ontology_bytes
from xpir.ontology import load_ontology
from xpir.profile import (
    create_profile,
    interest_weight,
    profile_from_json,
    profile_to_json,
    replay_history,
    update_profile,
)


@pytest.fixture(scope="module")
def generic7():
    return load_ontology(generic_ontology_bytes())


@pytest.fixture(scope="module")
def cs():
    return load_ontology(computer_science_ontology_bytes())


def test_fresh_profile_is_uniform(generic7):
    p = create_profile("u", generic7)
    assert len(p.interests) == 7
    assert all(w == pytest.approx(1 / 7) for w in p.interests.values())
    assert p.history == ()


def test_fresh_profile_single_concept():
    ont = load_ontology(b'{"name": "one", "concepts": [{"id": "c", "keywords": ["c"]}]}')
    assert create_profile("u", ont).interests == {"c": 1.0}


def test_fresh_profile_cs_fixture(cs):
    p = create_profile("u", cs)
    assert all(w == pytest.approx(1 / len(cs)) for w in p.interests.values())


def test_zero_query_vector_is_a_fixed_point(generic7):
    p = create_profile("u", generic7)
    p2 = update_profile(p, {"domain": 0.0, "path": 0.0}, 1)
    assert p2.interests == p.interests
    assert len(p2.history) == 1


def test_update_adds_exp_minus_one(generic7):
    p = create_profile("u", generic7)
    p2 = update_profile(p, {"granule": 1.0}, 1)
    # Oracle: (e - 1) + 1/7
    assert p2.interests["granule"] == pytest.approx((math.e - 1.0) + 1.0 / 7.0, abs=1e-12)
    assert p2.interests["granule"] == pytest.approx(1.8611, abs=5e-5)
    assert p2.interests["domain"] == pytest.approx(1 / 7)


def test_two_identical_updates_accumulate(generic7):
    p = create_profile("u", generic7)
    for t in (1, 2):
        p = update_profile(p, {"script": 0.5}, t)
    expected = 1.0 / 7.0 + 2.0 * (math.exp(0.5) - 1.0)
    assert p.interests["script"] == pytest.approx(expected, abs=1e-12)
    assert p.interests["script"] == pytest.approx(1.4402, abs=1e-4)


def test_interest_weight_lookup(generic7):
    p = create_profile("u", generic7)
    assert interest_weight(p, "concept") == pytest.approx(1 / 7)
    p = update_profile(p, {"granule": 1.0}, 1)
    assert interest_weight(p, "granule") == pytest.approx(1.8611, abs=5e-5)
    with pytest.raises(UnknownConceptError):
        interest_weight(p, "nope")


def test_untouched_concept_stays_at_prior(generic7):
    p = create_profile("u", generic7)
    for t in range(10):
        p = update_profile(p, {"granule": 0.7}, t)
    assert p.interests["field"] == pytest.approx(1 / 7)


def test_update_rejects_unknown_concept(generic7):
    p = create_profile("u", generic7)
    with pytest.raises(UnknownConceptError):
        update_profile(p, {"nope": 1.0}, 1)


def test_update_rejects_stale_fingerprint(generic7, cs):
    p = create_profile("u", generic7)
    with pytest.raises(StaleProfileError):
        update_profile(p, {"domain": 1.0}, 1, ontology_fingerprint=cs.fingerprint)


def test_weights_monotone_over_time(generic7):
    rng = random.Random(3)
    p = create_profile("u", generic7)
    previous = dict(p.interests)
    for t in range(30):
        qv = {cid: rng.choice([0.0, 0.3, 1.0]) for cid in rng.sample(sorted(generic7.concepts), 3)}
        p = update_profile(p, qv, t)
        for cid, w in p.interests.items():
            assert w >= previous[cid]
            if qv.get(cid, 0.0) > 0.0:
                assert w > previous[cid]
        previous = dict(p.interests)


def test_cumulative_reinforcement_orders_concepts(generic7):
    p = create_profile("u", generic7)
    for t in range(3):
        p = update_profile(p, {"granule": 1.0, "script": 0.2}, t)
    assert p.interests["granule"] > p.interests["script"] > p.interests["domain"]


def test_replay_is_bit_exact(generic7):
    rng = random.Random(11)
    p = create_profile("u", generic7)
    for t in range(25):
        qv = {cid: rng.random() for cid in rng.sample(sorted(generic7.concepts), 2)}
        p = update_profile(p, qv, t)
    replayed = replay_history("u", p.history, generic7)
    assert replayed.interests == p.interests  # exact float equality


def test_json_round_trip_preserves_bits(generic7):
    import json

    p = create_profile("u", generic7)
    for t in range(5):
        p = update_profile(p, {"granule": 0.1234567890123 * (t + 1)}, t)
    blob = json.dumps(profile_to_json(p))
    back = profile_from_json(json.loads(blob))
    assert back == p
