"""Per-user centers-of-interest vectors and their update rule.

A profile holds one weight per ontology concept, starting uniformly at
1/|concepts|.  After each query, every concept touched by the query
vector gains exp(query weight) - 1, so weights only ever grow and the
full history replays to a bit-exact vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .errors import StaleProfileError, UnknownConceptError
from .ontology import Ontology


@dataclass(frozen=True)
class QueryRecord:
    timestamp: float
    vector: dict[str, float]


@dataclass(frozen=True)
class UserProfile:
    """Interest vector plus the query history that produced it."""

    user_id: str
    interests: dict[str, float]
    history: tuple[QueryRecord, ...]
    ontology_fingerprint: str


def create_profile(user_id: str, ontology: Ontology) -> UserProfile:
    """Fresh profile with every interest weight at 1/|concepts|."""
    uniform = 1.0 / len(ontology)
    return UserProfile(
        user_id=user_id,
        interests={cid: uniform for cid in sorted(ontology.concepts)},
        history=(),
        ontology_fingerprint=ontology.fingerprint,
    )


def update_profile(
    profile: UserProfile,
    query_vector: Mapping[str, float],
    timestamp: float,
    *,
    ontology_fingerprint: str | None = None,
) -> UserProfile:
    """Reinforce queried concepts and append the query to the history.

    Each touched weight gains exp(w) - 1; a zero query weight leaves the
    concept unchanged.  Timestamps are caller-supplied logical times so
    replays stay deterministic.
    """
    if ontology_fingerprint is not None and ontology_fingerprint != profile.ontology_fingerprint:
        raise StaleProfileError(
            f"profile {profile.user_id!r} belongs to a different ontology version"
        )
    interests = dict(profile.interests)
    for cid in sorted(query_vector):
        if cid not in interests:
            raise UnknownConceptError(
                f"query concept {cid!r} is not covered by profile {profile.user_id!r}"
            )
        interests[cid] += math.exp(query_vector[cid]) - 1.0
    record = QueryRecord(timestamp, {cid: float(w) for cid, w in sorted(query_vector.items())})
    return UserProfile(
        user_id=profile.user_id,
        interests=interests,
        history=profile.history + (record,),
        ontology_fingerprint=profile.ontology_fingerprint,
    )


def interest_weight(profile: UserProfile, concept_id: str) -> float:
    """Current weight of one center of interest."""
    try:
        return profile.interests[concept_id]
    except KeyError:
        raise UnknownConceptError(
            f"concept {concept_id!r} is not covered by profile {profile.user_id!r}"
        ) from None


def replay_history(user_id: str, history, ontology: Ontology) -> UserProfile:
    """Rebuild a profile from scratch by replaying its stored queries."""
    profile = create_profile(user_id, ontology)
    for record in history:
        profile = update_profile(profile, record.vector, record.timestamp)
    return profile


def profile_to_json(profile: UserProfile) -> dict:
    return {
        "user_id": profile.user_id,
        "ontology_fingerprint": profile.ontology_fingerprint,
        "weights": dict(sorted(profile.interests.items())),
        "history": [
            {"timestamp": r.timestamp, "vector": dict(sorted(r.vector.items()))}
            for r in profile.history
        ],
    }


def profile_from_json(payload: Mapping) -> UserProfile:
    return UserProfile(
        user_id=payload["user_id"],
        interests=dict(payload["weights"]),
        history=tuple(
            QueryRecord(rec["timestamp"], dict(rec["vector"]))
            for rec in payload["history"]
        ),
        ontology_fingerprint=payload["ontology_fingerprint"],
    )
