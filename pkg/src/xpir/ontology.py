"""Domain ontology loading, validation, and concept weighting.

Concepts form a DAG through is-a edges and carry surface keywords plus
named semantic relations (e.g. "made-of", "trait").  Loading assigns each
concept a depth coefficient and converts the coefficients into real
weights that sum to exactly 1 across the ontology, so deeper (more
specific) concepts receive a larger share of the total weight.

Coefficient rules:

* a root concept gets coefficient 1 (its depth);
* a concept whose parents all sit on one level gets the mean of its
  parents' coefficients plus 1 (it is strictly deeper than all of them);
* a concept whose parents sit on mixed levels is placed on the level of
  its deepest parent and gets the plain mean of the parents' coefficients
  (no increment, because depth does not increase along that edge).

Coefficients are kept as exact rationals; floats appear only in the
exported weight table.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Mapping

from .errors import (
    DegenerateOntologyError,
    InvalidWeightingError,
    OntologyParseError,
    OntologyValidationError,
    UnknownConceptError,
    UnknownRelationError,
)

_TOP_LEVEL_FIELDS = {"name", "concepts"}
_CONCEPT_FIELDS = {"id", "label", "keywords", "parents", "relations"}
_RELATION_FIELDS = {"name", "target"}


@dataclass(frozen=True)
class Concept:
    """One ontology node."""

    id: str
    label: str
    keywords: tuple[str, ...]
    parents: tuple[str, ...]
    relations: tuple[tuple[str, str], ...]  # (relation name, target id)


@dataclass(eq=False)
class Ontology:
    """Validated concept graph with depth coefficients and real weights.

    Immutable after load; safe for unrestricted concurrent reads.
    ``margin`` is None when every coefficient equals the root coefficient
    and the weighting fell back to uniform 1/|N|.
    """

    name: str
    concepts: dict[str, Concept]
    roots: tuple[str, ...]
    children: dict[str, tuple[str, ...]]
    levels: dict[str, int]
    coefficients: dict[str, Fraction]
    margin: Fraction | None
    coef_avg: Fraction
    weights: dict[str, float]
    relation_names: frozenset[str]
    fingerprint: str
    _ancestor_cache: dict[str, frozenset[str]] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.concepts)

    def concept(self, concept_id: str) -> Concept:
        try:
            return self.concepts[concept_id]
        except KeyError:
            raise UnknownConceptError(f"unknown concept id {concept_id!r}") from None

    def weight(self, concept_id: str) -> float:
        self.concept(concept_id)
        return self.weights[concept_id]

    def ancestors(self, concept_id: str) -> frozenset[str]:
        """All strict is-a ancestors of ``concept_id``."""
        self.concept(concept_id)
        cached = self._ancestor_cache.get(concept_id)
        if cached is not None:
            return cached
        acc: set[str] = set()
        stack = list(self.concepts[concept_id].parents)
        while stack:
            pid = stack.pop()
            if pid in acc:
                continue
            acc.add(pid)
            stack.extend(self.concepts[pid].parents)
        result = frozenset(acc)
        self._ancestor_cache[concept_id] = result
        return result

    def descendants(self, concept_id: str) -> frozenset[str]:
        """All strict is-a descendants of ``concept_id``."""
        self.concept(concept_id)
        acc: set[str] = set()
        stack = list(self.children.get(concept_id, ()))
        while stack:
            cid = stack.pop()
            if cid in acc:
                continue
            acc.add(cid)
            stack.extend(self.children.get(cid, ()))
        return frozenset(acc)


def _read_source(source: bytes | str | Path | IO[bytes]) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def load_ontology(source: bytes | str | Path | IO[bytes]) -> Ontology:
    """Load, validate, and weight an ontology from its JSON file format.

    ``source`` may be raw bytes, a filesystem path, or a readable binary
    stream.  The result is deterministic for identical input.
    """
    raw = _read_source(source)
    try:
        payload = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise OntologyParseError(f"not a valid ontology file: {exc}") from exc
    return _build_ontology(payload)


def _build_ontology(payload: object) -> Ontology:
    if not isinstance(payload, dict):
        raise OntologyParseError("top-level value must be an object")
    unknown = set(payload) - _TOP_LEVEL_FIELDS
    if unknown:
        raise OntologyParseError(f"unknown top-level fields: {sorted(unknown)}")
    name = payload.get("name")
    if not isinstance(name, str) or not name:
        raise OntologyParseError("'name' must be a non-empty string")
    raw_concepts = payload.get("concepts")
    if not isinstance(raw_concepts, list) or not raw_concepts:
        raise OntologyParseError("'concepts' must be a non-empty array")

    concepts: dict[str, Concept] = {}
    for item in raw_concepts:
        concept = _parse_concept(item)
        if concept.id in concepts:
            raise OntologyValidationError(f"duplicate concept id {concept.id!r}")
        concepts[concept.id] = concept

    for concept in concepts.values():
        for pid in concept.parents:
            if pid not in concepts:
                raise OntologyValidationError(
                    f"concept {concept.id!r} references nonexistent parent {pid!r}"
                )
        for rel_name, target in concept.relations:
            if target not in concepts:
                raise OntologyValidationError(
                    f"concept {concept.id!r} relation {rel_name!r} targets nonexistent id {target!r}"
                )

    parents_map = {cid: c.parents for cid, c in concepts.items()}
    coefficients, levels = _coefficients_and_levels(parents_map)

    try:
        weights_exact = compute_real_weights(coefficients)
        margin: Fraction | None = compute_margin(coefficients)
    except DegenerateOntologyError:
        # All coefficients equal the root's: fall back to uniform weights.
        weights_exact = {cid: Fraction(1, len(concepts)) for cid in concepts}
        margin = None
    coef_avg = compute_avg_coefficient(coefficients)

    children: dict[str, list[str]] = {cid: [] for cid in concepts}
    for cid, concept in concepts.items():
        for pid in concept.parents:
            children[pid].append(cid)
    roots = tuple(sorted(cid for cid, c in concepts.items() if not c.parents))
    relation_names = frozenset(
        rel_name for c in concepts.values() for rel_name, _ in c.relations
    )

    return Ontology(
        name=name,
        concepts=concepts,
        roots=roots,
        children={cid: tuple(sorted(kids)) for cid, kids in children.items()},
        levels=levels,
        coefficients=coefficients,
        margin=margin,
        coef_avg=coef_avg,
        weights={cid: float(w) for cid, w in weights_exact.items()},
        relation_names=relation_names,
        fingerprint=_fingerprint(name, concepts),
    )


def _parse_concept(item: object) -> Concept:
    if not isinstance(item, dict):
        raise OntologyParseError("each concept must be an object")
    unknown = set(item) - _CONCEPT_FIELDS
    if unknown:
        raise OntologyParseError(f"unknown concept fields: {sorted(unknown)}")
    cid = item.get("id")
    if not isinstance(cid, str) or not cid:
        raise OntologyParseError("concept 'id' must be a non-empty string")
    keywords = item.get("keywords")
    if not isinstance(keywords, list) or not keywords:
        raise OntologyValidationError(f"concept {cid!r} has no keywords")
    for kw in keywords:
        if not isinstance(kw, str) or not kw.strip():
            raise OntologyValidationError(f"concept {cid!r} has an empty keyword")
    label = item.get("label", cid)
    if not isinstance(label, str):
        raise OntologyParseError(f"concept {cid!r} 'label' must be a string")
    parents = item.get("parents", [])
    if not isinstance(parents, list) or not all(isinstance(p, str) for p in parents):
        raise OntologyParseError(f"concept {cid!r} 'parents' must be an array of ids")
    relations_raw = item.get("relations", [])
    if not isinstance(relations_raw, list):
        raise OntologyParseError(f"concept {cid!r} 'relations' must be an array")
    relations = []
    for rel in relations_raw:
        if not isinstance(rel, dict) or set(rel) != _RELATION_FIELDS:
            raise OntologyParseError(
                f"concept {cid!r} relations must be objects with 'name' and 'target'"
            )
        if not isinstance(rel["name"], str) or not rel["name"]:
            raise OntologyParseError(f"concept {cid!r} has a relation with an empty name")
        if not isinstance(rel["target"], str):
            raise OntologyParseError(f"concept {cid!r} has a relation with a non-string target")
        relations.append((rel["name"], rel["target"]))
    return Concept(
        id=cid,
        label=label,
        keywords=tuple(dict.fromkeys(keywords)),
        parents=tuple(dict.fromkeys(parents)),
        relations=tuple(dict.fromkeys(relations)),
    )


def _fingerprint(name: str, concepts: Mapping[str, Concept]) -> str:
    canon = {
        "name": name,
        "concepts": [
            {
                "id": c.id,
                "label": c.label,
                "keywords": sorted(c.keywords),
                "parents": sorted(c.parents),
                "relations": sorted(c.relations),
            }
            for c in (concepts[cid] for cid in sorted(concepts))
        ],
    }
    blob = json.dumps(canon, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _coefficients_and_levels(
    parents: Mapping[str, Iterable[str]],
) -> tuple[dict[str, Fraction], dict[str, int]]:
    order = _topological_order(parents)
    levels: dict[str, int] = {}
    coefs: dict[str, Fraction] = {}
    for cid in order:
        ps = tuple(parents[cid])
        if not ps:
            levels[cid] = 1
            coefs[cid] = Fraction(1)
            continue
        parent_levels = {levels[p] for p in ps}
        mean = sum(coefs[p] for p in ps) / len(ps)
        if len(parent_levels) == 1:
            levels[cid] = next(iter(parent_levels)) + 1
            candidate = mean + 1
        else:
            levels[cid] = max(parent_levels)
            candidate = mean
        # Never drop below a strictly shallower parent: weight ordering
        # along depth-increasing edges must stay monotone.
        floor = max(
            (coefs[p] for p in ps if levels[p] < levels[cid]),
            default=Fraction(0),
        )
        coefs[cid] = max(candidate, floor)
    return coefs, levels


def _topological_order(parents: Mapping[str, Iterable[str]]) -> list[str]:
    remaining = {cid: set(ps) for cid, ps in parents.items()}
    dependents: dict[str, list[str]] = {cid: [] for cid in parents}
    for cid, ps in parents.items():
        for p in ps:
            dependents[p].append(cid)
    ready = [cid for cid, ps in remaining.items() if not ps]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        cid = heapq.heappop(ready)
        order.append(cid)
        for dep in dependents[cid]:
            remaining[dep].discard(cid)
            if not remaining[dep]:
                heapq.heappush(ready, dep)
    if len(order) != len(parents):
        stuck = min(cid for cid, ps in remaining.items() if ps)
        raise OntologyValidationError(f"is-a cycle detected involving concept {stuck!r}")
    return order


def assign_coefficients(parents: Mapping[str, Iterable[str]]) -> dict[str, Fraction]:
    """Depth coefficients for a concept graph given as an id -> parent-ids map."""
    coefs, _ = _coefficients_and_levels(parents)
    return coefs


def compute_margin(
    coefficients: Mapping[str, Fraction | int],
    root_coefficient: Fraction | int = 1,
    total_weight: Fraction | int = 1,
) -> Fraction:
    """Margin converting coefficient deviations into weight deviations.

    total_weight / (sum of (coefficient - root coefficient))^2.  Raises
    DegenerateOntologyError when the sum is zero (all coefficients equal
    the root's); callers then fall back to uniform weights.
    """
    spread = sum(Fraction(c) - Fraction(root_coefficient) for c in coefficients.values())
    if spread == 0:
        raise DegenerateOntologyError(
            "all coefficients equal the root coefficient; margin undefined"
        )
    return Fraction(total_weight) / (spread * spread)


def compute_avg_coefficient(coefficients: Mapping[str, Fraction | int]) -> Fraction:
    """Arithmetic mean of all concept coefficients."""
    if not coefficients:
        raise OntologyValidationError("cannot average coefficients of an empty ontology")
    return sum(Fraction(c) for c in coefficients.values()) / len(coefficients)


def compute_real_weights(
    coefficients: Mapping[str, Fraction | int],
    root_coefficient: Fraction | int = 1,
) -> dict[str, Fraction]:
    """Per-concept share of the total ontology weight 1.

    weight(c) = 1/|N| + margin * (coefficient(c) - mean coefficient).
    The shares sum to exactly 1.  Raises InvalidWeightingError when a
    share comes out non-positive (extreme coefficient spreads).
    """
    margin = compute_margin(coefficients, root_coefficient)
    avg = compute_avg_coefficient(coefficients)
    w_avg = Fraction(1, len(coefficients))
    weights: dict[str, Fraction] = {}
    for cid in coefficients:
        w = w_avg + margin * (Fraction(coefficients[cid]) - avg)
        if w <= 0:
            raise InvalidWeightingError(
                f"concept {cid!r} would get non-positive weight {float(w):.6g}"
            )
        weights[cid] = w
    return weights


def related_concepts(
    ontology: Ontology,
    concept_id: str,
    relation_names: Iterable[str] = (),
    max_hops: int = 0,
) -> list[tuple[str, int]]:
    """Breadth-first closure over is-a-child edges plus the named relations.

    Returns (concept id, hop distance) pairs including the seed at hop 0,
    sorted by (hop, id).
    """
    ontology.concept(concept_id)
    names = frozenset(relation_names)
    unknown = names - ontology.relation_names
    if unknown:
        raise UnknownRelationError(f"unknown relation names: {sorted(unknown)}")
    if max_hops < 0:
        raise ValueError("max_hops must be >= 0")

    seen: dict[str, int] = {concept_id: 0}
    queue = deque([(concept_id, 0)])
    while queue:
        cid, hop = queue.popleft()
        if hop == max_hops:
            continue
        neighbors = list(ontology.children.get(cid, ()))
        neighbors.extend(
            target for rel_name, target in ontology.concepts[cid].relations
            if rel_name in names
        )
        for nid in neighbors:
            if nid not in seen:
                seen[nid] = hop + 1
                queue.append((nid, hop + 1))
    return sorted(seen.items(), key=lambda pair: (pair[1], pair[0]))


def most_specific(ontology: Ontology, concept_ids: Iterable[str]) -> set[str]:
    """Drop every concept that is a strict is-a ancestor of another one in the set."""
    ids = set(concept_ids)
    for cid in ids:
        ontology.concept(cid)
    covered: set[str] = set()
    for cid in ids:
        covered.update(ontology.ancestors(cid) & ids)
    return ids - covered
