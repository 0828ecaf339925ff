"""Shared generators, oracles, and reference data used across test modules."""

from __future__ import annotations

import json
import random
import xml.etree.ElementTree as ET

from xpir.errors import InvalidWeightingError
from xpir.ontology import Ontology, load_ontology

# Published users-by-instants grid: (recall, precision, f1) per cell,
# instants T1..T8 by rows, four users by columns.
REFERENCE_GRID = [
    [(1.00, 0.80, 0.8889), (0.78, 0.70, 0.7378), (1.00, 0.65, 0.7879), (0.75, 0.69, 0.7188)],
    [(0.80, 0.67, 0.7293), (1.00, 0.84, 0.9130), (0.88, 0.62, 0.7275), (0.70, 0.67, 0.6847)],
    [(0.85, 0.62, 0.7170), (0.80, 0.69, 0.7409), (0.90, 0.68, 0.7747), (1.00, 0.90, 0.9474)],
    [(0.80, 0.70, 0.7467), (0.77, 0.70, 0.7333), (1.00, 0.86, 0.9247), (0.70, 0.65, 0.6741)],
    [(0.90, 0.64, 0.7481), (1.00, 0.80, 0.8889), (0.85, 0.72, 0.7796), (0.68, 0.68, 0.6800)],
    [(0.80, 0.70, 0.7467), (0.85, 0.68, 0.7556), (1.00, 0.81, 0.8950), (0.80, 0.64, 0.7111)],
    [(1.00, 0.80, 0.8889), (0.80, 0.72, 0.7579), (1.00, 0.69, 0.8166), (0.78, 0.70, 0.7378)],
    [(0.90, 0.66, 0.7615), (1.00, 0.82, 0.9011), (0.86, 0.73, 0.7897), (0.70, 0.68, 0.6899)],
]

# ---------------------------------------------------------------------------
# Random ontologies


def random_ontology_payload(rng: random.Random, max_concepts: int = 200) -> dict:
    """Random acyclic concept graph in the ontology file schema.

    Acyclicity holds by construction: parents are only drawn from
    earlier-created concepts.
    """
    n = rng.randint(3, max_concepts)
    ids = [f"c{i:03d}" for i in range(n)]
    concepts = []
    for i, cid in enumerate(ids):
        if i == 0 or rng.random() < 0.06:
            parents: list[str] = []
        elif rng.random() < 0.75:
            parents = [ids[rng.randrange(i)]]
        else:
            parents = rng.sample(ids[:i], min(i, rng.randint(2, 3)))
        concepts.append(
            {"id": cid, "keywords": [f"kw {cid}"], "parents": sorted(parents)}
        )
    return {"name": f"random-{n}", "concepts": concepts}


def random_valid_ontology(rng: random.Random, max_concepts: int = 200) -> Ontology:
    """Random ontology that passed full validation (resamples rejected ones)."""
    while True:
        payload = random_ontology_payload(rng, max_concepts)
        try:
            return load_ontology(json.dumps(payload).encode())
        except InvalidWeightingError:
            continue


# ---------------------------------------------------------------------------
# Random XML documents and an independent two-pass numbering oracle

_WORDS = ["alpha", "beta", "gamma", "delta", "nine", "rho", "sigma", "tau"]
_TAGS = ["a", "b", "c", "sec", "para", "title", "item", "note"]


def random_document_xml(rng: random.Random, max_nodes: int = 200) -> bytes:
    """Render a random well-formed single-root document.

    The root keeps growing until the node budget is spent, so document
    sizes roughly track the drawn budget.
    """
    budget = rng.randint(1, max_nodes)
    counter = [0]

    def build(depth: int) -> str:
        counter[0] += 1
        tag = rng.choice(_TAGS)
        attrs = ""
        for nth in range(rng.randint(0, 2)):
            if counter[0] >= budget:
                break
            counter[0] += 1
            attrs += f' k{nth}{rng.randint(0, 9)}="{rng.choice(_WORDS)}"'
        parts = [f"<{tag}{attrs}>"]
        while counter[0] < budget and (depth == 0 or rng.random() < 0.7):
            if depth >= 8 or rng.random() < 0.45:
                counter[0] += 1
                parts.append(" ".join(rng.choices(_WORDS, k=rng.randint(1, 4))))
            else:
                parts.append(build(depth + 1))
        if rng.random() < 0.3:
            parts.append("   ")  # whitespace-only run, must be dropped
        parts.append(f"</{tag}>")
        return "".join(parts)

    return build(0).encode()


def dom_numbering_oracle(doc_id: str, data: bytes) -> list[tuple]:
    """Two-pass in-memory numbering of a document.

    Builds a full tree first, then assigns (start, end) by recursive
    traversal with one shared counter.  Returns tuples
    (doc_id, start, end, parent, node_type, name, value) in start order.
    """
    root = ET.fromstring(data)
    out: list[tuple] = []
    counter = [0]

    def take() -> int:
        counter[0] += 1
        return counter[0]

    def emit_text(raw: str | None, parent: int) -> None:
        if raw and raw.strip(" \t\r\n"):
            start = take()
            end = take()
            out.append((doc_id, start, end, parent, "text", None, raw))

    def visit(elem: ET.Element, parent: int) -> None:
        start = take()
        for name, value in elem.attrib.items():
            a_start = take()
            a_end = take()
            out.append((doc_id, a_start, a_end, start, "attribute", name, value))
        emit_text(elem.text, start)
        for child in elem:
            visit(child, start)
            emit_text(child.tail, start)
        end = take()
        out.append((doc_id, start, end, parent, "element", elem.tag, None))

    visit(root, 0)
    return sorted(out, key=lambda row: row[1])
