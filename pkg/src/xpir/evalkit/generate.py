"""Seeded generator for synthetic XML corpora, query sets, and qrels.

Documents are built around one topic concept drawn from a domain
subtree.  Text runs embed concept keywords between filler words; some
documents deliberately mention a general concept next to one of its
specific descendants, and some carry a stray off-topic mention so that
unweighted retrieval has noise to rank.  Ground truth comes from the
generator itself: a document is relevant to a query concept when its
topic lies in the concept's is-a closure.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from ..errors import ConfigError
from ..ontology import Ontology

# Generic prose vocabulary; anything colliding with an ontology keyword
# token is filtered out before use.
DEFAULT_FILLERS = (
    "about above across after again almost along already also always among",
    "analysis another answer approach argument aspect author balance basics",
    "because become before begin behind belong benefit better beyond body",
    "case certain chapter choice clear close common compare consider context",
    "course current describe detail develop different discuss draft during",
    "each early effect effort either enough entire evidence exactly example",
    "experience explain extent fact fairly famous feature final findings",
    "follow formal further general give goal great guide handle happen hard",
    "heavy helpful hence history however idea important inside instead issue",
    "itself keep kind know large later learn least lesson letter likely",
    "listen little longer main manner material matter meaning measure meet",
    "mention method middle might modern moment month morning must narrow",
    "nature nearly never night notice number occur offer often opinion",
    "order other outline overview pattern part particular past perhaps period",
    "person picture piece place plain point popular position possible",
    "practice prepare present pretty previous principle probably problem",
    "produce proper provide purpose quite rather reader reason recall",
    "recent regard remain remark report respect rest result review right",
    "same season second section seem sense sentence series serious several",
    "short should simple since small solid some source speak special stage",
    "standard start still story strong student subject succeed such summary",
    "support sure surface teach tell term themselves theory thing think",
    "third those thought through thus together topic toward true turn under",
    "understand unit useful usual various view visible voice wide within",
    "without word worth write yesterday young",
)


@dataclass(frozen=True)
class CorpusConfig:
    """Corpus shape; the defaults approximate one tenth of the reference
    collection (40 documents, ~645 element and ~580 text nodes)."""

    doc_count: int = 40
    seed: int = 7
    domains: tuple[str, ...] = ()  # empty: derived from the ontology roots
    domain_mix: dict[str, float] = field(default_factory=dict, hash=False)
    required_topics: tuple[str, ...] = ()  # concepts guaranteed to anchor a document
    base_paragraphs_range: tuple[int, int] = (8, 10)
    sections_range: tuple[int, int] = (0, 2)
    paragraphs_range: tuple[int, int] = (2, 4)
    nested_section_rate: float = 0.2
    topic_mentions: tuple[int, int] = (2, 4)
    general_specific_rate: float = 2.5  # expected ancestor-mix runs per document
    noise_rate: float = 2.0  # expected off-domain stray paragraphs per document
    query_count: int = 28
    extra_query_concepts: tuple[str, ...] = ()


@dataclass(frozen=True)
class QuerySpec:
    query_id: str
    concept: str


@dataclass
class Qrels:
    """Relevance judgments: query id to relevant (doc_id, node_start) pairs.

    Document-level judgments use node_start 0.
    """

    granularity: str  # "document" or "node"
    relevant: dict[str, set[tuple[str, int]]]

    def relevant_docs(self, query_id: str) -> set[str]:
        return {doc for doc, _ in self.relevant.get(query_id, ())}


@dataclass
class GeneratedCorpus:
    documents: list[tuple[str, bytes]]
    queries: list[QuerySpec]
    qrels: Qrels
    node_qrels: Qrels
    doc_topics: dict[str, str]
    doc_domains: dict[str, str]


def _keyword_tokens(ontology: Ontology) -> set[str]:
    import re

    tokens: set[str] = set()
    for concept in ontology.concepts.values():
        for kw in concept.keywords:
            tokens.update(re.findall(r"\w+", kw.lower()))
    return tokens


def _domains(ontology: Ontology, config: CorpusConfig) -> list[str]:
    if config.domains:
        for cid in config.domains:
            ontology.concept(cid)
        domains = sorted(config.domains)
    elif len(ontology.roots) == 1:
        domains = sorted(ontology.children.get(ontology.roots[0], ()))
    else:
        domains = sorted(ontology.roots)
    if len(domains) < 2:
        raise ConfigError(
            f"corpus generation needs at least 2 domains, found {len(domains)}"
        )
    return domains


class _DocBuilder:
    """Accumulates markup and remembers which concepts went into each run."""

    def __init__(self) -> None:
        self.parts: list[str] = []
        self.runs: list[set[str]] = []  # planted concepts per text run

    def open(self, tag: str, **attrs: str) -> None:
        rendered = "".join(f" {k}={quoteattr(v)}" for k, v in attrs.items())
        self.parts.append(f"<{tag}{rendered}>")

    def close(self, tag: str) -> None:
        self.parts.append(f"</{tag}>\n")

    def text(self, run: str, planted: set[str]) -> None:
        self.parts.append(escape(run))
        self.runs.append(planted)

    def xml(self) -> bytes:
        return "".join(self.parts).encode()


def _expected_count(rng: random.Random, rate: float) -> int:
    """Integer draw with expectation ``rate`` (floor plus a Bernoulli tail)."""
    whole = int(rate)
    return whole + (1 if rng.random() < rate - whole else 0)


def _sentence(rng: random.Random, fillers: list[str], plants: list[tuple[str, str]]) -> tuple[str, set[str]]:
    """Filler words with keyword phrases spliced in, never adjacent."""
    words: list[str] = []
    planted: set[str] = set()
    for cid, keyword in plants:
        words.extend(rng.choices(fillers, k=rng.randint(1, 3)))
        words.append(keyword)
        planted.add(cid)
    words.extend(rng.choices(fillers, k=rng.randint(2, 5)))
    return " ".join(words), planted


def generate_corpus(ontology: Ontology, config: CorpusConfig) -> GeneratedCorpus:
    """Deterministically generate documents, query concepts, and qrels."""
    if config.doc_count < 1:
        raise ConfigError("doc_count must be at least 1")
    rng = random.Random(config.seed)
    domains = _domains(ontology, config)
    keyword_tokens = _keyword_tokens(ontology)
    fillers = [
        w for group in DEFAULT_FILLERS for w in group.split()
        if w not in keyword_tokens
    ]
    if len(fillers) < 20:
        raise ConfigError("ontology keywords leave too few filler words")

    mix = [max(config.domain_mix.get(d, 1.0), 0.0) for d in domains]
    if sum(mix) <= 0:
        raise ConfigError("domain_mix must leave at least one positive weight")

    subtree = {d: sorted(ontology.descendants(d) | {d}) for d in domains}

    forced = _forced_topics(ontology, config, domains)
    if len(forced) > config.doc_count:
        raise ConfigError("doc_count too small to cover all required topics")

    documents: list[tuple[str, bytes]] = []
    doc_topics: dict[str, str] = {}
    doc_domains: dict[str, str] = {}
    run_plants: dict[str, list[set[str]]] = {}

    for i in range(config.doc_count):
        doc_id = f"doc_{i:04d}"
        if i < len(forced):
            topic, domain = forced[i]
        else:
            domain = rng.choices(domains, weights=mix)[0]
            candidates = [c for c in subtree[domain] if c != domain]
            topic = rng.choice(candidates) if candidates and rng.random() < 0.85 else domain
        builder = _build_document(rng, ontology, config, fillers, domain, topic, domains)
        documents.append((doc_id, builder.xml()))
        doc_topics[doc_id] = topic
        doc_domains[doc_id] = domain
        run_plants[doc_id] = builder.runs

    queries = _select_queries(rng, ontology, config, domains, doc_topics)
    qrels, node_qrels = _judgments(ontology, documents, queries, doc_topics, run_plants)
    return GeneratedCorpus(documents, queries, qrels, node_qrels, doc_topics, doc_domains)


def _forced_topics(
    ontology: Ontology, config: CorpusConfig, domains: list[str]
) -> list[tuple[str, str]]:
    """(topic, domain) anchors for concepts that must have relevant docs."""
    forced: list[tuple[str, str]] = []
    for concept in config.required_topics:
        ontology.concept(concept)
        if concept in domains:
            domain = concept
        else:
            owners = sorted(set(ontology.ancestors(concept)) & set(domains))
            if not owners:
                raise ConfigError(
                    f"required topic {concept!r} lies outside every corpus domain"
                )
            domain = owners[0]
        forced.append((concept, domain))
    return forced


def _build_document(
    rng: random.Random,
    ontology: Ontology,
    config: CorpusConfig,
    fillers: list[str],
    domain: str,
    topic: str,
    domains: list[str],
) -> _DocBuilder:
    """One topical document.

    On-topic text runs blend the specific topic with sibling concepts and
    (sometimes) the general domain concept, while off-topic noise arrives
    as standalone single-concept paragraphs about another domain.
    """

    def keyword(cid: str) -> tuple[str, str]:
        return cid, ontology.concepts[cid].keywords[0]

    # Specific (non-domain) concepts of this domain to blend with.
    blend_pool = [
        c for c in sorted(ontology.descendants(domain)) if c != topic
    ] or [topic]
    mentions_left = rng.randint(*config.topic_mentions)
    mix_left = _expected_count(rng, config.general_specific_rate)

    def paragraph_plants(anchor: str) -> list[tuple[str, str]]:
        nonlocal mentions_left, mix_left
        plants: list[tuple[str, str]] = []
        if mentions_left > 0 and rng.random() < 0.55:
            plants.append(keyword(anchor))
            mentions_left -= 1
        elif rng.random() < 0.5:
            plants.append(keyword(rng.choice(blend_pool)))
        if plants and rng.random() < 0.5:
            plants.append(keyword(rng.choice(blend_pool)))
        if plants and mix_left > 0:
            ancestors = sorted(ontology.ancestors(topic) - set(ontology.roots))
            if ancestors:
                plants.append(keyword(rng.choice(ancestors)))
                mix_left -= 1
        return plants

    def noise_plant() -> list[tuple[str, str]]:
        other = rng.choice([d for d in domains if d != domain])
        pool = sorted(ontology.children.get(other, ())) + [other]
        return [keyword(rng.choice(pool))]

    noise_slots = _expected_count(rng, config.noise_rate)

    builder = _DocBuilder()
    builder.open("doc", domain=domain)
    builder.parts.append("\n")

    builder.open("title")
    builder.text(*_sentence(rng, fillers, [keyword(topic)]))
    builder.close("title")
    builder.parts.append("\n")

    base_count = rng.randint(*config.base_paragraphs_range)
    noise_at = set(rng.sample(range(base_count), min(noise_slots, base_count)))
    for i in range(base_count):
        builder.open("para")
        if i in noise_at:
            builder.text(*_sentence(rng, fillers, noise_plant()))
        else:
            builder.text(*_sentence(rng, fillers, paragraph_plants(topic)))
        builder.close("para")

    for _ in range(rng.randint(*config.sections_range)):
        builder.open("sec", id=f"s{rng.randint(1, 99)}")
        builder.parts.append("\n")
        section_topic = topic if rng.random() < 0.6 else rng.choice(blend_pool)
        builder.open("title")
        builder.text(*_sentence(rng, fillers, [keyword(section_topic)]))
        builder.close("title")
        for _ in range(rng.randint(*config.paragraphs_range)):
            builder.open("para")
            builder.text(*_sentence(rng, fillers, paragraph_plants(section_topic)))
            builder.close("para")
        if rng.random() < config.nested_section_rate:
            builder.open("sec", id=f"n{rng.randint(1, 99)}")
            builder.parts.append("\n")
            builder.open("para")
            builder.text(*_sentence(rng, fillers, paragraph_plants(section_topic)))
            builder.close("para")
            builder.close("sec")
        builder.close("sec")

    builder.close("doc")
    return builder


def _select_queries(
    rng: random.Random,
    ontology: Ontology,
    config: CorpusConfig,
    domains: list[str],
    doc_topics: dict[str, str],
) -> list[QuerySpec]:
    def has_relevant(concept: str) -> bool:
        closure = ontology.descendants(concept) | {concept}
        return any(topic in closure for topic in doc_topics.values())

    chosen: list[str] = []
    for concept in list(domains) + list(config.extra_query_concepts):
        if concept not in chosen and has_relevant(concept):
            chosen.append(concept)
    pool = sorted({t for t in doc_topics.values()} - set(chosen))
    specific = [c for c in pool if has_relevant(c)]
    rng.shuffle(specific)
    for concept in specific:
        if len(chosen) >= config.query_count:
            break
        chosen.append(concept)
    if len(chosen) < 2:
        raise ConfigError("corpus too small to derive a query set")
    return [QuerySpec(concept, concept) for concept in chosen]


def _judgments(
    ontology: Ontology,
    documents: list[tuple[str, bytes]],
    queries: list[QuerySpec],
    doc_topics: dict[str, str],
    run_plants: dict[str, list[set[str]]],
) -> tuple[Qrels, Qrels]:
    from ..xmldoc import TEXT, parse_document

    text_starts: dict[str, list[int]] = {}
    for doc_id, data in documents:
        tree = parse_document(doc_id, data)
        text_starts[doc_id] = [d.start for d in tree.descriptors if d.node_type == TEXT]
        if len(text_starts[doc_id]) != len(run_plants[doc_id]):
            raise AssertionError(f"run bookkeeping out of step for {doc_id}")

    doc_level: dict[str, set[tuple[str, int]]] = {}
    node_level: dict[str, set[tuple[str, int]]] = {}
    for query in queries:
        closure = ontology.descendants(query.concept) | {query.concept}
        docs = {
            doc_id for doc_id, topic in doc_topics.items() if topic in closure
        }
        doc_level[query.query_id] = {(doc_id, 0) for doc_id in sorted(docs)}
        nodes: set[tuple[str, int]] = set()
        for doc_id in sorted(docs):
            for start, planted in zip(text_starts[doc_id], run_plants[doc_id]):
                if planted & closure:
                    nodes.add((doc_id, start))
        node_level[query.query_id] = nodes
    return Qrels("document", doc_level), Qrels("node", node_level)


def write_corpus(corpus: GeneratedCorpus, directory: str | Path) -> None:
    """Write documents, the query list, and TREC-style qrels files."""
    directory = Path(directory)
    docs_dir = directory / "docs"
    docs_dir.mkdir(parents=True, exist_ok=True)
    for doc_id, data in corpus.documents:
        (docs_dir / f"{doc_id}.xml").write_bytes(data)
    lines = [f"{q.query_id}\t{q.concept}" for q in corpus.queries]
    (directory / "queries.tsv").write_text("\n".join(lines) + "\n", "utf-8")
    for name, qrels in (("qrels_docs.txt", corpus.qrels), ("qrels_nodes.txt", corpus.node_qrels)):
        rows = []
        for query_id in sorted(qrels.relevant):
            for doc_id, start in sorted(qrels.relevant[query_id]):
                rows.append(f"{query_id} {doc_id} {start} 1")
        (directory / name).write_text("\n".join(rows) + "\n", "utf-8")


def load_qrels(path: str | Path) -> Qrels:
    """Read TREC-style qrels lines written by write_corpus."""
    relevant: dict[str, set[tuple[str, int]]] = {}
    starts: set[int] = set()
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        query_id, doc_id, start, relevance = line.split()
        if int(relevance) > 0:
            relevant.setdefault(query_id, set()).add((doc_id, int(start)))
            starts.add(int(start))
    granularity = "document" if starts <= {0} else "node"
    return Qrels(granularity, relevant)
