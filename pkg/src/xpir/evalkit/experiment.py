"""Experiment harness comparing unweighted and weighted configurations.

Two retrieval configurations run over one seeded corpus:

* baseline: uniform concept weights at index time and no profile factor
  at query time;
* proposed: ontology concept weights plus profile personalization with
  the update rule applied after every answered request.

The comparison phase scores every generated request, answered by the
roster user whose declared interest covers the request (each user is
warmed up on their interest first, and keeps learning from their own
requests).  The adaptation phase runs the instant schedule for every
user under the proposed configuration.  Global averages accompany the
per-request rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from ..conceptindex import build_index
from ..errors import ConfigError
from ..fixtures import computer_science_ontology_bytes
from ..ontology import Ontology, load_ontology
from ..profile import create_profile, update_profile
from ..retrieval import Query, build_query_vector, rank
from .generate import CorpusConfig, GeneratedCorpus, generate_corpus
from .metrics import precision_recall_f1

# Published reference averages kept next to our own numbers for context.
REFERENCE_MEANS = {
    "baseline": {"precision": 0.426, "recall": 0.756},
    "proposed": {"precision": 0.710, "recall": 0.978},
}


@dataclass(frozen=True)
class UserSpec:
    user_id: str
    interest: str  # concept id the user cares about


@dataclass(frozen=True)
class InstantSpec:
    label: str
    concept: str


@dataclass(frozen=True)
class RetrievalSettings:
    mode: str = "threshold"  # "threshold", "topk", or "positive"
    k: int = 100_000  # ranked-list cap handed to the ranker
    cutoff: int = 12  # document cutoff in "topk" mode
    threshold: float = 0.40  # fraction of the best score in "threshold" mode
    max_hops: int = 1
    relation_names: tuple[str, ...] = ()
    overlap_filter: bool = False
    granularity: str = "document"
    normalize_profile: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 13
    ontology_path: str | None = None  # None: bundled computer-science fixture
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    users: tuple[UserSpec, ...] = (
        UserSpec("user_1", "databases"),
        UserSpec("user_2", "algorithms"),
        UserSpec("user_3", "operating-systems"),
        UserSpec("user_4", "computer-networks"),
    )
    instants: tuple[InstantSpec, ...] = (
        InstantSpec("T1", "databases"),
        InstantSpec("T2", "control-structures"),
        InstantSpec("T3", "computer-networks"),
        InstantSpec("T4", "memory-management"),
        InstantSpec("T5", "algorithms"),
        InstantSpec("T6", "operating-systems"),
        InstantSpec("T7", "databases"),
        InstantSpec("T8", "algorithms"),
    )
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    warmup_repeats: int = 3

    @classmethod
    def from_json(cls, source: str | Path | bytes) -> "ExperimentConfig":
        if isinstance(source, bytes):
            payload = json.loads(source)
        else:
            payload = json.loads(Path(source).read_text("utf-8"))
        return cls.from_dict(payload)

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        if not isinstance(payload, dict):
            raise ConfigError("experiment config must be a JSON object")
        known = {
            "seed", "ontology_path", "corpus", "users", "instants",
            "retrieval", "warmup_repeats",
        }
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown experiment config fields: {sorted(unknown)}")
        kwargs: dict = {}
        for key in ("seed", "ontology_path", "warmup_repeats"):
            if key in payload:
                kwargs[key] = payload[key]
        if "corpus" in payload:
            corpus = dict(payload["corpus"])
            for key in ("sections_range", "paragraphs_range", "topic_mentions",
                        "domains", "extra_query_concepts"):
                if key in corpus:
                    corpus[key] = tuple(corpus[key])
            kwargs["corpus"] = CorpusConfig(**corpus)
        if "users" in payload:
            kwargs["users"] = tuple(UserSpec(**u) for u in payload["users"])
        if "instants" in payload:
            kwargs["instants"] = tuple(InstantSpec(**i) for i in payload["instants"])
        if "retrieval" in payload:
            retrieval = dict(payload["retrieval"])
            if "relation_names" in retrieval:
                retrieval["relation_names"] = tuple(retrieval["relation_names"])
            kwargs["retrieval"] = RetrievalSettings(**retrieval)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad experiment config: {exc}") from exc


def default_config(**overrides) -> ExperimentConfig:
    return replace(ExperimentConfig(), **overrides)


@dataclass
class RequestRow:
    phase: str  # "comparison" or "adaptation"
    configuration: str  # "baseline" or "proposed"
    user_id: str
    instant: str
    query_id: str
    concept: str
    precision: float
    recall: float
    f1: float
    retrieved: int
    relevant: int
    hits: int


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[RequestRow]
    means: dict[str, dict[str, float]]  # configuration -> metric -> mean
    user_means: dict[str, dict[str, float]]
    corpus_summary: dict[str, int]
    reference_means: dict[str, dict[str, float]] = field(default_factory=lambda: REFERENCE_MEANS)

    def rows_for(self, phase: str, configuration: str | None = None) -> list[RequestRow]:
        return [
            row for row in self.rows
            if row.phase == phase
            and (configuration is None or row.configuration == configuration)
        ]


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _load_experiment_ontology(config: ExperimentConfig) -> Ontology:
    if config.ontology_path is None:
        return load_ontology(computer_science_ontology_bytes())
    return load_ontology(config.ontology_path)


def _retrieved_slice(results, settings: RetrievalSettings):
    """Apply the configured notion of 'returned' to a ranked list."""
    if settings.mode == "positive":
        return results, None
    if settings.mode == "topk":
        return results, settings.cutoff
    if settings.mode == "threshold":
        if not results:
            return results, None
        floor = settings.threshold * results[0].score
        return [r for r in results if r.score >= floor], None
    raise ConfigError(f"unknown retrieval mode {settings.mode!r}")


def _score_one(
    index,
    ontology: Ontology,
    corpus: GeneratedCorpus,
    settings: RetrievalSettings,
    concept: str,
    profile,
    personalize: bool,
):
    query = Query(
        concept=concept,
        relation_names=settings.relation_names,
        max_hops=settings.max_hops,
    )
    vector = build_query_vector(query, ontology)
    results = rank(
        index, ontology, vector, profile,
        k=settings.k, overlap_filter=settings.overlap_filter,
        personalize=personalize, normalize_profile=settings.normalize_profile,
    )
    qrels = corpus.qrels if settings.granularity == "document" else corpus.node_qrels
    relevant = qrels.relevant.get(concept)
    if not relevant:
        raise ConfigError(f"query concept {concept!r} has no relevance judgments")
    kept, cutoff = _retrieved_slice(results, settings)
    precision, recall, f1 = precision_recall_f1(
        kept, relevant, cutoff=cutoff, granularity=settings.granularity
    )
    if settings.granularity == "document":
        retrieved = len({r.doc_id for r in kept}) if cutoff is None else min(
            cutoff, len({r.doc_id for r in kept})
        )
        hits = round(precision * retrieved) if retrieved else 0
    else:
        retrieved = len(kept) if cutoff is None else min(cutoff, len(kept))
        hits = round(precision * retrieved) if retrieved else 0
    return vector, precision, recall, f1, retrieved, len(relevant), hits


def run_experiment(
    config: ExperimentConfig,
    *,
    ontology: Ontology | None = None,
    index_builder: Callable = build_index,
) -> ExperimentReport:
    """Generate the corpus, build both indexes, and run both phases."""
    ontology = ontology or _load_experiment_ontology(config)
    for user in config.users:
        ontology.concept(user.interest)
    for instant in config.instants:
        ontology.concept(instant.concept)

    # Every instant and interest concept needs on-topic documents and a
    # qrels entry, so anchor them in the generated corpus and query set.
    # The experiment seed drives corpus generation.
    needed = tuple(sorted(
        {i.concept for i in config.instants} | {u.interest for u in config.users}
    ))
    corpus_config = replace(
        config.corpus,
        seed=config.seed,
        required_topics=tuple(dict.fromkeys(config.corpus.required_topics + needed)),
        extra_query_concepts=tuple(dict.fromkeys(config.corpus.extra_query_concepts + needed)),
    )
    corpus = generate_corpus(ontology, corpus_config)
    documents = list(corpus.documents)
    proposed_index = index_builder(documents, ontology)
    baseline_index = index_builder(documents, ontology, uniform_weights=True)

    rows: list[RequestRow] = []

    def expansion_query(concept: str) -> Query:
        return Query(
            concept=concept,
            relation_names=config.retrieval.relation_names,
            max_hops=config.retrieval.max_hops,
        )

    def matching_user(concept: str) -> UserSpec:
        for user in config.users:
            closure = ontology.descendants(user.interest) | {user.interest}
            if concept in closure:
                return user
        return config.users[0]

    # Comparison phase: every request is answered by the roster user whose
    # interest covers it, under both configurations.
    for configuration, index, personalize in (
        ("baseline", baseline_index, False),
        ("proposed", proposed_index, True),
    ):
        profiles: dict[str, object] = {}
        clocks: dict[str, int] = {}
        for user in config.users:
            profile = create_profile(user.user_id, ontology)
            clock = 0
            if personalize:
                warm_vector = build_query_vector(expansion_query(user.interest), ontology)
                for _ in range(config.warmup_repeats):
                    profile = update_profile(profile, warm_vector, clock)
                    clock += 1
            profiles[user.user_id] = profile
            clocks[user.user_id] = clock
        for query in corpus.queries:
            user = matching_user(query.concept)
            vector, precision, recall, f1, retrieved, relevant, hits = _score_one(
                index, ontology, corpus, config.retrieval,
                query.concept, profiles[user.user_id], personalize,
            )
            rows.append(RequestRow(
                "comparison", configuration, user.user_id, "", query.query_id,
                query.concept, precision, recall, f1, retrieved, relevant, hits,
            ))
            if personalize:
                profiles[user.user_id] = update_profile(
                    profiles[user.user_id], vector, clocks[user.user_id]
                )
                clocks[user.user_id] += 1

    # Adaptation phase: several users with warmed-up interests answer the
    # instant schedule under the proposed configuration.
    for user in config.users:
        profile = create_profile(user.user_id, ontology)
        clock = 0
        warm_vector = build_query_vector(expansion_query(user.interest), ontology)
        for _ in range(config.warmup_repeats):
            profile = update_profile(profile, warm_vector, clock)
            clock += 1
        for instant in config.instants:
            vector, precision, recall, f1, retrieved, relevant, hits = _score_one(
                proposed_index, ontology, corpus, config.retrieval,
                instant.concept, profile, True,
            )
            rows.append(RequestRow(
                "adaptation", "proposed", user.user_id, instant.label,
                instant.concept, instant.concept,
                precision, recall, f1, retrieved, relevant, hits,
            ))
            profile = update_profile(profile, vector, clock)
            clock += 1

    means = {
        configuration: {
            "precision": _mean([r.precision for r in rows
                                if r.phase == "comparison" and r.configuration == configuration]),
            "recall": _mean([r.recall for r in rows
                             if r.phase == "comparison" and r.configuration == configuration]),
            "f1": _mean([r.f1 for r in rows
                         if r.phase == "comparison" and r.configuration == configuration]),
        }
        for configuration in ("baseline", "proposed")
    }
    user_means = {
        user.user_id: {
            "precision": _mean([r.precision for r in rows
                                if r.phase == "adaptation" and r.user_id == user.user_id]),
            "recall": _mean([r.recall for r in rows
                             if r.phase == "adaptation" and r.user_id == user.user_id]),
            "f1": _mean([r.f1 for r in rows
                         if r.phase == "adaptation" and r.user_id == user.user_id]),
        }
        for user in config.users
    }
    summary = {
        "documents": len(documents),
        "element_nodes": len(proposed_index.element_entries),
        "text_nodes": len(proposed_index.text_entries),
        "queries": len(corpus.queries),
    }
    return ExperimentReport(config, rows, means, user_means, summary)
