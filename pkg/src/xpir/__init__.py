"""Personalized concept-based retrieval for XML document collections."""

__version__ = "0.1.0"

from .conceptindex import (
    CollectionStats,
    ConceptVector,
    NodeIndexEntry,
    build_index,
    compute_stats,
    extract_concepts,
    propagate_to_element,
    weight_text_node,
)
from .errors import XpirError
from .ontology import (
    Concept,
    Ontology,
    load_ontology,
    most_specific,
    related_concepts,
)
from .profile import (
    UserProfile,
    create_profile,
    interest_weight,
    replay_history,
    update_profile,
)
from .retrieval import (
    Query,
    RankedResult,
    build_query_vector,
    cosine_score,
    element_pertinence,
    personalize_element_vector,
    rank,
    search,
    support_factor,
)
from .storage import (
    DescriptorTables,
    IndexHeader,
    IndexStore,
    ProfileStore,
    load_index,
    save_index,
)
from .xmldoc import (
    DocumentTree,
    NodeDescriptor,
    arc_distance,
    descendant_text_nodes,
    is_ancestor,
    parse_document,
    precedes,
)

__all__ = [
    "CollectionStats",
    "Concept",
    "ConceptVector",
    "DescriptorTables",
    "DocumentTree",
    "IndexHeader",
    "IndexStore",
    "NodeDescriptor",
    "NodeIndexEntry",
    "Ontology",
    "ProfileStore",
    "Query",
    "RankedResult",
    "UserProfile",
    "XpirError",
    "__version__",
    "arc_distance",
    "build_index",
    "build_query_vector",
    "compute_stats",
    "cosine_score",
    "create_profile",
    "descendant_text_nodes",
    "element_pertinence",
    "extract_concepts",
    "interest_weight",
    "is_ancestor",
    "load_index",
    "load_ontology",
    "most_specific",
    "parse_document",
    "personalize_element_vector",
    "precedes",
    "propagate_to_element",
    "rank",
    "related_concepts",
    "replay_history",
    "save_index",
    "search",
    "support_factor",
    "update_profile",
    "weight_text_node",
]
