"""Exception hierarchy shared across the engine."""


class XpirError(Exception):
    """Base class for every error raised by this package."""


class OntologyParseError(XpirError):
    """Ontology file is not well-formed (bad JSON, unknown fields, wrong types)."""


class OntologyValidationError(XpirError):
    """Structurally broken ontology: cycle, dangling reference, duplicate id, empty keywords."""


class DegenerateOntologyError(XpirError):
    """All depth coefficients equal the root coefficient; the margin is undefined."""


class InvalidWeightingError(XpirError):
    """A computed concept weight came out non-positive."""


class UnknownConceptError(XpirError):
    """A concept id does not exist in the ontology at hand."""


class UnknownRelationError(XpirError):
    """A relation name does not occur anywhere in the ontology."""


class XmlParseError(XpirError):
    """Malformed XML input; message carries the byte offset when known."""


class CrossDocumentError(XpirError):
    """Structural predicate applied to nodes of different documents."""


class EmptyCollectionError(XpirError):
    """Collection statistics requested for zero indexed text nodes."""


class InternalConsistencyError(XpirError):
    """Index invariants violated (e.g. occurrence counts disagree with stats)."""


class EmptyQueryError(XpirError):
    """No ontology concept could be recognized in the query."""


class StaleProfileError(XpirError):
    """Profile was created against a different ontology version."""


class StaleIndexError(XpirError):
    """Index file was built against a different ontology version."""


class ChecksumError(XpirError):
    """Index file is corrupt or truncated."""


class SerializationError(XpirError):
    """Value cannot be persisted (e.g. NaN or infinite weight)."""


class ContentionError(XpirError):
    """A second writer tried to touch a profile that is being written."""


class NotFoundError(XpirError):
    """Requested user, document, or node does not exist."""


class DuplicateUserError(XpirError):
    """Profile creation attempted for an already registered user id."""


class ConfigError(XpirError):
    """Experiment or service configuration is unusable."""
