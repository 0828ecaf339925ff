"""Persistence: descriptor tables, the index file format, and profiles.

Index files are a single-file embedded store carrying the four logical
descriptor tables (document, element, attribute, text) plus the text and
element vector tables and the collection statistics.

File layout (all integers little-endian):

    magic  "XPIR1"
    section*  in fixed order HDR, STA, DOC, ELE, ATT, TXT, TVX, EVX

    section  = tag[4] + payload_length u64 + payload + crc32(payload) u32
    string   = length u32 + UTF-8 bytes
    weight   = IEEE-754 binary64 (bit-exact round trips)

The HDR payload holds the ontology fingerprint, the logarithm marker for
the inverse-frequency component, the weighting mode, the build
timestamp, the total text-node count, and the concept id table that the
vector sections reference by ordinal.  Every section is independently
checksummed, so corruption or truncation is always detected at load.

Profiles are stored as one JSON file per user with a lock file providing
per-user mutual exclusion on writes.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
import zlib
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable
from urllib.parse import quote, unquote

from .conceptindex import CollectionStats, ConceptVector, NodeIndexEntry
from .errors import (
    ChecksumError,
    ContentionError,
    DuplicateUserError,
    NotFoundError,
    SerializationError,
    StaleIndexError,
)
from .ontology import Ontology
from .profile import UserProfile, profile_from_json, profile_to_json
from .xmldoc import ATTRIBUTE, ELEMENT, TEXT, DocumentTree, NodeDescriptor

MAGIC = b"XPIR1"
_SECTION_ORDER = (b"HDR ", b"STA ", b"DOC ", b"ELE ", b"ATT ", b"TXT ", b"TVX ", b"EVX ")
_NODE_TYPE_CODES = {ELEMENT: 0, ATTRIBUTE: 1, TEXT: 2}
_NODE_TYPE_NAMES = {v: k for k, v in _NODE_TYPE_CODES.items()}
_LOG_BASE_CODES = {"e": 0}
_WEIGHTING_CODES = {"ontology": 0, "uniform": 1}


# ---------------------------------------------------------------------------
# Relational-shaped descriptor tables


@dataclass
class DescriptorTables:
    """The four logical node tables of the store.

    Row shapes:
        documents:  (idf_doc, doc_name)
        elements:   (idf_doc, begin, ele_name, end, parent)
        attributes: (idf_doc, begin, end, parent, att_name, value_att)
        texts:      (idf_doc, begin, value, end, parent)
    """

    documents: list[tuple[int, str]]
    elements: list[tuple[int, int, str, int, int]]
    attributes: list[tuple[int, int, int, int, str, str]]
    texts: list[tuple[int, int, str, int, int]]

    @classmethod
    def from_trees(cls, trees: Iterable[DocumentTree]) -> "DescriptorTables":
        documents: list[tuple[int, str]] = []
        elements, attributes, texts = [], [], []
        for idf, tree in enumerate(trees):
            documents.append((idf, tree.doc_id))
            for d in tree.descriptors:
                if d.node_type == ELEMENT:
                    elements.append((idf, d.start, d.name, d.end, d.parent))
                elif d.node_type == ATTRIBUTE:
                    attributes.append((idf, d.start, d.end, d.parent, d.name, d.value))
                else:
                    texts.append((idf, d.start, d.value, d.end, d.parent))
        return cls(documents, elements, attributes, texts)

    def doc_ids(self) -> list[str]:
        return [name for _, name in self.documents]

    def document_tree(self, doc_id: str) -> DocumentTree:
        """Rebuild the descriptor table of one document."""
        idf = self._idf(doc_id)
        descriptors: list[NodeDescriptor] = []
        for row_idf, begin, name, end, parent in self.elements:
            if row_idf == idf:
                descriptors.append(NodeDescriptor(doc_id, begin, end, parent, ELEMENT, name, None))
        for row_idf, begin, end, parent, name, value in self.attributes:
            if row_idf == idf:
                descriptors.append(NodeDescriptor(doc_id, begin, end, parent, ATTRIBUTE, name, value))
        for row_idf, begin, value, end, parent in self.texts:
            if row_idf == idf:
                descriptors.append(NodeDescriptor(doc_id, begin, end, parent, TEXT, None, value))
        if not descriptors:
            raise NotFoundError(f"unknown document {doc_id!r}")
        return DocumentTree(doc_id, descriptors)

    def _idf(self, doc_id: str) -> int:
        for idf, name in self.documents:
            if name == doc_id:
                return idf
        raise NotFoundError(f"unknown document {doc_id!r}")


# ---------------------------------------------------------------------------
# Index store


@dataclass
class IndexHeader:
    ontology_fingerprint: str
    log_base: str = "e"
    weighting: str = "ontology"
    build_timestamp: int = 0


@dataclass(eq=False)
class IndexStore:
    """Complete persisted index: header, statistics, vectors, descriptors.

    Immutable after construction and safe for concurrent readers.
    """

    header: IndexHeader
    stats: CollectionStats
    text_entries: list[NodeIndexEntry]
    element_entries: list[NodeIndexEntry]
    tables: DescriptorTables
    _tree_cache: dict[str, DocumentTree] = field(default_factory=dict, repr=False)

    def doc_ids(self) -> list[str]:
        return self.tables.doc_ids()

    def document_tree(self, doc_id: str) -> DocumentTree:
        tree = self._tree_cache.get(doc_id)
        if tree is None:
            tree = self.tables.document_tree(doc_id)
            self._tree_cache[doc_id] = tree
        return tree

    def descriptor(self, doc_id: str, start: int) -> NodeDescriptor:
        node = self.document_tree(doc_id).node(start)
        if node is None:
            raise NotFoundError(f"document {doc_id!r} has no node {start}")
        return node


# ---------------------------------------------------------------------------
# Binary encoding helpers


class _Writer:
    def __init__(self) -> None:
        self.parts: list[bytes] = []

    def u8(self, v: int) -> None:
        self.parts.append(struct.pack("<B", v))

    def u32(self, v: int) -> None:
        self.parts.append(struct.pack("<I", v))

    def u64(self, v: int) -> None:
        self.parts.append(struct.pack("<Q", v))

    def f64(self, v: float) -> None:
        if math.isnan(v) or math.isinf(v):
            raise SerializationError(f"cannot serialize non-finite weight {v!r}")
        self.parts.append(struct.pack("<d", v))

    def string(self, s: str) -> None:
        raw = s.encode("utf-8")
        self.u32(len(raw))
        self.parts.append(raw)

    def payload(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _read(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ChecksumError("index section truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return struct.unpack("<B", self._read(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._read(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._read(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._read(8))[0]

    def string(self) -> str:
        n = self.u32()
        return self._read(n).decode("utf-8")

    def done(self) -> bool:
        return self.pos == len(self.data)


def _concept_table(index: IndexStore) -> list[str]:
    ids: set[str] = set(index.stats.text_nodes_containing)
    for entry in index.text_entries:
        ids.update(entry.base_vector)
    for entry in index.element_entries:
        ids.update(entry.base_vector)
        ids.update(entry.coverage or ())
    return sorted(ids)


def _encode_vector(w: _Writer, vector: ConceptVector, ordinal: dict[str, int]) -> None:
    w.u32(len(vector))
    for cid in sorted(vector, key=ordinal.__getitem__):
        w.u32(ordinal[cid])
        w.f64(vector[cid])


def _decode_vector(r: _Reader, concepts: list[str]) -> ConceptVector:
    return {concepts[r.u32()]: r.f64() for _ in range(r.u32())}


def index_to_bytes(index: IndexStore) -> bytes:
    """Serialize an index deterministically; identical input, identical bytes."""
    concepts = _concept_table(index)
    ordinal = {cid: i for i, cid in enumerate(concepts)}
    doc_ordinal = {name: idf for idf, name in index.tables.documents}

    sections: dict[bytes, bytes] = {}

    w = _Writer()
    w.parts.append(bytes.fromhex(index.header.ontology_fingerprint))
    w.u8(_LOG_BASE_CODES[index.header.log_base])
    w.u8(_WEIGHTING_CODES[index.header.weighting])
    w.u64(index.header.build_timestamp)
    w.u64(index.stats.total_text_nodes)
    w.u32(len(concepts))
    for cid in concepts:
        w.string(cid)
    sections[b"HDR "] = w.payload()

    w = _Writer()
    w.u32(len(index.stats.text_nodes_containing))
    for cid in sorted(index.stats.text_nodes_containing, key=ordinal.__getitem__):
        w.u32(ordinal[cid])
        w.u64(index.stats.text_nodes_containing[cid])
    sections[b"STA "] = w.payload()

    w = _Writer()
    w.u32(len(index.tables.documents))
    for _, name in index.tables.documents:
        w.string(name)
    sections[b"DOC "] = w.payload()

    w = _Writer()
    w.u32(len(index.tables.elements))
    for idf, begin, name, end, parent in index.tables.elements:
        w.u32(idf), w.u32(begin), w.string(name), w.u32(end), w.u32(parent)
    sections[b"ELE "] = w.payload()

    w = _Writer()
    w.u32(len(index.tables.attributes))
    for idf, begin, end, parent, name, value in index.tables.attributes:
        w.u32(idf), w.u32(begin), w.u32(end), w.u32(parent), w.string(name), w.string(value)
    sections[b"ATT "] = w.payload()

    w = _Writer()
    w.u32(len(index.tables.texts))
    for idf, begin, value, end, parent in index.tables.texts:
        w.u32(idf), w.u32(begin), w.string(value), w.u32(end), w.u32(parent)
    sections[b"TXT "] = w.payload()

    w = _Writer()
    w.u32(len(index.text_entries))
    for entry in index.text_entries:
        w.u32(doc_ordinal[entry.doc_id])
        w.u32(entry.start)
        w.u8(_NODE_TYPE_CODES[entry.node_type])
        _encode_vector(w, entry.base_vector, ordinal)
    sections[b"TVX "] = w.payload()

    w = _Writer()
    w.u32(len(index.element_entries))
    for entry in index.element_entries:
        w.u32(doc_ordinal[entry.doc_id])
        w.u32(entry.start)
        w.u32(entry.text_count or 0)
        _encode_vector(w, entry.base_vector, ordinal)
        coverage = entry.coverage or {}
        w.u32(len(coverage))
        for cid in sorted(coverage, key=ordinal.__getitem__):
            w.u32(ordinal[cid])
            w.u32(coverage[cid])
    sections[b"EVX "] = w.payload()

    blob = [MAGIC]
    for tag in _SECTION_ORDER:
        payload = sections[tag]
        blob.append(tag)
        blob.append(struct.pack("<Q", len(payload)))
        blob.append(payload)
        blob.append(struct.pack("<I", zlib.crc32(payload)))
    return b"".join(blob)


def save_index(index: IndexStore, destination: str | Path) -> None:
    """Atomically write an index file (temp file + rename)."""
    destination = Path(destination)
    data = index_to_bytes(index)
    fd, tmp_name = tempfile.mkstemp(
        prefix=destination.name + ".", suffix=".tmp", dir=destination.parent
    )
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, destination)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _split_sections(data: bytes) -> dict[bytes, bytes]:
    if data[:5] != MAGIC:
        raise ChecksumError("not an index file (bad magic bytes)")
    pos = 5
    sections: dict[bytes, bytes] = {}
    for tag in _SECTION_ORDER:
        if pos + 12 > len(data):
            raise ChecksumError("index file truncated")
        found = data[pos : pos + 4]
        if found != tag:
            raise ChecksumError(f"unexpected section {found!r}, wanted {tag!r}")
        (length,) = struct.unpack("<Q", data[pos + 4 : pos + 12])
        pos += 12
        if pos + length + 4 > len(data):
            raise ChecksumError("index file truncated")
        payload = data[pos : pos + length]
        pos += length
        (crc,) = struct.unpack("<I", data[pos : pos + 4])
        pos += 4
        if zlib.crc32(payload) != crc:
            raise ChecksumError(f"checksum mismatch in section {tag.strip().decode()}")
        sections[tag] = payload
    if pos != len(data):
        raise ChecksumError("trailing garbage after last section")
    return sections


def index_from_bytes(data: bytes, ontology: Ontology) -> IndexStore:
    sections = _split_sections(data)

    r = _Reader(sections[b"HDR "])
    fingerprint = r._read(32).hex()
    log_base = {v: k for k, v in _LOG_BASE_CODES.items()}[r.u8()]
    weighting = {v: k for k, v in _WEIGHTING_CODES.items()}[r.u8()]
    timestamp = r.u64()
    total_text_nodes = r.u64()
    concepts = [r.string() for _ in range(r.u32())]
    if fingerprint != ontology.fingerprint:
        raise StaleIndexError(
            "index was built against a different ontology version "
            f"({fingerprint[:12]}.. vs {ontology.fingerprint[:12]}..)"
        )
    unknown = [cid for cid in concepts if cid not in ontology.concepts]
    if unknown:
        raise StaleIndexError(f"index references unknown concepts: {unknown[:3]}")

    r = _Reader(sections[b"STA "])
    containing = {}
    for _ in range(r.u32()):
        cid = concepts[r.u32()]
        containing[cid] = r.u64()
    stats = CollectionStats(total_text_nodes, containing)

    r = _Reader(sections[b"DOC "])
    doc_names = [r.string() for _ in range(r.u32())]
    documents = list(enumerate(doc_names))

    r = _Reader(sections[b"ELE "])
    elements = [
        (r.u32(), r.u32(), r.string(), r.u32(), r.u32()) for _ in range(r.u32())
    ]

    r = _Reader(sections[b"ATT "])
    attributes = [
        (r.u32(), r.u32(), r.u32(), r.u32(), r.string(), r.string())
        for _ in range(r.u32())
    ]

    r = _Reader(sections[b"TXT "])
    texts = [(r.u32(), r.u32(), r.string(), r.u32(), r.u32()) for _ in range(r.u32())]

    r = _Reader(sections[b"TVX "])
    text_entries = []
    for _ in range(r.u32()):
        doc = doc_names[r.u32()]
        start = r.u32()
        node_type = _NODE_TYPE_NAMES[r.u8()]
        text_entries.append(NodeIndexEntry(doc, start, node_type, _decode_vector(r, concepts)))

    r = _Reader(sections[b"EVX "])
    element_entries = []
    for _ in range(r.u32()):
        doc = doc_names[r.u32()]
        start = r.u32()
        text_count = r.u32()
        vector = _decode_vector(r, concepts)
        coverage = {concepts[r.u32()]: r.u32() for _ in range(r.u32())}
        element_entries.append(
            NodeIndexEntry(doc, start, ELEMENT, vector, coverage=coverage, text_count=text_count)
        )

    index = IndexStore(
        header=IndexHeader(fingerprint, log_base, weighting, timestamp),
        stats=stats,
        text_entries=text_entries,
        element_entries=element_entries,
        tables=DescriptorTables(documents, elements, attributes, texts),
    )
    _validate_stats_sample(index)
    return index


def _validate_stats_sample(index: IndexStore) -> None:
    """Recount a deterministic sample of per-concept stats from the vectors.

    A concept occurring in every text node has zero inverse frequency and
    is absent from all stored vectors, so its recount must be zero; any
    other concept must appear in exactly as many vectors as recorded.
    """
    concepts = sorted(index.stats.text_nodes_containing)
    step = max(1, len(concepts) // 32)
    sample = concepts[::step]
    counts = {cid: 0 for cid in sample}
    for entry in index.text_entries:
        for cid in counts:
            if cid in entry.base_vector:
                counts[cid] += 1
    for cid in sample:
        stored = index.stats.text_nodes_containing[cid]
        expected = 0 if stored == index.stats.total_text_nodes else stored
        if counts[cid] != expected:
            raise ChecksumError(
                f"statistics for concept {cid!r} disagree with the vector table "
                f"({counts[cid]} vs {expected})"
            )


def load_index(source: str | Path | IO[bytes], ontology: Ontology) -> IndexStore:
    """Load and validate an index file against the given ontology."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()
    return index_from_bytes(data, ontology)


# ---------------------------------------------------------------------------
# Profile store


class ProfileStore:
    """One JSON file per user with per-user write locks.

    Writers must not overlap: writes acquire a lock file and raise
    ContentionError instead of waiting.  Compound read-modify-write
    cycles take ``lock()`` themselves and save with ``locked=True``.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, user_id: str) -> Path:
        return self.directory / (quote(user_id, safe="") + ".json")

    def _lock_path(self, user_id: str) -> Path:
        return self.directory / (quote(user_id, safe="") + ".lock")

    @contextmanager
    def lock(self, user_id: str):
        lock_path = self._lock_path(user_id)
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ContentionError(
                f"profile {user_id!r} is being written by another writer"
            ) from None
        os.close(fd)
        try:
            yield
        finally:
            try:
                os.unlink(lock_path)
            except FileNotFoundError:
                pass

    def exists(self, user_id: str) -> bool:
        return self._path(user_id).exists()

    def user_ids(self) -> list[str]:
        return sorted(
            unquote(p.name[: -len(".json")]) for p in self.directory.glob("*.json")
        )

    def create(self, profile: UserProfile) -> None:
        with self.lock(profile.user_id):
            if self.exists(profile.user_id):
                raise DuplicateUserError(f"user {profile.user_id!r} already exists")
            self._write(profile)

    def save(self, profile: UserProfile, *, locked: bool = False) -> None:
        if locked:
            self._write(profile)
        else:
            with self.lock(profile.user_id):
                self._write(profile)

    def load(self, user_id: str) -> UserProfile:
        path = self._path(user_id)
        try:
            payload = json.loads(path.read_text("utf-8"))
        except FileNotFoundError:
            raise NotFoundError(f"unknown user {user_id!r}") from None
        return profile_from_json(payload)

    def _write(self, profile: UserProfile) -> None:
        path = self._path(profile.user_id)
        data = json.dumps(profile_to_json(profile), indent=2, sort_keys=True)
        fd, tmp_name = tempfile.mkstemp(
            prefix=path.name + ".", suffix=".tmp", dir=self.directory
        )
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(data)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
