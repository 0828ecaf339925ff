"""Streaming XML parsing into interval-numbered node descriptors.

Every node receives a (start, end) pair drawn from one counter that
advances on each open, close, attribute, and text event of a single
left-to-right pass.  Ancestry then reduces to interval containment and
document order to interval precedence, so structural predicates never
re-walk the tree.

Counter semantics:

* element: start on its open tag, end on its close tag;
* attribute: two consecutive values right after the owning element's
  start, in attribute order;
* text run: two consecutive values where the run appears.

Adjacent character data (including resolved entities and CDATA) merges
into a single text run; whitespace-only runs are dropped.  Memory use is
proportional to tree depth plus the emitted descriptors.
"""

from __future__ import annotations

import xml.parsers.expat
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import IO, Iterator

from .errors import CrossDocumentError, XmlParseError

ELEMENT = "element"
ATTRIBUTE = "attribute"
TEXT = "text"

_XML_WS = " \t\r\n"
_CHUNK = 64 * 1024


@dataclass(frozen=True)
class NodeDescriptor:
    """One XML node as an interval tuple.

    ``parent`` is the start value of the parent element, 0 for the root.
    ``name`` is None for text nodes; ``value`` is None for element nodes.
    """

    doc_id: str
    start: int
    end: int
    parent: int
    node_type: str
    name: str | None = None
    value: str | None = None


@dataclass(eq=False)
class DocumentTree:
    """Descriptor table of one document with lookup maps.

    Immutable after construction; safe for concurrent reads.
    """

    doc_id: str
    descriptors: list[NodeDescriptor]
    by_start: dict[int, NodeDescriptor] = field(default_factory=dict)
    by_name: dict[str, list[NodeDescriptor]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.descriptors.sort(key=lambda d: d.start)
        self.by_start = {d.start: d for d in self.descriptors}
        self.by_name = {}
        for d in self.descriptors:
            if d.name is not None:
                self.by_name.setdefault(d.name, []).append(d)
        self._starts = [d.start for d in self.descriptors]

    @property
    def root(self) -> NodeDescriptor:
        return self.descriptors[0]

    def node(self, start: int) -> NodeDescriptor | None:
        return self.by_start.get(start)

    def nodes_of_type(self, node_type: str) -> list[NodeDescriptor]:
        return [d for d in self.descriptors if d.node_type == node_type]

    def inside(self, element: NodeDescriptor) -> Iterator[NodeDescriptor]:
        """Nodes whose intervals nest strictly inside ``element``."""
        lo = bisect_right(self._starts, element.start)
        hi = bisect_left(self._starts, element.end)
        for i in range(lo, hi):
            yield self.descriptors[i]


class _DescriptorBuilder:
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        self.counter = 0
        self.stack: list[int] = []  # start values of open elements
        self.open_names: dict[int, str] = {}
        self.open_parents: dict[int, int] = {}
        self.text_parts: list[str] = []
        self.out: list[NodeDescriptor] = []

    def _take(self) -> int:
        self.counter += 1
        return self.counter

    def _flush_text(self) -> None:
        if not self.text_parts:
            return
        run = "".join(self.text_parts)
        self.text_parts.clear()
        if not run.strip(_XML_WS):
            return
        start = self._take()
        end = self._take()
        self.out.append(
            NodeDescriptor(self.doc_id, start, end, self.stack[-1], TEXT, None, run)
        )

    def xml_decl(self, version, encoding, standalone) -> None:
        if encoding is not None and encoding.lower() not in ("utf-8", "utf8"):
            raise XmlParseError(
                f"{self.doc_id}: declared encoding {encoding!r} not supported; only UTF-8 is accepted"
            )

    def start_element(self, name: str, attrs: list[str]) -> None:
        if self.stack:
            self._flush_text()
        parent = self.stack[-1] if self.stack else 0
        start = self._take()
        self.stack.append(start)
        self.open_names[start] = name
        self.open_parents[start] = parent
        for i in range(0, len(attrs), 2):
            a_start = self._take()
            a_end = self._take()
            self.out.append(
                NodeDescriptor(self.doc_id, a_start, a_end, start, ATTRIBUTE, attrs[i], attrs[i + 1])
            )

    def end_element(self, name: str) -> None:
        self._flush_text()
        end = self._take()
        start = self.stack.pop()
        parent = self.open_parents.pop(start)
        self.out.append(
            NodeDescriptor(self.doc_id, start, end, parent, ELEMENT, self.open_names.pop(start), None)
        )

    def characters(self, data: str) -> None:
        if self.stack:
            self.text_parts.append(data)


def parse_document(doc_id: str, source: bytes | IO[bytes]) -> DocumentTree:
    """Parse one well-formed XML document into its descriptor table.

    ``source`` is raw bytes or a readable binary stream; streams are fed
    to the parser in chunks.  Raises XmlParseError with a byte offset on
    malformed input.
    """
    builder = _DescriptorBuilder(doc_id)
    parser = xml.parsers.expat.ParserCreate()
    parser.ordered_attributes = True
    parser.buffer_text = True
    parser.XmlDeclHandler = builder.xml_decl
    parser.StartElementHandler = builder.start_element
    parser.EndElementHandler = builder.end_element
    parser.CharacterDataHandler = builder.characters

    try:
        if isinstance(source, bytes):
            _check_bom(doc_id, source[:2])
            parser.Parse(source, True)
        else:
            first = source.read(_CHUNK)
            _check_bom(doc_id, first[:2])
            parser.Parse(first, False)
            while chunk := source.read(_CHUNK):
                parser.Parse(chunk, False)
            parser.Parse(b"", True)
    except xml.parsers.expat.ExpatError as exc:
        raise XmlParseError(
            f"{doc_id}: {exc.args[0] if exc.args else 'malformed XML'}"
            f" (byte {parser.ErrorByteIndex})"
        ) from exc

    if not builder.out:
        raise XmlParseError(f"{doc_id}: document contains no nodes")
    return DocumentTree(doc_id, builder.out)


def _check_bom(doc_id: str, head: bytes) -> None:
    if head in (b"\xff\xfe", b"\xfe\xff"):
        raise XmlParseError(f"{doc_id}: UTF-16 byte order mark; only UTF-8 is accepted")


def _same_document(u: NodeDescriptor, v: NodeDescriptor) -> None:
    if u.doc_id != v.doc_id:
        raise CrossDocumentError(
            f"cannot compare nodes of documents {u.doc_id!r} and {v.doc_id!r}"
        )


def is_ancestor(u: NodeDescriptor, v: NodeDescriptor) -> bool:
    """True iff u's interval strictly contains v's."""
    _same_document(u, v)
    return u.start < v.start and v.end < u.end


def precedes(u: NodeDescriptor, v: NodeDescriptor) -> bool:
    """True iff u's interval lies entirely before v's."""
    _same_document(u, v)
    return u.end < v.start


def descendant_text_nodes(element: NodeDescriptor, tree: DocumentTree) -> list[NodeDescriptor]:
    """All text descriptors strictly inside ``element``, in document order."""
    if element.node_type != ELEMENT:
        raise ValueError(f"expected an element node, got {element.node_type}")
    return [d for d in tree.inside(element) if d.node_type == TEXT]


def arc_distance(element: NodeDescriptor, text: NodeDescriptor, tree: DocumentTree) -> int:
    """Number of parent-link hops from ``text`` up to ``element``."""
    if not is_ancestor(element, text):
        raise ValueError(
            f"node {element.start} is not an ancestor of node {text.start}"
        )
    hops = 1
    parent = text.parent
    while parent != element.start:
        hops += 1
        parent = tree.by_start[parent].parent
    return hops
