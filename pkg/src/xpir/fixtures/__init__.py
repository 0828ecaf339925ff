"""Bundled fixtures: two ontologies and a handful of sample XML documents."""

from importlib import resources


def fixture_bytes(name: str) -> bytes:
    return (resources.files(__package__) / name).read_bytes()


def generic_ontology_bytes() -> bytes:
    """Seven-class generic knowledge ontology (domain .. granule)."""
    return fixture_bytes("generic7.json")


def computer_science_ontology_bytes() -> bytes:
    """Computer-science instance with four domains and ~50 concepts."""
    return fixture_bytes("computer_science.json")


def numbering_example_bytes() -> bytes:
    """Small document whose title node gets interval (4, 7)."""
    return fixture_bytes("numbering_example.xml")


def small_corpus() -> list[tuple[str, bytes]]:
    """Three tiny computer-science documents used by the golden-index test."""
    names = ["doc_databases", "doc_sorting", "doc_networks"]
    return [(name, fixture_bytes(f"three_docs/{name}.xml")) for name in names]
