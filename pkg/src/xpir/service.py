"""HTTP service: registration, personalized search, node inspection.

The flow mirrors the library contract: a search responds with results
computed against the user's pre-update profile, then the query vector
reinforces the profile (answer first, update after).  All scoring lives
in the retrieval module; the service adds no ranking logic of its own.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .errors import (
    ConfigError,
    ContentionError,
    DuplicateUserError,
    EmptyQueryError,
    NotFoundError,
    StaleIndexError,
    StaleProfileError,
    XpirError,
)
from .ontology import load_ontology
from .profile import create_profile, profile_to_json, update_profile
from .retrieval import Query, build_query_vector, rank
from .storage import ProfileStore, load_index
from .xmldoc import ELEMENT, descendant_text_nodes


@dataclass
class ServiceConfig:
    ontology: str
    index: str
    profiles_dir: str
    host: str = "127.0.0.1"
    port: int = 8400
    k: int = 10
    overlap_filter: bool = False
    normalize_profile: bool = False
    max_hops: int = 1
    relation_names: tuple[str, ...] = ()
    cors_origins: tuple[str, ...] = ()
    ui_dir: str | None = None

    @classmethod
    def from_json(cls, source: str | Path) -> "ServiceConfig":
        payload = json.loads(Path(source).read_text("utf-8"))
        if not isinstance(payload, dict):
            raise ConfigError("service config must be a JSON object")
        for key in ("relation_names", "cors_origins"):
            if key in payload:
                payload[key] = tuple(payload[key])
        try:
            config = cls(**payload)
        except TypeError as exc:
            raise ConfigError(f"bad service config: {exc}") from exc
        for path_key in ("ontology", "index"):
            if not Path(getattr(config, path_key)).exists():
                raise ConfigError(f"{path_key} path does not exist: {getattr(config, path_key)}")
        return config


class SearchRequest(BaseModel):
    user_id: str
    query: str | None = None
    concept: str | None = None
    k: int | None = None
    max_hops: int | None = None
    overlap_filter: bool | None = None
    personalize: bool = True
    learn: bool = True


class RegisterRequest(BaseModel):
    user_id: str


def create_app(config: ServiceConfig) -> FastAPI:
    ontology = load_ontology(config.ontology)
    index = load_index(config.index, ontology)
    store = ProfileStore(config.profiles_dir)

    app = FastAPI(title="xpir", version=__version__)

    if config.cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc.errors()[:3])})

    @app.exception_handler(XpirError)
    async def domain_error(request: Request, exc: XpirError):
        status = 500
        if isinstance(exc, (NotFoundError,)):
            status = 404
        elif isinstance(exc, DuplicateUserError):
            status = 409
        elif isinstance(exc, (StaleIndexError, StaleProfileError, ContentionError)):
            status = 409
        elif isinstance(exc, EmptyQueryError):
            status = 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "version": __version__,
            "ontology_fingerprint": ontology.fingerprint,
            "index_fingerprint": index.header.ontology_fingerprint,
            "weighting": index.header.weighting,
            "concepts": len(ontology),
            "documents": len(index.doc_ids()),
            "text_nodes": index.stats.total_text_nodes,
        }

    @app.post("/users", status_code=201)
    def register(body: RegisterRequest):
        profile = create_profile(body.user_id, ontology)
        store.create(profile)
        return {"user_id": body.user_id, "interests": len(profile.interests)}

    @app.get("/users/{user_id}/profile")
    def get_profile(user_id: str):
        return profile_to_json(store.load(user_id))

    @app.post("/search")
    def do_search(body: SearchRequest):
        query = Query(
            text=body.query,
            concept=body.concept,
            relation_names=config.relation_names,
            max_hops=body.max_hops if body.max_hops is not None else config.max_hops,
        )
        vector = build_query_vector(query, ontology)
        k = body.k if body.k is not None else config.k
        overlap = (
            body.overlap_filter if body.overlap_filter is not None
            else config.overlap_filter
        )
        if body.learn and body.personalize:
            # One lock spans read, answer, and update: concurrent learners
            # on the same profile fail fast instead of losing updates.
            with store.lock(body.user_id):
                profile = store.load(body.user_id)
                results = rank(
                    index, ontology, vector, profile,
                    k=k, overlap_filter=overlap, personalize=True,
                    normalize_profile=config.normalize_profile,
                )
                updated = update_profile(
                    profile, vector, timestamp=len(profile.history),
                    ontology_fingerprint=ontology.fingerprint,
                )
                store.save(updated, locked=True)
        else:
            profile = store.load(body.user_id)
            results = rank(
                index, ontology, vector, profile,
                k=k, overlap_filter=overlap, personalize=body.personalize,
                normalize_profile=config.normalize_profile,
            )
            if body.learn:
                with store.lock(body.user_id):
                    fresh = store.load(body.user_id)
                    updated = update_profile(
                        fresh, vector, timestamp=len(fresh.history),
                        ontology_fingerprint=ontology.fingerprint,
                    )
                    store.save(updated, locked=True)
        return {
            "user_id": body.user_id,
            "query_vector": vector,
            "results": [
                {
                    "doc_id": r.doc_id,
                    "start": r.start,
                    "end": r.end,
                    "node_type": r.node_type,
                    "score": r.score,
                    "matched_concepts": list(r.matched_concepts),
                }
                for r in results
            ],
        }

    @app.get("/documents/{doc_id}/nodes/{start}")
    def get_node(doc_id: str, start: int):
        tree = index.document_tree(doc_id)
        node = tree.node(start)
        if node is None:
            raise NotFoundError(f"document {doc_id!r} has no node {start}")
        path = []
        parent = node.parent
        while parent != 0:
            ancestor = tree.by_start[parent]
            path.append(ancestor.name)
            parent = ancestor.parent
        payload = {
            "doc_id": doc_id,
            "start": node.start,
            "end": node.end,
            "parent": node.parent,
            "node_type": node.node_type,
            "name": node.name,
            "value": node.value,
            "path": list(reversed(path)),
        }
        if node.node_type == ELEMENT:
            texts = descendant_text_nodes(node, tree)
            payload["text_content"] = " ".join(t.value.strip() for t in texts if t.value)
            payload["children"] = [
                {"start": d.start, "node_type": d.node_type, "name": d.name}
                for d in tree.inside(node)
                if d.parent == node.start
            ]
        return payload

    if config.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
