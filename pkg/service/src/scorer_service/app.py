"""FastAPI application implementing the scorer wire protocol.

One POST endpoint per capability, each batched, stateless, and
order-preserving, plus GET /meta. Malformed requests return 400 naming the
offending field; backend failures return 500 naming the capability. Backend
inference is serialized behind a lock, so request handling can be concurrent
while the model device sees one batch at a time.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from scorer_service import prompts
from scorer_service.backends import Backend, make_backend
from scorer_service.config import ServiceConfig

PROTOCOL_VERSION = "1"
CAPABILITIES = ["entail", "answerable", "generate", "rerank"]


class EntailPair(BaseModel):
    premise: str
    hypothesis: str


class EntailRequest(BaseModel):
    pairs: list[EntailPair]


class AnswerablePair(BaseModel):
    question: str
    context: str


class AnswerableRequest(BaseModel):
    pairs: list[AnswerablePair]


class GenerateItem(BaseModel):
    passage: str
    sentence: str | None = None
    style: str = Field(default="general", pattern="^(general|specific)$")
    count: int = Field(default=10, ge=0)


class GenerateRequest(BaseModel):
    items: list[GenerateItem]


class RerankRequest(BaseModel):
    query: str
    passages: list[str]


def create_app(config: ServiceConfig | None = None, backend: Backend | None = None) -> FastAPI:
    config = config or ServiceConfig()
    config.validate()
    backend = backend or make_backend(config)
    app = FastAPI(title="scorer-service", version=PROTOCOL_VERSION)
    inference_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first["loc"] if part != "body")
        return JSONResponse(
            status_code=400,
            content={"error": "invalid request", "field": field or "body"},
        )

    def run(capability: str, fn):
        try:
            with inference_lock:
                return fn()
        except Exception as exc:
            return JSONResponse(
                status_code=500,
                content={"error": "backend failure", "capability": capability,
                         "detail": str(exc)},
            )

    @app.get("/meta")
    def meta():
        return {
            "capabilities": CAPABILITIES,
            "version": PROTOCOL_VERSION,
            "backend": backend.name,
            "max_batch_size": config.max_batch_size,
        }

    @app.post("/entail")
    def entail(request: EntailRequest):
        pairs = [(p.premise, p.hypothesis) for p in request.pairs]
        return run("entail", lambda: {"scores": backend.entail(pairs)})

    @app.post("/answerable")
    def answerable(request: AnswerableRequest):
        rendered = [prompts.answerable_prompt(p.question, p.context) for p in request.pairs]

        def compute():
            results = backend.answerable(rendered)
            return {
                "labels": [label for label, _ in results],
                "scores": [score for _, score in results],
            }

        return run("answerable", compute)

    @app.post("/generate")
    def generate(request: GenerateRequest):
        rendered = []
        for i, item in enumerate(request.items):
            if item.style == "specific" and item.sentence is None:
                return JSONResponse(
                    status_code=400,
                    content={"error": "invalid request", "field": f"items.{i}.sentence"},
                )
            sentence = item.sentence if item.style == "specific" else None
            rendered.append(prompts.generate_prompt(item.passage, sentence))
        counts = [item.count for item in request.items]
        return run("generate", lambda: {"questions": backend.generate(rendered, counts)})

    @app.post("/rerank")
    def rerank(request: RerankRequest):
        return run(
            "rerank", lambda: {"scores": backend.rerank(request.query, request.passages)}
        )

    return app
