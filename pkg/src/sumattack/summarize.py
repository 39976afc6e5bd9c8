"""Summarizer backends.

Two deterministic extractive oracles (lead_k, centroid_k) make offline
evaluation reproducible; the remote backend speaks a chat-completion wire
format for real systems.
"""

from __future__ import annotations

import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from threading import Semaphore
from typing import Callable, Sequence

import httpx

from sumattack.corpus import DocumentCluster
from sumattack.errors import RemoteError, SumattackError
from sumattack.textops import TfidfModel, fit_tfidf, sparse_cosine

DEFAULT_PROMPT = "Summarize the following documents into a single coherent summary:\n\n{documents}"
DOCUMENT_JOINER = "\n\n---\n\n"


@dataclass(frozen=True)
class SummarizerSpec:
    """Backend selector plus backend-specific knobs."""

    backend: str = "lead_k"  # lead_k | centroid_k | remote
    k: int = 3
    endpoint: str = ""
    model_name: str = ""
    prompt_template: str = DEFAULT_PROMPT
    auth_token_env: str = ""
    timeout: float = 30.0
    max_retries: int = 3
    max_concurrency: int = 4

    def __post_init__(self):
        if self.backend in ("lead_k", "centroid_k") and self.k < 1:
            raise SumattackError(f"k must be >= 1 for {self.backend}, got {self.k}")
        if self.backend == "remote" and not self.endpoint.startswith(("http://", "https://")):
            raise SumattackError(f"remote backend needs an absolute endpoint URL, got {self.endpoint!r}")
        if self.backend not in ("lead_k", "centroid_k", "remote"):
            raise SumattackError(f"unknown backend {self.backend!r}")

    @property
    def backend_id(self) -> str:
        if self.backend == "remote":
            return f"remote:{self.model_name or self.endpoint}"
        return f"{self.backend.removesuffix('_k')}_{self.k}"


@dataclass(frozen=True)
class SummaryResult:
    cluster_id: str
    summary: str
    backend_id: str
    latency_ms: float = 0.0
    attempt_count: int = 1
    truncated: bool = False


def lead_k_summarize(cluster: DocumentCluster, k: int = 3) -> SummaryResult:
    """First k sentences of document 0, verbatim. Fewer than k available sets
    the truncated flag and returns what exists."""
    sents = cluster.documents[0].sentences
    taken = sents[:k]
    return SummaryResult(
        cluster_id=cluster.id,
        summary=" ".join(taken),
        backend_id=f"lead_{k}",
        truncated=len(sents) < k,
    )


def _cluster_sentences(cluster: DocumentCluster) -> list[str]:
    out: list[str] = []
    for doc in cluster.documents:
        out.extend(doc.sentences)
    return out


def centroid_k_summarize(
    cluster: DocumentCluster, k: int = 3, model: TfidfModel | None = None
) -> SummaryResult:
    """Top-k sentences by cosine against the centroid of the other sentences.

    Leave-one-out keeps a vocabulary-destroyed sentence at score exactly 0:
    its terms occur nowhere else, so its vector is orthogonal to the centroid
    of the rest. Ties break toward earlier position; output keeps document
    order.
    """
    sents = _cluster_sentences(cluster)
    tfidf = model or fit_tfidf(sents)
    vectors = [tfidf.vector(s) for s in sents]

    totals: dict[str, float] = {}
    for vec in vectors:
        for t, w in vec.items():
            totals[t] = totals.get(t, 0.0) + w

    scored: list[tuple[float, int]] = []
    for i, vec in enumerate(vectors):
        rest = {t: w - vec.get(t, 0.0) for t, w in totals.items()}
        rest = {t: w for t, w in rest.items() if w > 1e-12}
        scored.append((sparse_cosine(vec, rest), i))

    k_eff = min(k, len(sents))
    top = sorted(scored, key=lambda p: (-p[0], p[1]))[:k_eff]
    chosen = sorted(i for _, i in top)
    return SummaryResult(
        cluster_id=cluster.id,
        summary=" ".join(sents[i] for i in chosen),
        backend_id=f"centroid_{k}",
        truncated=len(sents) < k,
    )


def render_prompt(cluster: DocumentCluster, template: str) -> str:
    docs = DOCUMENT_JOINER.join(d.raw_text for d in cluster.documents)
    return template.replace("{documents}", docs)


class RemoteSummarizer:
    """Chat-completion client with bounded concurrency and jittered retries.

    Transport failures and 5xx responses retry up to max_retries with full
    jitter (uniform over [0, 1s * 2^(attempt-1)]); 4xx fail immediately.
    ``sleeper`` and ``rng`` exist so tests can pin time.
    """

    def __init__(
        self,
        spec: SummarizerSpec,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        if spec.backend != "remote":
            raise SumattackError("RemoteSummarizer requires a remote SummarizerSpec")
        self._spec = spec
        self._client = httpx.Client(transport=transport, timeout=spec.timeout)
        self._sleeper = sleeper
        self._rng = rng or random.Random()
        self._gate = Semaphore(max(1, spec.max_concurrency))

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self._spec.auth_token_env:
            token = os.environ.get(self._spec.auth_token_env, "")
            if not token:
                raise RemoteError(
                    f"auth token environment variable {self._spec.auth_token_env} is not set"
                )
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, prompt: str) -> tuple[str, int]:
        """POST one completion; returns (assistant text, attempts used)."""
        body = {
            "model": self._spec.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        attempts = 0
        last_error: str = ""
        last_status: int | None = None
        while attempts <= self._spec.max_retries:
            attempts += 1
            try:
                with self._gate:
                    response = self._client.post(
                        self._spec.endpoint, json=body, headers=self._headers()
                    )
            except httpx.TransportError as exc:
                last_error, last_status = f"transport error: {exc}", None
            else:
                if response.status_code == 200:
                    try:
                        text = response.json()["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, ValueError) as exc:
                        raise RemoteError(
                            f"malformed completion response: {exc}", attempts=attempts
                        ) from exc
                    return text, attempts
                if 400 <= response.status_code < 500:
                    raise RemoteError(
                        f"permanent error from endpoint: HTTP {response.status_code}",
                        status=response.status_code,
                        attempts=attempts,
                    )
                last_error = f"HTTP {response.status_code}"
                last_status = response.status_code
            if attempts <= self._spec.max_retries:
                self._sleeper(self._rng.uniform(0.0, 1.0 * 2 ** (attempts - 1)))
        raise RemoteError(
            f"retries exhausted after {attempts} attempts: {last_error}",
            status=last_status,
            attempts=attempts,
        )

    def summarize(self, cluster: DocumentCluster) -> SummaryResult:
        start = time.perf_counter()
        text, attempts = self.complete(render_prompt(cluster, self._spec.prompt_template))
        if not text.strip():
            raise RemoteError("empty summary", attempts=attempts)
        return SummaryResult(
            cluster_id=cluster.id,
            summary=text.strip(),
            backend_id=self._spec.backend_id,
            latency_ms=(time.perf_counter() - start) * 1000.0,
            attempt_count=attempts,
        )

    def summarize_many(self, clusters: Sequence[DocumentCluster]) -> list[SummaryResult]:
        """Batch summarize; the semaphore caps in-flight requests. Results
        come back in input order; any failure aborts the whole batch."""
        workers = max(1, self._spec.max_concurrency)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.summarize, clusters))


def summarize_cluster(
    cluster: DocumentCluster,
    spec: SummarizerSpec,
    remote: RemoteSummarizer | None = None,
) -> SummaryResult:
    """Dispatch one cluster to the backend named by ``spec``."""
    if spec.backend == "lead_k":
        return lead_k_summarize(cluster, spec.k)
    if spec.backend == "centroid_k":
        return centroid_k_summarize(cluster, spec.k)
    if remote is None:
        raise SumattackError("remote backend requires a RemoteSummarizer instance")
    return remote.summarize(cluster)
