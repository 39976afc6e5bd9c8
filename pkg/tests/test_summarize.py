import json
import threading

import httpx
import pytest

from sumattack.corpus import Document, DocumentCluster
from sumattack.errors import RemoteError, SumattackError
from sumattack.perturb import PerturbationKind, apply_attack
from sumattack.summarize import (
    DEFAULT_PROMPT,
    RemoteSummarizer,
    SummarizerSpec,
    centroid_k_summarize,
    lead_k_summarize,
    render_prompt,
    summarize_cluster,
)


class TestSummarizerSpec:
    def test_backend_ids(self):
        assert SummarizerSpec().backend_id == "lead_3"
        assert SummarizerSpec(backend="centroid_k", k=2).backend_id == "centroid_2"
        spec = SummarizerSpec(backend="remote", endpoint="https://x.test/v1", model_name="m1")
        assert spec.backend_id == "remote:m1"

    def test_rejects_bad_configuration(self):
        with pytest.raises(SumattackError):
            SummarizerSpec(k=0)
        with pytest.raises(SumattackError):
            SummarizerSpec(backend="remote", endpoint="not-a-url")
        with pytest.raises(SumattackError):
            SummarizerSpec(backend="best_k")


class TestLeadK:
    def test_takes_first_k_sentences_of_first_document(self, clusters):
        cluster = clusters[0]
        result = lead_k_summarize(cluster, k=3)
        assert result.summary == " ".join(cluster.documents[0].sentences[:3])
        assert result.backend_id == "lead_3"
        assert not result.truncated

    def test_short_document_sets_truncated(self):
        cluster = DocumentCluster(
            id="short", documents=(Document.from_sentences(["Only one here."]),)
        )
        result = lead_k_summarize(cluster, k=3)
        assert result.summary == "Only one here."
        assert result.truncated

    def test_follows_document_reorder(self, clusters, attack_config):
        # after DR the old second document supplies the lead
        moved = apply_attack(clusters[0], PerturbationKind.DR, attack_config).cluster
        result = lead_k_summarize(moved, k=3)
        assert result.summary == " ".join(clusters[0].documents[1].sentences[:3])


def tiny_cluster(sentences):
    return DocumentCluster(id="tiny", documents=(Document.from_sentences(sentences),))


class TestCentroidK:
    def test_output_keeps_document_order(self, clusters):
        result = centroid_k_summarize(clusters[0], k=3)
        all_sents = [s for d in clusters[0].documents for s in d.sentences]
        picked = result.summary
        positions = []
        for s in all_sents:
            idx = picked.find(s)
            if idx >= 0:
                positions.append(idx)
        assert positions == sorted(positions)

    def test_fully_homoglyphed_sentence_scores_zero(self, clusters, attack_config):
        # SRH with m=1 destroys the vocabulary of exactly one sentence; its
        # terms occur nowhere else so the centroid never selects it
        import dataclasses

        cfg = dataclasses.replace(attack_config, m=1)
        perturbed = apply_attack(clusters[0], PerturbationKind.SRH, cfg).cluster
        poisoned_sentence = perturbed.documents[0].sentences[0]
        result = centroid_k_summarize(perturbed, k=3)
        assert poisoned_sentence not in result.summary

    def test_k_clamps_to_available_sentences(self):
        cluster = tiny_cluster(["Red boats drift.", "Red boats moor."])
        result = centroid_k_summarize(cluster, k=10)
        assert result.summary == "Red boats drift. Red boats moor."
        assert result.truncated

    def test_tie_breaks_toward_earlier_sentence(self):
        # two identical sentences tie exactly; k=1 must pick the first
        cluster = tiny_cluster(["Same words here.", "Same words here.", "Other text entirely now."])
        result = centroid_k_summarize(cluster, k=1)
        assert result.summary == "Same words here."

    def test_backend_id_carries_k(self, clusters):
        assert centroid_k_summarize(clusters[0], k=2).backend_id == "centroid_2"


class TestRenderPrompt:
    def test_joins_documents_with_separator(self, clusters):
        text = render_prompt(clusters[0], DEFAULT_PROMPT)
        for doc in clusters[0].documents:
            assert doc.raw_text in text
        assert "\n\n---\n\n" in text

    def test_literal_braces_survive(self, clusters):
        out = render_prompt(clusters[0], 'JSON {"k": 1} then {documents}')
        assert out.startswith('JSON {"k": 1} then ')


def remote_spec(**overrides):
    base = dict(
        backend="remote",
        endpoint="https://api.test/v1/chat/completions",
        model_name="probe-1",
        max_retries=3,
    )
    base.update(overrides)
    return SummarizerSpec(**base)


def completion(text):
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})


class TestRemoteSummarizer:
    def test_success_first_attempt(self, clusters):
        seen = {}

        def handler(request):
            seen["body"] = json.loads(request.content)
            return completion("A concise summary.")

        with RemoteSummarizer(remote_spec(), transport=httpx.MockTransport(handler)) as rs:
            result = rs.summarize(clusters[0])
        assert result.summary == "A concise summary."
        assert result.attempt_count == 1
        assert seen["body"]["model"] == "probe-1"
        assert seen["body"]["temperature"] == 0
        assert seen["body"]["messages"][0]["role"] == "user"
        assert clusters[0].documents[0].raw_text in seen["body"]["messages"][0]["content"]

    def test_server_error_retries_then_succeeds(self, clusters):
        calls = {"n": 0}
        delays = []

        def handler(request):
            calls["n"] += 1
            if calls["n"] == 1:
                return httpx.Response(500, text="boom")
            return completion("Recovered.")

        rs = RemoteSummarizer(
            remote_spec(), transport=httpx.MockTransport(handler), sleeper=delays.append
        )
        result = rs.summarize(clusters[0])
        assert result.attempt_count == 2
        assert calls["n"] == 2
        assert len(delays) == 1
        assert 0.0 <= delays[0] <= 1.0

    def test_client_error_fails_immediately(self, clusters):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            return httpx.Response(401, text="nope")

        rs = RemoteSummarizer(remote_spec(), transport=httpx.MockTransport(handler))
        with pytest.raises(RemoteError, match="HTTP 401"):
            rs.summarize(clusters[0])
        assert calls["n"] == 1

    def test_retries_exhaust(self, clusters):
        def handler(request):
            return httpx.Response(503, text="still down")

        rs = RemoteSummarizer(
            remote_spec(max_retries=2),
            transport=httpx.MockTransport(handler),
            sleeper=lambda _t: None,
        )
        with pytest.raises(RemoteError, match="retries exhausted"):
            rs.summarize(clusters[0])

    def test_transport_errors_retry(self, clusters):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            if calls["n"] < 3:
                raise httpx.ConnectError("refused")
            return completion("Back online.")

        rs = RemoteSummarizer(
            remote_spec(), transport=httpx.MockTransport(handler), sleeper=lambda _t: None
        )
        assert rs.summarize(clusters[0]).attempt_count == 3

    def test_backoff_window_doubles(self, clusters):
        delays = []

        def handler(request):
            return httpx.Response(500)

        class TopOfRange:
            def uniform(self, lo, hi):
                return hi

        rs = RemoteSummarizer(
            remote_spec(max_retries=3),
            transport=httpx.MockTransport(handler),
            sleeper=delays.append,
            rng=TopOfRange(),
        )
        with pytest.raises(RemoteError):
            rs.summarize(clusters[0])
        assert delays == [1.0, 2.0, 4.0]

    def test_empty_completion_is_an_error(self, clusters):
        rs = RemoteSummarizer(
            remote_spec(), transport=httpx.MockTransport(lambda r: completion("   "))
        )
        with pytest.raises(RemoteError, match="empty summary"):
            rs.summarize(clusters[0])

    def test_malformed_payload_is_an_error(self, clusters):
        rs = RemoteSummarizer(
            remote_spec(),
            transport=httpx.MockTransport(lambda r: httpx.Response(200, json={"choices": []})),
        )
        with pytest.raises(RemoteError, match="malformed"):
            rs.summarize(clusters[0])

    def test_bearer_token_from_named_env(self, clusters, monkeypatch):
        monkeypatch.setenv("PROBE_TOKEN", "sekrit")
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("Authorization")
            return completion("Authorized.")

        rs = RemoteSummarizer(
            remote_spec(auth_token_env="PROBE_TOKEN"), transport=httpx.MockTransport(handler)
        )
        rs.summarize(clusters[0])
        assert seen["auth"] == "Bearer sekrit"

    def test_missing_token_env_is_an_error(self, clusters, monkeypatch):
        monkeypatch.delenv("PROBE_TOKEN", raising=False)
        rs = RemoteSummarizer(
            remote_spec(auth_token_env="PROBE_TOKEN"),
            transport=httpx.MockTransport(lambda r: completion("x")),
        )
        with pytest.raises(RemoteError, match="PROBE_TOKEN"):
            rs.summarize(clusters[0])

    def test_concurrency_capped_by_semaphore(self, clusters):
        lock = threading.Lock()
        state = {"active": 0, "peak": 0}
        release = threading.Event()

        def handler(request):
            with lock:
                state["active"] += 1
                state["peak"] = max(state["peak"], state["active"])
            release.wait(timeout=0.2)
            with lock:
                state["active"] -= 1
            return completion("Parallel summary.")

        rs = RemoteSummarizer(
            remote_spec(max_concurrency=2), transport=httpx.MockTransport(handler)
        )
        results = rs.summarize_many(clusters[:6])
        assert [r.cluster_id for r in results] == [c.id for c in clusters[:6]]
        assert state["peak"] <= 2

    def test_requires_remote_spec(self):
        with pytest.raises(SumattackError):
            RemoteSummarizer(SummarizerSpec(backend="lead_k"))


class TestDispatch:
    def test_lead_and_centroid_dispatch(self, clusters):
        assert summarize_cluster(clusters[0], SummarizerSpec()).backend_id == "lead_3"
        assert (
            summarize_cluster(clusters[0], SummarizerSpec(backend="centroid_k")).backend_id
            == "centroid_3"
        )

    def test_remote_dispatch_needs_client(self, clusters):
        with pytest.raises(SumattackError):
            summarize_cluster(clusters[0], remote_spec())
