"""Shared test fixtures: the brute-force edit-distance oracle, the worked
REF/ASR/LLM example triples, and an in-process chat-completions stub."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from asrcorrect.types import Corpus, Utterance, make_word


def brute_force_distance(ref, hyp) -> int:
    """Exponential-time recursive edit distance, the independent oracle.

    Deliberately written over the raw min-recurrence with no table so it
    shares nothing with the production implementation.  Only usable for
    short sequences.
    """

    def go(i: int, j: int) -> int:
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        best = go(i + 1, j + 1) + (0 if ref[i] == hyp[j] else 1)
        skip_ref = go(i + 1, j) + 1
        if skip_ref < best:
            best = skip_ref
        skip_hyp = go(i, j + 1) + 1
        if skip_hyp < best:
            best = skip_hyp
        return best

    return go(0, 0)


# REF / ASR / LLM triples from the worked examples
EXAMPLE_1 = (
    "their fingers sear me like fire",
    "their fingers see her me like fire",
    "their fingers sear me like fire",
)
EXAMPLE_2 = (
    "damn your impertinence sir burst out burgess",
    "dam your impertinent sur burst out burges",
    "damn your impertinent sir burst out burgess",
)
EXAMPLE_3 = (
    "fedosya's face made her anxious",
    "the dose used to face nature anxious",
    "the dose used to face nature anxiously",
)
EXAMPLE_4 = (
    "pour mayonnaise over all chill and serve",
    "parme a nays overall chill and serve",
    "parmesan over all chill and serve",
)


def utterance_from_pairs(utt_id, pairs, reference=None) -> Utterance:
    return Utterance(
        id=utt_id,
        words=tuple(make_word(text, conf) for text, conf in pairs),
        reference_text=reference,
    )


def uniform_utterance(utt_id, text, confidence=0.9, reference=None) -> Utterance:
    return utterance_from_pairs(
        utt_id, [(word, confidence) for word in text.split()], reference
    )


@pytest.fixture
def examples_corpus() -> Corpus:
    """The four worked triples as a corpus with uniform confidences."""
    utterances = []
    for index, (ref, asr, _) in enumerate(
        (EXAMPLE_1, EXAMPLE_2, EXAMPLE_3, EXAMPLE_4), start=1
    ):
        utterances.append(uniform_utterance(f"ex{index}", asr, 0.5, reference=ref))
    return Corpus(name="examples", utterances=tuple(utterances))


@pytest.fixture
def example_llm_replies() -> dict[str, str]:
    return {
        f"ex{index}": llm
        for index, (_, _, llm) in enumerate(
            (EXAMPLE_1, EXAMPLE_2, EXAMPLE_3, EXAMPLE_4), start=1
        )
    }


class StubHandler(BaseHTTPRequestHandler):
    """Minimal chat-completions endpoint: uppercases the payload text."""

    server_version = "stub"
    fail_next = 0
    status_for_all = None
    seen_bodies: list[dict] = []
    seen_headers: list[dict] = []

    def do_POST(self):  # noqa: N802 - http.server API
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        type(self).seen_bodies.append(body)
        type(self).seen_headers.append(dict(self.headers))

        if type(self).status_for_all is not None:
            self.send_response(type(self).status_for_all)
            self.end_headers()
            return
        if type(self).fail_next > 0:
            type(self).fail_next -= 1
            self.send_response(503)
            self.end_headers()
            return

        payload = json.loads(body["messages"][-1]["content"])
        reply = payload["text"].upper()
        out = json.dumps({"choices": [{"message": {"content": reply}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(out)))
        self.end_headers()
        self.wfile.write(out)

    def log_message(self, *args):  # silence the test log
        pass


@pytest.fixture
def stub_server():
    StubHandler.fail_next = 0
    StubHandler.status_for_all = None
    StubHandler.seen_bodies = []
    StubHandler.seen_headers = []
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions"
    server.shutdown()
    thread.join(timeout=5)
