import json

import pytest

from geosolve.clients import (
    CannedClient,
    CannedMissError,
    HeuristicClient,
    HttpClient,
    HttpStatusError,
    MissingApiKeyError,
    ModelClientConfig,
    ModelRequest,
    RecordReplayClient,
    TimeoutError_,
    load_store,
    request_key,
    save_store,
)


def req(user="hello", system="sys", **kw):
    return ModelRequest(system=system, user=user, **kw)


def test_request_validation():
    with pytest.raises(ValueError):
        ModelRequest(system="s", user="")
    with pytest.raises(ValueError):
        ModelRequest(system="s", user="u", temperature=1.5)
    assert ModelRequest(system="s", user="u").temperature == 0.0


def test_config_http_requires_endpoint():
    with pytest.raises(ValueError):
        ModelClientConfig(backend="http", endpoint=None, model_name="m")


# ---------------------------------------------------------------------------
# canned


def test_canned_lookup_and_miss():
    r = req()
    client = CannedClient({request_key(r): "stored reply"})
    assert client.complete(r) == "stored reply"
    with pytest.raises(CannedMissError):
        client.complete(req(user="other"))


def test_canned_key_is_sha256_of_system_user():
    import hashlib

    r = req(user="u", system="s")
    assert request_key(r) == hashlib.sha256(b"su").hexdigest()


def test_canned_holds_no_endpoint():
    client = CannedClient({})
    assert not hasattr(client, "endpoint")


# ---------------------------------------------------------------------------
# heuristic


def _prompt_for(diagram, literal_text):
    from geosolve.disambig import craft_prompt, detect_ambiguities
    from geosolve.terms import parse_term
    from geosolve.textparse import ParsedProblem

    target = literal_text if literal_text.startswith("Find") else "Find(x)"
    props = () if literal_text.startswith("Find") else (parse_term(literal_text),)
    p = ParsedProblem(
        propositions=props,
        target=parse_term(target),
        unmatched_spans=(),
        prose="prose",
    )
    a = detect_ambiguities(p)[0]
    bundle = craft_prompt(a, p, diagram)
    return ModelRequest(system=bundle.system, user=bundle.user)


def test_heuristic_square_fixture(square_circle):
    client = HeuristicClient(square_circle)
    reply = client.complete(_prompt_for(square_circle, "InscribedIn(Circle(O),Square($))"))
    assert reply == "Square(A,B,C,D)"


def test_heuristic_circle(square_circle):
    client = HeuristicClient(square_circle)
    reply = client.complete(_prompt_for(square_circle, "CircumscribedTo(Square(A,B,C,D),Circle($))"))
    assert reply == "Circle(O)"


def test_heuristic_pentagon_unique_cycle(pentagon):
    client = HeuristicClient(pentagon)
    reply = client.complete(_prompt_for(pentagon, "Find(PerimeterOf(Pentagon($)))"))
    assert reply == "Pentagon(A,B,D,E,C)"


def test_heuristic_cannot_do_areas(square_circle):
    client = HeuristicClient(square_circle)
    reply = client.complete(_prompt_for(square_circle, "Find(AreaOf(Shaded(Shape($))))"))
    assert reply == "NoHeuristicForAreas"


def test_heuristic_no_unique_candidate():
    from geosolve.diagram import DiagramParse

    two_triangles = DiagramParse(
        points=(
            ("A", 0, 0), ("B", 4, 0), ("C", 0, 3),
            ("D", 10, 0), ("E", 14, 0), ("F", 10, 3),
        ),
        segments=(("A", "B"), ("B", "C"), ("C", "A"), ("D", "E"), ("E", "F"), ("F", "D")),
    )
    client = HeuristicClient(two_triangles)
    reply = client.complete(_prompt_for(two_triangles, "InscribedIn(Circle(O1),Triangle($))"))
    assert reply == "NoUniqueCandidate"


# ---------------------------------------------------------------------------
# record / replay


class EchoClient:
    def __init__(self):
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        return f"echo:{request.user}"


def test_record_then_replay_round_trip(tmp_path):
    store = tmp_path / "store.json"
    inner = EchoClient()
    recorder = RecordReplayClient("record", store, inner)
    assert recorder.complete(req(user="q1")) == "echo:q1"
    assert recorder.complete(req(user="q2")) == "echo:q2"

    replayer = RecordReplayClient("replay", store)
    assert replayer.complete(req(user="q1")) == "echo:q1"
    assert inner.calls == 2  # replay never touches the live client


def test_replay_miss(tmp_path):
    store = tmp_path / "store.json"
    save_store(store, {})
    replayer = RecordReplayClient("replay", store)
    with pytest.raises(CannedMissError):
        replayer.complete(req(user="unseen"))


def test_replay_requires_existing_store(tmp_path):
    with pytest.raises(Exception):
        RecordReplayClient("replay", tmp_path / "missing.json")


def test_store_survives_restart(tmp_path):
    store = tmp_path / "store.json"
    RecordReplayClient("record", store, EchoClient()).complete(req(user="persisted"))
    fresh = RecordReplayClient("replay", store)  # new process stand-in
    assert fresh.complete(req(user="persisted")) == "echo:persisted"


def test_store_format_is_key_reply_entries(tmp_path):
    store = tmp_path / "store.json"
    save_store(store, {"k1": "v1"})
    entries = json.loads(store.read_text())
    assert entries == [{"key": "k1", "reply": "v1"}]
    assert load_store(store) == {"k1": "v1"}


# ---------------------------------------------------------------------------
# http


def _http_config(**kw):
    return ModelClientConfig(
        backend="http",
        endpoint="https://example.invalid/v1/chat/completions",
        model_name="test-model",
        api_key_env=kw.pop("api_key_env", "GEOSOLVE_TEST_KEY"),
        **kw,
    )


def test_http_missing_api_key(monkeypatch):
    monkeypatch.delenv("GEOSOLVE_TEST_KEY", raising=False)
    client = HttpClient(_http_config())
    called = []
    monkeypatch.setattr("requests.post", lambda *a, **k: called.append(1))
    with pytest.raises(MissingApiKeyError):
        client.complete(req())
    assert not called  # failed before any network activity


class FakeResponse:
    def __init__(self, status_code, body=None, text=""):
        self.status_code = status_code
        self._body = body or {}
        self.text = text

    def json(self):
        return self._body


def test_http_success_payload(monkeypatch):
    monkeypatch.setenv("GEOSOLVE_TEST_KEY", "token")
    captured = {}

    def fake_post(url, json=None, headers=None, timeout=None):
        captured.update(url=url, json=json, headers=headers)
        return FakeResponse(
            200, {"choices": [{"message": {"content": "  the reply  "}}]}
        )

    monkeypatch.setattr("requests.post", fake_post)
    client = HttpClient(_http_config())
    out = client.complete(req(user="question", system="rules"))
    assert out == "the reply"
    assert captured["headers"]["Authorization"] == "Bearer token"
    assert captured["json"]["model"] == "test-model"
    roles = [m["role"] for m in captured["json"]["messages"]]
    assert roles == ["system", "user"]


def test_http_image_attached_base64(monkeypatch, tmp_path):
    monkeypatch.setenv("GEOSOLVE_TEST_KEY", "token")
    image = tmp_path / "fig.png"
    image.write_bytes(b"\x89PNG-fake")
    captured = {}

    def fake_post(url, json=None, headers=None, timeout=None):
        captured.update(json=json)
        return FakeResponse(200, {"choices": [{"message": {"content": "ok"}}]})

    monkeypatch.setattr("requests.post", fake_post)
    HttpClient(_http_config()).complete(req(image=str(image)))
    user_content = captured["json"]["messages"][1]["content"]
    assert user_content[1]["type"] == "image_url"
    assert user_content[1]["image_url"]["url"].startswith("data:image/png;base64,")


def test_http_retries_on_5xx_with_backoff(monkeypatch):
    monkeypatch.setenv("GEOSOLVE_TEST_KEY", "token")
    responses = [FakeResponse(500), FakeResponse(503),
                 FakeResponse(200, {"choices": [{"message": {"content": "ok"}}]})]
    sleeps = []
    monkeypatch.setattr("requests.post", lambda *a, **k: responses.pop(0))
    client = HttpClient(_http_config(retries=3), sleep=sleeps.append)
    assert client.complete(req()) == "ok"
    assert sleeps == [1.0, 2.0]  # exponential backoff, base 1s, factor 2


def test_http_4xx_is_immediate(monkeypatch):
    monkeypatch.setenv("GEOSOLVE_TEST_KEY", "token")
    calls = []

    def fake_post(*a, **k):
        calls.append(1)
        return FakeResponse(401, text="unauthorized")

    monkeypatch.setattr("requests.post", fake_post)
    with pytest.raises(HttpStatusError) as err:
        HttpClient(_http_config(retries=3)).complete(req())
    assert err.value.code == 401
    assert len(calls) == 1


def test_http_timeout_exhausts_retries(monkeypatch):
    import requests

    monkeypatch.setenv("GEOSOLVE_TEST_KEY", "token")
    calls = []

    def fake_post(*a, **k):
        calls.append(1)
        raise requests.Timeout()

    monkeypatch.setattr("requests.post", fake_post)
    client = HttpClient(_http_config(retries=2), sleep=lambda _: None)
    with pytest.raises(TimeoutError_):
        client.complete(req())
    assert len(calls) == 3  # initial try + 2 retries


# ---------------------------------------------------------------------------
# hermetic backends touch no network at all


def test_hermetic_backends_never_call_requests(monkeypatch, square_circle):
    def explode(*a, **k):
        raise AssertionError("network call from a hermetic backend")

    monkeypatch.setattr("requests.post", explode)
    monkeypatch.setattr("requests.get", explode)
    heuristic = HeuristicClient(square_circle)
    heuristic.complete(_prompt_for(square_circle, "InscribedIn(Circle(O),Square($))"))
    r = req()
    CannedClient({request_key(r): "x"}).complete(r)
