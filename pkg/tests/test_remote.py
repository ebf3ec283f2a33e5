import httpx
import pytest

from companion.providers import RemoteFailure, Role, TaskTag
from companion.providers import remote as remote_mod
from companion.providers.remote import (
    RemoteCompleter,
    RemoteConfig,
    remote_bundle,
    render_prompt,
)


@pytest.fixture(autouse=True)
def fast_backoff(monkeypatch):
    monkeypatch.setattr(remote_mod, "BACKOFF_BASE_S", 0.001)


@pytest.fixture()
def api_key(monkeypatch):
    monkeypatch.setenv("COMPANION_API_KEY", "sekrit")


def make_client(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


RESPOND_INPUTS = {f: "" for f in ("utterance", "caption", "location", "activity",
                                  "retrieved", "directive", "window")}


class TestRetries:
    def test_succeeds_after_transient_failures(self, api_key):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            if calls["n"] <= 2:
                return httpx.Response(500, text="boom")
            return httpx.Response(200, json={"text": "hello"})

        completer = RemoteCompleter(RemoteConfig(endpoint="http://provider"),
                                    Role.LARGE, client=make_client(handler))
        assert completer(TaskTag.RESPOND, RESPOND_INPUTS) == "hello"
        assert calls["n"] == 3

    def test_fails_after_three_attempts(self, api_key):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            return httpx.Response(503, text="unavailable")

        completer = RemoteCompleter(RemoteConfig(endpoint="http://provider"),
                                    Role.BASE, client=make_client(handler))
        with pytest.raises(RemoteFailure):
            completer(TaskTag.IMPORTANCE, {"text": "x"})
        assert calls["n"] == 3

    def test_misrouted_tag_rejected(self, api_key):
        completer = RemoteCompleter(RemoteConfig(endpoint="http://provider"),
                                    Role.BASE, client=make_client(
                                        lambda r: httpx.Response(200, json={"text": ""})))
        with pytest.raises(RemoteFailure):
            completer(TaskTag.RESPOND, RESPOND_INPUTS)


class TestConfig:
    def test_missing_key_env_names_variable(self, monkeypatch):
        monkeypatch.delenv("COMPANION_API_KEY", raising=False)
        with pytest.raises(RemoteFailure, match="COMPANION_API_KEY"):
            remote_bundle(RemoteConfig(endpoint="http://provider"))

    def test_bundle_mode_and_role_split(self, api_key):
        def handler(request):
            body = request.read().decode()
            model = "large" if '"llm-large"' in body else "base"
            return httpx.Response(200, json={"text": model})

        bundle = remote_bundle(RemoteConfig(endpoint="http://provider"),
                               client=make_client(handler))
        assert bundle.mode == "remote"
        assert bundle.complete(TaskTag.RESPOND, RESPOND_INPUTS) == "large"
        assert bundle.complete(TaskTag.IMPORTANCE, {"text": "x"}) == "base"
        assert bundle.call_log.routing_ok()


class TestTemplates:
    def test_every_tag_has_a_template(self):
        for tag in TaskTag:
            text = render_prompt(tag, {})
            assert text.strip()

    def test_placeholders_substituted(self):
        prompt = render_prompt(TaskTag.IMPORTANCE, {"text": "lost my keys"})
        assert "lost my keys" in prompt
        assert "{text}" not in prompt
