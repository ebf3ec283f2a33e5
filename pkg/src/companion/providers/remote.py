"""Remote HTTP providers.

Each provider posts to a configured endpoint and retries twice with
exponential backoff before raising RemoteFailure. There is no silent
fallback to the reference implementations: a run is either fully
deterministic or fully remote.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from importlib import resources

import httpx

from . import (
    ProviderBundle,
    RemoteFailure,
    Role,
    TaskTag,
    role_for,
)
from .embedding import DEFAULT_DIMS, embed_text

RETRIES = 2
BACKOFF_BASE_S = 0.5


@dataclass
class RemoteConfig:
    endpoint: str
    api_key_env: str = "COMPANION_API_KEY"
    model_base: str = "llm-base"
    model_large: str = "llm-large"
    caption_model: str = "vlm"
    transcribe_model: str = "asr"
    temperature: float = 0.0
    max_concurrency: int = 8
    timeout_s: float = 30.0
    template_dir: str | None = None
    headers: dict = field(default_factory=dict)

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise RemoteFailure(
                f"remote provider mode requires the {self.api_key_env} environment variable"
            )
        return key


def load_template(tag: TaskTag, template_dir: str | None = None) -> str:
    name = f"{tag.value.lower()}.txt"
    if template_dir:
        with open(os.path.join(template_dir, name), encoding="utf-8") as fh:
            return fh.read()
    ref = resources.files("companion.providers").joinpath("templates").joinpath(name)
    return ref.read_text(encoding="utf-8")


def render_prompt(tag: TaskTag, inputs: dict, template_dir: str | None = None) -> str:
    template = load_template(tag, template_dir)
    rendered = template
    for key, value in inputs.items():
        rendered = rendered.replace("{" + key + "}", str(value))
    return rendered


class _RemoteBase:
    def __init__(self, config: RemoteConfig, client: httpx.Client | None = None):
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout_s)
        self._semaphore = __import__("threading").Semaphore(config.max_concurrency)

    def _post(self, path: str, payload: dict) -> dict:
        url = self.config.endpoint.rstrip("/") + path
        headers = {"Authorization": f"Bearer {self.config.api_key()}"}
        headers.update(self.config.headers)
        last_error: Exception | None = None
        for attempt in range(RETRIES + 1):
            try:
                with self._semaphore:
                    response = self._client.post(url, json=payload, headers=headers)
                response.raise_for_status()
                return response.json()
            except Exception as exc:  # noqa: BLE001 - retried, then surfaced
                last_error = exc
                if attempt < RETRIES:
                    time.sleep(BACKOFF_BASE_S * (2 ** attempt))
        raise RemoteFailure(f"remote call to {url} failed after {RETRIES + 1} attempts") from last_error


class RemoteCaptioner(_RemoteBase):
    def __call__(self, frame: str) -> str:
        reply = self._post("/caption", {"model": self.config.caption_model, "frame": frame})
        return reply["text"]


class RemoteTranscriber(_RemoteBase):
    def __call__(self, audio: str) -> str:
        if audio == "":
            return ""
        reply = self._post("/transcribe", {"model": self.config.transcribe_model, "audio": audio})
        return reply["text"]


class RemoteCompleter(_RemoteBase):
    """Renders the tag's prompt template and calls the configured role endpoint."""

    def __init__(self, config: RemoteConfig, role: Role, client: httpx.Client | None = None):
        super().__init__(config, client)
        self.role = role

    def __call__(self, tag: TaskTag, inputs: dict, seed: int = 0) -> str:
        if role_for(tag) is not self.role:
            raise RemoteFailure(
                f"completer for role {self.role.value} received mis-routed tag {tag.value}"
            )
        model = self.config.model_large if self.role is Role.LARGE else self.config.model_base
        prompt = render_prompt(tag, inputs, self.config.template_dir)
        reply = self._post(
            "/complete",
            {
                "model": model,
                "tag": tag.value,
                "prompt": prompt,
                "temperature": self.config.temperature,
                "seed": seed,
            },
        )
        return reply["text"]


def remote_bundle(config: RemoteConfig, dims: int = DEFAULT_DIMS,
                  client: httpx.Client | None = None) -> ProviderBundle:
    """Bundle backed by remote endpoints (embedding stays local and deterministic)."""
    config.api_key()  # fail fast at startup, naming the missing variable
    return ProviderBundle(
        embedder=lambda text: embed_text(text, dims),
        captioner=RemoteCaptioner(config, client),
        transcriber=RemoteTranscriber(config, client),
        completer_base=RemoteCompleter(config, Role.BASE, client),
        completer_large=RemoteCompleter(config, Role.LARGE, client),
        dims=dims,
        mode="remote",
    )
