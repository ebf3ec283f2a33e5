"""Operator entry points: serve the API, run simulations, chat, inspect.

Every networked command is a thin client of the HTTP API: it shapes a
request, sends it, and prints the reply. Simulation runs are local (each
persona owns an in-process engine) and write their report files to disk.
"""

from __future__ import annotations

import json
import os
import sys

import click
import httpx

from . import __version__
from .engine import EngineConfig
from .providers import reference_bundle
from .service import CompanionService, ServiceConfig
from .simbench import PRESETS, build_personas, run_ablation, write_report


@click.group()
@click.version_option(version=__version__)
def main():
    """Personal-context conversational memory engine."""


@main.command()
@click.option("--data-dir", default="./companion-data", show_default=True,
              help="Directory for the event log and snapshots.")
@click.option("--addr", default="127.0.0.1:8700", show_default=True,
              help="host:port to listen on.")
@click.option("--mode", type=click.Choice(["reference", "remote"]),
              default="reference", show_default=True)
@click.option("--endpoint", default="", help="Remote provider endpoint URL.")
@click.option("--key-env", default="COMPANION_API_KEY", show_default=True,
              help="Environment variable holding the remote API key.")
@click.option("--seed", default=0, show_default=True)
def serve(data_dir, addr, mode, endpoint, key_env, seed):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    if mode == "remote":
        from .providers.remote import RemoteConfig, remote_bundle

        if not endpoint:
            raise click.UsageError("remote mode requires --endpoint")
        if not os.environ.get(key_env):
            raise click.UsageError(
                f"remote mode requires the {key_env} environment variable to be set")
        bundle = remote_bundle(RemoteConfig(endpoint=endpoint, api_key_env=key_env))
    else:
        bundle = reference_bundle()
    os.makedirs(data_dir, exist_ok=True)
    service = CompanionService(
        ServiceConfig(data_dir=data_dir, engine=EngineConfig(seed=seed)), bundle)
    app = create_app(service)
    host, _, port = addr.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8700))
    finally:
        service.shutdown()


@main.command()
@click.option("--personas", "persona_count", default=20, show_default=True)
@click.option("--days", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", default="./simbench-out", show_default=True)
@click.option("--preset", "presets", multiple=True,
              type=click.Choice(list(PRESETS)), help="Run only these presets.")
def simulate(persona_count, days, seed, out_dir, presets):
    """Run the scripted ablation protocol and write report files."""
    personas = build_personas(persona_count, days=days, seed=seed)
    configs = [PRESETS[name] for name in presets] if presets else None
    report = run_ablation(personas, days=days, seed=seed, configs=configs)
    csv_path, md_path = write_report(report, out_dir)
    click.echo(open(md_path).read())
    click.echo(f"report: {csv_path}")
    failures = []
    if not report.recall_ordering_ok():
        failures.append("recall ordering violated")
    if not report.profile_gap_ok():
        failures.append("profile-category recall gap violated")
    if not report.factor_trend_ok():
        failures.append("factor trend violated")
    if failures:
        for failure in failures:
            click.echo(f"FAIL: {failure}", err=True)
        sys.exit(1)


def _request(server: str, method: str, path: str, token: str = "",
             json_body: dict | None = None, params: dict | None = None) -> httpx.Response:
    headers = {"Authorization": f"Bearer {token}"} if token else {}
    with httpx.Client(base_url=server, timeout=60.0) as client:
        return client.request(method, path, json=json_body, params=params,
                              headers=headers)


@main.command()
@click.argument("user_id")
@click.option("--server", default="http://127.0.0.1:8700", show_default=True)
@click.option("--token", default="", help="Existing auth token; omit to register.")
def chat(user_id, server, token):
    """Interactive terminal chat against a running service."""
    if not token:
        reply = _request(server, "POST", "/users", json_body={"user_id": user_id})
        if reply.status_code == 409:
            raise click.UsageError(
                f"user {user_id!r} exists; pass --token to resume the session")
        reply.raise_for_status()
        token = reply.json()["token"]
        click.echo(f"registered {user_id}; token: {token}")
    click.echo("commands: /scene <caption>, /rollover, /quit")
    while True:
        try:
            line = click.prompt("you", prompt_suffix="> ", default="",
                                show_default=False)
        except (EOFError, click.Abort):
            break
        line = line.strip()
        if not line:
            continue
        if line == "/quit":
            break
        if line.startswith("/scene "):
            reply = _request(server, "POST", "/frames", token,
                             {"user_id": user_id, "caption": line[7:].strip()})
            click.echo(f"[scene ack seq={reply.json().get('seq')}]")
            continue
        if line == "/rollover":
            reply = _request(server, "POST", "/rollover", token,
                             {"user_id": user_id})
            body = reply.json()
            click.echo(f"[rollover day={body.get('day')} events={body.get('events')} "
                       f"summaries={body.get('summaries')}]")
            continue
        reply = _request(server, "POST", "/utterances", token,
                         {"user_id": user_id, "text": line})
        if reply.status_code != 200:
            click.echo(f"[error {reply.status_code}: {reply.text}]", err=True)
            continue
        body = reply.json()
        tags = " ".join(f"[{t}]" for t in body.get("tags", []))
        click.echo(f"companion {tags}: {body['text']}")


@main.command()
@click.argument("user_id")
@click.option("--server", default="http://127.0.0.1:8700", show_default=True)
@click.option("--token", required=True)
@click.option("--collection", type=click.Choice(["Events", "Summaries", "Profiles"]),
              default="Events", show_default=True)
@click.option("--page", default=0, show_default=True)
def memory(user_id, server, token, collection, page):
    """Print a page of a user's memory records."""
    reply = _request(server, "GET", "/memory", token,
                     params={"user_id": user_id, "collection": collection,
                             "page": page})
    reply.raise_for_status()
    click.echo(json.dumps(reply.json(), indent=2))


@main.command()
@click.argument("user_id")
@click.option("--server", default="http://127.0.0.1:8700", show_default=True)
@click.option("--token", required=True)
def profiles(user_id, server, token):
    """Print a user's distilled profiles."""
    reply = _request(server, "GET", "/profiles", token, params={"user_id": user_id})
    reply.raise_for_status()
    click.echo(json.dumps(reply.json(), indent=2))


@main.command()
@click.argument("turn_id")
@click.option("--server", default="http://127.0.0.1:8700", show_default=True)
@click.option("--token", required=True)
def trace(turn_id, server, token):
    """Print the full causal trace of one turn."""
    reply = _request(server, "GET", f"/trace/{turn_id}", token)
    reply.raise_for_status()
    click.echo(json.dumps(reply.json(), indent=2))


@main.command("export")
@click.argument("user_id")
@click.option("--server", default="http://127.0.0.1:8700", show_default=True)
@click.option("--token", required=True)
def export_cmd(user_id, server, token):
    """Dump a user's full store as JSONL (embeddings included)."""
    reply = _request(server, "GET", "/export", token, params={"user_id": user_id})
    reply.raise_for_status()
    click.echo(reply.text, nl=False)


if __name__ == "__main__":
    main()
