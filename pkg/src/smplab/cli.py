"""Command-line client for the experiment service.

By default the service app is mounted in process, so `smplab relation-p
--seed 7` needs no running server.  Point --server at a live instance to
run the same request remotely; output bytes are identical either way
because the service renders the csv.

Exit codes: 0 all row checks passed, 1 some failed, 2 bad config or
transport failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx
import pydantic

from .schemas import (
    HammingConfig,
    LemmasConfig,
    MarginsConfig,
    RelationPConfig,
    YaoSimConfig,
)

CONFIG_MODELS = {
    "relation-p": RelationPConfig,
    "margins": MarginsConfig,
    "yao-sim": YaoSimConfig,
    "hamming": HammingConfig,
    "lemmas": LemmasConfig,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smplab", description="simultaneous-message protocol experiments"
    )
    sub = parser.add_subparsers(dest="experiment", required=True)

    def add_common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", type=Path, default=None, help="JSON config file")
        sp.add_argument("--seed", type=int, default=None, help="root seed")
        sp.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument(
            "--server", default=None, help="base URL of a running service (default: in process)"
        )

    sp = sub.add_parser("relation-p", help="relation protocols, exact rates plus sampling")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--instances", type=int, default=None)
    add_common(sp)

    sp = sub.add_parser("margins", help="sign-matrix norm bounds against constructions")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--points", type=int, default=None)
    add_common(sp)

    sp = sub.add_parser("yao-sim", help="random tables compiled to fingerprint protocols")
    sp.add_argument("--tables", type=int, default=None)
    sp.add_argument("--eps", type=float, default=None)
    add_common(sp)

    sp = sub.add_parser("hamming", help="distance-threshold protocol suite")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--ball-n", dest="ball_n", type=int, default=None)
    sp.add_argument("--ball-d", dest="ball_d", type=int, default=None)
    sp.add_argument("--ball-rate", dest="ball_rate", type=float, default=None)
    sp.add_argument("--coherent-runs", dest="coherent_runs", type=int, default=None)
    add_common(sp)

    sp = sub.add_parser("lemmas", help="measurement lemmas and state statistics")
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--swap-pairs", dest="swap_pairs", type=int, default=None)
    sp.add_argument("--swap-trials", dest="swap_trials", type=int, default=None)
    sp.add_argument("--conversions", dest="conversions", type=int, default=None)
    add_common(sp)

    return parser


def resolve_config(args: argparse.Namespace) -> pydantic.BaseModel:
    model = CONFIG_MODELS[args.experiment]
    fields: dict = {}
    if args.config is not None:
        try:
            fields.update(json.loads(args.config.read_text()))
        except (OSError, json.JSONDecodeError) as err:
            raise ValueError(f"cannot read config file: {err}") from err
    for name in model.model_fields:
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    return model(**fields)


def request_table(experiment: str, cfg: pydantic.BaseModel, server: str | None) -> dict:
    payload = cfg.model_dump(mode="json")
    path = f"/experiments/{experiment}"
    if server is None:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            from fastapi.testclient import TestClient

        from .service import app

        with TestClient(app) as client:
            response = client.post(path, json=payload)
    else:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            response = client.post(path, json=payload)
    if response.status_code != 200:
        raise RuntimeError(f"service returned {response.status_code}: {response.text}")
    return response.json()


def render(result: dict, fmt: str) -> str:
    if fmt == "csv":
        return result["csv"]
    body = {key: result[key] for key in ("name", "columns", "rows", "all_pass", "notes")}
    return json.dumps(body, indent=2) + "\n"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (pydantic.ValidationError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    try:
        result = request_table(args.experiment, cfg, args.server)
    except (RuntimeError, httpx.HTTPError) as err:
        print(f"request failed: {err}", file=sys.stderr)
        return 2

    text = render(result, args.format)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if result["all_pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
