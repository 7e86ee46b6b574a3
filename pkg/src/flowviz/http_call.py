"""`flowviz-http-call`: tiny HTTP client shipped so CWL engines can run
api-access tasks as command line tools. Writes the response body to stdout;
exits nonzero on transport errors or HTTP status >= 400.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowviz-http-call")
    parser.add_argument("--method", required=True, choices=["GET", "POST", "PUT", "DELETE"])
    parser.add_argument("--url", required=True)
    parser.add_argument("--header", action="append", default=[], metavar="'Name: value'")
    parser.add_argument("--body", default=None, help="literal JSON request body")
    parser.add_argument("--timeout", type=float, default=300.0)
    return parser


def _parse_field_files(extras: list) -> dict:
    """Collect `--field-file-<name> <path>` pairs: each file's content
    becomes the value of body field <name>."""
    fields = {}
    i = 0
    while i < len(extras):
        token = extras[i]
        if token.startswith("--field-file-") and i + 1 < len(extras):
            name = token[len("--field-file-"):]
            with open(extras[i + 1], "r", encoding="utf-8") as fh:
                fields[name] = fh.read()
            i += 2
        else:
            raise SystemExit(f"unrecognized argument: {token}")
    return fields


def main(argv=None) -> int:
    args, extras = build_parser().parse_known_args(argv)
    headers = {}
    for raw in args.header:
        name, _, value = raw.partition(":")
        headers[name.strip()] = value.strip()
    body = json.loads(args.body) if args.body else None
    file_fields = _parse_field_files(extras)
    if file_fields:
        body = {**(body or {}), **file_fields}
    try:
        response = httpx.request(
            args.method,
            args.url,
            headers=headers,
            json=body if body is not None else None,
            timeout=args.timeout,
        )
    except httpx.HTTPError as exc:
        print(f"request failed: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(response.text)
    sys.stdout.flush()
    if response.status_code >= 400:
        print(f"HTTP {response.status_code}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
