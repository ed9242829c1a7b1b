"""Bundled example documents, loadable by short name."""

from __future__ import annotations

import importlib.resources
import json

from ..document import ParseResult, parse

NAMES = ("fib", "fib2", "geom", "tower", "tower_qe", "ident", "duo")


def load_document(name: str) -> dict:
    if name not in NAMES:
        raise KeyError(f"unknown fixture {name!r}; have {NAMES}")
    text = importlib.resources.files(__package__).joinpath(f"{name}.json").read_text()
    return json.loads(text)


def load(name: str) -> ParseResult:
    return parse(load_document(name))
