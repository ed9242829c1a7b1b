"""Schema v1 for serialized representatives.

A document is a JSON object with keys ``schema`` (the integer 1), ``graph``,
``map``, optional ``nielsen`` and ``splittings``, and optional ``meta``.
Oriented edges are signed integers: the file lists each positive edge once
with an explicit ``reverse`` key (which must equal the negated id; the
involution is realized by negation) and edge words use negative ids for
reversed traversal.

Parsing is strict by default: unknown keys anywhere are errors carrying a
JSON-path context. In lenient mode they become warnings instead. All
diagnostics are collected before raising so a bad file reports every problem
at once.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from typing import Any

from .graphs import MarkedGraph
from .trackmap import SPLIT_KINDS, TopRep


class DocumentError(ValueError):
    """Schema violation(s); ``diagnostics`` lists every problem found."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


_TOP_KEYS = {"schema", "meta", "graph", "map", "nielsen", "splittings"}
_META_KEYS = {"name", "base_vertex", "ct"}
_GRAPH_KEYS = {"vertices", "edges"}
_EDGE_KEYS = {"id", "reverse", "init", "term", "stratum", "label"}
_MAP_KEYS = {"vertex_image", "edge_image"}
_NIELSEN_KEYS = {"path", "split"}
_TERM_KEYS = {"kind", "word"}


@dataclasses.dataclass
class ParseResult:
    rep: TopRep
    warnings: list[str]
    document: dict[str, Any]


def _check_keys(obj: dict, allowed: set[str], where: str, diags: list[str], warns: list[str], strict: bool) -> None:
    for k in obj:
        if k not in allowed:
            msg = f"{where}: unknown key {k!r}"
            (diags if strict else warns).append(msg)


def _want(obj: dict, key: str, typ, where: str, diags: list[str]):
    if key not in obj:
        diags.append(f"{where}: missing key {key!r}")
        return None
    val = obj[key]
    if typ is not None and not isinstance(val, typ):
        diags.append(f"{where}.{key}: expected {typ.__name__ if isinstance(typ, type) else typ}, got {type(val).__name__}")
        return None
    return val


def _edge_word(raw: Any, where: str, diags: list[str]) -> tuple[int, ...] | None:
    if not isinstance(raw, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in raw):
        diags.append(f"{where}: expected a list of signed edge ids")
        return None
    if any(x == 0 for x in raw):
        diags.append(f"{where}: edge id 0 is not a valid oriented edge")
        return None
    return tuple(raw)


def parse(source: str | dict, *, strict: bool = True) -> ParseResult:
    """Validate a document and build the representative it describes.

    ``source`` may be JSON text or an already-decoded object. Raises
    :class:`DocumentError` with the full diagnostic list on any schema
    violation (or, in lenient mode, downgrades unknown-key problems to
    warnings on the result).
    """
    diags: list[str] = []
    warns: list[str] = []
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as err:
            raise DocumentError([f"not valid JSON: {err.msg} at line {err.lineno} column {err.colno}"]) from None
    else:
        doc = source
    if not isinstance(doc, dict):
        raise DocumentError(["document root must be an object"])
    _check_keys(doc, _TOP_KEYS, "$", diags, warns, strict)
    if doc.get("schema") != 1:
        diags.append(f"$.schema: expected 1, got {doc.get('schema')!r}")

    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        diags.append("$.meta: expected an object")
        meta = {}
    _check_keys(meta, _META_KEYS, "$.meta", diags, warns, strict)
    name = meta.get("name", "")
    base_vertex = meta.get("base_vertex")
    ct = bool(meta.get("ct", False))

    gobj = _want(doc, "graph", dict, "$", diags) or {}
    _check_keys(gobj, _GRAPH_KEYS, "$.graph", diags, warns, strict)
    vertices = gobj.get("vertices")
    if not isinstance(vertices, list) or not all(isinstance(v, str) for v in vertices):
        diags.append("$.graph.vertices: expected a list of vertex id strings")
        vertices = []
    raw_edges = gobj.get("edges")
    if not isinstance(raw_edges, list):
        diags.append("$.graph.edges: expected a list of edge objects")
        raw_edges = []
    edges: dict[int, tuple[str, str, int]] = {}
    labels: dict[int, str] = {}
    for k, eobj in enumerate(raw_edges):
        where = f"$.graph.edges[{k}]"
        if not isinstance(eobj, dict):
            diags.append(f"{where}: expected an object")
            continue
        _check_keys(eobj, _EDGE_KEYS, where, diags, warns, strict)
        eid = _want(eobj, "id", int, where, diags)
        if eid is None or isinstance(eid, bool) or eid <= 0:
            diags.append(f"{where}.id: expected a positive integer")
            continue
        if "reverse" not in eobj:
            diags.append(f"{where}: edge {eid} lacks its reverse partner")
        elif eobj["reverse"] != -eid:
            diags.append(
                f"{where}.reverse: edge {eid} declares reverse {eobj['reverse']!r}, expected {-eid}"
            )
        init = _want(eobj, "init", str, where, diags)
        term = _want(eobj, "term", str, where, diags)
        stratum = _want(eobj, "stratum", int, where, diags)
        if eid in edges:
            diags.append(f"{where}: duplicate edge id {eid}")
            continue
        if init is None or term is None or stratum is None:
            continue
        edges[eid] = (init, term, stratum)
        if "label" in eobj and isinstance(eobj["label"], str):
            labels[eid] = eobj["label"]

    mobj = _want(doc, "map", dict, "$", diags) or {}
    _check_keys(mobj, _MAP_KEYS, "$.map", diags, warns, strict)
    vimg_raw = mobj.get("vertex_image")
    vertex_image: dict[str, str] = {}
    if not isinstance(vimg_raw, dict):
        diags.append("$.map.vertex_image: expected an object")
    else:
        for v, w in vimg_raw.items():
            if not isinstance(w, str):
                diags.append(f"$.map.vertex_image.{v}: expected a vertex id string")
            else:
                vertex_image[v] = w
    eimg_raw = mobj.get("edge_image")
    edge_image: dict[int, tuple[int, ...]] = {}
    if not isinstance(eimg_raw, dict):
        diags.append("$.map.edge_image: expected an object")
    else:
        for key, raw in eimg_raw.items():
            try:
                eid = int(key)
            except ValueError:
                diags.append(f"$.map.edge_image.{key}: key is not an edge id")
                continue
            word = _edge_word(raw, f"$.map.edge_image.{key}", diags)
            if word is not None:
                edge_image[eid] = word
    for eid in edges:
        if eid not in edge_image:
            diags.append(f"$.map.edge_image: no image for edge {eid}")

    nielsen = None
    if "nielsen" in doc:
        nobj = doc["nielsen"]
        if not isinstance(nobj, dict):
            diags.append("$.nielsen: expected an object")
        else:
            _check_keys(nobj, _NIELSEN_KEYS, "$.nielsen", diags, warns, strict)
            word = _edge_word(nobj.get("path"), "$.nielsen.path", diags)
            split = nobj.get("split")
            if not isinstance(split, int):
                diags.append("$.nielsen.split: expected an integer")
            elif word is not None:
                if 0 < split < len(word):
                    nielsen = (word, split)
                else:
                    diags.append(f"$.nielsen.split: {split} is not interior to the path")

    splittings = None
    if "splittings" in doc:
        sobj = doc["splittings"]
        if not isinstance(sobj, dict):
            diags.append("$.splittings: expected an object")
        else:
            splittings = {}
            for key, terms in sobj.items():
                try:
                    eid = int(key)
                except ValueError:
                    diags.append(f"$.splittings.{key}: key is not an edge id")
                    continue
                if not isinstance(terms, list):
                    diags.append(f"$.splittings.{key}: expected a list of terms")
                    continue
                parsed_terms = []
                for j, t in enumerate(terms):
                    where = f"$.splittings.{key}[{j}]"
                    if not isinstance(t, dict):
                        diags.append(f"{where}: expected an object")
                        continue
                    _check_keys(t, _TERM_KEYS, where, diags, warns, strict)
                    kind = t.get("kind")
                    if kind not in SPLIT_KINDS:
                        diags.append(f"{where}.kind: {kind!r} is not one of {SPLIT_KINDS}")
                        continue
                    word = _edge_word(t.get("word"), f"{where}.word", diags)
                    if word is not None:
                        parsed_terms.append((kind, word))
                splittings[eid] = tuple(parsed_terms)

    if diags:
        raise DocumentError(diags)

    try:
        graph = MarkedGraph(vertices, edges, labels)
        rep = TopRep(
            graph,
            vertex_image,
            edge_image,
            nielsen=nielsen,
            splittings=splittings,
            ct=ct,
            base_vertex=base_vertex,
            name=name,
        )
    except ValueError as err:
        raise DocumentError([str(err)]) from None
    return ParseResult(rep=rep, warnings=warns, document=doc)


def canonical_text(doc: dict) -> str:
    """Key-sorted, whitespace-free serialization used for content digests."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def digest(doc: dict) -> str:
    return hashlib.sha256(canonical_text(doc).encode("ascii")).hexdigest()
