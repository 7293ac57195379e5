"""JSON documents for spaces, measure pairs and map pairs.

Floats go through ``json`` (shortest repr), which parses back to the same
double, so serialize/parse is a bit-exact round trip.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

from .core import FiniteMMSpace, validate_space
from .errors import MalformedDocument
from .transport import MeasurePair


def loads(text: str, source: str | None = None):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(exc.msg, source, exc.lineno, exc.colno) from None


def load(path: str):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), path)


def _require(doc, keys, what):
    if not isinstance(doc, dict):
        raise MalformedDocument(f"{what} must be a JSON object")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise MalformedDocument(f"{what} is missing {', '.join(missing)}")


def space_to_doc(X: FiniteMMSpace, name: str | None = None) -> dict:
    doc = {"labels": list(X.labels), "dist": X.dist.tolist(), "weight": X.weight.tolist()}
    if name is not None:
        doc["name"] = name
    return doc


def space_from_doc(doc, **tol) -> FiniteMMSpace:
    _require(doc, ("dist", "weight"), "space document")
    try:
        d = np.array(doc["dist"], dtype=np.float64)
        w = np.array(doc["weight"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MalformedDocument(f"space document has non-numeric entries ({exc})") from None
    return validate_space(d, w, doc.get("labels"), **tol)


def dumps_space(X: FiniteMMSpace, name: str | None = None) -> str:
    return json.dumps(space_to_doc(X, name))


def parse_space(text: str) -> FiniteMMSpace:
    return space_from_doc(loads(text))


def _ambient_from_doc(doc):
    _require(doc, ("dist",), "ambient")
    d = np.array(doc["dist"], dtype=np.float64)
    n = d.shape[0] if d.ndim == 2 else 0
    w = doc.get("weight", [1.0 / n] * n if n else [])
    return validate_space(d, w, doc.get("labels"))


def pair_from_doc(doc) -> MeasurePair:
    """{"ambient": {...}, "mu": [...], "nu": [...]}"""
    _require(doc, ("ambient", "mu", "nu"), "measure pair document")
    return MeasurePair(_ambient_from_doc(doc["ambient"]), doc["mu"], doc["nu"])


def maps_from_doc(doc):
    """{"ambient": {...}, "base_weight": [...], "f": [...], "g": [...]}"""
    _require(doc, ("ambient", "base_weight", "f", "g"), "map pair document")
    amb = _ambient_from_doc(doc["ambient"])
    w = np.array(doc["base_weight"], dtype=np.float64)
    f = np.array(doc["f"], dtype=np.int64)
    g = np.array(doc["g"], dtype=np.int64)
    if f.shape != w.shape or g.shape != w.shape:
        raise MalformedDocument("f, g and base_weight must have equal lengths")
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
        raise MalformedDocument("base_weight must be a probability vector")
    for v in (f, g):
        if v.size and (v.min() < 0 or v.max() >= amb.n):
            raise MalformedDocument("map image index out of range")
    return amb, w, f, g


def digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return "sha256:" + hashlib.sha256(blob).hexdigest()
