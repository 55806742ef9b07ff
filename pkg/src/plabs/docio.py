"""JSON problem documents and report serialization.

Two document kinds: "abs-normal" carries the six-tuple, "cpl" carries
(S, c_hat).  Numbers are written with Python's shortest round-tripping
decimal repr, so save/load reproduces every binary64 bit-exactly; matrices
are row-major rectangular arrays.  Strict lower triangularity of L is
enforced at load time.  The JSON schemas shipped under schemas/ describe
both the documents and the CLI's --format json reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import AbsNormalForm
from .cpl import CplSystem
from .errors import DocumentError

__all__ = [
    "ProblemDocument",
    "load_document",
    "save_document",
    "document_to_dict",
    "document_from_dict",
    "problem_schema",
    "report_schema",
]


@dataclass
class ProblemDocument:
    kind: str                      # "abs-normal" | "cpl"
    problem: object                # AbsNormalForm | CplSystem
    name: str | None = None
    seed: int | None = None
    target: np.ndarray | None = None


def _matrix(doc: dict, key: str, rows: int, cols: int) -> np.ndarray:
    raw = doc.get(key)
    if not isinstance(raw, list) or len(raw) != rows:
        raise DocumentError(f"{key} must be a {rows}-row array")
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{key} is not numeric: {exc}") from exc
    if arr.shape != (rows, cols):
        raise DocumentError(f"{key} must be {rows} x {cols}, got {arr.shape}")
    return arr


def _vector(doc: dict, key: str, size: int) -> np.ndarray:
    raw = doc.get(key)
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{key} is not numeric: {exc}") from exc
    if arr.shape != (size,):
        raise DocumentError(f"{key} must have length {size}, got shape {arr.shape}")
    return arr


def document_from_dict(doc: dict) -> ProblemDocument:
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    kind = doc.get("kind")
    name = doc.get("name")
    seed = doc.get("seed")
    if kind == "abs-normal":
        try:
            n, s, m = int(doc["n"]), int(doc["s"]), int(doc["m"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError("abs-normal documents need integer n, s, m") from exc
        if min(n, s, m) < 0:
            raise DocumentError("n, s, m must be nonnegative")
        L = _matrix(doc, "L", s, s)
        if s and np.any(np.triu(L) != 0):
            raise DocumentError("L must be strictly lower triangular")
        form = AbsNormalForm(
            c=_vector(doc, "c", s), b=_vector(doc, "b", m),
            Z=_matrix(doc, "Z", s, n), L=L,
            J=_matrix(doc, "J", m, n), Y=_matrix(doc, "Y", m, s))
        target = None
        if doc.get("target") is not None:
            target = _vector(doc, "target", m)
        return ProblemDocument(kind=kind, problem=form, name=name, seed=seed, target=target)
    if kind == "cpl":
        try:
            s = int(doc["s"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError("cpl documents need an integer s") from exc
        sys = CplSystem(S=_matrix(doc, "S", s, s), c_hat=_vector(doc, "c_hat", s))
        return ProblemDocument(kind=kind, problem=sys, name=name, seed=seed)
    raise DocumentError(f"unknown document kind {kind!r}")


def document_to_dict(problem, name: str | None = None, seed: int | None = None,
                     target=None) -> dict:
    if isinstance(problem, ProblemDocument):
        return document_to_dict(problem.problem, problem.name, problem.seed,
                                problem.target)
    out: dict = {}
    if isinstance(problem, AbsNormalForm):
        out["kind"] = "abs-normal"
        out.update(n=problem.n, s=problem.s, m=problem.m,
                   c=problem.c.tolist(), b=problem.b.tolist(),
                   Z=problem.Z.tolist(), L=problem.L.tolist(),
                   J=problem.J.tolist(), Y=problem.Y.tolist())
        if target is not None:
            out["target"] = np.asarray(target, dtype=float).tolist()
    elif isinstance(problem, CplSystem):
        out["kind"] = "cpl"
        out.update(s=problem.s, S=problem.S.tolist(), c_hat=problem.c_hat.tolist())
    else:
        raise TypeError(f"cannot serialize {type(problem).__name__}")
    if name is not None:
        out["name"] = name
    if seed is not None:
        out["seed"] = seed
    return out


def load_document(path) -> ProblemDocument:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path} is not valid JSON: {exc}") from exc
    try:
        return document_from_dict(doc)
    except (ValueError, TypeError) as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def save_document(problem, path, name: str | None = None, seed: int | None = None,
                  target=None) -> None:
    doc = document_to_dict(problem, name=name, seed=seed, target=target)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _schema(name: str) -> dict:
    with resources.files("plabs.schemas").joinpath(name).open() as fh:
        return json.load(fh)


def problem_schema() -> dict:
    return _schema("problem.schema.json")


def report_schema() -> dict:
    return _schema("report.schema.json")
