"""Line-oriented text format for structures.

::

    # a finite structure
    sig R:1 S:2 eq
    finite 3
    R = {0,2}
    S = {(0,1),(2,0)}

    sig R:1
    periodic
    R = prefix:110 cycle:01

Relations without a line are empty.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from pathlib import Path

from .errors import DistinguoError, DocumentError
from .structures import (
    FiniteStructure,
    PeriodicSet,
    Signature,
    Structure,
    make_finite,
    make_periodic,
)

_SIG_ITEM = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*):(\d+)$")
_REL_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
_PERIODIC = re.compile(r"^prefix:([01]*)\s+cycle:([01]*)$")
_TUPLE = re.compile(r"\(([^()]*)\)")


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def parse_signature(line: str, no: int | None = None) -> Signature:
    words = line.split()
    if not words or words[0] != "sig":
        raise DocumentError("expected a 'sig' header", no)
    rels, eq = [], False
    for w in words[1:]:
        if w == "eq":
            eq = True
            continue
        m = _SIG_ITEM.match(w)
        if not m:
            raise DocumentError(f"bad signature item {w!r}", no)
        rels.append((m.group(1), int(m.group(2))))
    try:
        return Signature(tuple(rels), eq)
    except DistinguoError as exc:
        raise DocumentError(str(exc), no) from None


def _parse_int(text: str, no: int) -> int:
    text = text.strip()
    if not text.isdigit():
        raise DocumentError(f"expected a natural number, got {text!r}", no)
    return int(text)


def _parse_tuples(body: str, arity: int, n: int, no: int) -> list[tuple[int, ...]]:
    tuples = _tuple_list(body, no)
    for t in tuples:
        if len(t) != arity:
            raise DocumentError(f"tuple {t} has length {len(t)}, arity is {arity}", no)
        if t and max(t) >= n:
            raise DocumentError(f"tuple {t} leaves universe of size {n}", no)
    return tuples


def _tuple_list(body: str, no: int) -> list[tuple[int, ...]]:
    body = body.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise DocumentError("tuple sets are written in braces", no)
    inner = body[1:-1].strip()
    if not inner:
        return []
    if "(" not in inner:
        return [(_parse_int(x, no),) for x in inner.split(",")]
    tuples = [tuple(_parse_int(x, no) for x in m.group(1).split(",")) for m in _TUPLE.finditer(inner)]
    rest = _TUPLE.sub("", inner).replace(",", "").strip()
    if rest:
        raise DocumentError(f"unexpected text {rest!r} in tuple set", no)
    return tuples


def parse_structure(text: str) -> Structure:
    lines = list(_lines(text))
    if len(lines) < 2:
        raise DocumentError("a structure needs a 'sig' line and a backend line")
    (sno, sline), (bno, bline) = lines[0], lines[1]
    sig = parse_signature(sline, sno)
    words = bline.split()
    if words[0] == "finite" and len(words) == 2:
        kind, n = "finite", _parse_int(words[1], bno)
    elif words == ["periodic"]:
        kind, n = "periodic", None
    else:
        raise DocumentError("backend line must be 'finite <n>' or 'periodic'", bno)
    data: dict = {}
    for no, line in lines[2:]:
        m = _REL_LINE.match(line)
        if not m:
            raise DocumentError(f"expected 'NAME = ...', got {line!r}", no)
        name, body = m.groups()
        if name not in sig.names:
            raise DocumentError(f"relation {name} is not in the signature", no)
        if name in data:
            raise DocumentError(f"relation {name} given twice", no)
        if kind == "finite":
            data[name] = _parse_tuples(body, sig.arity(name), n, no)
        else:
            pm = _PERIODIC.match(body.strip())
            if not pm:
                raise DocumentError("periodic relations are written 'prefix:<bits> cycle:<bits>'", no)
            prefix, cycle = (tuple(int(b) for b in g) for g in pm.groups())
            try:
                data[name] = PeriodicSet(prefix, cycle)
            except DistinguoError as exc:
                raise DocumentError(str(exc), no) from None
    try:
        if kind == "finite":
            return make_finite(sig, n, data)
        return make_periodic(sig, data)
    except DistinguoError as exc:
        raise DocumentError(str(exc)) from None


def serialize_structure(M: Structure) -> str:
    out = [f"sig {M.signature}".rstrip()]
    if isinstance(M, FiniteStructure):
        out.append(f"finite {M.size}")
        for (name, arity), tuples in zip(M.signature.relations, M.interp):
            if arity == 1:
                body = ",".join(str(t[0]) for t in tuples)
            else:
                body = ",".join("(" + ",".join(map(str, t)) + ")" for t in tuples)
            out.append(f"{name} = {{{body}}}")
    else:
        out.append("periodic")
        for name, s in zip(M.signature.names, M.interp):
            out.append(f"{name} = {s}")
    return "\n".join(out) + "\n"


def load_structure(path) -> Structure:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_structure(text)
    except DocumentError as exc:
        raise DocumentError(f"{path}: {exc}") from None
