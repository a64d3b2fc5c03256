"""Text grammar for decorated trees.

Round-tripping format used by the CLI and the golden-file tests::

    expr   := factor ('*' factor)*
    factor := 'X' '^' vec
            | 'O' | 'H' | 'Hp'
            | 'I' '[' label (',' vec)? ']' '(' expr ')'
    vec    := '(' int (',' int)* ')'
    label  := 'K' | 'O' | 'H' | 'Hp'

``O``, ``H`` and ``Hp`` denote the three planted noise symbols, i.e.
``I[O]() `` applied to a bare node, written compactly.  Products are
formed with ``*``; the root decorations of the factors add.  The
printer emits factors in canonical order, so parse(print(t)) == t.
"""

from __future__ import annotations

import re

from .trees import (
    DecoratedTree,
    EdgeLabel,
    MultiIndex,
    bare_node,
    graft,
    make_tree,
    tree_product,
    unit_tree,
    H_LABEL,
    HB_LABEL,
    K_LABEL,
    O_LABEL,
)

__all__ = ["parse_tree", "format_tree", "TreeParseError"]

_LABEL_TO_TEXT = {K_LABEL: "K", O_LABEL: "O", H_LABEL: "H", HB_LABEL: "Hp"}
_TEXT_TO_LABEL = {v: k for k, v in _LABEL_TO_TEXT.items()}


class TreeParseError(ValueError):
    """Parse failure with a 0-based character position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


_TOKEN_RE = re.compile(r"\s*([A-Za-z]+|\d+|[\^\[\](),*])")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                stripped = text[pos:].lstrip()
                if not stripped:
                    break
                raise TreeParseError(
                    f"unexpected character {stripped[0]!r}", len(text) - len(stripped)
                )
            self.toks.append((m.group(1), m.start(1)))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, int] | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> tuple[str, int]:
        tok = self.peek()
        if tok is None:
            raise TreeParseError("unexpected end of input", len(self.text))
        self.i += 1
        return tok

    def expect(self, want: str) -> int:
        tok, pos = self.next()
        if tok != want:
            raise TreeParseError(f"expected {want!r}, got {tok!r}", pos)
        return pos


def parse_tree(
    text: str, dim: int | None = None, strict: bool = True
) -> DecoratedTree:
    """Parse the grammar above into a canonical tree.

    ``dim`` fixes the multiindex length 1+d; when omitted it is inferred
    from the first explicit vector in the input (the bare symbols O, H,
    Hp alone carry no dimension, so those need ``dim``).  Constraint
    violations (decorated noise edges, non-bare nodes under noise
    labels) are rejected with the offending position.  ``strict=False``
    admits derivative decorations on noise edges, which serialized
    coproduct output may contain.
    """
    toks = _Tokens(text)
    if dim is None:
        dim = _infer_dim(toks)
        if dim is None:
            raise TreeParseError("cannot infer dimension: pass dim explicitly", 0)
    tree = _parse_expr(toks, dim, strict)
    tok = toks.peek()
    if tok is not None:
        raise TreeParseError(f"trailing input {tok[0]!r}", tok[1])
    return tree


def _infer_dim(toks: _Tokens) -> int | None:
    depth_dim: int | None = None
    i = 0
    while i < len(toks.toks):
        if toks.toks[i][0] == "(":
            # count integers until the matching ')'
            j, count, ok = i + 1, 0, True
            while j < len(toks.toks) and toks.toks[j][0] != ")":
                if toks.toks[j][0].isdigit():
                    count += 1
                elif toks.toks[j][0] != ",":
                    ok = False
                    break
                j += 1
            if ok and count > 0:
                depth_dim = count
                break
        i += 1
    return depth_dim


def _parse_expr(toks: _Tokens, dim: int, strict: bool) -> DecoratedTree:
    tree = _parse_factor(toks, dim, strict)
    while True:
        tok = toks.peek()
        if tok is None or tok[0] != "*":
            return tree
        toks.next()
        tree = tree_product(tree, _parse_factor(toks, dim, strict))


def _parse_factor(toks: _Tokens, dim: int, strict: bool) -> DecoratedTree:
    from .trees import Edge  # deferred: only the permissive path needs it

    tok, pos = toks.next()
    if tok == "X":
        toks.expect("^")
        k = _parse_vec(toks, dim)
        return make_tree(k, ())
    if tok in ("O", "H", "Hp"):
        return graft(unit_tree(dim), _TEXT_TO_LABEL[tok], MultiIndex.zero(dim))
    if tok == "I":
        toks.expect("[")
        ltok, lpos = toks.next()
        label = _TEXT_TO_LABEL.get(ltok)
        if label is None:
            raise TreeParseError(f"unknown edge label {ltok!r}", lpos)
        nxt = toks.peek()
        if nxt is not None and nxt[0] == ",":
            toks.next()
            dec = _parse_vec(toks, dim)
        else:
            dec = MultiIndex.zero(dim)
        toks.expect("]")
        toks.expect("(")
        sub = _parse_expr(toks, dim, strict)
        toks.expect(")")
        try:
            if strict:
                return graft(sub, label, dec)
            return make_tree(MultiIndex.zero(dim), (Edge(label, dec, sub),))
        except ValueError as exc:
            raise TreeParseError(str(exc), pos) from None
    raise TreeParseError(f"unexpected token {tok!r}", pos)


def _parse_vec(toks: _Tokens, dim: int) -> MultiIndex:
    open_pos = toks.expect("(")
    entries: list[int] = []
    while True:
        tok, pos = toks.next()
        if not tok.isdigit():
            raise TreeParseError(f"expected an integer, got {tok!r}", pos)
        entries.append(int(tok))
        tok, pos = toks.next()
        if tok == ")":
            break
        if tok != ",":
            raise TreeParseError(f"expected ',' or ')', got {tok!r}", pos)
    if len(entries) != dim:
        raise TreeParseError(
            f"expected {dim} entries in multiindex, got {len(entries)}", open_pos
        )
    return MultiIndex(entries)


def format_tree(t: DecoratedTree) -> str:
    """Canonical text form; factors in canonical edge order."""
    parts: list[str] = []
    if not t.n.is_zero or not t.edges:
        parts.append("X^" + _format_vec(t.n))
    for e in t.edges:
        if e.label is not K_LABEL and e.dec.is_zero and e.child.is_unit:
            parts.append(_LABEL_TO_TEXT[e.label])
        else:
            parts.append(
                f"I[{_LABEL_TO_TEXT[e.label]},{_format_vec(e.dec)}]"
                f"({format_tree(e.child)})"
            )
    return "*".join(parts)


def _format_vec(k: MultiIndex) -> str:
    return "(" + ",".join(str(e) for e in k) + ")"
