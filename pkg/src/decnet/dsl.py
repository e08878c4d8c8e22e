"""Concrete syntax for decoding nets.

A ``.dn`` file is a sequence of declarations::

    VA9_0, VA9_1 are map [0x20000000/12 to PA9_0 at 0x80000000]
    L3 is accept [0x80000000/30] map [0x49000000/24 to L4 at 0x40100000]
    PA9_0 is over L3

Blocks are written ``base-limit`` (inclusive) or ``base/bits`` for the
``2**bits`` addresses starting at ``base``.  A destination without ``at``
keeps the source base.  Comments are ``(* ... *)`` (nestable) or ``#`` to end
of line.

Node identifiers are either symbolic or plain numbers.  Numbers denote node
ids directly; symbolic identifiers are interned to the smallest unused ids in
declaration order.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .core import Block, Dest, MapEntry, NetModel, NodeDesc
from .errors import DslSyntaxError, InvalidBlock, UndeclaredIdentifier

__all__ = [
    "BlockAst",
    "DeclAst",
    "DestAst",
    "DuplicateDeclarationWarning",
    "KEYWORDS",
    "MapAst",
    "NetSpecAst",
    "NodeSpecAst",
    "SymbolTable",
    "elaborate",
    "format_block",
    "fresh_id",
    "intern",
    "load",
    "parse",
    "pretty_print",
    "split_spec",
]

KEYWORDS = frozenset({"is", "are", "accept", "map", "over", "to", "at"})
IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_:.]*")

Pos = Optional[tuple]


class DuplicateDeclarationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BlockAst:
    base: int
    limit: int
    bits: Optional[int] = field(default=None, compare=False)
    pos: Pos = field(default=None, compare=False, repr=False)

    @classmethod
    def from_bits(cls, base: int, bits: int, pos: Pos = None) -> BlockAst:
        return cls(base, base + (1 << bits) - 1, bits, pos)

    def to_block(self) -> Block:
        if self.base > self.limit:
            line, col = self.pos or (None, None)
            raise InvalidBlock(self.base, self.limit, line, col)
        return Block(self.base, self.limit)


@dataclass(frozen=True)
class DestAst:
    ident: str
    at: Optional[int] = None
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MapAst:
    src: BlockAst
    dests: tuple[DestAst, ...]


@dataclass(frozen=True)
class NodeSpecAst:
    accept: tuple[BlockAst, ...] = ()
    maps: tuple[MapAst, ...] = ()
    overlay: Optional[str] = None
    overlay_pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class DeclAst:
    names: tuple[str, ...]
    node: NodeSpecAst
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NetSpecAst:
    decls: tuple[DeclAst, ...] = ()

    def references(self) -> Iterator[tuple[str, Pos]]:
        """Every node identifier used as a map destination or overlay, in order."""
        for decl in self.decls:
            for entry in decl.node.maps:
                for dest in entry.dests:
                    yield dest.ident, dest.pos
            if decl.node.overlay is not None:
                yield decl.node.overlay, decl.node.overlay_pos


# --- lexing -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\f\v]+)"
    r"|(?P<nl>\n)"
    r"|(?P<line_comment>\#[^\n]*)"
    r"|(?P<nat>0[xX][0-9a-fA-F]+|[0-9]+)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_:.]*)"
    r"|(?P<punct>[\[\],/-])"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "nat", "ident", "kw", "punct", "eof"
    text: str
    line: int
    column: int
    value: Optional[int] = None


def _tokenize(text: str) -> list[Token]:
    tokens = []
    i, line, line_start = 0, 1, 0
    n = len(text)
    while i < n:
        if text.startswith("(*", i):
            depth, start = 0, (line, i - line_start + 1)
            while i < n:
                if text.startswith("(*", i):
                    depth += 1
                    i += 2
                elif text.startswith("*)", i):
                    depth -= 1
                    i += 2
                    if depth == 0:
                        break
                else:
                    if text[i] == "\n":
                        line, line_start = line + 1, i + 1
                    i += 1
            if depth:
                raise DslSyntaxError("unterminated comment", *start)
            continue
        m = _TOKEN_RE.match(text, i)
        col = i - line_start + 1
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        word = m.group()
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind == "nat":
            tokens.append(Token("nat", word, line, col, int(word, 0) if word[:2].lower() == "0x" else int(word)))
        elif kind == "ident":
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
        elif kind == "punct":
            tokens.append(Token("punct", word, line, col))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


# --- parsing ----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind in ("kw", "punct") and tok.text == text

    def fail(self, message: str, expected=()):
        tok = self.peek()
        raise DslSyntaxError(message, tok.line, tok.column, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"unexpected {self._describe(self.peek())}", [repr(text)])
        return self.advance()

    def advance(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    @staticmethod
    def _describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def nat(self) -> int:
        tok = self.peek()
        if tok.kind != "nat":
            self.fail(f"unexpected {self._describe(tok)}", ["number"])
        self.advance()
        return tok.value

    def ident(self) -> tuple[str, Pos]:
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            return tok.text, (tok.line, tok.column)
        if tok.kind == "nat":
            self.advance()
            return str(tok.value), (tok.line, tok.column)
        self.fail(f"unexpected {self._describe(tok)}", ["identifier"])

    def starts_block(self) -> bool:
        return self.peek().kind == "nat" and (self.at("-", 1) or self.at("/", 1))

    def net(self) -> NetSpecAst:
        decls = []
        while self.peek().kind != "eof":
            decls.append(self.decl())
        return NetSpecAst(tuple(decls))

    def decl(self) -> DeclAst:
        first = self.peek()
        names, seen = [], set()
        while True:
            tok = self.peek()
            name, _ = self.ident()
            if name in seen:
                raise DslSyntaxError(f"duplicate identifier {name!r} in declaration", tok.line, tok.column)
            seen.add(name)
            names.append(name)
            if not self.at(","):
                break
            self.advance()
        if not (self.at("is") or self.at("are")):
            self.fail(f"unexpected {self._describe(self.peek())}", ["','", "'is'", "'are'"])
        self.advance()
        return DeclAst(tuple(names), self.node(), (first.line, first.column))

    def node(self) -> NodeSpecAst:
        accept, maps, overlay, overlay_pos = (), (), None, None
        if self.at("accept"):
            self.advance()
            accept = tuple(self.bracketed(self.blocklist))
        if self.at("map"):
            self.advance()
            maps = tuple(self.bracketed(self.maplist))
        if self.at("over"):
            self.advance()
            overlay, overlay_pos = self.ident()
        return NodeSpecAst(accept, maps, overlay, overlay_pos)

    def bracketed(self, inner):
        self.expect("[")
        if self.at("]"):
            self.advance()
            return []
        if self.peek().kind != "nat":
            self.fail(f"unexpected {self._describe(self.peek())}", ["']'", "number"])
        items = inner()
        if not self.at("]"):
            self.fail(f"unexpected {self._describe(self.peek())}", ["']'", "','"])
        self.advance()
        return items

    def blocklist(self) -> list[BlockAst]:
        blocks = [self.block()]
        while self.at(","):
            self.advance()
            blocks.append(self.block())
        return blocks

    def block(self) -> BlockAst:
        tok = self.peek()
        base = self.nat()
        pos = (tok.line, tok.column)
        if self.at("-"):
            self.advance()
            return BlockAst(base, self.nat(), None, pos)
        if self.at("/"):
            self.advance()
            return BlockAst.from_bits(base, self.nat(), pos)
        self.fail(f"unexpected {self._describe(self.peek())}", ["'-'", "'/'"])

    def maplist(self) -> list[MapAst]:
        entries = [self.mapentry()]
        while self.at(","):
            self.advance()
            if self.starts_block():
                entries.append(self.mapentry())
            else:
                # A destination after the comma extends the previous entry.
                last = entries[-1]
                entries[-1] = MapAst(last.src, last.dests + (self.dest(),))
        return entries

    def mapentry(self) -> MapAst:
        src = self.block()
        self.expect("to")
        return MapAst(src, (self.dest(),))

    def dest(self) -> DestAst:
        ident, pos = self.ident()
        at = None
        if self.at("at"):
            self.advance()
            at = self.nat()
        return DestAst(ident, at, pos)


def parse(text: str) -> NetSpecAst:
    """Parse ``.dn`` source text into an AST."""
    return _Parser(text).net()


# --- printing ---------------------------------------------------------------


def format_block(block) -> str:
    return f"{block.base:#x}-{block.limit:#x}"


def _format_dest(dest: DestAst) -> str:
    return dest.ident if dest.at is None else f"{dest.ident} at {dest.at:#x}"


def _format_node(node: NodeSpecAst) -> str:
    parts = []
    if node.accept:
        parts.append("accept [" + ", ".join(format_block(b) for b in node.accept) + "]")
    if node.maps:
        entries = (
            f"{format_block(m.src)} to " + ", ".join(_format_dest(d) for d in m.dests) for m in node.maps
        )
        parts.append("map [" + ", ".join(entries) + "]")
    if node.overlay is not None:
        parts.append(f"over {node.overlay}")
    return " ".join(parts)


def _format_decl(decl: DeclAst) -> str:
    head = ", ".join(decl.names) + (" are" if len(decl.names) > 1 else " is")
    body = _format_node(decl.node)
    return f"{head} {body}" if body else head


def pretty_print(ast: NetSpecAst) -> str:
    """Canonical text for ``ast``: one declaration per line, hex base-limit blocks."""
    return "\n".join(_format_decl(d) for d in ast.decls)


# --- elaboration ------------------------------------------------------------


@dataclass(frozen=True)
class SymbolTable:
    """Bijection between node identifiers and node ids."""

    ids: dict = field(default_factory=dict)

    @property
    def names(self) -> dict:
        return {nd: name for name, nd in self.ids.items()}

    def id(self, name: str) -> int:
        try:
            return self.ids[name]
        except KeyError:
            raise UndeclaredIdentifier(name) from None

    def name(self, nd: int) -> str:
        for name, ident in self.ids.items():
            if ident == nd:
                return name
        return str(nd)

    def __contains__(self, name) -> bool:
        return name in self.ids

    def __len__(self):
        return len(self.ids)

    def lookup(self, text: str) -> int:
        """Resolve a user-supplied node reference: a declared identifier or a number."""
        if text in self.ids:
            return self.ids[text]
        if text.isdigit():
            return int(text)
        raise UndeclaredIdentifier(text)


def _is_numeric(name: str) -> bool:
    return name.isdigit()


def intern(ast: NetSpecAst, allow_dangling: bool = False) -> SymbolTable:
    """Assign node ids to every identifier in ``ast``.

    Numeric identifiers keep their value.  Declared symbolic identifiers get
    the smallest ids not taken by numeric ones, in declaration order;
    undeclared symbolic references (only with ``allow_dangling``) follow in
    order of first use.
    """
    declared = [name for decl in ast.decls for name in decl.names]
    refs = list(ast.references())
    taken = {int(n) for n in declared if _is_numeric(n)}
    taken |= {int(n) for n, _ in refs if _is_numeric(n)}
    ids: dict[str, int] = {}
    counter = 0

    def assign(name):
        nonlocal counter
        if name in ids:
            return
        if _is_numeric(name):
            ids[name] = int(name)
            return
        while counter in taken:
            counter += 1
        ids[name] = counter
        counter += 1

    for name in declared:
        assign(name)
    declared_set = set(declared)
    for name, pos in refs:
        if name not in declared_set and not allow_dangling:
            line, col = pos or (None, None)
            raise UndeclaredIdentifier(name, line, col)
        assign(name)
    return SymbolTable(ids)


def _elaborate_node(node: NodeSpecAst, table: SymbolTable) -> NodeDesc:
    accept = tuple(b.to_block() for b in node.accept)
    maps = []
    for m in node.maps:
        src = m.src.to_block()
        dests = tuple(Dest(table.id(d.ident), src.base if d.at is None else d.at) for d in m.dests)
        maps.append(MapEntry(src, dests))
    overlay = None if node.overlay is None else table.id(node.overlay)
    return NodeDesc(accept, tuple(maps), overlay)


def elaborate(ast: NetSpecAst, allow_dangling: bool = False) -> tuple[NetModel, SymbolTable]:
    """Build the net described by ``ast``.

    A node declared more than once takes its last declaration; a
    :class:`DuplicateDeclarationWarning` is issued.
    """
    table = intern(ast, allow_dangling)
    nodes: dict[int, NodeDesc] = {}
    for decl in ast.decls:
        desc = _elaborate_node(decl.node, table)
        for name in decl.names:
            nd = table.id(name)
            if nd in nodes:
                warnings.warn(f"node {name!r} declared more than once; last declaration wins",
                              DuplicateDeclarationWarning, stacklevel=2)
            nodes[nd] = desc
    return NetModel(nodes, allow_dangling=allow_dangling), table


def load(text: str, allow_dangling: bool = False) -> tuple[NetModel, SymbolTable]:
    return elaborate(parse(text), allow_dangling)


def fresh_id(ast: NetSpecAst) -> int:
    """One more than the largest node id declared or referenced in ``ast``."""
    table = intern(ast, allow_dangling=True)
    return 1 + max(table.ids.values(), default=-1)


def split_spec(ast: NetSpecAst) -> NetSpecAst:
    """Split every declaration into a pure acceptor and a pure redirector.

    Node ``nd`` keeps its identifier and becomes a redirector whose accept
    blocks are mapped to a new numeric node ``nd + c``, where
    ``c = fresh_id(ast)``; the new node takes over the accept blocks.
    """
    c = fresh_id(ast)
    table = intern(ast, allow_dangling=True)
    out = []
    seen = set()
    for decl in ast.decls:
        for name in decl.names:
            if name in seen:
                raise ValueError(f"node {name!r} declared more than once")
            seen.add(name)
            acceptor = str(table.id(name) + c)
            redirect = tuple(MapAst(b, (DestAst(acceptor, b.base),)) for b in decl.node.accept)
            out.append(DeclAst((acceptor,), NodeSpecAst(accept=decl.node.accept)))
            out.append(DeclAst((name,), NodeSpecAst((), redirect + decl.node.maps, decl.node.overlay)))
    return NetSpecAst(tuple(out))
