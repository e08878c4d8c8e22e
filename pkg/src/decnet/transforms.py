"""View-preserving transformations of decoding nets and their checkers.

Splitting separates each node into a pure acceptor and a pure redirector.
Flattening computes, for an observer node, the piecewise-affine map from its
input addresses to resolved names.  View equivalence compares two nets on a
finite witness set of addresses modulo a renaming of nodes.
"""

from __future__ import annotations

import sys
from bisect import bisect_right
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

from .core import Block, Dest, MapEntry, Name, NetModel, NodeDesc, resolve
from .dsl import split_spec
from .errors import DecnetError, LoopDetected, NotFresh, UnknownNode

__all__ = [
    "EquivReport",
    "FlatSegments",
    "FlatView",
    "Mismatch",
    "Piece",
    "Remap",
    "Target",
    "derive_witness_addresses",
    "flatten",
    "flatten_segments",
    "fresh_node_id",
    "is_fresh",
    "mixed_nodes",
    "rename",
    "split_all",
    "split_net",
    "split_node",
    "split_spec",
    "view_equiv",
]


# --- renaming ---------------------------------------------------------------


class Remap:
    """Node renaming: identity except on an explicit finite set of ids."""

    __slots__ = ("overrides",)

    def __init__(self, overrides: Optional[Mapping[int, int]] = None):
        self.overrides = dict(overrides or {})

    @classmethod
    def offset(cls, nodes: Iterable[int], c: int) -> Remap:
        return cls({nd: nd + c for nd in nodes})

    def __call__(self, nd: int) -> int:
        return self.overrides.get(nd, nd)

    def then(self, other: Remap) -> Remap:
        """The renaming that applies ``self`` first and ``other`` second."""
        keys = set(self.overrides) | set(other.overrides)
        return Remap({k: other(self(k)) for k in keys})

    def __eq__(self, other):
        if not isinstance(other, Remap):
            return NotImplemented
        norm = lambda r: {k: v for k, v in r.overrides.items() if k != v}
        return norm(self) == norm(other)

    def __repr__(self):
        return f"Remap({self.overrides!r})"


def rename(remap: Callable[[int], int], names: Iterable[Name]) -> frozenset[Name]:
    return frozenset(Name(remap(n.node), n.addr) for n in names)


# --- splitting --------------------------------------------------------------


def fresh_node_id(net: NetModel) -> int:
    """Smallest id larger than every node id present in or referenced by ``net``."""
    return 1 + max(set(net) | net.referenced(), default=-1)


def is_fresh(net: NetModel, nd: int) -> bool:
    """True if ``nd`` is not a node of ``net`` and nothing decodes to it."""
    return nd not in net and nd not in net.referenced()


def split_node(net: NetModel, nd: int, nd_fresh: int) -> NetModel:
    """Move the accept blocks of ``nd`` to the fresh node ``nd_fresh``.

    ``nd`` keeps its maps and overlay and gains a direct map from each former
    accept block to ``nd_fresh``; those maps come first.
    """
    old = net[nd]
    if not is_fresh(net, nd_fresh):
        raise NotFresh(f"node {nd_fresh} is not fresh")
    redirect = tuple(MapEntry(b, (Dest(nd_fresh, b.base),)) for b in old.accept)
    return net.replace({
        nd: NodeDesc((), redirect + old.maps, old.overlay),
        nd_fresh: NodeDesc(old.accept),
    })


def split_all(net: NetModel, nds: Iterable[int],
              fresh_of: Union[Mapping[int, int], Callable[[int], int]]) -> NetModel:
    """Split each node of ``nds``, folding from the right."""
    nds = list(nds)
    if len(set(nds)) != len(nds):
        raise ValueError("duplicate node in split list")
    pick = fresh_of.__getitem__ if isinstance(fresh_of, Mapping) else fresh_of
    for nd in reversed(nds):
        net = split_node(net, nd, pick(nd))
    return net


def split_net(net: NetModel) -> tuple[NetModel, int]:
    """Split every node of ``net`` with acceptor ``nd + c``; returns the net and ``c``."""
    c = fresh_node_id(net)
    return split_all(net, list(net), lambda nd: nd + c), c


def mixed_nodes(net: NetModel) -> list[int]:
    """Nodes that both accept some address and translate some address."""
    return [nd for nd, desc in net.items() if desc.accept and (desc.maps or desc.overlay is not None)]


# --- flattening -------------------------------------------------------------


class Target(NamedTuple):
    node: int
    dest_base: int


@dataclass(frozen=True)
class Piece:
    src: Block
    targets: tuple[Target, ...]

    def evaluate(self, addr: int) -> frozenset[Name]:
        off = addr - self.src.base
        return frozenset(Name(t.node, t.dest_base + off) for t in self.targets)


@dataclass(frozen=True)
class FlatView:
    """Sorted disjoint pieces; addresses outside every piece resolve to nothing."""

    observer: int
    pieces: tuple[Piece, ...]
    _starts: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_starts", tuple(p.src.base for p in self.pieces))

    def evaluate(self, addr: int) -> frozenset[Name]:
        i = bisect_right(self._starts, addr) - 1
        if i >= 0 and addr in self.pieces[i].src:
            return self.pieces[i].evaluate(addr)
        return frozenset()

    def to_json(self, name_of: Callable[[int], str] = str) -> dict:
        return {
            "observer": name_of(self.observer),
            "pieces": [
                {
                    "base": hex(p.src.base),
                    "limit": hex(p.src.limit),
                    "targets": [{"node": name_of(t.node), "dest_base": hex(t.dest_base)} for t in p.targets],
                }
                for p in self.pieces
            ],
        }


_LOOP = "loop"


def _merge(contribs: list[tuple[int, int, object]]) -> list[tuple[int, int, object]]:
    """Overlay segments ``(lo, hi, payload)``.

    A payload is a frozenset of ``(node, shift)`` pairs or ``_LOOP``; sets
    are unioned where segments overlap and ``_LOOP`` absorbs everything.
    Adjacent segments with equal payloads are coalesced.
    """
    if not contribs:
        return []
    points = sorted({lo for lo, _, _ in contribs} | {hi + 1 for _, hi, _ in contribs})
    buckets: list[object] = [frozenset()] * (len(points) - 1)
    for lo, hi, payload in contribs:
        i = bisect_right(points, lo) - 1
        while i < len(buckets) and points[i] <= hi:
            cur = buckets[i]
            if cur is _LOOP or payload is _LOOP:
                buckets[i] = _LOOP
            else:
                buckets[i] = cur | payload
            i += 1
    out: list[tuple[int, int, object]] = []
    for i, payload in enumerate(buckets):
        if payload is not _LOOP and not payload:
            continue
        lo, hi = points[i], points[i + 1] - 1
        if out and out[-1][1] == lo - 1 and out[-1][2] == payload:
            out[-1] = (out[-1][0], hi, payload)
        else:
            out.append((lo, hi, payload))
    return out


class _Flattener:
    """Propagates address intervals through a net.

    ``segments(node, lo, hi, delta)`` returns the sorted merged segments of
    ``[lo, hi]`` at ``node``; a target ``(m, s)`` means local address ``a``
    resolves to ``(m, a + s)``.  ``delta`` is the offset between local
    addresses and observer addresses.  Revisiting a node at the same offset
    on overlapping addresses means a name repeats on the decode path.
    """

    def __init__(self, net: NetModel):
        self.net = net
        self.memo: dict[tuple[int, int, int], list] = {}
        self.path: dict[int, list[tuple[int, int, int]]] = {}

    def segments(self, node: int, lo: int, hi: int, delta: int = 0) -> list:
        key = (node, lo, hi)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        contribs: list[tuple[int, int, object]] = []
        pending = [(lo, hi)]
        for plo, phi, pdelta in self.path.get(node, ()):
            if pdelta != delta:
                continue
            nxt = []
            for a, b in pending:
                x, y = max(a, plo), min(b, phi)
                if x > y:
                    nxt.append((a, b))
                    continue
                contribs.append((x, y, _LOOP))
                if a < x:
                    nxt.append((a, x - 1))
                if y < b:
                    nxt.append((y + 1, b))
            pending = nxt
        self.path.setdefault(node, []).append((lo, hi, delta))
        try:
            desc = self.net.node(node)
            for a, b in pending:
                contribs.extend(self._expand(node, desc, a, b, delta))
        finally:
            self.path[node].pop()
        result = _merge(contribs)
        self.memo[key] = result
        return result

    def _expand(self, node: int, desc: NodeDesc, lo: int, hi: int, delta: int):
        for block in desc.accept:
            x, y = max(lo, block.base), min(hi, block.limit)
            if x <= y:
                yield (x, y, frozenset({(node, 0)}))
        for entry in desc.maps:
            x, y = max(lo, entry.src.base), min(hi, entry.src.limit)
            if x > y:
                continue
            for dest in entry.dests:
                shift = dest.base - entry.src.base
                for s_lo, s_hi, payload in self.segments(dest.node, x + shift, y + shift, delta + shift):
                    yield (s_lo - shift, s_hi - shift, _shift_payload(payload, shift))
        if desc.overlay is not None:
            yield from self.segments(desc.overlay, lo, hi, delta)


def _shift_payload(payload, shift: int):
    if payload is _LOOP:
        return _LOOP
    return frozenset((m, s + shift) for m, s in payload)


def _observer_span(net: NetModel) -> int:
    # Past every block limit only overlays act, and they keep the address, so
    # all larger addresses decode alike; ``span`` stands in for all of them.
    return 1 + max((b.limit for desc in net.values() for b in desc.blocks()), default=-1)


class FlatSegments(NamedTuple):
    """Flat view of one observer, including the intervals that loop.

    If ``unbounded`` is set, the last block of ``loops`` continues past its
    limit: every larger address loops as well.
    """

    pieces: list[Piece]
    loops: list[Block]
    unbounded: bool = False

    def loops_at(self, addr: int) -> bool:
        if self.unbounded and addr >= self.loops[-1].base:
            return True
        return any(addr in b for b in self.loops)


def flatten_segments(net: NetModel, observer: int, _flattener: Optional[_Flattener] = None) -> FlatSegments:
    """Pieces and looping intervals of ``observer``'s view, without raising on loops."""
    if observer not in net:
        raise UnknownNode(observer)
    fl = _flattener or _Flattener(net)
    span = _observer_span(net)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 50000))
    try:
        segs = fl.segments(observer, 0, span)
    except RecursionError:
        raise DecnetError(f"flattening from node {observer} exceeds the supported path depth") from None
    finally:
        sys.setrecursionlimit(old_limit)
    pieces, loops = [], []
    for lo, hi, payload in segs:
        if payload is _LOOP:
            loops.append(Block(lo, hi))
        else:
            targets = tuple(sorted(Target(m, lo + s) for m, s in payload))
            pieces.append(Piece(Block(lo, hi), targets))
    return FlatSegments(pieces, loops, bool(loops) and loops[-1].limit == span)


def flatten(net: NetModel, observers: Iterable[int]) -> list[FlatView]:
    """Flat views of ``observers``, sorted by observer id.

    Raises :class:`LoopDetected` carrying the looping interval and a cycle
    witness if any observer address is outside the resolution domain.
    """
    fl = _Flattener(net)
    views = []
    for obs in sorted(set(observers)):
        pieces, loops, _ = flatten_segments(net, obs, fl)
        if loops:
            bad = loops[0]
            try:
                resolve(net, Name(obs, bad.base))
            except LoopDetected as exc:
                raise LoopDetected(exc.cycle, (bad.base, bad.limit)) from None
            raise LoopDetected([], (bad.base, bad.limit))
        views.append(FlatView(obs, tuple(pieces)))
    return views


# --- witnesses and equivalence ----------------------------------------------


def _probe(block: Block) -> set[int]:
    base, limit = block.base, block.limit
    pts = {base, base + (limit - base) // 2, limit, limit + 1}
    if base > 0:
        pts.add(base - 1)
    return pts


def derive_witness_addresses(net: NetModel) -> set[int]:
    """Addresses that hit every piece of every node's flat view.

    Probes the boundaries and midpoint of every accept and map block, and of
    every piece (or looping interval) of every node's flat view.
    """
    out = {0}
    for desc in net.values():
        for block in desc.blocks():
            out |= _probe(block)
    fl = _Flattener(net)
    for nd in net:
        pieces, loops, _ = flatten_segments(net, nd, fl)
        for piece in pieces:
            out |= _probe(piece.src)
        for block in loops:
            out |= _probe(block)
    return out


class Mismatch(NamedTuple):
    observer: int
    addr: int
    left: Optional[frozenset]
    right: Optional[frozenset]


@dataclass(frozen=True)
class EquivReport:
    equal: bool
    witnesses: tuple[Mismatch, ...] = ()
    checked: int = 0


def _try_resolve(net: NetModel, name: Name) -> Optional[frozenset]:
    try:
        return resolve(net, name)
    except LoopDetected:
        return None


def view_equiv(left: tuple[Callable[[int], int], NetModel],
               right: tuple[Callable[[int], int], NetModel],
               observers: Iterable[int], witness: Iterable[int],
               max_failures: int = 10) -> EquivReport:
    """Compare renamed views of two nets on ``observers`` at ``witness`` addresses.

    Domain membership must agree; a mismatch side outside the domain is
    reported as ``None``.
    """
    f, lnet = left
    g, rnet = right
    failures = []
    failed = False
    checked = 0
    addrs = sorted(set(witness))
    for nd in sorted(set(observers)):
        for addr in addrs:
            checked += 1
            lv = _try_resolve(lnet, Name(nd, addr))
            rv = _try_resolve(rnet, Name(nd, addr))
            lr = None if lv is None else rename(f, lv)
            rr = None if rv is None else rename(g, rv)
            if lr != rr:
                failed = True
                if len(failures) < max_failures:
                    failures.append(Mismatch(nd, addr, lr, rr))
    return EquivReport(not failed, tuple(failures), checked)
