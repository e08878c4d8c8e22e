"""Semantic model of address decoding nets.

A net assigns a node descriptor to each node id.  A node may accept some
addresses locally, translate addresses to names at other nodes, or both.
Resolution follows the decode relation from an input name and collects every
accepted name it reaches.  Resolution is only defined when no decode path
from the input name revisits a name; such names are said to be in the
resolution domain.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import NamedTuple, Optional

from .errors import DanglingReference, LoopDetected, NotInDomain, UnknownNode

__all__ = [
    "Block",
    "Dest",
    "EMPTY_NODE",
    "MapEntry",
    "Name",
    "NetModel",
    "NodeDesc",
    "Ranking",
    "accepted_contains",
    "compute_ranking",
    "decode_step",
    "is_in_domain",
    "reachable_names",
    "resolve",
    "view_from",
    "wf_rank",
]


class Name(NamedTuple):
    """An address qualified by the node at which decoding starts."""

    node: int
    addr: int

    def __str__(self):
        return f"({self.node}, {self.addr:#x})"


class Dest(NamedTuple):
    node: int
    base: int


@dataclass(frozen=True, order=True)
class Block:
    """Closed address interval ``[base, limit]``."""

    base: int
    limit: int

    def __post_init__(self):
        if self.base < 0:
            raise ValueError(f"negative block base {self.base}")
        if self.base > self.limit:
            raise ValueError(f"block base {self.base:#x} exceeds limit {self.limit:#x}")

    @classmethod
    def from_bits(cls, base: int, bits: int) -> Block:
        """The block of ``2**bits`` addresses starting at ``base``."""
        return cls(base, base + (1 << bits) - 1)

    def __contains__(self, addr: int) -> bool:
        return self.base <= addr <= self.limit

    @property
    def size(self) -> int:
        return self.limit - self.base + 1

    def __str__(self):
        return f"[{self.base:#x}-{self.limit:#x}]"


@dataclass(frozen=True)
class MapEntry:
    """Maps ``src`` onto each destination, shifting addresses to the new base."""

    src: Block
    dests: tuple[Dest, ...]

    def __post_init__(self):
        dests = tuple(Dest(*d) for d in self.dests)
        if not dests:
            raise ValueError("map entry needs at least one destination")
        object.__setattr__(self, "dests", dests)

    def translate(self, addr: int) -> Iterator[Name]:
        if addr in self.src:
            offset = addr - self.src.base
            for dest in self.dests:
                yield Name(dest.node, dest.base + offset)


@dataclass(frozen=True)
class NodeDesc:
    accept: tuple[Block, ...] = ()
    maps: tuple[MapEntry, ...] = ()
    overlay: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "accept", tuple(self.accept))
        object.__setattr__(self, "maps", tuple(self.maps))

    def accepts(self, addr: int) -> bool:
        return any(addr in block for block in self.accept)

    def translate(self, addr: int) -> frozenset[Name]:
        # The overlay forwards every address, in addition to any explicit maps.
        out = {name for entry in self.maps for name in entry.translate(addr)}
        if self.overlay is not None:
            out.add(Name(self.overlay, addr))
        return frozenset(out)

    def references(self) -> Iterator[int]:
        for entry in self.maps:
            for dest in entry.dests:
                yield dest.node
        if self.overlay is not None:
            yield self.overlay

    def blocks(self) -> Iterator[Block]:
        yield from self.accept
        for entry in self.maps:
            yield entry.src

    @property
    def is_empty(self) -> bool:
        return not self.accept and not self.maps and self.overlay is None


EMPTY_NODE = NodeDesc()


class NetModel(Mapping):
    """Immutable mapping from node id to :class:`NodeDesc`.

    Nets are closed-world by default: every map destination and overlay must
    be a node of the net.  With ``allow_dangling=True`` missing nodes behave
    as empty nodes, which neither accept nor translate anything.
    """

    def __init__(self, nodes: Mapping[int, NodeDesc] | Iterable = (), allow_dangling: bool = False):
        table = dict(nodes)
        for nd, desc in table.items():
            if not isinstance(nd, int) or nd < 0:
                raise ValueError(f"node ids must be nonnegative integers, got {nd!r}")
            if not isinstance(desc, NodeDesc):
                raise TypeError(f"node {nd}: expected NodeDesc, got {type(desc).__name__}")
        if not allow_dangling:
            for nd, desc in table.items():
                for ref in desc.references():
                    if ref not in table:
                        raise DanglingReference(nd, ref)
        self._nodes = MappingProxyType(dict(sorted(table.items())))
        self.allow_dangling = allow_dangling

    def __getitem__(self, nd: int) -> NodeDesc:
        try:
            return self._nodes[nd]
        except KeyError:
            raise UnknownNode(nd) from None

    def __iter__(self):
        return iter(self._nodes)

    def __len__(self):
        return len(self._nodes)

    def __eq__(self, other):
        if isinstance(other, NetModel):
            return dict(self._nodes) == dict(other._nodes)
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self._nodes.items()))

    def __repr__(self):
        return f"NetModel({dict(self._nodes)!r})"

    def node(self, nd: int) -> NodeDesc:
        """Descriptor of ``nd``; empty for missing nodes in a dangling-tolerant net."""
        desc = self._nodes.get(nd)
        if desc is None:
            if self.allow_dangling:
                return EMPTY_NODE
            raise UnknownNode(nd)
        return desc

    def replace(self, updates: Mapping[int, NodeDesc]) -> NetModel:
        table = dict(self._nodes)
        table.update(updates)
        return NetModel(table, allow_dangling=self.allow_dangling)

    def referenced(self) -> set[int]:
        return {ref for desc in self._nodes.values() for ref in desc.references()}


@dataclass(frozen=True)
class Ranking:
    """Witness of termination: ranks strictly decrease along decode steps."""

    ranks: Mapping[Name, int] = field(default_factory=dict)

    def __getitem__(self, name: Name) -> int:
        return self.ranks[name]

    def __contains__(self, name) -> bool:
        return name in self.ranks

    def __len__(self):
        return len(self.ranks)


def _as_name(n) -> Name:
    return n if isinstance(n, Name) else Name(*n)


def decode_step(net: NetModel, n) -> frozenset[Name]:
    """Names that ``n`` translates to in a single decoding step."""
    n = _as_name(n)
    return net.node(n.node).translate(n.addr)


def accepted_contains(net: NetModel, n) -> bool:
    n = _as_name(n)
    return net.node(n.node).accepts(n.addr)


_ON_PATH = 1
_DONE = 2


def _explore(net: NetModel, start: Name) -> tuple[list[Name], dict[Name, tuple[Name, ...]]]:
    """Depth-first walk of the names reachable from ``start``.

    Returns the reachable names in post-order together with their successor
    tuples.  Raises :class:`LoopDetected` as soon as a name reappears on the
    current path.
    """
    succ = {start: tuple(sorted(decode_step(net, start)))}
    state = {start: _ON_PATH}
    path = [start]
    depth = {start: 0}
    stack = [iter(succ[start])]
    order = []
    while stack:
        for nxt in stack[-1]:
            seen = state.get(nxt)
            if seen is None:
                succ[nxt] = tuple(sorted(decode_step(net, nxt)))
                state[nxt] = _ON_PATH
                depth[nxt] = len(path)
                path.append(nxt)
                stack.append(iter(succ[nxt]))
                break
            if seen == _ON_PATH:
                raise LoopDetected(path[depth[nxt]:] + [nxt])
        else:
            stack.pop()
            done = path.pop()
            state[done] = _DONE
            order.append(done)
    return order, succ


def resolve(net: NetModel, n) -> frozenset[Name]:
    """All accepted names reachable from ``n`` through the decode relation.

    Raises :class:`LoopDetected` if ``n`` is outside the resolution domain.
    """
    n = _as_name(n)
    order, succ = _explore(net, n)
    result: dict[Name, frozenset[Name]] = {}
    for name in order:
        acc = {name} if accepted_contains(net, name) else set()
        for nxt in succ[name]:
            acc |= result[nxt]
        result[name] = frozenset(acc)
    return result[n]


def is_in_domain(net: NetModel, n) -> bool:
    try:
        _explore(net, _as_name(n))
    except LoopDetected:
        return False
    return True


def compute_ranking(net: NetModel, n) -> Ranking:
    """Longest-path-to-sink ranking over the names reachable from ``n``."""
    n = _as_name(n)
    try:
        order, succ = _explore(net, n)
    except LoopDetected as exc:
        raise NotInDomain(n, loop=exc) from exc
    ranks: dict[Name, int] = {}
    for name in order:
        ranks[name] = 1 + max((ranks[s] for s in succ[name]), default=-1)
    return Ranking(MappingProxyType(ranks))


def _bfs(net: NetModel, n: Name) -> dict[Name, frozenset[Name]]:
    succ = {}
    queue = deque([n])
    while queue:
        name = queue.popleft()
        if name in succ:
            continue
        succ[name] = decode_step(net, name)
        queue.extend(s for s in succ[name] if s not in succ)
    return succ


def _has_cycle(succ: Mapping[Name, Iterable[Name]]) -> bool:
    # Kahn's algorithm: a cycle leaves some names with nonzero in-degree.
    indegree = dict.fromkeys(succ, 0)
    for targets in succ.values():
        for t in targets:
            indegree[t] += 1
    ready = [name for name, d in indegree.items() if d == 0]
    removed = 0
    while ready:
        name = ready.pop()
        removed += 1
        for t in succ[name]:
            indegree[t] -= 1
            if indegree[t] == 0:
                ready.append(t)
    return removed != len(succ)


def reachable_names(net: NetModel, n) -> frozenset[Name]:
    """Reflexive-transitive decode image of ``{n}``.

    Computed breadth-first and checked for cycles with Kahn's algorithm,
    sharing nothing with :func:`resolve`, so that the two can be compared.
    """
    n = _as_name(n)
    succ = _bfs(net, n)
    if _has_cycle(succ):
        raise NotInDomain(n)
    return frozenset(succ)


def wf_rank(net: NetModel, ranking: Ranking | Mapping[Name, int], n) -> bool:
    """Check that ranks strictly decrease on every decode step reachable from ``n``."""
    ranks = ranking.ranks if isinstance(ranking, Ranking) else ranking
    succ = _bfs(net, _as_name(n))
    for x, targets in succ.items():
        for y in targets:
            if x not in ranks or y not in ranks or not ranks[y] < ranks[x]:
                return False
    return True


def view_from(net: NetModel, node: int, addrs: Iterable[int]) -> dict[int, frozenset[Name]]:
    """Resolve each address of ``addrs`` as seen from ``node``."""
    net.node(node)
    view = {}
    for addr in sorted(set(addrs)):
        try:
            view[addr] = resolve(net, Name(node, addr))
        except LoopDetected as exc:
            raise NotInDomain(Name(node, addr), loop=exc) from exc
    return view
