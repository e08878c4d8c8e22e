from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decnet import (
    Block,
    LoopDetected,
    MapEntry,
    Name,
    NetModel,
    NodeDesc,
    NotFresh,
    Remap,
    derive_witness_addresses,
    elaborate,
    flatten,
    flatten_segments,
    fresh_id,
    mixed_nodes,
    resolve,
    split_all,
    split_net,
    split_node,
    split_spec,
    view_equiv,
)
from decnet.fixtures import FIXTURES, load_fixture
from decnet.transforms import Target, fresh_node_id, is_fresh, rename
from netgen import random_net_ast


def acc(*blocks):
    return NodeDesc(accept=tuple(Block(b, l) for b, l in blocks))


# --- renaming ---------------------------------------------------------------


def test_remap_identity_outside_overrides():
    r = Remap({1: 5})
    assert (r(1), r(2)) == (5, 2)
    assert Remap.offset([0, 1], 10)(1) == 11


def test_remap_then_composes_left_to_right():
    r = Remap({0: 1}).then(Remap({1: 2}))
    assert (r(0), r(1), r(3)) == (2, 2, 3)
    assert Remap({0: 0}) == Remap()


def test_rename_names():
    assert rename(Remap({0: 9}), [Name(0, 1), Name(1, 1)]) == {Name(9, 1), Name(1, 1)}


# --- splitting --------------------------------------------------------------


def test_split_pure_acceptor():
    net = NetModel({0: acc((0, 0xFF))})
    assert split_node(net, 0, 1) == NetModel({
        0: NodeDesc(maps=(MapEntry(Block(0, 0xFF), ((1, 0),)),)),
        1: acc((0, 0xFF)),
    })


def test_split_pure_redirector():
    net = NetModel({0: NodeDesc(maps=(MapEntry(Block(0, 1), ((2, 0),)),)), 2: NodeDesc()})
    out = split_node(net, 0, 3)
    assert out[0] == net[0]
    assert out[3] == NodeDesc()


def test_split_keeps_overlay_and_prepends_redirects():
    old = NodeDesc(accept=(Block(0, 3),), maps=(MapEntry(Block(4, 7), ((1, 0),)),), overlay=1)
    out = split_node(NetModel({0: old, 1: NodeDesc()}), 0, 2)
    assert out[0].maps == (MapEntry(Block(0, 3), ((2, 0),)), old.maps[0])
    assert out[0].overlay == 1 and out[0].accept == ()


def test_split_requires_fresh_node():
    net = NetModel({0: NodeDesc(overlay=1), 1: acc((0, 0))})
    with pytest.raises(NotFresh):
        split_node(net, 0, 1)
    assert not is_fresh(NetModel({0: NodeDesc(overlay=4)}, allow_dangling=True), 4)
    assert fresh_node_id(NetModel({0: NodeDesc(overlay=4)}, allow_dangling=True)) == 5


def test_split_all_edge_cases():
    net = NetModel({0: acc((0, 9))})
    assert split_all(net, [], {}) == net
    assert split_all(net, [0], {0: 1}) == split_node(net, 0, 1)
    with pytest.raises(ValueError):
        split_all(net, [0, 0], {0: 1})


@pytest.mark.parametrize("name", FIXTURES)
def test_split_preserves_views_on_fixtures(name):
    net, _ = load_fixture(name)
    split, c = split_net(net)
    assert mixed_nodes(split) == []
    witness = derive_witness_addresses(net)
    report = view_equiv((Remap.offset(net, c), net), (Remap(), split), net, witness)
    assert report.equal, report.witnesses


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_concrete_split_refines_abstract_split(rng: random.Random):
    ast = random_net_ast(rng)
    net, _ = elaborate(ast)
    c = fresh_id(ast)
    assert elaborate(split_spec(ast))[0] == split_all(net, list(net), lambda nd: nd + c)


# --- flattening -------------------------------------------------------------


def test_flatten_pure_acceptor():
    (view,) = flatten(NetModel({0: acc((0, 0xFF))}), [0])
    assert [(p.src, p.targets) for p in view.pieces] == [(Block(0, 0xFF), (Target(0, 0),))]


def test_flatten_omap_va9():
    net, t = load_fixture("omap44xx-mem")
    (view,) = flatten(net, [t.id("VA9_0")])
    assert [(p.src, p.targets) for p in view.pieces] == [
        (Block(0x20000000, 0x20000FFF), (Target(t.id("L3"), 0x80000000),))
    ]
    for addr in range(0x20000000, 0x20001000, 0x111):
        assert view.evaluate(addr) == resolve(net, (t.id("VA9_0"), addr))
    assert view.evaluate(0x1FFFFFFF) == frozenset()


def test_flatten_server_gddr_alias():
    net, t = load_fixture("server-mem")
    (view,) = flatten(net, [t.id("PHI_0")])
    gddr = (Target(t.id("PHI_0"), 0),)
    aliases = [p.src for p in view.pieces if p.targets == gddr]
    assert Block(0, (1 << 34) - 1) in aliases
    assert any(p.base == 0x8C00000000 for p in aliases)


def test_flatten_merges_adjacent_equal_pieces():
    net = NetModel({
        0: NodeDesc(maps=(MapEntry(Block(0, 9), ((1, 0),)), MapEntry(Block(10, 19), ((1, 10),)))),
        1: acc((0, 99)),
    })
    (view,) = flatten(net, [0])
    assert [p.src for p in view.pieces] == [Block(0, 19)]


def test_flatten_reports_loop_interval():
    net = NetModel({0: NodeDesc(accept=(Block(0, 3),), maps=(MapEntry(Block(4, 7), ((0, 4),)),))})
    with pytest.raises(LoopDetected) as info:
        flatten(net, [0])
    assert info.value.interval == (4, 7)
    assert info.value.cycle[0] == info.value.cycle[-1]
    pieces, loops, unbounded = flatten_segments(net, 0)
    assert loops == [Block(4, 7)] and not unbounded and [p.src for p in pieces] == [Block(0, 3)]


def test_flatten_shifting_self_map_terminates():
    net = NetModel({0: NodeDesc(accept=(Block(200, 300),), maps=(MapEntry(Block(0, 100), ((0, 1),)),))})
    pieces, loops, _ = flatten_segments(net, 0)
    assert loops == []
    for addr in (0, 50, 100, 101, 200):
        got = resolve(net, (0, addr))
        assert next((p.evaluate(addr) for p in pieces if addr in p.src), frozenset()) == got


def test_flat_view_json_is_stable():
    net, t = load_fixture("desktop-mem")
    (view,) = flatten(net, [t.id("P_G0")])
    doc = view.to_json(t.name)
    assert doc["observer"] == "P_G0"
    assert json.dumps(doc, sort_keys=True) == json.dumps(view.to_json(t.name), sort_keys=True)


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 90))
def test_flatten_agrees_with_resolve(rng: random.Random, addr: int):
    net, _ = elaborate(random_net_ast(rng))
    for nd in net:
        segs = flatten_segments(net, nd)
        try:
            got = resolve(net, (nd, addr))
        except LoopDetected:
            assert segs.loops_at(addr)
            continue
        assert not segs.loops_at(addr)
        assert next((p.evaluate(addr) for p in segs.pieces if addr in p.src), frozenset()) == got


def test_overlay_cycle_loops_above_every_block():
    net = NetModel({0: NodeDesc(accept=(Block(0, 3),), overlay=1), 1: NodeDesc(overlay=0)})
    segs = flatten_segments(net, 0)
    assert segs.unbounded and segs.loops == [Block(0, 4)]
    assert segs.loops_at(1 << 80)
    with pytest.raises(LoopDetected):
        resolve(net, (0, 1 << 80))


# --- witnesses and equivalence ----------------------------------------------


def test_witness_examples():
    assert derive_witness_addresses(NetModel({0: acc((0x10, 0x1F))})) == {0, 0xF, 0x10, 0x17, 0x1F, 0x20}
    assert derive_witness_addresses(NetModel()) == {0}
    net, _ = load_fixture("omap44xx-mem")
    assert {0x20000000, 0x40138000, 0x01D3E000, 0x49038000} <= derive_witness_addresses(net)


def test_view_equiv_reflexive():
    net, _ = load_fixture("desktop-irq")
    w = derive_witness_addresses(net)
    assert view_equiv((Remap(), net), (Remap(), net), net, w).equal


def test_view_equiv_counterexample():
    left = NetModel({0: acc((0, 0x10))})
    right = NetModel({0: acc((0, 0xF))})
    report = view_equiv((Remap(), left), (Remap(), right), [0], derive_witness_addresses(left))
    assert not report.equal
    (m,) = report.witnesses
    assert (m.observer, m.addr, m.left, m.right) == (0, 0x10, {Name(0, 0x10)}, frozenset())


def test_view_equiv_domain_must_agree():
    loop = NetModel({0: NodeDesc(overlay=0)})
    empty = NetModel({0: NodeDesc()})
    report = view_equiv((Remap(), loop), (Remap(), empty), [0], [0])
    assert not report.equal and report.witnesses[0].left is None


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.data())
def test_view_equiv_under_injective_renaming(rng: random.Random, data):
    net, _ = elaborate(random_net_ast(rng))
    ids = list(net)
    targets = data.draw(st.permutations(range(100, 100 + len(ids))))
    f = Remap(dict(zip(ids, targets)))
    renamed = NetModel({f(nd): NodeDesc(
        d.accept,
        tuple(MapEntry(m.src, tuple((f(x.node), x.base) for x in m.dests)) for m in d.maps),
        None if d.overlay is None else f(d.overlay),
    ) for nd, d in net.items()})
    w = derive_witness_addresses(net)
    for nd in ids:
        for addr in w:
            try:
                left = rename(f, resolve(net, (nd, addr)))
            except LoopDetected:
                with pytest.raises(LoopDetected):
                    resolve(renamed, (f(nd), addr))
                continue
            assert resolve(renamed, (f(nd), addr)) == left
