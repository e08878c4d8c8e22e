from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decnet import (
    Block,
    DanglingReference,
    LoopDetected,
    MapEntry,
    Name,
    NetModel,
    NodeDesc,
    NotInDomain,
    UnknownNode,
    accepted_contains,
    compute_ranking,
    decode_step,
    elaborate,
    is_in_domain,
    reachable_names,
    resolve,
    view_from,
    wf_rank,
)
from decnet.fixtures import load_fixture
from netgen import random_net_ast


def acc(*blocks):
    return NodeDesc(accept=tuple(Block(b, l) for b, l in blocks))


def mapping(src, *dests, overlay=None):
    return NodeDesc(maps=(MapEntry(Block(*src), dests),), overlay=overlay)


@pytest.fixture(scope="module")
def omap():
    return load_fixture("omap44xx-mem")


def named(table, names):
    return {(table.name(n.node), n.addr) for n in names}


# --- model ------------------------------------------------------------------


def test_block_rejects_inverted_and_negative():
    with pytest.raises(ValueError):
        Block(5, 4)
    with pytest.raises(ValueError):
        Block(-1, 4)


def test_block_from_bits_and_size():
    b = Block.from_bits(0x1000, 12)
    assert (b.base, b.limit, b.size) == (0x1000, 0x1FFF, 0x1000)
    assert 0x1FFF in b and 0x2000 not in b


def test_addresses_are_unbounded():
    big = 1 << 100
    net = NetModel({0: mapping((big, big + 10), (1, 0)), 1: acc((0, 0xFF))})
    assert resolve(net, (0, big + 3)) == {Name(1, 3)}


def test_map_entry_needs_destination():
    with pytest.raises(ValueError):
        MapEntry(Block(0, 1), ())


def test_dangling_reference_rejected_unless_allowed():
    with pytest.raises(DanglingReference):
        NetModel({0: NodeDesc(overlay=3)})
    net = NetModel({0: NodeDesc(overlay=3)}, allow_dangling=True)
    assert resolve(net, (0, 1)) == frozenset()


def test_unknown_node_is_a_key_error():
    net = NetModel({0: acc((0, 1))})
    with pytest.raises(UnknownNode):
        net[7]
    with pytest.raises(KeyError):
        resolve(net, (7, 0))


def test_nets_compare_structurally():
    assert NetModel({0: acc((0, 1))}) == NetModel({0: acc((0, 1))})
    assert NetModel({0: acc((0, 1))}) != NetModel({0: acc((0, 2))})


# --- decode_step ------------------------------------------------------------


def test_decode_step_affine_shift():
    net = NetModel({0: mapping((0x1000, 0x1FFF), (1, 0)), 1: NodeDesc()})
    assert decode_step(net, (0, 0x1010)) == {Name(1, 0x10)}
    assert decode_step(net, (0, 0x2000)) == frozenset()


def test_decode_step_overlay_forwards_one_to_one():
    net = NetModel({0: NodeDesc(overlay=1), 1: acc((0, 0))})
    assert decode_step(net, (0, 5)) == {Name(1, 5)}


def test_decode_step_overlay_unions_with_maps():
    net = NetModel({0: mapping((0, 9), (1, 100), overlay=2), 1: NodeDesc(), 2: NodeDesc()})
    assert decode_step(net, (0, 4)) == {Name(1, 104), Name(2, 4)}
    assert decode_step(net, (0, 40)) == {Name(2, 40)}


def test_decode_step_omap_va9(omap):
    net, t = omap
    assert named(t, decode_step(net, (t.id("VA9_0"), 0x20000000))) == {("PA9_0", 0x80000000)}


def test_decode_step_sdma_fanout():
    net, t = load_fixture("omap44xx-irq")
    assert named(t, decode_step(net, (t.id("SDMA"), 2))) == {("SPIMap", 14), ("NVIC_0", 20), ("NVIC_1", 20)}


# --- accepted ---------------------------------------------------------------


def test_accepted_contains(omap):
    net, t = omap
    assert accepted_contains(net, (t.id("L3"), 0x80000000))
    assert not accepted_contains(net, (t.id("L3"), 0x7FFFFFFF))
    assert not accepted_contains(NetModel({0: NodeDesc()}), (0, 0))


# --- resolve ----------------------------------------------------------------


@pytest.mark.parametrize(
    "model, node, addr, expect",
    [
        ("omap44xx-mem", "VA9_0", 0x20000000, {("L3", 0x80000000)}),
        ("desktop-mem", "PC_0", 0xFEE00000, {("PC_0", 0xFEE00000)}),
        ("desktop-mem", "PC_0", 0xC2000000, {("GFX", 0)}),
        ("server-mem", "PHI_0", 0x8C00000000, {("PHI_0", 0)}),
    ],
)
def test_resolve_fixture_examples(model, node, addr, expect):
    net, t = load_fixture(model)
    assert named(t, resolve(net, (t.id(node), addr))) == expect


def test_resolve_identity_self_map_loops():
    net = NetModel({0: mapping((0, 10), (0, 0))})
    with pytest.raises(LoopDetected) as info:
        resolve(net, (0, 5))
    assert info.value.cycle == [Name(0, 5), Name(0, 5)]


def test_resolve_almost_loop(omap):
    net, t = omap
    mif = t.id("MIF")
    start = Name(mif, 0x50020000)
    assert named(t, resolve(net, start)) == {("ROM_M3", 0x55000000)}
    assert {n.addr for n in reachable_names(net, start) if n.node == mif} == {0x50020000, 0x55000000}


def test_resolve_collects_every_branch():
    net = NetModel({0: mapping((0, 9), (1, 0), (2, 0)), 1: acc((0, 9)), 2: acc((5, 9))})
    assert resolve(net, (0, 3)) == {Name(1, 3)}
    assert resolve(net, (0, 7)) == {Name(1, 7), Name(2, 7)}


def test_resolve_deep_chain_is_iterative():
    depth = 5000
    nodes = {i: NodeDesc(overlay=i + 1) for i in range(depth)}
    nodes[depth] = acc((0, 0))
    assert resolve(NetModel(nodes), (0, 0)) == {Name(depth, 0)}


# --- domain and ranking -----------------------------------------------------


def test_is_in_domain_examples(omap):
    net, t = omap
    assert is_in_domain(net, (t.id("MIF"), 0x50020000))
    assert not is_in_domain(NetModel({0: NodeDesc(overlay=1), 1: NodeDesc(overlay=0)}), (0, 7))
    # Each step shifts the address up by one until it leaves the block.
    assert is_in_domain(NetModel({0: mapping((0, 100), (0, 1))}), (0, 0))


def test_shifting_self_map_ranks():
    net = NetModel({0: mapping((0, 100), (0, 1))})
    r = compute_ranking(net, (0, 0))
    assert len(r) == 102
    assert r[Name(0, 0)] == 101 and r[Name(0, 101)] == 0


def test_ranking_two_step_chain():
    net = NetModel({0: NodeDesc(overlay=1), 1: acc((0, 0xFF))})
    r = compute_ranking(net, (0, 5))
    assert dict(r.ranks) == {Name(1, 5): 0, Name(0, 5): 1}
    assert wf_rank(net, r, (0, 5))


def test_ranking_decreases_along_m3_path(omap):
    net, t = omap
    start = Name(t.id("VM3_0"), 0)
    r = compute_ranking(net, start)
    path = [("VM3_0", 0), ("L1_M3", 0), ("MIF", 0), ("L2_M3", 0), ("L3", 0x80000000)]
    ranks = [r[Name(t.id(n), a)] for n, a in path]
    assert ranks == sorted(ranks, reverse=True) and len(set(ranks)) == len(ranks)
    assert ranks[-1] == 0
    assert wf_rank(net, r, start)


def test_compute_ranking_refuses_loops():
    net = NetModel({0: NodeDesc(overlay=1), 1: NodeDesc(overlay=0)})
    with pytest.raises(NotInDomain) as info:
        compute_ranking(net, (0, 7))
    assert info.value.loop is not None


def test_wf_rank_rejects_flat_ranking():
    net = NetModel({0: NodeDesc(overlay=1), 1: acc((0, 0xFF))})
    assert not wf_rank(net, {Name(0, 5): 0, Name(1, 5): 0}, (0, 5))
    assert not wf_rank(net, {Name(0, 5): 1}, (0, 5))


# --- reachable names and views ----------------------------------------------


def test_reachable_names_examples(omap):
    net = NetModel({0: NodeDesc(overlay=1), 1: acc((0, 0xFF))})
    assert reachable_names(net, (0, 5)) == {Name(0, 5), Name(1, 5)}
    n, t = omap
    got = named(t, reachable_names(n, (t.id("PA9_0"), 0x40138000)))
    assert {("GPT", 0), ("L3", 0x40138000)} <= got
    dnet, dt = load_fixture("desktop-mem")
    assert named(dt, reachable_names(dnet, (dt.id("P_G0"), 0x10))) == {("P_G0", 0x10), ("GFX", 0x10)}


def test_reachable_names_rejects_loops():
    with pytest.raises(NotInDomain):
        reachable_names(NetModel({0: mapping((0, 10), (0, 0))}), (0, 5))


def test_view_from(omap):
    net, t = omap
    assert named(t, view_from(net, t.id("PDSP"), {0x01D3E000})[0x01D3E000]) == {("GPT", 0)}
    assert view_from(net, t.id("PDSP"), set()) == {}
    dnet, dt = load_fixture("desktop-mem")
    assert named(dt, view_from(dnet, dt.id("PC_1"), {0xFEE00000})[0xFEE00000]) == {("PC_1", 0xFEE00000)}


def test_view_from_reports_loop():
    with pytest.raises(NotInDomain):
        view_from(NetModel({0: NodeDesc(overlay=0)}), 0, {1})


# --- properties -------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 70))
def test_resolve_matches_bfs_oracle(rng: random.Random, addr: int):
    net, _ = elaborate(random_net_ast(rng))
    for nd in net:
        name = Name(nd, addr)
        try:
            got = resolve(net, name)
        except LoopDetected:
            assert not is_in_domain(net, name)
            with pytest.raises(NotInDomain):
                reachable_names(net, name)
            continue
        assert got == {n for n in reachable_names(net, name) if accepted_contains(net, n)}
        assert wf_rank(net, compute_ranking(net, name), name)
